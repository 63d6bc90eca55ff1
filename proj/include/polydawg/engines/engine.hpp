#pragma once

#include <polydawg/value.hpp>

#include <cstdint>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace polydawg {

enum class Model { relational, keyvalue, array };

const char * to_string(Model m);
std::optional<Model> parse_model(std::string_view s);

/** One array dimension as declared at load time. `keys` is the optional dimension map: sorted distinct row/column
 * keys whose rank is the coordinate. */
struct DimSpec
{
    std::string name;
    std::optional<std::int64_t> length;
    std::optional<std::vector<std::string>> keys;

    bool operator==(const DimSpec&) const = default;
};

struct LoadOptions
{
    std::vector<std::string> key; ///< relational key columns
    std::vector<DimSpec> dims;    ///< array dimension columns, in dimension order

    bool operator==(const LoadOptions&) const = default;
};

/// A table together with the options that reload it into an equal object.
struct ObjectPayload
{
    CanonicalTable table;
    LoadOptions options;
};

struct ObjectInfo
{
    Schema schema; ///< schema of the exported table
    LoadOptions options;
    std::size_t rows = 0;
};

/** Uniform interface over the embedded engines. Writes are serialized per engine; reads may run concurrently. */
class Engine
{
    std::string id_;

    protected:
    mutable std::shared_mutex mutex_;

    public:
    explicit Engine(std::string id) : id_(std::move(id)) { }
    virtual ~Engine() = default;
    Engine(const Engine&) = delete;
    Engine & operator=(const Engine&) = delete;

    const std::string & id() const { return id_; }
    virtual Model model() const = 0;

    /// Throws `duplicate` if present, `schema` if the table does not fit the model under `options`.
    virtual void load(const std::string &name, const CanonicalTable &table, const LoadOptions &options) = 0;
    virtual ObjectPayload export_payload(const std::string &name) const = 0;
    /// Runs a native query; the payload options describe the result's shape (e.g. dimensions of an array result).
    virtual ObjectPayload evaluate(std::string_view native) const = 0;
    virtual bool drop(const std::string &name) = 0;
    virtual bool contains(const std::string &name) const = 0;
    virtual std::vector<std::string> object_names() const = 0;
    virtual ObjectInfo describe(const std::string &name) const = 0;

    void load(const std::string &name, const CanonicalTable &table) { load(name, table, LoadOptions{}); }
    void load(const std::string &name, const ObjectPayload &payload) { load(name, payload.table, payload.options); }
    CanonicalTable export_table(const std::string &name) const { return export_payload(name).table; }
    CanonicalTable execute_native(std::string_view native) const { return evaluate(native).table; }
};

[[noreturn]] void throw_unknown_object(const std::string &engine, const std::string &name);

}
