#pragma once

#include <polydawg/engines/engine.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <set>

namespace polydawg {

/** Engines plus the global object directory. Every object name lives on exactly one engine. */
class EngineCatalog
{
    std::vector<std::unique_ptr<Engine>> engines_;
    std::map<std::string, std::string> directory_; ///< object -> engine id
    std::set<std::string> temporaries_;
    mutable std::shared_mutex mutex_;

    Engine * find_engine(const std::string &id) const;

    public:
    EngineCatalog() = default;
    EngineCatalog(const EngineCatalog&) = delete;
    EngineCatalog & operator=(const EngineCatalog&) = delete;

    /// A catalog with the standard engines `rel`, `kv`, `arr`.
    static std::unique_ptr<EngineCatalog> with_default_engines();

    void add_engine(std::unique_ptr<Engine> engine);
    bool has_engine(const std::string &id) const { return find_engine(id) != nullptr; }
    /// Throws `not_found` for an unknown id.
    Engine & engine(const std::string &id) const;
    std::vector<std::string> engine_ids() const;

    void load(const std::string &engine_id, const std::string &object, const CanonicalTable &table,
              const LoadOptions &options = {}, bool temporary = false);
    void load(const std::string &engine_id, const std::string &object, const ObjectPayload &payload,
              bool temporary = false)
    {
        load(engine_id, object, payload.table, payload.options, temporary);
    }

    std::optional<std::string> locate(const std::string &object) const;
    /// Throws `not_found` if the object is unknown.
    const std::string & engine_of(const std::string &object) const;
    ObjectPayload export_payload(const std::string &object) const;
    CanonicalTable export_table(const std::string &object) const { return export_payload(object).table; }
    /// Export through a specific engine; errors if the object lives elsewhere.
    CanonicalTable export_table(const std::string &engine_id, const std::string &object) const;
    ObjectInfo describe(const std::string &object) const;
    CanonicalTable execute_native(const std::string &engine_id, std::string_view native) const;

    bool drop(const std::string &object);
    /// Drops every temporary object; returns how many were removed.
    std::size_t drop_temporaries();
    std::vector<std::string> temporaries() const;
    /// (object, engine id) pairs sorted by object name.
    std::vector<std::pair<std::string, std::string>> objects() const;

    /// Writes `catalog.json` and one CIF file per non-temporary object into `dir`.
    void save(const std::filesystem::path &dir) const;
    /// Loads every object recorded in `dir`; a missing directory or manifest is an empty catalog.
    void restore(const std::filesystem::path &dir);
};

/// Object names are identifiers: a letter or `_`, then letters, digits, `_`.
bool valid_object_name(std::string_view name);

}
