#pragma once

#include <polydawg/engines/assoc.hpp>
#include <polydawg/engines/engine.hpp>

namespace polydawg {

/** Sorted key-value store of associative arrays. Loaded tables must be exactly (row:text, col:text, val:any).
 *
 * Native language:
 *   SCAN obj [ROWS "lo":"hi"] [COLS "lo":"hi"]
 *   GREP obj "substring"
 *   MATMUL A B [SEMIRING plus.times|min.plus|max.times]
 *   EWISE A B plus|min|max
 *   TRANSPOSE A
 */
class KeyValueEngine final : public Engine
{
    struct Stored
    {
        AssociativeArray data;
        Tag tag;
    };
    std::map<std::string, Stored> objects_;

    const Stored & get(const std::string &name) const;

    public:
    explicit KeyValueEngine(std::string id = "kv") : Engine(std::move(id)) { }

    Model model() const override { return Model::keyvalue; }
    using Engine::load;
    void load(const std::string &name, const CanonicalTable &table, const LoadOptions &options) override;
    ObjectPayload export_payload(const std::string &name) const override;
    ObjectPayload evaluate(std::string_view native) const override;
    bool drop(const std::string &name) override;
    bool contains(const std::string &name) const override;
    std::vector<std::string> object_names() const override;
    ObjectInfo describe(const std::string &name) const override;
};

/// Triple schema used by the key-value engine: (row:text, col:text, val:tag).
Schema triple_schema(Tag val_tag, const std::string &row = "row", const std::string &col = "col",
                     const std::string &val = "val");

}
