#pragma once

#include <polydawg/engines/engine.hpp>

#include <map>

namespace polydawg {

/** In-memory relational engine. Native language: the SELECT dialect of `sql_exec`. */
class RelationalEngine final : public Engine
{
    struct Relation
    {
        CanonicalTable table;
        std::vector<std::string> key;
    };
    std::map<std::string, Relation> relations_;

    public:
    explicit RelationalEngine(std::string id = "rel") : Engine(std::move(id)) { }

    Model model() const override { return Model::relational; }
    using Engine::load;
    void load(const std::string &name, const CanonicalTable &table, const LoadOptions &options) override;
    ObjectPayload export_payload(const std::string &name) const override;
    ObjectPayload evaluate(std::string_view native) const override;
    bool drop(const std::string &name) override;
    bool contains(const std::string &name) const override;
    std::vector<std::string> object_names() const override;
    ObjectInfo describe(const std::string &name) const override;
};

}
