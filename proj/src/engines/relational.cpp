#include <polydawg/engines/relational.hpp>

#include <polydawg/engines/sql_exec.hpp>
#include <polydawg/error.hpp>

#include <mutex>
#include <set>

namespace polydawg {

void RelationalEngine::load(const std::string &name, const CanonicalTable &table, const LoadOptions &options)
{
    table.check_conformance();
    if (not options.dims.empty()) throw Error(ErrorKind::schema, "relational objects take no dimensions");
    std::vector<std::size_t> key_index;
    for (const auto &k : options.key) {
        auto idx = find_column(table.schema, k);
        if (not idx) throw Error(ErrorKind::schema, "key column " + k + " not in schema of " + name);
        key_index.push_back(*idx);
    }
    if (not key_index.empty()) {
        std::set<Row, TotalLess> seen;
        for (const auto &row : table.rows) {
            Row key;
            for (auto i : key_index) {
                if (row[i].is_null()) throw Error(ErrorKind::schema, "null in key column " + table.schema[i].name);
                key.push_back(row[i]);
            }
            if (not seen.insert(std::move(key)).second)
                throw Error(ErrorKind::schema, "duplicate key in " + name);
        }
    }
    std::unique_lock lock(mutex_);
    if (relations_.contains(name)) throw Error(ErrorKind::duplicate, "object " + name + " already exists");
    relations_.emplace(name, Relation{table, options.key});
}

ObjectPayload RelationalEngine::export_payload(const std::string &name) const
{
    std::shared_lock lock(mutex_);
    auto it = relations_.find(name);
    if (it == relations_.end()) throw_unknown_object(id(), name);
    return {it->second.table, {it->second.key, {}}};
}

ObjectPayload RelationalEngine::evaluate(std::string_view native) const
{
    auto query = sql::parse_native_query(native);
    std::shared_lock lock(mutex_);
    auto table = sql::execute(query, [this](const std::string &name) -> const CanonicalTable* {
        auto it = relations_.find(name);
        return it == relations_.end() ? nullptr : &it->second.table;
    });
    return {std::move(table), {}};
}

bool RelationalEngine::drop(const std::string &name)
{
    std::unique_lock lock(mutex_);
    return relations_.erase(name) != 0;
}

bool RelationalEngine::contains(const std::string &name) const
{
    std::shared_lock lock(mutex_);
    return relations_.contains(name);
}

std::vector<std::string> RelationalEngine::object_names() const
{
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto &[n, _] : relations_) out.push_back(n);
    return out;
}

ObjectInfo RelationalEngine::describe(const std::string &name) const
{
    std::shared_lock lock(mutex_);
    auto it = relations_.find(name);
    if (it == relations_.end()) throw_unknown_object(id(), name);
    return {it->second.table.schema, {it->second.key, {}}, it->second.table.rows.size()};
}

}
