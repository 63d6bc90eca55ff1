#include <polydawg/engines/keyvalue.hpp>

#include <polydawg/error.hpp>

#include "native_d4m.hpp"

#include <mutex>

namespace polydawg {

Schema triple_schema(Tag val_tag, const std::string &row, const std::string &col, const std::string &val)
{
    return {{row, Tag::text}, {col, Tag::text}, {val, val_tag}};
}

const KeyValueEngine::Stored & KeyValueEngine::get(const std::string &name) const
{
    auto it = objects_.find(name);
    if (it == objects_.end()) throw_unknown_object(id(), name);
    return it->second;
}

void KeyValueEngine::load(const std::string &name, const CanonicalTable &table, const LoadOptions &options)
{
    table.check_conformance();
    if (not options.key.empty() or not options.dims.empty())
        throw Error(ErrorKind::schema, "key-value objects take no key or dimension options");
    const auto &s = table.schema;
    if (s.size() != 3 or s[0] != Column{"row", Tag::text} or s[1] != Column{"col", Tag::text} or s[2].name != "val")
        throw Error(ErrorKind::schema, "key-value objects need schema (row:text, col:text, val:any), got " +
                                       to_string(s));
    Stored stored{AssociativeArray::from_table(table), s[2].tag};
    std::unique_lock lock(mutex_);
    if (objects_.contains(name)) throw Error(ErrorKind::duplicate, "object " + name + " already exists");
    objects_.emplace(name, std::move(stored));
}

ObjectPayload KeyValueEngine::export_payload(const std::string &name) const
{
    std::shared_lock lock(mutex_);
    const auto &o = get(name);
    return {o.data.to_table("row", "col", "val", o.tag), {}};
}

ObjectPayload KeyValueEngine::evaluate(std::string_view native) const
{
    Lexer lex(native);
    auto cmd = detail::parse_d4m_command(lex, true);
    if (not cmd) lex.fail("unknown key-value command " + polydawg::describe(lex.peek()), lex.peek(),
                          {"SCAN", "GREP", "MATMUL", "EWISE", "TRANSPOSE"});
    std::shared_lock lock(mutex_);
    std::optional<Tag> tag;
    if (cmd->kind == detail::D4mCommand::scan or cmd->kind == detail::D4mCommand::grep or
        cmd->kind == detail::D4mCommand::transpose)
        tag = get(cmd->a).tag;
    auto result = detail::run_d4m_command(*cmd, [this](const std::string &n) -> const AssociativeArray& {
        return get(n).data;
    });
    return {result.to_table("row", "col", "val", tag ? *tag : result.value_tag()), {}};
}

bool KeyValueEngine::drop(const std::string &name)
{
    std::unique_lock lock(mutex_);
    return objects_.erase(name) != 0;
}

bool KeyValueEngine::contains(const std::string &name) const
{
    std::shared_lock lock(mutex_);
    return objects_.contains(name);
}

std::vector<std::string> KeyValueEngine::object_names() const
{
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto &[n, _] : objects_) out.push_back(n);
    return out;
}

ObjectInfo KeyValueEngine::describe(const std::string &name) const
{
    std::shared_lock lock(mutex_);
    const auto &o = get(name);
    return {triple_schema(o.tag), {}, o.data.size()};
}

}
