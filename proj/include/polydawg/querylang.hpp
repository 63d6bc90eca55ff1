#pragma once

#include <polydawg/island.hpp>
#include <polydawg/sql.hpp>

#include <map>

/** The polystore language: `island( body )` scopes with `cast(scope, island[, alias][, key = cols])`. */
namespace polydawg::ql {

/// Body of a degenerate-island scope, kept byte for byte.
struct RawBody
{
    std::string text;

    bool operator==(const RawBody&) const = default;
};

struct ScopeNode;

struct CastNode
{
    Box<ScopeNode> inner;
    std::string target; ///< target island
    std::string alias;  ///< empty when absent
    std::vector<std::string> key;
    sql::NodeSpan loc;

    bool operator==(const CastNode &other) const;
};

struct ScopeNode
{
    std::string island;
    /// SQL for relational scopes, an operator expression for the others, raw text for degenerate islands.
    std::variant<sql::Query, sql::Expr, RawBody> body;
    /// Casts referenced from the body by `sql::CastRef` index.
    std::vector<CastNode> casts;
    sql::NodeSpan loc;

    bool operator==(const ScopeNode&) const = default;
};

inline bool CastNode::operator==(const CastNode &other) const
{
    return *inner == *other.inner and target == other.target and alias == other.alias and key == other.key;
}

struct QueryAST
{
    ScopeNode root;

    bool operator==(const QueryAST&) const = default;
};

/// Throws `ParseError` with a span and the expected-token set.
QueryAST parse(std::string_view text);
/// Canonical text; `parse(pretty_print(a)) == a`.
std::string pretty_print(const QueryAST &ast);
std::string pretty_print(const ScopeNode &scope);

/// What a name in an operator position refers to.
struct Leaf
{
    enum Kind { object, alias } kind = object;
    std::string name;
    std::string engine;      ///< for objects
    Model model{};           ///< object model, or the cast's target-island model
    std::size_t cast = 0;    ///< for aliases
    std::string source_island; ///< for aliases
};

struct ResolvedScope
{
    std::string island;
    Model model{};
    std::map<std::string, Leaf> leaves; ///< by name as written
    std::vector<ResolvedScope> casts;   ///< parallel to `ScopeNode::casts`
};

struct ResolvedAST
{
    QueryAST ast;
    ResolvedScope root;
};

/// Resolves islands, objects, and aliases and checks operator sets and model compatibility.
ResolvedAST validate(QueryAST ast, const IslandRegistry &registry, const EngineCatalog &catalog);

/// Whether an object of `info`'s shape on a `model` engine can be read as an associative array.
bool d4m_compatible(Model model, const ObjectInfo &info);

}
