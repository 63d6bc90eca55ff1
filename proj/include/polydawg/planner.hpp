#pragma once

#include <polydawg/migrator.hpp>
#include <polydawg/querylang.hpp>

namespace polydawg {

/** A maximal fragment that runs wholly on one engine. */
struct Container
{
    std::string id;     ///< content hash of (engine, native)
    std::string engine;
    std::string island;
    std::string native;
    Model model{};      ///< logical model of the output
    std::string shape;  ///< native form with objects and literals replaced by placeholders
};

/** Node of the cross-engine remainder. Containers and resident objects are its leaves. */
struct RemainderNode
{
    enum Kind { container, resident, cast, cross_op } kind = resident;
    Model model{};                  ///< logical model of the node's output
    std::vector<std::size_t> children;

    std::size_t container_index = 0; ///< container
    std::string object;               ///< resident: object name
    std::string engine;               ///< resident: engine
    CastSpec spec;                    ///< cast
    std::string island;               ///< cross_op
    OpCall call;                      ///< cross_op; inputs are `__in<k>` placeholders
    std::vector<std::string> sites;   ///< cross_op: engines whose shims support the operator
    std::string shape;                ///< placeholder-normalized operator text
};

struct Remainder
{
    std::vector<RemainderNode> nodes;
    std::size_t root = 0;

    /// True when the query is a single container or a bare object.
    bool empty() const;
    std::size_t cross_op_count() const;
};

struct Decomposition
{
    std::vector<Container> containers;
    Remainder remainder;
    std::vector<std::string> objects;   ///< engine.object for every referenced object
    std::vector<std::string> constants; ///< literal lexemes
};

Decomposition decompose(const ql::ResolvedAST &resolved, const IslandRegistry &registry,
                        const EngineCatalog &catalog);

struct Signature
{
    std::string structure;              ///< 16 hex digits
    std::vector<std::string> objects;   ///< sorted, unique
    std::vector<std::string> constants; ///< sorted multiset

    bool operator==(const Signature&) const = default;
};

Signature signature_of(const Decomposition &d);
/// The canonical text that `structure` hashes.
std::string structure_text(const Remainder &remainder);

/// Where a value lives during plan execution.
struct Slot
{
    std::string object; ///< pre-bound for resident objects, filled at run time otherwise
    std::string engine;
    Model model{};      ///< logical model
};

struct PlanStep
{
    enum Kind { execute_container, migrate, cross_op } kind = execute_container;
    std::size_t node = 0;      ///< remainder node executed (container / cross_op) or moved (migrate)
    std::size_t output = 0;    ///< slot written
    std::vector<std::size_t> inputs; ///< migrate: 1 source slot; cross_op: one slot per child
    std::string engine;        ///< container engine, migrate target, or cross-op site
    std::string from;          ///< migrate source engine
    MigrationSpec spec;        ///< migrate
};

struct CandidatePlan
{
    std::string id;
    std::vector<PlanStep> steps;
    std::vector<Slot> slots;
    std::size_t result = 0;
    std::vector<CastSpec> result_casts; ///< casts still pending at the root
    std::size_t moves = 0;

    /// engine id -> number of steps run there, for reporting.
    std::string render(const Decomposition &d) const;
};

inline constexpr std::size_t default_plan_cap = 16;

/// All site assignments of the remainder's cross operators, sorted by (moves, id), at most `cap`.
std::vector<CandidatePlan> enumerate_plans(const Decomposition &d, const IslandRegistry &registry,
                                           const EngineCatalog &catalog, std::size_t cap = default_plan_cap);

/// Stable multi-line EXPLAIN text.
std::string explain(const Decomposition &d, const Signature &sig, const std::vector<CandidatePlan> &plans);

/// Parse, validate, decompose.
Decomposition plan_query(std::string_view text, const IslandRegistry &registry, const EngineCatalog &catalog);

}
