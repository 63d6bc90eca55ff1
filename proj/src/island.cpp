#include <polydawg/island.hpp>

#include <polydawg/error.hpp>

#include <algorithm>

namespace polydawg {

namespace {

struct OpName
{
    IslandOp op;
    const char *name;
};

constexpr OpName op_names[] = {
    {IslandOp::select, "select"},       {IslandOp::scan, "scan"},     {IslandOp::grep, "grep"},
    {IslandOp::subarray, "subarray"},   {IslandOp::filter, "filter"}, {IslandOp::agg, "agg"},
    {IslandOp::matmul, "matmul"},       {IslandOp::ewise, "ewise"},   {IslandOp::transpose, "transpose"},
    {IslandOp::native_passthrough, "native-passthrough"},
};

[[noreturn]] void bad_param(const std::string &msg) { throw Error(ErrorKind::validation, msg); }

std::string text_literal(const sql::Expr &e, const char *what)
{
    if (auto lit = std::get_if<sql::Literal>(&e.node); lit and lit->value.tag() == Tag::text)
        return lit->value.as_text();
    bad_param(std::string(what) + " must be a string literal");
}

std::int64_t int_literal(const sql::Expr &e, const char *what)
{
    if (auto lit = std::get_if<sql::Literal>(&e.node); lit and lit->value.tag() == Tag::integer)
        return lit->value.as_int();
    bad_param(std::string(what) + " must be an integer literal");
}

/// `name = value` argument; returns (name, value) or nothing.
std::optional<std::pair<std::string, const sql::Expr*>> named_arg(const sql::Expr &e)
{
    auto b = std::get_if<sql::Binary>(&e.node);
    if (not b or b->op != sql::Binary::eq) return std::nullopt;
    auto name = std::get_if<sql::ColumnRef>(&b->lhs->node);
    if (not name or not name->qualifier.empty()) return std::nullopt;
    return std::pair{name->name, &*b->rhs};
}

/// Word-like parameter: `plus`, `min.plus`, or the same as a string literal.
std::string word(const sql::Expr &e, const char *what)
{
    if (auto ref = std::get_if<sql::ColumnRef>(&e.node))
        return ref->qualifier.empty() ? ref->name : ref->qualifier + "." + ref->name;
    return text_literal(e, what);
}

KeyRange key_range(const sql::Expr &e, const std::string &what)
{
    auto r = std::get_if<sql::Range>(&e.node);
    if (not r) bad_param(what + " must be a range \"lo\":\"hi\"");
    return {text_literal(*r->lo, "range bound"), text_literal(*r->hi, "range bound")};
}

std::string lower(std::string s)
{
    for (auto &c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}

const char * to_string(IslandOp op)
{
    for (const auto &n : op_names)
        if (n.op == op) return n.name;
    return "?";
}

std::optional<IslandOp> parse_island_op(std::string_view name)
{
    for (const auto &n : op_names)
        if (name == n.name) return n.op;
    return std::nullopt;
}

std::size_t input_arity(IslandOp op)
{
    switch (op) {
        case IslandOp::matmul:
        case IslandOp::ewise:              return 2;
        case IslandOp::native_passthrough: return 0;
        default:                           return 1;
    }
}

OpCall bind_op_call(IslandOp op, const sql::Call &call, std::vector<std::string> inputs)
{
    const auto arity = input_arity(op);
    if (call.star or call.args.size() < arity)
        bad_param(std::string(to_string(op)) + " needs " + std::to_string(arity) + " input(s)");
    OpCall out;
    out.op = op;
    out.inputs = std::move(inputs);
    std::vector<const sql::Expr*> params;
    for (std::size_t i = arity; i < call.args.size(); ++i) params.push_back(&call.args[i]);

    switch (op) {
        case IslandOp::select:
        case IslandOp::scan:
            for (const auto *p : params) {
                auto named = named_arg(*p);
                if (not named or (named->first != "rows" and named->first != "cols"))
                    bad_param(std::string(to_string(op)) + " takes only rows = \"lo\":\"hi\" and cols = \"lo\":\"hi\"");
                auto &slot = named->first == "rows" ? out.rows : out.cols;
                if (slot) bad_param(named->first + " given twice");
                slot = key_range(*named->second, named->first);
            }
            break;
        case IslandOp::grep:
            if (params.size() != 1) bad_param("grep takes an object and a substring");
            out.needle = text_literal(*params[0], "grep substring");
            break;
        case IslandOp::subarray:
            for (const auto *p : params) {
                auto named = named_arg(*p);
                auto range = named ? std::get_if<sql::Range>(&named->second->node) : nullptr;
                if (not range) bad_param("subarray takes dim = lo:hi ranges");
                out.ranges.push_back({named->first, {int_literal(*range->lo, "subarray bound"),
                                                     int_literal(*range->hi, "subarray bound")}});
            }
            break;
        case IslandOp::filter:
            if (params.size() != 1) bad_param("filter takes an object and one predicate");
            sql::for_each_expr(*params[0], [](const sql::Expr &e) {
                if (auto ref = std::get_if<sql::ColumnRef>(&e.node); ref and not ref->qualifier.empty())
                    bad_param("filter predicates use unqualified attribute names");
                if (e.is<sql::Call>() or e.is<sql::Range>() or e.is<sql::CastRef>())
                    bad_param("filter predicates may not contain calls, ranges, or casts");
            });
            out.predicate = *params[0];
            break;
        case IslandOp::agg: {
            if (params.empty()) bad_param("agg takes an object, an aggregate, and grouping dimensions");
            auto fn = std::get_if<sql::Call>(&params[0]->node);
            if (not fn or not sql::is_aggregate(fn->name)) bad_param("agg needs an aggregate like sum(v)");
            out.agg_fn = fn->name;
            if (fn->star) {
                if (fn->name != "count") bad_param(fn->name + "(*) is not supported");
            } else {
                auto attr = fn->args.size() == 1 ? std::get_if<sql::ColumnRef>(&fn->args[0].node) : nullptr;
                if (not attr or not attr->qualifier.empty()) bad_param("agg aggregates one attribute");
                out.agg_attr = attr->name;
            }
            for (std::size_t i = 1; i < params.size(); ++i) {
                auto dim = std::get_if<sql::ColumnRef>(&params[i]->node);
                if (not dim or not dim->qualifier.empty()) bad_param("agg groups by dimension names");
                out.agg_by.push_back(dim->name);
            }
            break;
        }
        case IslandOp::matmul:
            if (params.size() > 1) bad_param("matmul takes two inputs and an optional semiring");
            if (params.size() == 1) {
                auto named = named_arg(*params[0]);
                if (named and named->first != "semiring") bad_param("unknown matmul parameter " + named->first);
                auto text = word(named ? *named->second : *params[0], "semiring");
                auto s = parse_semiring(lower(text));
                if (not s) bad_param("unknown semiring " + text);
                out.semiring = *s;
            }
            break;
        case IslandOp::ewise:
            if (params.size() > 1) bad_param("ewise takes two inputs and an optional operator");
            if (params.size() == 1) {
                auto named = named_arg(*params[0]);
                if (named and named->first != "op") bad_param("unknown ewise parameter " + named->first);
                auto text = word(named ? *named->second : *params[0], "ewise operator");
                auto o = parse_ewise_op(lower(text));
                if (not o) bad_param("unknown element-wise operator " + text);
                out.ewise = *o;
            }
            break;
        case IslandOp::transpose:
            if (not params.empty()) bad_param("transpose takes one input");
            break;
        case IslandOp::native_passthrough:
            bad_param("native passthrough has no call form");
    }
    return out;
}

std::string quote_native(std::string_view s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

bool is_triple_relation(const Schema &s)
{
    return s.size() == 3 and s[0] == Column{"r", Tag::text} and s[1] == Column{"c", Tag::text} and s[2].name == "v";
}

namespace {

std::string key_ranges(const OpCall &c)
{
    std::string out;
    if (c.rows) out += " ROWS " + quote_native(c.rows->lo) + ":" + quote_native(c.rows->hi);
    if (c.cols) out += " COLS " + quote_native(c.cols->lo) + ":" + quote_native(c.cols->hi);
    return out;
}

/// Native d4m text understood by both the key-value and the array engine.
std::string d4m_native(const OpCall &c)
{
    switch (c.op) {
        case IslandOp::select:
        case IslandOp::scan:      return "SCAN " + c.inputs[0] + key_ranges(c);
        case IslandOp::grep:      return "GREP " + c.inputs[0] + " " + quote_native(c.needle);
        case IslandOp::matmul:    return "MATMUL " + c.inputs[0] + " " + c.inputs[1] + " SEMIRING " + to_string(c.semiring);
        case IslandOp::ewise:     return "EWISE " + c.inputs[0] + " " + c.inputs[1] + " " + to_string(c.ewise);
        case IslandOp::transpose: return "TRANSPOSE " + c.inputs[0];
        default: break;
    }
    throw Error(ErrorKind::plan, std::string("no d4m translation for ") + to_string(c.op));
}

std::string array_native(const OpCall &c)
{
    switch (c.op) {
        case IslandOp::subarray: {
            std::string out = "SUBARRAY " + c.inputs[0];
            for (std::size_t i = 0; i != c.ranges.size(); ++i)
                out += (i ? "," : " ") + c.ranges[i].first + "=" + std::to_string(c.ranges[i].second.first) + ":" +
                       std::to_string(c.ranges[i].second.second);
            return out;
        }
        case IslandOp::filter:
            return "FILTER " + c.inputs[0] + " " + sql::print(*c.predicate);
        case IslandOp::agg: {
            std::string out = "AGG " + c.agg_fn + "(" + (c.agg_attr.empty() ? "*" : c.agg_attr) + ") " +
                              c.inputs[0] + " BY (";
            for (std::size_t i = 0; i != c.agg_by.size(); ++i) out += (i ? ", " : "") + c.agg_by[i];
            return out + ")";
        }
        default: return d4m_native(c);
    }
}

/// D4M operators over triple-encoded relations (r, c, v).
std::string relational_d4m(const OpCall &c)
{
    switch (c.op) {
        case IslandOp::select: {
            std::vector<std::string> preds;
            auto bound = [&](const char *col, const std::optional<KeyRange> &range) {
                if (not range) return;
                preds.push_back(std::string(col) + " >= " + sql::quote(range->lo));
                preds.push_back(std::string(col) + " <= " + sql::quote(range->hi));
            };
            bound("r", c.rows);
            bound("c", c.cols);
            std::string out = "SELECT r, c, v FROM " + c.inputs[0];
            for (std::size_t i = 0; i != preds.size(); ++i) out += (i ? " AND " : " WHERE ") + preds[i];
            return out;
        }
        case IslandOp::matmul: {
            const char *reduce = c.semiring == Semiring::plus_times ? "SUM(a.v * b.v)"
                                 : c.semiring == Semiring::min_plus ? "MIN(a.v + b.v)"
                                                                    : "MAX(a.v * b.v)";
            return std::string("SELECT a.r AS r, b.c AS c, ") + reduce + " AS v FROM " + c.inputs[0] + " a JOIN " +
                   c.inputs[1] + " b ON a.c = b.r GROUP BY a.r, b.c";
        }
        case IslandOp::ewise: {
            const char *reduce = c.ewise == EwiseOp::plus ? "SUM(v)" : c.ewise == EwiseOp::min ? "MIN(v)" : "MAX(v)";
            return std::string("SELECT r, c, ") + reduce + " AS v FROM (SELECT r, c, v FROM " + c.inputs[0] +
                   " UNION ALL SELECT r, c, v FROM " + c.inputs[1] + ") u GROUP BY r, c";
        }
        case IslandOp::transpose:
            return "SELECT c AS r, r AS c, v FROM " + c.inputs[0];
        default: break;
    }
    throw Error(ErrorKind::plan, std::string("no relational d4m translation for ") + to_string(c.op));
}

std::string passthrough(const OpCall &c) { return c.native; }

}

IslandRegistry IslandRegistry::register_defaults(const EngineCatalog &catalog)
{
    for (const char *id : {"rel", "kv", "arr"}) {
        if (not catalog.has_engine(id))
            throw Error(ErrorKind::not_found, std::string("default islands need engine ") + id + ", which is absent");
    }
    using enum IslandOp;
    IslandRegistry r;
    r.add_island({"relational", Model::relational, {select}, {"rel"}});
    r.add_island({"text", Model::keyvalue, {scan, grep}, {"kv"}});
    r.add_island({"array", Model::array, {subarray, filter, agg}, {"arr"}});
    r.add_island({"d4m", Model::keyvalue, {select, matmul, ewise, transpose}, {"rel", "kv", "arr"}});
    r.add_island({"raw.rel", Model::relational, {native_passthrough}, {"rel"}});
    r.add_island({"raw.kv", Model::keyvalue, {native_passthrough}, {"kv"}});
    r.add_island({"raw.arr", Model::array, {native_passthrough}, {"arr"}});

    r.add_shim("relational", "rel", {{select}, [](const OpCall &c) { return sql::print(*c.query); }});
    r.add_shim("text", "kv", {{scan, grep}, d4m_native});
    r.add_shim("array", "arr", {{subarray, filter, agg}, array_native});
    r.add_shim("d4m", "kv", {{select, matmul, ewise, transpose}, d4m_native});
    r.add_shim("d4m", "arr", {{select, matmul, ewise, transpose}, d4m_native});
    r.add_shim("d4m", "rel", {{select, matmul, ewise, transpose}, relational_d4m});
    r.add_shim("raw.rel", "rel", {{native_passthrough}, passthrough});
    r.add_shim("raw.kv", "kv", {{native_passthrough}, passthrough});
    r.add_shim("raw.arr", "arr", {{native_passthrough}, passthrough});
    return r;
}

void IslandRegistry::add_island(Island island)
{
    if (island.members.empty()) throw Error(ErrorKind::validation, "island " + island.name + " has no members");
    auto name = island.name;
    if (not islands_.emplace(name, std::move(island)).second)
        throw Error(ErrorKind::duplicate, "island " + name + " already registered");
}

void IslandRegistry::add_shim(const std::string &island, const std::string &engine, Shim shim)
{
    const auto &i = this->island(island);
    if (std::find(i.members.begin(), i.members.end(), engine) == i.members.end())
        throw Error(ErrorKind::validation, "engine " + engine + " is not a member of island " + island);
    for (auto op : shim.operators)
        if (not i.operators.contains(op))
            throw Error(ErrorKind::validation, std::string("island ") + island + " has no operator " + to_string(op));
    shims_.insert_or_assign({island, engine}, std::move(shim));
}

const Island & IslandRegistry::island(const std::string &name) const
{
    auto it = islands_.find(name);
    if (it == islands_.end()) throw Error(ErrorKind::not_found, "unknown island " + name);
    return it->second;
}

std::vector<std::string> IslandRegistry::island_names() const
{
    std::vector<std::string> out;
    for (const auto &[n, _] : islands_) out.push_back(n);
    return out;
}

bool IslandRegistry::supports(const std::string &island, const std::string &engine, IslandOp op) const
{
    const auto &i = this->island(island);
    if (not i.operators.contains(op)) return false;
    auto it = shims_.find({island, engine});
    return it != shims_.end() and it->second.operators.contains(op);
}

std::string IslandRegistry::translate(const std::string &island, const OpCall &call, const std::string &engine) const
{
    if (not supports(island, engine, call.op))
        throw Error(ErrorKind::plan, std::string("island ") + island + " cannot run " + to_string(call.op) +
                                     " on engine " + engine);
    if (not call.query and call.op != IslandOp::native_passthrough and call.inputs.size() != input_arity(call.op))
        throw Error(ErrorKind::plan, std::string(to_string(call.op)) + " called with wrong number of inputs");
    return shims_.at({island, engine}).translate(call);
}

}
