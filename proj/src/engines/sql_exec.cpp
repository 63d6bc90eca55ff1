#include <polydawg/engines/sql_exec.hpp>

#include <polydawg/engines/assoc.hpp>
#include <polydawg/error.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace polydawg::sql {

const char * type_name(Type t)
{
    switch (t) {
        case Type::integer: return "int";
        case Type::real:    return "real";
        case Type::text:    return "text";
        case Type::boolean: return "boolean";
    }
    return "?";
}

bool like_match(std::string_view text, std::string_view pattern)
{
    /* Iterative wildcard matching with single backtrack point. */
    std::size_t t = 0, p = 0, star = std::string_view::npos, mark = 0;
    while (t < text.size()) {
        if (p < pattern.size() and (pattern[p] == '_' or pattern[p] == text[t])) {
            ++t;
            ++p;
        } else if (p < pattern.size() and pattern[p] == '%') {
            star = p++;
            mark = t;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            t = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() and pattern[p] == '%') ++p;
    return p == pattern.size();
}

namespace {

Type type_of(Tag tag)
{
    switch (tag) {
        case Tag::integer: return Type::integer;
        case Tag::real:    return Type::real;
        default:           return Type::text;
    }
}

Tag tag_of(Type t, const std::string &what)
{
    switch (t) {
        case Type::integer: return Tag::integer;
        case Type::real:    return Tag::real;
        case Type::text:    return Tag::text;
        case Type::boolean: break;
    }
    throw Error(ErrorKind::type, "boolean expression " + what + " cannot be a result column");
}

bool numeric(Type t) { return t == Type::integer or t == Type::real; }

Value boolean(bool b) { return Value(std::int64_t(b)); }

[[noreturn]] void type_error(const std::string &msg) { throw Error(ErrorKind::type, msg); }

std::size_t resolve(const ColumnRef &ref, const std::vector<BoundColumn> &columns)
{
    std::optional<std::size_t> found;
    for (std::size_t i = 0; i != columns.size(); ++i) {
        const auto &c = columns[i];
        if (c.name != ref.name) continue;
        if (not ref.qualifier.empty() and c.qualifier != ref.qualifier) continue;
        if (found)
            throw Error(ErrorKind::validation, "ambiguous column reference " +
                                               (ref.qualifier.empty() ? ref.name : ref.qualifier + "." + ref.name));
        found = i;
    }
    if (not found)
        throw Error(ErrorKind::not_found, "unknown column " +
                                          (ref.qualifier.empty() ? ref.name : ref.qualifier + "." + ref.name));
    return *found;
}

/// Hook for grouped queries: returns a compiled slot accessor if `e` is a grouping key or an aggregate.
using SlotHook = std::function<std::optional<Compiled>(const Expr&)>;

Compiled compile(const Expr &e, const std::vector<BoundColumn> &columns, const SlotHook *slots);

Compiled compile_arith(const Binary &b, Compiled lhs, Compiled rhs)
{
    if (not numeric(lhs.type) or not numeric(rhs.type))
        type_error(std::string("arithmetic on ") + type_name(lhs.type) + " and " + type_name(rhs.type));
    const auto op = b.op;
    const Type result = op == Binary::div ? Type::real
                        : (lhs.type == Type::integer and rhs.type == Type::integer) ? Type::integer
                                                                                     : Type::real;
    auto l = std::move(lhs.eval), r = std::move(rhs.eval);
    return {[=](const Row &row) -> Value {
                auto x = l(row), y = r(row);
                if (x.is_null() or y.is_null()) return Value();
                if (op == Binary::div) {
                    const double d = y.as_number();
                    if (d == 0.0) throw Error(ErrorKind::execution, "division by zero");
                    return Value(x.as_number() / d);
                }
                if (op == Binary::add) return add_values(x, y);
                if (op == Binary::mul) return mul_values(x, y);
                if (x.tag() == Tag::integer and y.tag() == Tag::integer) {
                    std::int64_t out;
                    if (__builtin_sub_overflow(x.as_int(), y.as_int(), &out))
                        throw Error(ErrorKind::execution, "integer overflow in subtraction");
                    return Value(out);
                }
                return Value(x.as_number() - y.as_number());
            },
            result};
}

Compiled compile(const Expr &e, const std::vector<BoundColumn> &columns, const SlotHook *slots)
{
    if (slots) {
        if (auto slot = (*slots)(e)) return *slot;
    }
    return std::visit([&](const auto &n) -> Compiled {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Literal>) {
            if (n.value.is_null()) type_error("untyped null literal");
            auto v = n.value;
            return {[v](const Row&) { return v; }, type_of(v.tag())};
        } else if constexpr (std::is_same_v<T, ColumnRef>) {
            if (slots)
                throw Error(ErrorKind::validation, "column " + n.name +
                                                   " must appear in GROUP BY or inside an aggregate");
            const auto idx = resolve(n, columns);
            return {[idx](const Row &row) { return row[idx]; }, type_of(columns[idx].tag)};
        } else if constexpr (std::is_same_v<T, Unary>) {
            auto operand = compile(*n.operand, columns, slots);
            if (n.op == Unary::neg) {
                if (not numeric(operand.type)) type_error(std::string("negation of ") + type_name(operand.type));
                auto f = std::move(operand.eval);
                return {[f](const Row &row) -> Value {
                            auto v = f(row);
                            if (v.is_null()) return v;
                            if (v.tag() == Tag::integer) return Value(-v.as_int());
                            return Value(-v.as_real());
                        },
                        operand.type};
            }
            if (operand.type != Type::boolean) type_error(std::string("NOT applied to ") + type_name(operand.type));
            auto f = std::move(operand.eval);
            return {[f](const Row &row) -> Value {
                        auto v = f(row);
                        return v.is_null() ? v : boolean(not truthy(v));
                    },
                    Type::boolean};
        } else if constexpr (std::is_same_v<T, Binary>) {
            auto lhs = compile(*n.lhs, columns, slots);
            auto rhs = compile(*n.rhs, columns, slots);
            switch (n.op) {
                case Binary::add:
                case Binary::sub:
                case Binary::mul:
                case Binary::div:
                    return compile_arith(n, std::move(lhs), std::move(rhs));
                case Binary::logical_and:
                case Binary::logical_or: {
                    if (lhs.type != Type::boolean or rhs.type != Type::boolean)
                        type_error("AND/OR operands must be boolean");
                    const bool is_and = n.op == Binary::logical_and;
                    auto l = std::move(lhs.eval), r = std::move(rhs.eval);
                    return {[=](const Row &row) -> Value {
                                auto x = l(row);
                                if (not x.is_null() and truthy(x) != is_and) return x;
                                auto y = r(row);
                                if (not y.is_null() and truthy(y) != is_and) return y;
                                if (x.is_null() or y.is_null()) return Value();
                                return boolean(is_and);
                            },
                            Type::boolean};
                }
                case Binary::like: {
                    if (lhs.type != Type::text or rhs.type != Type::text) type_error("LIKE needs text operands");
                    auto l = std::move(lhs.eval), r = std::move(rhs.eval);
                    return {[=](const Row &row) -> Value {
                                auto x = l(row), y = r(row);
                                if (x.is_null() or y.is_null()) return Value();
                                return boolean(like_match(x.as_text(), y.as_text()));
                            },
                            Type::boolean};
                }
                default: {
                    const bool ok = (numeric(lhs.type) and numeric(rhs.type)) or
                                    (lhs.type == Type::text and rhs.type == Type::text);
                    if (not ok)
                        type_error(std::string("cannot compare ") + type_name(lhs.type) + " with " +
                                   type_name(rhs.type));
                    const auto op = n.op;
                    auto l = std::move(lhs.eval), r = std::move(rhs.eval);
                    return {[=](const Row &row) -> Value {
                                auto x = l(row), y = r(row);
                                if (x.is_null() or y.is_null()) return Value();
                                auto c = compare(x, y);
                                switch (op) {
                                    case Binary::eq: return boolean(c == 0);
                                    case Binary::ne: return boolean(c != 0);
                                    case Binary::lt: return boolean(c < 0);
                                    case Binary::le: return boolean(c <= 0);
                                    case Binary::gt: return boolean(c > 0);
                                    default:         return boolean(c >= 0);
                                }
                            },
                            Type::boolean};
                }
            }
        } else if constexpr (std::is_same_v<T, IsNull>) {
            auto operand = compile(*n.operand, columns, slots);
            auto f = std::move(operand.eval);
            const bool negated = n.negated;
            return {[=](const Row &row) { return boolean(f(row).is_null() != negated); }, Type::boolean};
        } else if constexpr (std::is_same_v<T, Call>) {
            if (is_aggregate(n.name)) type_error("aggregate " + n.name + " is not allowed here");
            throw Error(ErrorKind::validation, "unknown function " + n.name);
        } else if constexpr (std::is_same_v<T, Range>) {
            throw Error(ErrorKind::validation, "range expression is not allowed here");
        } else {
            throw Error(ErrorKind::validation, "cast is not allowed in a native query");
        }
    }, e.node);
}

/*----- relational evaluation ---------------------------------------------------------------------------------*/

struct Frame
{
    std::vector<BoundColumn> columns;
    std::vector<Row> rows;
};

struct Executor
{
    const TableResolver &tables;

    Frame table(const TableRef &ref)
    {
        Frame f;
        CanonicalTable sub;
        const CanonicalTable *t = nullptr;
        if (auto name = std::get_if<std::string>(&ref.source)) {
            t = tables(*name);
            if (not t) throw Error(ErrorKind::not_found, "unknown table " + *name);
        } else if (auto q = std::get_if<Box<Query>>(&ref.source)) {
            sub = run(**q);
            t = &sub;
        } else {
            throw Error(ErrorKind::validation, "cast is not allowed in a native query");
        }
        const auto qualifier = ref.binding_name();
        for (const auto &c : t->schema) f.columns.push_back({qualifier, c.name, c.tag});
        f.rows = t == &sub ? std::move(sub.rows) : t->rows;
        return f;
    }

    /// Finds `l = r` with l resolving only on the left side and r only on the right side (either order).
    std::optional<std::pair<std::size_t, std::size_t>>
    hash_keys(const Expr &on, const std::vector<BoundColumn> &left, const std::vector<BoundColumn> &right)
    {
        auto b = std::get_if<Binary>(&on.node);
        if (not b) return std::nullopt;
        if (b->op == Binary::logical_and) {
            if (auto k = hash_keys(*b->lhs, left, right)) return k;
            return hash_keys(*b->rhs, left, right);
        }
        if (b->op != Binary::eq or not b->lhs->is<ColumnRef>() or not b->rhs->is<ColumnRef>()) return std::nullopt;
        auto side = [](const ColumnRef &ref, const std::vector<BoundColumn> &cols) -> std::optional<std::size_t> {
            try { return resolve(ref, cols); } catch (const Error&) { return std::nullopt; }
        };
        const auto &x = b->lhs->as<ColumnRef>(), &y = b->rhs->as<ColumnRef>();
        auto xl = side(x, left), xr = side(x, right), yl = side(y, left), yr = side(y, right);
        std::optional<std::pair<std::size_t, std::size_t>> keys;
        if (xl and not xr and yr and not yl) keys = {{*xl, *yr}};
        else if (yl and not yr and xr and not xl) keys = {{*yl, *xr}};
        if (keys and left[keys->first].tag != right[keys->second].tag) return std::nullopt;
        return keys;
    }

    Frame join(Frame left, const Join &j)
    {
        Frame right = table(j.table);
        Frame out;
        out.columns = left.columns;
        out.columns.insert(out.columns.end(), right.columns.begin(), right.columns.end());
        auto on = compile(j.on, out.columns, nullptr);
        if (on.type != Type::boolean) type_error("join condition must be boolean");

        auto emit = [&](const Row &l, const Row &r) {
            Row row = l;
            row.insert(row.end(), r.begin(), r.end());
            if (truthy(on.eval(row))) out.rows.push_back(std::move(row));
        };
        if (auto keys = hash_keys(j.on, left.columns, right.columns)) {
            std::map<Value, std::vector<std::size_t>, TotalLess> index;
            for (std::size_t i = 0; i != right.rows.size(); ++i) {
                const auto &k = right.rows[i][keys->second];
                if (not k.is_null()) index[k].push_back(i);
            }
            for (const auto &l : left.rows) {
                const auto &k = l[keys->first];
                if (k.is_null()) continue;
                auto it = index.find(k);
                if (it == index.end()) continue;
                for (auto i : it->second) emit(l, right.rows[i]);
            }
        } else {
            for (const auto &l : left.rows)
                for (const auto &r : right.rows) emit(l, r);
        }
        return out;
    }

    static std::string output_name(const SelectItem &item, std::size_t position)
    {
        if (not item.alias.empty()) return item.alias;
        const auto &e = *item.expr;
        if (auto c = std::get_if<ColumnRef>(&e.node)) return c->name;
        if (auto call = std::get_if<Call>(&e.node); call and is_aggregate(call->name)) {
            if (call->star) return call->name;
            if (call->args.size() == 1)
                if (auto c = std::get_if<ColumnRef>(&call->args[0].node)) return call->name + "_" + c->name;
            return call->name;
        }
        return "expr" + std::to_string(position + 1);
    }

    struct Aggregate
    {
        std::string fn;
        bool star;
        Compiled arg;
        Type type;
    };

    static bool contains_aggregate(const Expr &e)
    {
        bool found = false;
        for_each_expr(e, [&](const Expr &x) {
            if (auto c = std::get_if<Call>(&x.node); c and is_aggregate(c->name)) found = true;
        });
        return found;
    }

    Aggregate make_aggregate(const Call &call, const std::vector<BoundColumn> &columns)
    {
        Aggregate a{call.name, call.star, {}, Type::integer};
        if (call.star) {
            if (call.name != "count") type_error(call.name + "(*) is not supported");
            return a;
        }
        if (call.args.size() != 1) throw Error(ErrorKind::validation, call.name + " takes one argument");
        if (contains_aggregate(call.args[0])) throw Error(ErrorKind::validation, "nested aggregate");
        a.arg = compile(call.args[0], columns, nullptr);
        if (a.arg.type == Type::boolean) type_error(call.name + " over a boolean expression");
        if (call.name == "count") a.type = Type::integer;
        else if (call.name == "sum") {
            if (not numeric(a.arg.type)) type_error(std::string("SUM over ") + type_name(a.arg.type));
            a.type = a.arg.type;
        } else if (call.name == "avg") {
            if (not numeric(a.arg.type)) type_error(std::string("AVG over ") + type_name(a.arg.type));
            a.type = Type::real;
        } else {
            a.type = a.arg.type;
        }
        return a;
    }

    static Value fold(const Aggregate &a, const std::vector<const Row*> &rows)
    {
        if (a.star) return Value(std::int64_t(rows.size()));
        std::int64_t count = 0;
        Value acc;
        double sum = 0.0;
        for (const auto *row : rows) {
            auto v = a.arg.eval(*row);
            if (v.is_null()) continue;
            ++count;
            if (a.fn == "sum") acc = acc.is_null() ? v : add_values(acc, v);
            else if (a.fn == "avg") sum += v.as_number();
            else if (a.fn == "min") { if (acc.is_null() or compare(v, acc) < 0) acc = v; }
            else if (a.fn == "max") { if (acc.is_null() or compare(v, acc) > 0) acc = v; }
        }
        if (a.fn == "count") return Value(count);
        if (a.fn == "avg") return count ? Value(sum / double(count)) : Value();
        return acc;
    }

    CanonicalTable core(const SelectCore &c)
    {
        Frame f = table(c.from);
        for (const auto &j : c.joins) f = join(std::move(f), j);

        if (c.where) {
            auto pred = compile(*c.where, f.columns, nullptr);
            if (pred.type != Type::boolean) type_error("WHERE condition must be boolean");
            if (contains_aggregate(*c.where)) throw Error(ErrorKind::validation, "aggregate in WHERE");
            std::vector<Row> kept;
            for (auto &row : f.rows)
                if (truthy(pred.eval(row))) kept.push_back(std::move(row));
            f.rows = std::move(kept);
        }

        bool grouped = not c.group_by.empty();
        for (const auto &item : c.items)
            if (item.expr and contains_aggregate(*item.expr)) grouped = true;

        CanonicalTable out;
        if (not grouped) {
            std::vector<Compiled> exprs;
            for (std::size_t i = 0; i != c.items.size(); ++i) {
                const auto &item = c.items[i];
                if (not item.expr) {
                    for (std::size_t k = 0; k != f.columns.size(); ++k) {
                        out.schema.push_back({f.columns[k].name, f.columns[k].tag});
                        exprs.push_back({[k](const Row &row) { return row[k]; }, type_of(f.columns[k].tag)});
                    }
                    continue;
                }
                auto compiled = compile(*item.expr, f.columns, nullptr);
                out.schema.push_back({output_name(item, i), tag_of(compiled.type, print(*item.expr))});
                exprs.push_back(std::move(compiled));
            }
            out.rows.reserve(f.rows.size());
            for (const auto &row : f.rows) {
                Row r;
                r.reserve(exprs.size());
                for (const auto &e : exprs) r.push_back(e.eval(row));
                out.rows.push_back(std::move(r));
            }
        } else {
            /* Grouped: evaluate keys and aggregates per group, then project over [keys..., aggregates...]. */
            std::vector<Compiled> keys;
            for (const auto &g : c.group_by) {
                if (contains_aggregate(g)) throw Error(ErrorKind::validation, "aggregate in GROUP BY");
                keys.push_back(compile(g, f.columns, nullptr));
                if (keys.back().type == Type::boolean) type_error("GROUP BY over a boolean expression");
            }
            std::vector<Aggregate> aggregates;
            SlotHook hook = [&](const Expr &e) -> std::optional<Compiled> {
                for (std::size_t k = 0; k != c.group_by.size(); ++k) {
                    bool same = c.group_by[k] == e;
                    if (not same and e.is<ColumnRef>() and c.group_by[k].is<ColumnRef>())
                        same = resolve(e.as<ColumnRef>(), f.columns) ==
                               resolve(c.group_by[k].as<ColumnRef>(), f.columns);
                    if (same) return Compiled{[k](const Row &row) { return row[k]; }, keys[k].type};
                }
                if (auto call = std::get_if<Call>(&e.node); call and is_aggregate(call->name)) {
                    aggregates.push_back(make_aggregate(*call, f.columns));
                    const auto slot = c.group_by.size() + aggregates.size() - 1;
                    return Compiled{[slot](const Row &row) { return row[slot]; }, aggregates.back().type};
                }
                return std::nullopt;
            };
            std::vector<Compiled> exprs;
            for (std::size_t i = 0; i != c.items.size(); ++i) {
                const auto &item = c.items[i];
                if (not item.expr) throw Error(ErrorKind::validation, "SELECT * with GROUP BY or aggregates");
                auto compiled = compile(*item.expr, f.columns, &hook);
                out.schema.push_back({output_name(item, i), tag_of(compiled.type, print(*item.expr))});
                exprs.push_back(std::move(compiled));
            }

            std::map<Row, std::size_t, TotalLess> group_index;
            std::vector<Row> group_keys;
            std::vector<std::vector<const Row*>> members;
            for (const auto &row : f.rows) {
                Row key;
                for (const auto &k : keys) key.push_back(k.eval(row));
                auto [it, fresh] = group_index.try_emplace(key, group_keys.size());
                if (fresh) {
                    group_keys.push_back(std::move(key));
                    members.emplace_back();
                }
                members[it->second].push_back(&row);
            }
            if (c.group_by.empty() and group_keys.empty()) {
                group_keys.emplace_back();
                members.emplace_back();
            }
            for (std::size_t g = 0; g != group_keys.size(); ++g) {
                Row slots = group_keys[g];
                for (const auto &a : aggregates) slots.push_back(fold(a, members[g]));
                Row r;
                for (const auto &e : exprs) r.push_back(e.eval(slots));
                out.rows.push_back(std::move(r));
            }
        }

        if (c.distinct) {
            std::map<Row, bool, TotalLess> seen;
            std::vector<Row> unique;
            for (auto &row : out.rows)
                if (seen.try_emplace(row, true).second) unique.push_back(std::move(row));
            out.rows = std::move(unique);
        }
        return out;
    }

    static void unify(CanonicalTable &acc, CanonicalTable next)
    {
        if (acc.schema.size() != next.schema.size())
            throw Error(ErrorKind::validation, "UNION ALL operands have different arity");
        for (std::size_t i = 0; i != acc.schema.size(); ++i) {
            auto &a = acc.schema[i].tag;
            const auto b = next.schema[i].tag;
            if (a == b) continue;
            const bool both_numeric = (a == Tag::integer or a == Tag::real) and (b == Tag::integer or b == Tag::real);
            if (not both_numeric)
                type_error(std::string("UNION ALL column ") + acc.schema[i].name + ": " + tag_name(a) + " vs " +
                           tag_name(b));
            a = Tag::real;
        }
        for (auto &row : next.rows) acc.rows.push_back(std::move(row));
        for (auto &row : acc.rows)
            for (std::size_t i = 0; i != row.size(); ++i)
                if (acc.schema[i].tag == Tag::real and row[i].tag() == Tag::integer) row[i] = Value(row[i].as_number());
    }

    std::size_t order_slot(const OrderItem &item, const Query &q, const Schema &schema)
    {
        const auto &e = item.expr;
        if (auto lit = std::get_if<Literal>(&e.node); lit and lit->value.tag() == Tag::integer) {
            const auto pos = lit->value.as_int();
            if (pos < 1 or std::size_t(pos) > schema.size())
                throw Error(ErrorKind::validation, "ORDER BY position " + std::to_string(pos) + " out of range");
            return std::size_t(pos - 1);
        }
        const auto &items = q.cores.front().items;
        std::size_t offset = 0;
        for (std::size_t i = 0; i != items.size() and items[i].expr; ++i, ++offset) {
            if (*items[i].expr == e) return offset;
        }
        if (auto ref = std::get_if<ColumnRef>(&e.node); ref and ref->qualifier.empty()) {
            std::optional<std::size_t> found;
            for (std::size_t i = 0; i != schema.size(); ++i) {
                if (schema[i].name != ref->name) continue;
                if (found) throw Error(ErrorKind::validation, "ambiguous ORDER BY column " + ref->name);
                found = i;
            }
            if (found) return *found;
        }
        throw Error(ErrorKind::validation, "ORDER BY " + print(e) + " does not name an output column");
    }

    CanonicalTable run(const Query &q)
    {
        CanonicalTable out = core(q.cores.front());
        for (std::size_t i = 1; i != q.cores.size(); ++i) unify(out, core(q.cores[i]));

        if (not q.order_by.empty()) {
            std::vector<std::pair<std::size_t, bool>> keys;
            for (const auto &item : q.order_by) keys.emplace_back(order_slot(item, q, out.schema), item.descending);
            std::stable_sort(out.rows.begin(), out.rows.end(), [&](const Row &a, const Row &b) {
                for (auto [slot, desc] : keys) {
                    auto c = compare(a[slot], b[slot]);
                    if (c != 0) return desc ? c > 0 : c < 0;
                }
                return TotalLess{}(a, b);
            });
        }
        if (q.limit) {
            if (*q.limit < 0) throw Error(ErrorKind::validation, "negative LIMIT");
            if (out.rows.size() > std::size_t(*q.limit)) out.rows.resize(std::size_t(*q.limit));
        }
        return out;
    }
};

}

Compiled compile_scalar(const Expr &e, const std::vector<BoundColumn> &columns)
{
    return compile(e, columns, nullptr);
}

CanonicalTable execute(const Query &q, const TableResolver &tables)
{
    return Executor{tables}.run(q);
}

}
