#include <polydawg/planner.hpp>

#include <polydawg/error.hpp>
#include <polydawg/hash.hpp>

#include <algorithm>
#include <map>
#include <set>

namespace polydawg {

namespace {

/*----- placeholder normalization -----------------------------------------------------------------------------*/

void normalize_literals(sql::Expr &e);

void normalize_literals(Box<sql::Expr> &e) { normalize_literals(*e); }

void normalize_literals(sql::Expr &e)
{
    std::visit([](auto &n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, sql::Literal>) n.value = Value("?");
        else if constexpr (std::is_same_v<T, sql::Unary> or std::is_same_v<T, sql::IsNull>) normalize_literals(n.operand);
        else if constexpr (std::is_same_v<T, sql::Binary>) { normalize_literals(n.lhs); normalize_literals(n.rhs); }
        else if constexpr (std::is_same_v<T, sql::Range>) { normalize_literals(n.lo); normalize_literals(n.hi); }
        else if constexpr (std::is_same_v<T, sql::Call>) for (auto &a : n.args) normalize_literals(a);
    }, e.node);
}

void normalize_literals(sql::Query &q)
{
    for (auto &c : q.cores) {
        for (auto &item : c.items)
            if (item.expr) normalize_literals(*item.expr);
        auto table = [](sql::TableRef &t) {
            if (auto sub = std::get_if<Box<sql::Query>>(&t.source)) normalize_literals(**sub);
        };
        table(c.from);
        for (auto &j : c.joins) {
            table(j.table);
            normalize_literals(j.on);
        }
        if (c.where) normalize_literals(*c.where);
        for (auto &g : c.group_by) normalize_literals(g);
    }
    for (auto &o : q.order_by) normalize_literals(o.expr);
    if (q.limit) q.limit = 0;
}

std::string lexeme(const sql::Expr &literal) { return sql::print(literal); }

/// Literal lexemes and identifiers of native text we cannot parse structurally.
void scan_raw(std::string_view text, std::vector<std::string> &constants, std::vector<std::string> &idents,
              std::string &shape)
{
    try {
        Lexer lex(text);
        for (auto t = lex.next(); not t.is(TokenKind::end); t = lex.next()) {
            switch (t.kind) {
                case TokenKind::integer:
                case TokenKind::real:   constants.push_back(t.text); shape += " ?"; break;
                case TokenKind::string: constants.push_back(sql::quote(t.text)); shape += " ?"; break;
                case TokenKind::ident:  idents.push_back(t.text); shape += " " + t.text; break;
                default:                shape += " " + t.text;
            }
        }
    } catch (const Error&) {
        shape = std::string(text);
    }
}

/*----- decomposition -----------------------------------------------------------------------------------------*/

struct Builder
{
    const IslandRegistry &registry;
    const EngineCatalog &catalog;
    Decomposition out;
    std::set<std::string> objects;

    std::size_t add(RemainderNode n)
    {
        out.remainder.nodes.push_back(std::move(n));
        return out.remainder.nodes.size() - 1;
    }

    std::size_t add_container(const std::string &island, const std::string &engine, std::string native, Model model,
                              std::string shape)
    {
        Container c{content_hash(engine + '\n' + native), engine, island, std::move(native), model, std::move(shape)};
        out.containers.push_back(std::move(c));
        RemainderNode n;
        n.kind = RemainderNode::container;
        n.model = model;
        n.container_index = out.containers.size() - 1;
        n.shape = out.containers.back().shape;
        return add(std::move(n));
    }

    void collect_constants(const sql::Expr &e)
    {
        sql::for_each_expr(e, [&](const sql::Expr &x) {
            if (x.is<sql::Literal>()) out.constants.push_back(lexeme(x));
        });
    }

    struct ScopeState
    {
        const ql::ScopeNode &scope;
        const ql::ResolvedScope &resolved;
        const Island &island;
        std::map<std::size_t, std::size_t> cast_nodes;
        std::map<std::string, std::size_t> object_nodes;
    };

    std::size_t cast_node(ScopeState &st, std::size_t index)
    {
        if (auto it = st.cast_nodes.find(index); it != st.cast_nodes.end()) return it->second;
        const auto &c = st.scope.casts[index];
        const auto child = scope(*c.inner, st.resolved.casts[index]);
        RemainderNode n;
        n.kind = RemainderNode::cast;
        n.model = registry.island(c.target).model;
        n.children = {child};
        n.spec.source = st.resolved.casts[index].model;
        n.spec.target = n.model;
        n.spec.key = c.key;
        if (n.spec.target == Model::array) n.spec.dim_cols = c.key;
        n.shape = describe(n.spec);
        const auto id = add(std::move(n));
        st.cast_nodes[index] = id;
        return id;
    }

    const ql::Leaf * object_leaf(ScopeState &st, const std::string &name)
    {
        auto it = st.resolved.leaves.find(name);
        if (it == st.resolved.leaves.end()) throw Error(ErrorKind::not_found, "unresolved name " + name);
        return it->second.kind == ql::Leaf::object ? &it->second : nullptr;
    }

    std::size_t leaf(ScopeState &st, const std::string &name)
    {
        const auto &l = st.resolved.leaves.at(name);
        if (l.kind == ql::Leaf::alias) return cast_node(st, l.cast);
        if (auto it = st.object_nodes.find(name); it != st.object_nodes.end()) return it->second;
        RemainderNode n;
        n.kind = RemainderNode::resident;
        n.model = st.island.model;
        n.object = name;
        n.engine = l.engine;
        n.shape = "$";
        const auto id = add(std::move(n));
        st.object_nodes[name] = id;
        return id;
    }

    std::vector<std::string> supporting_sites(const std::string &island, IslandOp op) const
    {
        std::vector<std::string> sites;
        for (const auto &m : registry.island(island).members)
            if (registry.supports(island, m, op)) sites.push_back(m);
        return sites;
    }

    std::size_t expr_node(ScopeState &st, const sql::Expr &e)
    {
        if (auto ref = std::get_if<sql::ColumnRef>(&e.node)) return leaf(st, ref->name);
        if (auto cast = std::get_if<sql::CastRef>(&e.node)) return cast_node(st, cast->index);
        const auto &call = e.as<sql::Call>();
        const auto op = *parse_island_op(call.name);
        const auto arity = input_arity(op);
        for (std::size_t i = arity; i < call.args.size(); ++i) collect_constants(call.args[i]);

        sql::Expr shape_expr = e;
        auto &shape_call = shape_expr.as<sql::Call>();
        for (std::size_t i = 0; i < arity; ++i) shape_call.args[i] = sql::make_column("$" + std::to_string(i));
        normalize_literals(shape_expr);

        std::vector<std::string> names;
        std::optional<std::string> engine;
        bool bare = true;
        for (std::size_t i = 0; i < arity; ++i) {
            auto ref = std::get_if<sql::ColumnRef>(&call.args[i].node);
            const auto *l = ref ? object_leaf(st, ref->name) : nullptr;
            if (not l or (engine and *engine != l->engine)) {
                bare = false;
                break;
            }
            engine = l->engine;
            names.push_back(ref->name);
        }
        if (bare and engine and registry.supports(st.scope.island, *engine, op)) {
            for (const auto &n : names) objects.insert(*engine + "." + n);
            auto bound = bind_op_call(op, call, names);
            return add_container(st.scope.island, *engine, registry.translate(st.scope.island, bound, *engine),
                                 st.island.model, sql::print(shape_expr));
        }

        RemainderNode n;
        n.kind = RemainderNode::cross_op;
        n.model = st.island.model;
        for (std::size_t i = 0; i < arity; ++i) n.children.push_back(expr_node(st, call.args[i]));
        std::vector<std::string> placeholders;
        for (std::size_t i = 0; i < arity; ++i) placeholders.push_back("__in" + std::to_string(i));
        n.island = st.scope.island;
        n.call = bind_op_call(op, call, placeholders);
        n.sites = supporting_sites(st.scope.island, op);
        n.shape = st.scope.island + "." + sql::print(shape_expr);
        return add(std::move(n));
    }

    std::size_t sql_node(ScopeState &st, const sql::Query &q)
    {
        sql::for_each_expr(q, [&](const sql::Expr &e) {
            if (e.is<sql::Literal>()) out.constants.push_back(lexeme(e));
        });
        if (q.limit) out.constants.push_back(std::to_string(*q.limit));

        /* Inputs in order of first appearance; a cast used inline and by alias is one input. */
        std::vector<std::string> input_keys;
        std::map<std::string, std::size_t> input_index;
        sql::Query rewritten = q;
        std::optional<std::string> engine;
        bool bare = true;
        sql::for_each_table(rewritten, [&](sql::TableRef &t) {
            std::string key, binding;
            if (auto name = std::get_if<std::string>(&t.source)) {
                const auto *l = object_leaf(st, *name);
                key = l ? "obj:" + *name : "cast:" + std::to_string(st.resolved.leaves.at(*name).cast);
                binding = *name;
                if (l) {
                    if (engine and *engine != l->engine) bare = false;
                    engine = l->engine;
                } else {
                    bare = false;
                }
            } else if (auto cast = std::get_if<sql::CastRef>(&t.source)) {
                key = "cast:" + std::to_string(cast->index);
                binding = st.scope.casts[cast->index].alias;
                bare = false;
            } else {
                return;
            }
            auto [it, fresh] = input_index.try_emplace(key, input_keys.size());
            if (fresh) input_keys.push_back(key);
            t.source = "__in" + std::to_string(it->second);
            if (t.alias.empty()) t.alias = binding;
        });

        sql::Query shape = rewritten;
        normalize_literals(shape);

        if (bare and engine and registry.supports(st.scope.island, *engine, IslandOp::select)) {
            OpCall call;
            call.op = IslandOp::select;
            call.query = q;
            for (const auto &k : input_keys) objects.insert(*engine + "." + k.substr(4));
            return add_container(st.scope.island, *engine, registry.translate(st.scope.island, call, *engine),
                                 st.island.model, sql::print(shape));
        }

        RemainderNode n;
        n.kind = RemainderNode::cross_op;
        n.model = st.island.model;
        for (const auto &k : input_keys) {
            if (k.starts_with("obj:")) n.children.push_back(leaf(st, k.substr(4)));
            else n.children.push_back(cast_node(st, std::stoul(k.substr(5))));
        }
        n.island = st.scope.island;
        n.call.op = IslandOp::select;
        n.call.query = std::move(rewritten);
        for (std::size_t i = 0; i != input_keys.size(); ++i) n.call.inputs.push_back("__in" + std::to_string(i));
        n.sites = supporting_sites(st.scope.island, IslandOp::select);
        n.shape = st.scope.island + "." + sql::print(shape);
        return add(std::move(n));
    }

    std::size_t scope(const ql::ScopeNode &s, const ql::ResolvedScope &r)
    {
        ScopeState st{s, r, registry.island(s.island), {}, {}};
        if (auto raw = std::get_if<ql::RawBody>(&s.body)) {
            const auto &engine = st.island.default_engine();
            std::vector<std::string> idents;
            std::string shape;
            scan_raw(raw->text, out.constants, idents, shape);
            for (const auto &id : idents)
                if (catalog.engine(engine).contains(id)) objects.insert(engine + "." + id);
            return add_container(s.island, engine, raw->text, st.island.model, s.island + ":" + shape);
        }
        if (auto q = std::get_if<sql::Query>(&s.body)) return sql_node(st, *q);
        return expr_node(st, std::get<sql::Expr>(s.body));
    }
};

}

bool Remainder::empty() const
{
    return std::none_of(nodes.begin(), nodes.end(), [](const RemainderNode &n) {
        return n.kind == RemainderNode::cast or n.kind == RemainderNode::cross_op;
    });
}

std::size_t Remainder::cross_op_count() const
{
    return std::size_t(std::count_if(nodes.begin(), nodes.end(),
                                     [](const RemainderNode &n) { return n.kind == RemainderNode::cross_op; }));
}

Decomposition decompose(const ql::ResolvedAST &resolved, const IslandRegistry &registry,
                        const EngineCatalog &catalog)
{
    Builder b{registry, catalog, {}, {}};
    b.out.remainder.root = b.scope(resolved.ast.root, resolved.root);
    for (const auto &n : b.out.remainder.nodes)
        if (n.kind == RemainderNode::resident) b.objects.insert(n.engine + "." + n.object);
    b.out.objects.assign(b.objects.begin(), b.objects.end());
    std::sort(b.out.constants.begin(), b.out.constants.end());
    return std::move(b.out);
}

std::string structure_text(const Remainder &remainder)
{
    if (remainder.empty()) return "<empty>";
    std::function<std::string(std::size_t)> ser = [&](std::size_t i) -> std::string {
        const auto &n = remainder.nodes[i];
        if (n.kind == RemainderNode::container or n.kind == RemainderNode::resident) return "$";
        std::vector<std::string> children;
        for (auto c : n.children) children.push_back(ser(c));
        std::sort(children.begin(), children.end());
        std::string out = (n.kind == RemainderNode::cast ? "cast[" : "op[") + n.shape + "](";
        for (std::size_t k = 0; k != children.size(); ++k) out += (k ? "," : "") + children[k];
        return out + ")";
    };
    return ser(remainder.root);
}

Signature signature_of(const Decomposition &d)
{
    return {content_hash(structure_text(d.remainder)), d.objects, d.constants};
}

/*----- plan enumeration --------------------------------------------------------------------------------------*/

namespace {

struct PlanBuilder
{
    const Decomposition &d;
    const std::map<std::size_t, std::string> &sites;
    CandidatePlan plan;

    struct Located
    {
        std::size_t slot;
        std::vector<CastSpec> pending;
    };
    std::map<std::size_t, Located> evaluated;
    std::map<std::pair<std::size_t, std::string>, std::size_t> moved;

    std::size_t new_slot(Slot s)
    {
        plan.slots.push_back(std::move(s));
        return plan.slots.size() - 1;
    }

    Located eval(std::size_t i)
    {
        if (auto it = evaluated.find(i); it != evaluated.end()) return it->second;
        const auto &n = d.remainder.nodes[i];
        Located loc{};
        switch (n.kind) {
            case RemainderNode::resident:
                loc.slot = new_slot({n.object, n.engine, n.model});
                break;
            case RemainderNode::container: {
                const auto &c = d.containers[n.container_index];
                loc.slot = new_slot({{}, c.engine, n.model});
                plan.steps.push_back({PlanStep::execute_container, i, loc.slot, {}, c.engine, {}, {}});
                break;
            }
            case RemainderNode::cast:
                loc = eval(n.children[0]);
                loc.pending.push_back(n.spec);
                break;
            case RemainderNode::cross_op: {
                const auto &site = sites.at(i);
                std::vector<std::size_t> inputs;
                for (auto child : n.children) {
                    auto in = eval(child);
                    const auto &where = plan.slots[in.slot];
                    if (where.engine == site and in.pending.empty()) {
                        inputs.push_back(in.slot);
                        continue;
                    }
                    auto key = std::pair{child, site};
                    if (auto m = moved.find(key); m != moved.end()) {
                        inputs.push_back(m->second);
                        continue;
                    }
                    MigrationSpec spec{where.model, in.pending};
                    const auto from = where.engine;
                    const auto out = new_slot({{}, site, spec.result_model()});
                    plan.steps.push_back({PlanStep::migrate, child, out, {in.slot}, site, from, spec});
                    ++plan.moves;
                    moved[key] = out;
                    inputs.push_back(out);
                }
                loc.slot = new_slot({{}, site, n.model});
                plan.steps.push_back({PlanStep::cross_op, i, loc.slot, inputs, site, {}, {}});
                break;
            }
        }
        evaluated[i] = loc;
        return loc;
    }

    std::string id_text() const
    {
        std::string out;
        for (const auto &s : plan.steps) {
            const auto &n = d.remainder.nodes[s.node];
            switch (s.kind) {
                case PlanStep::execute_container:
                    out += "X " + n.shape + "@" + s.engine;
                    break;
                case PlanStep::migrate:
                    out += "M " + s.from + ">" + s.engine + " " + to_string(s.spec.logical);
                    for (const auto &c : s.spec.casts) out += " " + describe(c);
                    break;
                case PlanStep::cross_op:
                    out += "C " + n.shape + "@" + s.engine;
                    break;
            }
            out += " (";
            for (auto in : s.inputs) out += std::to_string(in) + ",";
            out += ")->" + std::to_string(s.output) + "\n";
        }
        out += "R " + std::to_string(plan.result);
        for (const auto &c : plan.result_casts) out += " " + describe(c);
        return out;
    }
};

}

std::vector<CandidatePlan> enumerate_plans(const Decomposition &d, const IslandRegistry &, const EngineCatalog &,
                                           std::size_t cap)
{
    if (cap == 0) throw Error(ErrorKind::config, "plan cap must be at least 1");
    std::vector<std::size_t> cross;
    for (std::size_t i = 0; i != d.remainder.nodes.size(); ++i) {
        const auto &n = d.remainder.nodes[i];
        if (n.kind != RemainderNode::cross_op) continue;
        if (n.sites.empty())
            throw Error(ErrorKind::plan, "no engine supports operator " + n.island + "." + to_string(n.call.op));
        cross.push_back(i);
    }
    std::size_t combos = 1;
    for (auto i : cross) {
        combos *= d.remainder.nodes[i].sites.size();
        if (combos > 65536) throw Error(ErrorKind::plan, "too many site assignments to enumerate");
    }

    std::map<std::string, CandidatePlan> unique;
    std::vector<std::size_t> digit(cross.size(), 0);
    for (std::size_t k = 0; k != combos; ++k) {
        std::map<std::size_t, std::string> sites;
        for (std::size_t j = 0; j != cross.size(); ++j) sites[cross[j]] = d.remainder.nodes[cross[j]].sites[digit[j]];
        PlanBuilder b{d, sites, {}, {}, {}};
        auto root = b.eval(d.remainder.root);
        b.plan.result = root.slot;
        b.plan.result_casts = root.pending;
        b.plan.id = content_hash(b.id_text());
        unique.emplace(b.plan.id, std::move(b.plan));
        for (std::size_t j = 0; j != digit.size(); ++j) {
            if (++digit[j] < d.remainder.nodes[cross[j]].sites.size()) break;
            digit[j] = 0;
        }
    }
    std::vector<CandidatePlan> plans;
    for (auto &[id, p] : unique) plans.push_back(std::move(p));
    std::sort(plans.begin(), plans.end(), [](const CandidatePlan &a, const CandidatePlan &b) {
        return std::tie(a.moves, a.id) < std::tie(b.moves, b.id);
    });
    if (plans.size() > cap) plans.resize(cap);
    return plans;
}

std::string CandidatePlan::render(const Decomposition &d) const
{
    std::string out;
    auto slot = [&](std::size_t s) {
        const auto &x = slots[s];
        return "s" + std::to_string(s) + (x.object.empty() ? "" : "=" + x.engine + "." + x.object);
    };
    for (std::size_t k = 0; k != steps.size(); ++k) {
        const auto &s = steps[k];
        out += "    " + std::to_string(k + 1) + ". ";
        switch (s.kind) {
            case PlanStep::execute_container:
                out += "execute c" + std::to_string(d.remainder.nodes[s.node].container_index) + " @" + s.engine;
                break;
            case PlanStep::migrate:
                out += "migrate " + slot(s.inputs[0]) + " " + s.from + " -> " + s.engine + " as " +
                       to_string(s.spec.result_model());
                for (const auto &c : s.spec.casts) out += " [" + describe(c) + "]";
                break;
            case PlanStep::cross_op: {
                const auto &n = d.remainder.nodes[s.node];
                out += "cross-op n" + std::to_string(s.node) + " " + n.island + "." + to_string(n.call.op) + " @" +
                       s.engine + " on";
                for (auto in : s.inputs) out += " " + slot(in);
                break;
            }
        }
        out += " => s" + std::to_string(s.output) + "\n";
    }
    out += "    result " + slot(result);
    for (const auto &c : result_casts) out += " [" + describe(c) + "]";
    return out + "\n";
}

std::string explain(const Decomposition &d, const Signature &sig, const std::vector<CandidatePlan> &plans)
{
    auto join = [](const std::vector<std::string> &xs) {
        std::string s;
        for (const auto &x : xs) s += (s.empty() ? "" : ", ") + x;
        return s.empty() ? std::string("-") : s;
    };
    std::string out = "containers: " + std::to_string(d.containers.size()) + "\n";
    for (std::size_t i = 0; i != d.containers.size(); ++i) {
        const auto &c = d.containers[i];
        out += "  c" + std::to_string(i) + " " + c.id + " @" + c.engine + ": " + c.native + "\n";
    }
    if (d.remainder.empty()) {
        out += "remainder: empty\n";
    } else {
        out += "remainder:\n";
        for (std::size_t i = 0; i != d.remainder.nodes.size(); ++i) {
            const auto &n = d.remainder.nodes[i];
            out += "  n" + std::to_string(i) + (i == d.remainder.root ? "* " : "  ");
            std::string kids;
            for (auto c : n.children) kids += (kids.empty() ? "n" : ", n") + std::to_string(c);
            switch (n.kind) {
                case RemainderNode::container:
                    out += "container c" + std::to_string(n.container_index);
                    break;
                case RemainderNode::resident:
                    out += "object " + n.engine + "." + n.object;
                    break;
                case RemainderNode::cast:
                    out += "cast " + describe(n.spec) + " (" + kids + ")";
                    break;
                case RemainderNode::cross_op:
                    out += "cross-op " + n.island + "." + to_string(n.call.op) + " (" + kids + ") sites " +
                           join(n.sites);
                    break;
            }
            out += "\n";
        }
    }
    out += "signature:\n  structure: " + sig.structure + "\n  objects: " + join(sig.objects) +
           "\n  constants: " + join(sig.constants) + "\n";
    out += "plans: " + std::to_string(plans.size()) + "\n";
    for (const auto &p : plans) out += "  plan " + p.id + " moves=" + std::to_string(p.moves) + "\n" + p.render(d);
    return out;
}

Decomposition plan_query(std::string_view text, const IslandRegistry &registry, const EngineCatalog &catalog)
{
    return decompose(ql::validate(ql::parse(text), registry, catalog), registry, catalog);
}

}
