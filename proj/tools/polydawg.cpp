// polydawg command-line front end.
//
// Exit codes: 0 success, 1 usage/storage/config or other failure, 2 query error (syntax, validation, planning,
// execution), 3 internal inconsistency between plans of one query.

#include <polydawg/cif.hpp>
#include <polydawg/config.hpp>
#include <polydawg/datagen.hpp>
#include <polydawg/error.hpp>
#include <polydawg/executor.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <unistd.h>

using namespace polydawg;

namespace {

enum Exit { ok = 0, failure = 1, query_error = 2, inconsistent = 3 };

std::vector<std::string> split_commas(const std::string &s)
{
    std::vector<std::string> out;
    std::stringstream in(s);
    for (std::string part; std::getline(in, part, ',');)
        if (not part.empty()) out.push_back(part);
    return out;
}

std::vector<DimSpec> parse_dims(const std::string &s)
{
    std::vector<DimSpec> dims;
    for (const auto &item : split_commas(s)) {
        DimSpec d;
        const auto colon = item.find(':');
        d.name = item.substr(0, colon);
        if (colon != std::string::npos) {
            try {
                std::size_t used = 0;
                d.length = std::stoll(item.substr(colon + 1), &used);
                if (used != item.size() - colon - 1) throw std::invalid_argument(item);
            } catch (const std::logic_error&) {
                throw Error(ErrorKind::validation, "bad dimension length in '" + item + "'");
            }
        }
        dims.push_back(std::move(d));
    }
    return dims;
}

std::unique_ptr<EngineCatalog> open_catalog(const Config &cfg)
{
    auto catalog = EngineCatalog::with_default_engines();
    catalog->restore(cfg.data_dir);
    return catalog;
}

std::unique_ptr<System> open_system(const Config &cfg)
{
    auto sc = cfg.system;
    sc.monitor_log = cfg.monitor_log_path();
    return std::make_unique<System>(sc, open_catalog(cfg));
}

/// Runs `fn`, printing errors; the query text is used for caret annotations.
int guarded(const std::string &text, const std::function<void()> &fn, int error_code = query_error)
{
    try {
        fn();
        return ok;
    } catch (const ParseError &e) {
        // without query text (file input) the message already names file and line
        if (text.empty()) std::cerr << "error (parse): " << e.what() << '\n';
        else std::cerr << annotate(e, text);
        return error_code;
    } catch (const Error &e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        if (e.kind() == ErrorKind::consistency) return inconsistent;
        if (e.kind() == ErrorKind::storage or e.kind() == ErrorKind::config) return failure;
        return error_code;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return failure;
    }
}

void print_explain(System &sys, const std::string &text)
{
    auto d = plan_query(text, sys.registry(), sys.catalog());
    auto plans = enumerate_plans(d, sys.registry(), sys.catalog(), sys.config().plan_cap);
    std::cout << explain(d, signature_of(d), plans);
}

std::string read_query(const std::string &arg)
{
    if (arg != "-") return arg;
    std::stringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
}

int repl(System &sys)
{
    const bool interactive = isatty(STDIN_FILENO);
    for (std::string line;;) {
        drain_background(sys);
        if (interactive) std::cout << "polydawg> " << std::flush;
        if (not std::getline(std::cin, line)) break;
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        line = line.substr(first);
        if (line == ":quit" or line == ":q") break;
        if (line == ":pending") {
            std::cout << sys.monitor().pending().size() << " pending plan(s)\n";
            continue;
        }
        if (line.starts_with(":train ")) {
            const auto q = line.substr(7);
            guarded(q, [&] { std::cout << render(run_training(q, sys)); });
        } else if (line.starts_with(":explain ")) {
            const auto q = line.substr(9);
            guarded(q, [&] { print_explain(sys, q); });
        } else if (line.starts_with(':')) {
            std::cerr << "unknown command " << line.substr(0, line.find(' ')) << '\n';
        } else {
            guarded(line, [&] { std::cout << render(run_production(line, sys)); });
        }
    }
    return ok;
}

}

int main(int argc, char **argv)
{
    CLI::App app{"polystore query engine over relational, key-value and array stores"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "configuration file (key = value lines)");
    app.add_option("--seed", seed, "random seed for plan selection and data generation");

    auto *load = app.add_subcommand("load", "load a CIF file into an engine");
    std::string engine, object, cif_path, key, dims;
    load->add_option("engine", engine, "rel, kv or arr")->required();
    load->add_option("object", object)->required();
    load->add_option("cif", cif_path)->required();
    load->add_option("--key", key, "comma-separated key columns (rel)");
    load->add_option("--dims", dims, "dimension columns name[:length],... (arr)");

    auto *query = app.add_subcommand("query", "run a query");
    std::string text;
    bool training = false;
    query->add_option("text", text, "query text, or - for stdin")->required();
    query->add_flag("--training", training, "measure every candidate plan");

    auto *explain_cmd = app.add_subcommand("explain", "show the decomposition and candidate plans");
    explain_cmd->add_option("text", text, "query text, or - for stdin")->required();

    auto *datagen = app.add_subcommand("datagen", "write the synthetic clinical dataset");
    std::uint64_t scale = 0;
    std::string out_dir = "data";
    datagen->add_option("--scale", scale, "100 patients per unit")->required();
    datagen->add_option("--out", out_dir, "output directory");

    auto *monitor = app.add_subcommand("monitor", "inspect the monitor log");
    monitor->require_subcommand(1);
    auto *dump = monitor->add_subcommand("dump", "print the log verbatim");
    auto *stats = monitor->add_subcommand("stats", "mean runtime per plan for a structure hash");
    std::string structure;
    stats->add_option("structure", structure)->required();

    auto *repl_cmd = app.add_subcommand("repl", "read queries line by line (:train, :explain, :pending, :quit)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? ok : failure;
    }

    Config cfg;
    try {
        if (not config_path.empty()) cfg = load_config(config_path);
        if (seed) cfg.system.seed = *seed;
    } catch (const Error &e) {
        std::cerr << "error (config): " << e.what() << '\n';
        return failure;
    }

    if (*load) {
        return guarded("", [&] {
            auto catalog = open_catalog(cfg);
            auto table = cif::read_file(cif_path);
            LoadOptions options{split_commas(key), parse_dims(dims)};
            catalog->load(engine, object, table, options);
            catalog->save(cfg.data_dir);
            std::cout << "loaded " << table.rows.size() << " rows into " << engine << "." << object << '\n';
        }, failure);
    }
    if (*query) {
        const auto q = read_query(text);
        return guarded(q, [&] {
            auto sys = open_system(cfg);
            std::cout << render(training ? run_training(q, *sys) : run_production(q, *sys));
        });
    }
    if (*explain_cmd) {
        const auto q = read_query(text);
        return guarded(q, [&] {
            auto sys = open_system(cfg);
            print_explain(*sys, q);
        });
    }
    if (*datagen) {
        return guarded("", [&] {
            auto objects = generate_dataset(scale, cfg.system.seed);
            auto paths = write_dataset(out_dir, objects);
            for (std::size_t i = 0; i != objects.size(); ++i) {
                const auto &o = objects[i];
                std::cout << "wrote " << paths[i].string() << " (" << o.table.rows.size() << " rows) load: "
                          << o.engine << ' ' << o.name;
                if (not o.options.key.empty()) std::cout << " --key " << o.options.key.front();
                if (not o.options.dims.empty()) {
                    std::cout << " --dims ";
                    for (std::size_t k = 0; k != o.options.dims.size(); ++k)
                        std::cout << (k ? "," : "") << o.options.dims[k].name << ':' << *o.options.dims[k].length;
                }
                std::cout << '\n';
            }
        }, failure);
    }
    if (*dump) {
        return guarded("", [&] {
            std::ifstream in(cfg.monitor_log_path(), std::ios::binary);
            if (in) std::cout << in.rdbuf();
        }, failure);
    }
    if (*stats) {
        int code = ok;
        auto rc = guarded("", [&] {
            MonitorDB db(cfg.monitor_log_path(), cfg.system.weights);
            auto rows = db.stats(structure);
            if (rows.empty()) {
                std::cerr << "no records for structure " << structure << '\n';
                code = failure;
            }
            for (const auto &s : rows)
                std::cout << "plan " << s.plan_id << " mean-ms=" << format_real(s.mean_ms) << " runs=" << s.runs
                          << " failures=" << s.failures << '\n';
        }, failure);
        return rc != ok ? rc : code;
    }
    if (*repl_cmd) {
        std::unique_ptr<System> sys;
        if (auto rc = guarded("", [&] { sys = open_system(cfg); }, failure); rc != ok) return rc;
        return repl(*sys);
    }
    return failure;
}
