#include <polydawg/config.hpp>

#include <polydawg/error.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace polydawg {

namespace {

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template<typename T> T number(std::string_view s, const std::string &where)
{
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} or p != s.data() + s.size())
        throw Error(ErrorKind::config, where + ": '" + std::string(s) + "' is not a valid number");
    return v;
}

}

Config parse_config(std::string_view text, Config cfg, const std::string &source)
{
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        auto line = std::string_view(raw);
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto where = source + ":" + std::to_string(line_no);
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw Error(ErrorKind::config, where + ": expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        auto &s = cfg.system;
        if (key == "data_dir") cfg.data_dir = std::string(value);
        else if (key == "monitor_log") cfg.monitor_log = std::string(value);
        else if (key == "plan_cap") s.plan_cap = number<std::size_t>(value, where);
        else if (key == "similarity_threshold") s.threshold = number<double>(value, where);
        else if (key == "usage_bound") s.usage_bound = number<double>(value, where);
        else if (key == "seed") s.seed = number<std::uint64_t>(value, where);
        else if (key == "weight_structure") s.weights.structure = number<double>(value, where);
        else if (key == "weight_objects") s.weights.objects = number<double>(value, where);
        else if (key == "weight_constants") s.weights.constants = number<double>(value, where);
        else if (key == "idle_quiet_ms") s.idle_quiet_ms = number<double>(value, where);
        else if (key == "idle_busy") s.idle_busy = number<double>(value, where);
        else throw Error(ErrorKind::config, where + ": unknown key '" + std::string(key) + "'");
    }
    cfg.system.validate();
    return cfg;
}

Config load_config(const std::filesystem::path &path, Config base)
{
    std::ifstream in(path);
    if (not in) throw Error(ErrorKind::config, "cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), std::move(base), path.string());
}

}
