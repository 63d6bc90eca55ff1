#pragma once

#include <polydawg/executor.hpp>

#include <filesystem>

namespace polydawg {

/** CLI configuration. The file format is one `key = value` per line; `#` starts a comment. */
struct Config
{
    std::filesystem::path data_dir = "polydawg-data";
    std::optional<std::filesystem::path> monitor_log; ///< defaults to `<data_dir>/monitor.log`
    SystemConfig system;

    std::filesystem::path monitor_log_path() const { return monitor_log.value_or(data_dir / "monitor.log"); }
};

/// Applies the settings in `text` on top of `base`. Throws a `config` error naming the offending line.
Config parse_config(std::string_view text, Config base = {}, const std::string &source = "<config>");
Config load_config(const std::filesystem::path &path, Config base = {});

}
