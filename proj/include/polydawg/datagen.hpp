#pragma once

#include <polydawg/engines/engine.hpp>

#include <filesystem>

namespace polydawg {

/// One generated object and where it belongs.
struct GeneratedObject
{
    std::string name;
    std::string engine;
    CanonicalTable table;
    LoadOptions options;
};

/** Synthetic clinical dataset: `patients` and `meds` (relational), `notes` (key-value triples), `waveform`
 * (array over patient and time). Scale 1 is 100 patients and 1000 waveform cells. Deterministic in `seed`. */
std::vector<GeneratedObject> generate_dataset(std::uint64_t scale, std::uint64_t seed);

/// Writes `<name>.cif` per object into `dir` and returns the paths.
std::vector<std::filesystem::path> write_dataset(const std::filesystem::path &dir,
                                                 const std::vector<GeneratedObject> &objects);

}
