#include <polydawg/datagen.hpp>

#include <polydawg/cif.hpp>
#include <polydawg/engines/keyvalue.hpp>
#include <polydawg/error.hpp>

#include <array>
#include <cmath>
#include <random>

namespace polydawg {

namespace {

constexpr std::array drugs{"aspirin", "heparin", "insulin", "metformin", "propofol", "vancomycin"};
constexpr std::array words{"stable", "febrile", "sedated", "alert", "hypotensive", "improving", "intubated", "weaning"};
constexpr std::int64_t samples_per_patient = 10;

/// Uniform integer in [lo, hi] without relying on distribution internals, so files match across platforms.
std::int64_t draw(std::mt19937_64 &rng, std::int64_t lo, std::int64_t hi)
{
    return lo + std::int64_t(rng() % std::uint64_t(hi - lo + 1));
}

double draw_real(std::mt19937_64 &rng, double lo, double hi)
{
    const double u = double(rng() >> 11) * 0x1.0p-53;
    return std::round((lo + u * (hi - lo)) * 100.0) / 100.0;
}

}

std::vector<GeneratedObject> generate_dataset(std::uint64_t scale, std::uint64_t seed)
{
    if (scale == 0) throw Error(ErrorKind::validation, "scale must be a positive integer");
    if (scale > 10'000) throw Error(ErrorKind::validation, "scale must be at most 10000");
    std::mt19937_64 rng(seed);
    const auto n = std::int64_t(100 * scale);

    CanonicalTable patients{{{"id", Tag::text}, {"age", Tag::integer}, {"sex", Tag::text}}, {}};
    CanonicalTable meds{{{"patient_id", Tag::text}, {"drug", Tag::text}, {"dose", Tag::real}}, {}};
    CanonicalTable notes{triple_schema(Tag::text), {}};
    CanonicalTable waveform{{{"patient", Tag::integer}, {"t", Tag::integer}, {"v", Tag::real}}, {}};

    for (std::int64_t p = 0; p < n; ++p) {
        const auto id = std::to_string(p);
        patients.rows.push_back({Value(id), Value(draw(rng, 18, 95)), Value(draw(rng, 0, 1) ? "F" : "M")});
        for (int m = 0; m < 3; ++m)
            meds.rows.push_back({Value(id), Value(drugs[std::size_t(draw(rng, 0, drugs.size() - 1))]),
                                 Value(draw_real(rng, 0.5, 50.0))});
        for (int k = 0; k < 2; ++k) {
            char col[8];
            std::snprintf(col, sizeof col, "n%02d", k);
            std::string text = words[std::size_t(draw(rng, 0, words.size() - 1))];
            text += " ";
            text += words[std::size_t(draw(rng, 0, words.size() - 1))];
            notes.rows.push_back({Value(id), Value(col), Value(text)});
        }
        for (std::int64_t t = 0; t < samples_per_patient; ++t)
            waveform.rows.push_back({Value(p), Value(t), Value(draw_real(rng, 60.0, 120.0))});
    }
    sort_rows(notes.rows);

    LoadOptions dims;
    dims.dims = {DimSpec{"patient", n, std::nullopt}, DimSpec{"t", samples_per_patient, std::nullopt}};
    return {
        {"patients", "rel", std::move(patients), LoadOptions{{"id"}, {}}},
        {"meds", "rel", std::move(meds), {}},
        {"notes", "kv", std::move(notes), {}},
        {"waveform", "arr", std::move(waveform), std::move(dims)},
    };
}

std::vector<std::filesystem::path> write_dataset(const std::filesystem::path &dir,
                                                 const std::vector<GeneratedObject> &objects)
{
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> paths;
    for (const auto &o : objects) {
        auto path = dir / (o.name + ".cif");
        cif::write_file(path, o.table);
        paths.push_back(std::move(path));
    }
    return paths;
}

}
