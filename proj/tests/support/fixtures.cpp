#include "fixtures.hpp"

namespace fixture {

using namespace polydawg;

std::unique_ptr<EngineCatalog> matmul_catalog(gen::Rng &rng, int size, double density)
{
    auto cat = EngineCatalog::with_default_engines();
    auto n = gen::random_assoc(rng, size, size, density, false, "r", "k");
    auto t = gen::random_assoc(rng, size, size, density, false, "k", "c");
    cat->load("kv", "N", n.to_table("row", "col", "val"));
    cat->load("rel", "T", t.to_table("r", "c", "v"));
    return cat;
}

std::unique_ptr<System> matmul_system(std::shared_ptr<VirtualClock> clock, SystemConfig config, std::uint64_t data_seed)
{
    gen::Rng rng(data_seed);
    return std::make_unique<System>(std::move(config), matmul_catalog(rng), std::move(clock));
}

}
