#pragma once

#include <polydawg/executor.hpp>

#include "generators.hpp"

namespace fixture {

/// `N` (key-value, rows r.. cols k..) and `T` (relational triples, rows k.. cols c..), integer values.
std::unique_ptr<polydawg::EngineCatalog> matmul_catalog(gen::Rng &rng, int size = 6, double density = 0.5);

/// The matmul catalog behind a system on a virtual clock, monitor in memory unless `log` is given.
std::unique_ptr<polydawg::System> matmul_system(std::shared_ptr<polydawg::VirtualClock> clock,
                                                polydawg::SystemConfig config = {}, std::uint64_t data_seed = 1);

/// A query with three candidate plans: matmul of `N` and `T` on rel, kv or arr.
inline const char *matmul_query = "d4m(matmul(N, T))";

}
