// Times the OpenMP associative-array product against its serial reference and checks they agree. The reference
// is a plain all-pairs loop, so the kernel is also timed on one thread to separate algorithm from threading.

#include <polydawg/engines/assoc.hpp>

#include <CLI11.hpp>
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <random>

using namespace polydawg;

namespace {

AssociativeArray random_array(std::mt19937_64 &rng, int rows, int cols, double density, const char *rp, const char *cp)
{
    std::bernoulli_distribution keep(density);
    std::uniform_real_distribution<double> value(0.5, 2.0);
    AssociativeArray a;
    char r[16], c[16];
    for (int i = 0; i < rows; ++i) {
        std::snprintf(r, sizeof r, "%s%05d", rp, i);
        for (int j = 0; j < cols; ++j) {
            if (not keep(rng)) continue;
            std::snprintf(c, sizeof c, "%s%05d", cp, j);
            a.assign(r, c, Value(value(rng)));
        }
    }
    return a;
}

template <class F>
double best_ms(int reps, F &&f)
{
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

}

int main(int argc, char **argv)
{
    CLI::App app{"associative-array matmul: parallel vs serial"};
    std::vector<int> sizes{100, 200, 400};
    double density = 0.1;
    int reps = 3;
    std::uint64_t seed = 1;
    app.add_option("--sizes", sizes, "square dimensions to run")->delimiter(',');
    app.add_option("--density", density, "fraction of non-empty cells")->check(CLI::Range(0.0, 1.0));
    app.add_option("--reps", reps, "repetitions; the best time is reported")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed);
    CLI11_PARSE(app, argc, argv);

    const int threads = omp_get_max_threads();
    std::printf("threads=%d density=%g reps=%d\n", threads, density, reps);
    std::printf("%6s %9s %13s %11s %11s %9s\n", "n", "nnz(C)", "reference-ms", "kernel@1-ms", "kernel@N-ms",
                "threads-x");
    std::mt19937_64 rng(seed);
    int status = 0;
    for (int n : sizes) {
        const auto a = random_array(rng, n, n, density, "r", "k");
        const auto b = random_array(rng, n, n, density, "k", "c");
        AssociativeArray reference, one, many;
        const double r = best_ms(reps, [&] { reference = assoc_matmul_serial(a, b, Semiring::plus_times); });
        omp_set_num_threads(1);
        const double p1 = best_ms(reps, [&] { one = assoc_matmul(a, b, Semiring::plus_times); });
        omp_set_num_threads(threads);
        const double pn = best_ms(reps, [&] { many = assoc_matmul(a, b, Semiring::plus_times); });
        const bool same = reference == one and one == many;
        std::printf("%6d %9zu %13.3f %11.3f %11.3f %9.2f%s\n", n, reference.size(), r, p1, pn, p1 / pn,
                    same ? "" : "  MISMATCH");
        if (not same) status = 1;
    }
    return status;
}
