#pragma once

// Synthetic benchmark data.  The two-input Kotanchek function is a standard
// symbolic-regression target with one bump and slow asymmetric decay:
//
//     f(x, y) = exp(-(x - 1)^2) / (1.2 + (y - 2.5)^2)
//
// Training data samples the unit-free box [0.3, 4]^2; the evaluation grid
// extends slightly outside it.  Sampling uses an explicit mapping from the
// raw mt19937_64 stream so files are identical across platforms and
// standard libraries for a given seed.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "nlreg/csv.hpp"

namespace nlreg {

inline double kotanchek(double x, double y) {
    const double dx = x - 1.0;
    const double dy = y - 2.5;
    return std::exp(-dx * dx) / (1.2 + dy * dy);
}

namespace detail {

struct PortableRng {
    std::mt19937_64 gen;
    explicit PortableRng(std::uint64_t seed) : gen(seed) {}

    double uniform01() {  // 53-bit mantissa in [0, 1)
        return static_cast<double>(gen() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal(double sd) {  // Box-Muller, one draw per call pair kept simple
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
};

}  // namespace detail

struct KotanchekData {
    CsvTable train;  // columns x, y, f
    CsvTable test;   // 45 x 45 grid over [-0.2, 4.2]^2, step 0.1
};

inline KotanchekData gen_kotanchek(std::uint64_t seed, int n_train = 100,
                                   double noise_sd = 0.0) {
    detail::PortableRng rng(seed);
    KotanchekData out;
    out.train.header = {"x", "y", "f"};
    for (int k = 0; k < n_train; ++k) {
        const double x = rng.uniform(0.3, 4.0);
        const double y = rng.uniform(0.3, 4.0);
        double f = kotanchek(x, y);
        if (noise_sd > 0.0) f += rng.normal(noise_sd);
        out.train.rows.push_back({x, y, f});
    }
    out.test.header = {"x", "y", "f"};
    for (int i = 0; i < 45; ++i)
        for (int j = 0; j < 45; ++j) {
            const double x = -0.2 + 0.1 * i;
            const double y = -0.2 + 0.1 * j;
            out.test.rows.push_back({x, y, kotanchek(x, y)});
        }
    return out;
}

inline void write_table(const std::string& path, const CsvTable& t) {
    std::vector<std::vector<std::string>> cells;
    cells.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        std::vector<std::string> r;
        r.reserve(row.size());
        for (double v : row) r.push_back(csv_cell(v));
        cells.push_back(std::move(r));
    }
    write_csv_file(path, t.header, cells);
}

}  // namespace nlreg
