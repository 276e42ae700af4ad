#pragma once

// Observed data for one regression problem: an n x m design block (row per
// observation, column per model variable, order matching the variable name
// list used to parse the model) and the target vector.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "nlreg/csv.hpp"
#include "nlreg/errors.hpp"

namespace nlreg {

enum class TargetTransform { None, Log };

struct Dataset {
    std::vector<std::string> var_names;
    std::vector<double> x;  // row-major, n*m
    std::vector<double> y;  // length n
    int n = 0;
    int m = 0;

    std::span<const double> row(int k) const {
        return std::span<const double>(x.data() + static_cast<std::size_t>(k) * m, m);
    }

    void validate() const {
        if (n < 1) throw Error("dataset is empty");
        if (static_cast<int>(y.size()) != n || static_cast<int>(x.size()) != n * m)
            throw Error("dataset dimensions are inconsistent");
        for (double v : x)
            if (!std::isfinite(v)) throw Error("non-finite value in design block");
        for (double v : y)
            if (!std::isfinite(v)) throw Error("non-finite value in target");
    }
};

// Assemble a Dataset from a parsed CSV.  `var_names` fixes the column order
// of the design block; the transform applies to the target as read.
inline Dataset make_dataset(const CsvTable& t, const std::vector<std::string>& var_names,
                            const std::string& target,
                            TargetTransform transform = TargetTransform::None) {
    Dataset d;
    d.var_names = var_names;
    d.m = static_cast<int>(var_names.size());
    d.n = static_cast<int>(t.rows.size());
    std::vector<int> cols(var_names.size());
    for (std::size_t i = 0; i < var_names.size(); ++i) {
        cols[i] = t.column(var_names[i]);
        if (cols[i] < 0) throw Error("dataset has no column '" + var_names[i] + "'");
    }
    int ty = t.column(target);
    if (ty < 0) throw Error("dataset has no target column '" + target + "'");
    d.x.reserve(static_cast<std::size_t>(d.n) * d.m);
    d.y.reserve(d.n);
    for (int r = 0; r < d.n; ++r) {
        for (int c : cols) d.x.push_back(t.rows[r][c]);
        double v = t.rows[r][ty];
        if (transform == TargetTransform::Log) {
            if (v <= 0.0)
                throw Error("log transform: target value " + format_double(v) +
                            " in data row " + std::to_string(r + 1) + " is not positive");
            v = std::log(v);
        }
        d.y.push_back(v);
    }
    d.validate();
    return d;
}

inline Dataset load_dataset(const std::string& path, const std::vector<std::string>& var_names,
                            const std::string& target,
                            TargetTransform transform = TargetTransform::None) {
    return make_dataset(read_csv_file(path), var_names, target, transform);
}

}  // namespace nlreg
