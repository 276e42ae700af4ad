#pragma once

// Post-fit diagnostics for over-parameterized models.  Literal abstraction
// can introduce redundant parameters that the conservative rewriting rules
// keep; they show up here as extreme pairwise correlations, exploding
// relative standard errors, or an outright rank-deficient Jacobian.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "nlreg/fit.hpp"

namespace nlreg {

struct IdentifiabilityReport {
    std::vector<double> se_ratio;                // se_i / |theta_i|
    std::vector<std::pair<int, int>> high_corr;  // pairs with |corr| > corr_limit
    std::vector<int> large_se;                   // indices with ratio > ratio_limit
    bool rank_deficient = false;
    std::vector<int> deficient;
    std::vector<std::string> messages;

    bool clean() const {
        return high_corr.empty() && large_se.empty() && !rank_deficient;
    }
};

inline IdentifiabilityReport check_identifiability(const FitResult& fr,
                                                   double corr_limit = 0.999,
                                                   double ratio_limit = 1e3) {
    IdentifiabilityReport rep;
    rep.se_ratio.resize(fr.p);
    for (int i = 0; i < fr.p; ++i) {
        const double denom = std::abs(fr.theta[i]);
        rep.se_ratio[i] = fr.se[i] / (denom > 0.0 ? denom : 1e-300);
        if (!(rep.se_ratio[i] <= ratio_limit)) {  // catches inf and NaN too
            rep.large_se.push_back(i);
            rep.messages.push_back("parameter t" + std::to_string(i) +
                                   " is poorly determined (se/|estimate| > " +
                                   format_double(ratio_limit) + ")");
        }
    }
    for (int i = 0; i < fr.p; ++i)
        for (int j = i + 1; j < fr.p; ++j) {
            const double c = fr.corr(i, j);
            if (std::isfinite(c) && std::abs(c) > corr_limit) {
                rep.high_corr.emplace_back(i, j);
                rep.messages.push_back("parameters t" + std::to_string(i) + " and t" +
                                       std::to_string(j) + " are nearly collinear (corr " +
                                       format_double(c) + ")");
            }
        }
    if (fr.rank_deficient) {
        rep.rank_deficient = true;
        rep.deficient = fr.deficient;
        rep.messages.push_back("rank-deficient Jacobian: model over-parameterized");
    }
    return rep;
}

}  // namespace nlreg
