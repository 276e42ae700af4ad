#pragma once

// Analysis orchestration shared by the command-line tool and the tests:
// configuration, output file layout, report serialization, and the exit
// code contract (0 success, 1 input error, 2 fit did not converge,
// 3 profile failure).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "nlreg/contour.hpp"
#include "nlreg/csv.hpp"
#include "nlreg/dataset.hpp"
#include "nlreg/errors.hpp"
#include "nlreg/fit.hpp"
#include "nlreg/identifiability.hpp"
#include "nlreg/json_writer.hpp"
#include "nlreg/model.hpp"
#include "nlreg/parser.hpp"
#include "nlreg/profile.hpp"
#include "nlreg/synth.hpp"

namespace nlreg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitNotConverged = 2;
inline constexpr int kExitProfileFailure = 3;

// method_flags bits in prediction outputs
inline constexpr int kPredFallbackLinear = 1;  // profile unavailable, linear used
inline constexpr int kPredLowerUnbounded = 2;
inline constexpr int kPredUpperUnbounded = 4;
inline constexpr int kPredRestarted = 8;

struct AnalysisConfig {
    std::string expr_text;
    std::string data_path;
    std::string target;
    std::vector<std::string> vars;
    TargetTransform transform = TargetTransform::None;
    std::vector<double> alphas = {0.05};
    std::vector<double> theta0;  // start values for models written with t0, t1, ...
    ProfileOptions profile;
    std::string out_dir = ".";
    std::string format = "json";  // "csv" additionally writes intervals.csv

    std::vector<std::pair<int, int>> pairs;        // contour pairs; empty = all
    std::vector<double> contour_alphas = {0.2, 0.5};
    int contour_steps = 100;

    std::vector<std::string> point_specs;  // "var=lo:step:hi" or "var=value"
    std::string points_csv;                // alternative: CSV with variable columns
};

struct LoadedProblem {
    ParamModel model;
    Dataset data;
    std::string model_text;
};

inline LoadedProblem load_problem(const AnalysisConfig& cfg) {
    if (cfg.expr_text.empty()) throw Error("no model expression given");
    if (cfg.data_path.empty()) throw Error("no dataset given");
    if (cfg.target.empty()) throw Error("no target column given");
    Expr e = parse(cfg.expr_text, cfg.vars);
    LoadedProblem lp;
    if (parameter_count(e) > 0) {
        if (cfg.theta0.empty())
            throw Error("model uses explicit parameters; start values are required "
                        "(--theta0)");
        lp.model = make_model(e, cfg.theta0, static_cast<int>(cfg.vars.size()));
    } else {
        lp.model = parameterize(e, static_cast<int>(cfg.vars.size()));
        if (!cfg.theta0.empty()) {
            if (cfg.theta0.size() != lp.model.theta0.size())
                throw Error("--theta0 has " + std::to_string(cfg.theta0.size()) +
                            " values, model has " + std::to_string(lp.model.theta0.size()) +
                            " parameters");
            lp.model.theta0 = cfg.theta0;
        }
    }
    lp.data = load_dataset(cfg.data_path, cfg.vars, cfg.target, cfg.transform);
    lp.model_text = to_string(lp.model.expr, cfg.vars);
    return lp;
}

// ---- report assembly ---------------------------------------------------

struct Warning {
    std::string code;
    std::string message;
};

struct ReportData {
    const AnalysisConfig* cfg = nullptr;
    const LoadedProblem* prob = nullptr;
    const FitResult* fit = nullptr;
    const ProfileSet* profiles = nullptr;  // null when not profiled
    std::vector<Warning> warnings;
    std::vector<std::string> files;

    void warn(std::string code, std::string message) {
        warnings.push_back({std::move(code), std::move(message)});
    }
};

namespace detail {

inline void collect_fit_warnings(ReportData& rd) {
    const FitResult& fr = *rd.fit;
    if (!fr.converged)
        rd.warn("not_converged", "optimizer stopped after " +
                                     std::to_string(fr.iterations) +
                                     " iterations without meeting the tolerances");
    for (const auto& msg : check_identifiability(fr).messages) {
        std::string code = msg.find("rank-deficient") != std::string::npos
                               ? "rank_deficient"
                               : (msg.find("collinear") != std::string::npos
                                      ? "high_correlation"
                                      : "large_se_ratio");
        rd.warn(code, msg);
    }
}

inline void collect_profile_warnings(ReportData& rd) {
    if (!rd.profiles) return;
    if (rd.profiles->restarts > 0)
        rd.warn("profile_restarts",
                "a better optimum was adopted " + std::to_string(rd.profiles->restarts) +
                    " time(s); all traces were recomputed against it");
    for (const auto& tr : rd.profiles->traces) {
        const std::string tag = "t" + std::to_string(tr.param_index);
        if (tr.truncated_lo || tr.truncated_hi)
            rd.warn("trace_truncated",
                    "trace for " + tag + " stopped before reaching tau_max on the " +
                        std::string(tr.truncated_lo && tr.truncated_hi ? "lower and upper"
                                    : tr.truncated_lo                  ? "lower"
                                                                       : "upper") +
                        " side");
        if (!tr.monotone)
            rd.warn("trace_non_monotone",
                    "trace for " + tag + " is not monotone; intervals are suppressed");
        if (tr.spline_linear_fallback)
            rd.warn("spline_linear_fallback",
                    "trace for " + tag + " has too few points for a cubic spline");
    }
}

inline void write_interval_pair(JsonWriter& w, const FitResult& fr,
                                const std::vector<ProfileTrace>* traces, int param,
                                double alpha) {
    w.begin_object();
    w.key("alpha").value(alpha);
    const double q = t_quantile(fr.dof, 0.5 * alpha);
    w.key("linear").begin_object();
    w.key("lower").value(fr.theta[param] - q * fr.se[param]);
    w.key("upper").value(fr.theta[param] + q * fr.se[param]);
    w.end_object();
    w.key("profile");
    if (!traces) {
        w.null();
    } else {
        const ProfileTrace& tr = (*traces)[param];
        if (!tr.monotone) {
            w.null();
        } else {
            ProfileInterval pi = profile_ci(tr, fr, alpha);
            w.begin_object();
            w.key("lower").value(pi.lower);
            w.key("upper").value(pi.upper);
            w.key("lower_bounded").value(pi.lower_bounded);
            w.key("upper_bounded").value(pi.upper_bounded);
            w.end_object();
        }
    }
    w.end_object();
}

}  // namespace detail

inline void write_report_json(const std::string& path, ReportData& rd) {
    const AnalysisConfig& cfg = *rd.cfg;
    const FitResult& fr = *rd.fit;
    const std::vector<ProfileTrace>* traces =
        rd.profiles ? &rd.profiles->traces : nullptr;

    // unbounded interval warnings surface once per parameter/alpha
    if (traces)
        for (const auto& tr : *traces) {
            if (!tr.monotone) continue;
            for (double alpha : cfg.alphas) {
                ProfileInterval pi = profile_ci(tr, fr, alpha);
                if (!pi.lower_bounded || !pi.upper_bounded)
                    rd.warn("unbounded_interval",
                            "profile interval for t" + std::to_string(tr.param_index) +
                                " at alpha " + format_double(alpha) +
                                " is unbounded on the " +
                                std::string(!pi.lower_bounded && !pi.upper_bounded
                                                ? "lower and upper"
                                            : !pi.lower_bounded ? "lower"
                                                                : "upper") +
                                " side");
            }
        }

    JsonWriter w;
    w.begin_object();
    w.key("model").value(rd.prob->model_text);
    w.key("variables").begin_array();
    for (const auto& v : cfg.vars) w.value(v);
    w.end_array();
    w.key("target").value(cfg.target);
    w.key("target_transform")
        .value(cfg.transform == TargetTransform::Log ? "log" : "none");
    w.key("data").value(cfg.data_path);
    w.key("n").value(fr.n);
    w.key("p").value(fr.p);
    w.key("dof").value(fr.dof);
    w.key("ssr").value(fr.ssr);
    w.key("s2").value(fr.s2);
    w.key("s").value(fr.s);
    w.key("converged").value(fr.converged);
    w.key("iterations").value(fr.iterations);
    w.key("profile_restarts").value(rd.profiles ? rd.profiles->restarts : 0);
    w.key("alphas").begin_array();
    for (double a : cfg.alphas) w.value(a);
    w.end_array();

    w.key("fixed_constants").begin_array();
    for (const auto& fc : rd.prob->model.fixed_constants) {
        w.begin_object();
        w.key("position").value(fc.position);
        w.key("value").value(fc.value);
        w.end_object();
    }
    w.end_array();

    w.key("parameters").begin_array();
    for (int i = 0; i < fr.p; ++i) {
        w.begin_object();
        w.key("index").value(i);
        w.key("estimate").value(fr.theta[i]);
        w.key("std_error").value(fr.se[i]);
        if (traces) {
            const ProfileTrace& tr = (*traces)[i];
            w.key("trace_bounded_lower").value(tr.bounded_lo);
            w.key("trace_bounded_upper").value(tr.bounded_hi);
        }
        w.key("intervals").begin_array();
        for (double alpha : cfg.alphas)
            detail::write_interval_pair(w, fr, traces, i, alpha);
        w.end_array();
        w.end_object();
    }
    w.end_array();

    // sub-diagonal rows, matching the usual fit-report layout
    w.key("correlation_lower_triangular").begin_array();
    for (int i = 0; i < fr.p; ++i) {
        w.begin_array();
        for (int j = 0; j < i; ++j) w.value(fr.corr(i, j));
        w.end_array();
    }
    w.end_array();

    w.key("warnings").begin_array();
    for (const auto& wr : rd.warnings) {
        w.begin_object();
        w.key("code").value(wr.code);
        w.key("message").value(wr.message);
        w.end_object();
    }
    w.end_array();

    w.key("files").begin_array();
    for (const auto& f : rd.files) w.value(f);
    w.end_array();
    w.end_object();

    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << w.take() << '\n';
}

// intervals.csv companion when --format csv is chosen
inline void write_intervals_csv(const std::string& path, const AnalysisConfig& cfg,
                                const FitResult& fr,
                                const std::vector<ProfileTrace>* traces) {
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < fr.p; ++i)
        for (double alpha : cfg.alphas) {
            const double q = t_quantile(fr.dof, 0.5 * alpha);
            double plo = std::nan(""), phi = std::nan("");
            int plo_b = 0, phi_b = 0;
            if (traces && (*traces)[i].monotone) {
                ProfileInterval pi = profile_ci((*traces)[i], fr, alpha);
                plo = pi.lower;
                phi = pi.upper;
                plo_b = pi.lower_bounded;
                phi_b = pi.upper_bounded;
            }
            rows.push_back({csv_cell(i), csv_cell(fr.theta[i]), csv_cell(fr.se[i]),
                            csv_cell(alpha), csv_cell(fr.theta[i] - q * fr.se[i]),
                            csv_cell(fr.theta[i] + q * fr.se[i]), csv_cell(plo),
                            csv_cell(phi), csv_cell(plo_b), csv_cell(phi_b)});
        }
    write_csv_file(path,
                   {"param_index", "estimate", "std_error", "alpha", "linear_lower",
                    "linear_upper", "profile_lower", "profile_upper",
                    "profile_lower_bounded", "profile_upper_bounded"},
                   rows);
}

inline void write_trace_csv(const std::string& path, const ProfileTrace& tr, int p) {
    std::vector<std::string> header = {"param_index", "tau"};
    for (int j = 0; j < p; ++j) header.push_back("theta_" + std::to_string(j));
    std::vector<std::vector<std::string>> rows;
    rows.reserve(tr.points.size());
    for (const auto& pt : tr.points) {
        std::vector<std::string> row = {csv_cell(tr.param_index), csv_cell(pt.tau)};
        for (double v : pt.theta) row.push_back(csv_cell(v));
        rows.push_back(std::move(row));
    }
    write_csv_file(path, header, rows);
}

inline void write_contour_csv(const std::string& path, const ContourCurve& cc) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(cc.points.size());
    for (std::size_t k = 0; k < cc.points.size(); ++k) {
        const auto& pt = cc.points[k];
        rows.push_back({csv_cell(cc.param_i), csv_cell(cc.param_j), csv_cell(cc.alpha),
                        csv_cell(static_cast<int>(k)), csv_cell(pt.theta_i),
                        csv_cell(pt.theta_j), csv_cell(pt.extrapolated ? 1 : 0)});
    }
    write_csv_file(path,
                   {"pair_i", "pair_j", "alpha", "point_index", "theta_i", "theta_j",
                    "extrapolated_flag"},
                   rows);
}

// ---- prediction points -------------------------------------------------

inline std::vector<std::vector<double>> prediction_points(const AnalysisConfig& cfg) {
    if (!cfg.points_csv.empty()) {
        CsvTable t = read_csv_file(cfg.points_csv);
        std::vector<int> cols;
        for (const auto& v : cfg.vars) {
            int c = t.column(v);
            if (c < 0) throw Error("points file has no column '" + v + "'");
            cols.push_back(c);
        }
        std::vector<std::vector<double>> pts;
        for (const auto& row : t.rows) {
            std::vector<double> x;
            for (int c : cols) x.push_back(row[c]);
            pts.push_back(std::move(x));
        }
        if (pts.empty()) throw Error("points file has no rows");
        return pts;
    }
    if (cfg.point_specs.empty()) throw Error("no prediction points given");
    // each variable gets a value list; grid = cartesian product in variable order
    std::vector<std::vector<double>> lists(cfg.vars.size());
    for (const auto& spec : cfg.point_specs) {
        auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw Error("bad point spec '" + spec + "' (expected var=value or var=lo:step:hi)");
        const std::string name = detail::trim(spec.substr(0, eq));
        const std::string val = spec.substr(eq + 1);
        int vi = -1;
        for (std::size_t i = 0; i < cfg.vars.size(); ++i)
            if (cfg.vars[i] == name) vi = static_cast<int>(i);
        if (vi < 0) throw Error("point spec names unknown variable '" + name + "'");
        std::vector<double> vals;
        const auto c1 = val.find(':');
        if (c1 == std::string::npos) {
            vals.push_back(std::stod(val));
        } else {
            const auto c2 = val.find(':', c1 + 1);
            if (c2 == std::string::npos)
                throw Error("bad grid spec '" + spec + "' (expected lo:step:hi)");
            const double lo = std::stod(val.substr(0, c1));
            const double step = std::stod(val.substr(c1 + 1, c2 - c1 - 1));
            const double hi = std::stod(val.substr(c2 + 1));
            if (!(step > 0.0) || hi < lo) throw Error("bad grid spec '" + spec + "'");
            for (double v = lo; v <= hi + 1e-9 * step; v += step) vals.push_back(v);
        }
        lists[vi].insert(lists[vi].end(), vals.begin(), vals.end());
    }
    for (std::size_t i = 0; i < lists.size(); ++i)
        if (lists[i].empty())
            throw Error("no point spec for variable '" + cfg.vars[i] + "'");
    std::vector<std::vector<double>> pts{{}};
    for (const auto& lst : lists) {
        std::vector<std::vector<double>> next;
        for (const auto& base : pts)
            for (double v : lst) {
                auto x = base;
                x.push_back(v);
                next.push_back(std::move(x));
            }
        pts = std::move(next);
    }
    return pts;
}

// ---- commands ----------------------------------------------------------

namespace detail {

inline std::filesystem::path ensure_out_dir(const AnalysisConfig& cfg) {
    std::filesystem::path dir(cfg.out_dir.empty() ? "." : cfg.out_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string alpha_tag(double alpha) {
    std::string s = format_double(alpha);
    return s;
}

}  // namespace detail

inline int cmd_fit(const AnalysisConfig& cfg, std::ostream& diag = std::cerr) {
    std::optional<LoadedProblem> prob;
    try {
        prob.emplace(load_problem(cfg));
    } catch (const Error& e) {
        diag << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    try {
        const auto dir = detail::ensure_out_dir(cfg);
        FitResult fr = fit(prob->model, prob->data, prob->model.theta0, cfg.profile.fit);
        ReportData rd;
        rd.cfg = &cfg;
        rd.prob = &*prob;
        rd.fit = &fr;
        detail::collect_fit_warnings(rd);
        rd.files.push_back("report.json");
        if (cfg.format == "csv") {
            write_intervals_csv((dir / "intervals.csv").string(), cfg, fr, nullptr);
            rd.files.push_back("intervals.csv");
        }
        write_report_json((dir / "report.json").string(), rd);
        return fr.converged ? kExitOk : kExitNotConverged;
    } catch (const Error& e) {
        diag << "error: " << e.what() << '\n';
        return kExitInputError;
    }
}

namespace detail {

// fit + profiles + per-parameter trace files; shared by profile/contour/report
struct ProfiledRun {
    LoadedProblem prob;
    FitResult fit;
    ProfileSet profiles;
};

inline int run_profiled(const AnalysisConfig& cfg, std::ostream& diag,
                        std::optional<ProfiledRun>& out) {
    try {
        out.emplace(ProfiledRun{load_problem(cfg), {}, {}});
    } catch (const Error& e) {
        diag << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    try {
        out->fit = fit(out->prob.model, out->prob.data, out->prob.model.theta0,
                       cfg.profile.fit);
    } catch (const Error& e) {
        diag << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    try {
        out->profiles = profile_all(out->prob.model, out->prob.data, out->fit, cfg.profile);
        out->fit = out->profiles.fit;  // restarts may have moved the optimum
    } catch (const ModelError& e) {
        diag << "profile failure: " << e.what() << '\n';
        return kExitProfileFailure;
    }
    return out->fit.converged ? kExitOk : kExitNotConverged;
}

}  // namespace detail

inline int cmd_profile(const AnalysisConfig& cfg, std::ostream& diag = std::cerr) {
    std::optional<detail::ProfiledRun> run;
    const int rc = detail::run_profiled(cfg, diag, run);
    if (rc == kExitInputError || rc == kExitProfileFailure) return rc;
    const auto dir = detail::ensure_out_dir(cfg);
    ReportData rd;
    rd.cfg = &cfg;
    rd.prob = &run->prob;
    rd.fit = &run->fit;
    rd.profiles = &run->profiles;
    detail::collect_fit_warnings(rd);
    detail::collect_profile_warnings(rd);
    for (const auto& tr : run->profiles.traces) {
        const std::string name = "trace_t" + std::to_string(tr.param_index) + ".csv";
        write_trace_csv((dir / name).string(), tr, run->fit.p);
        rd.files.push_back(name);
    }
    rd.files.push_back("report.json");
    if (cfg.format == "csv") {
        write_intervals_csv((dir / "intervals.csv").string(), cfg, run->fit,
                            &run->profiles.traces);
        rd.files.push_back("intervals.csv");
    }
    write_report_json((dir / "report.json").string(), rd);
    return rc;
}

inline int cmd_contour(const AnalysisConfig& cfg, std::ostream& diag = std::cerr) {
    std::optional<detail::ProfiledRun> run;
    const int rc = detail::run_profiled(cfg, diag, run);
    if (rc == kExitInputError || rc == kExitProfileFailure) return rc;
    const auto dir = detail::ensure_out_dir(cfg);
    ReportData rd;
    rd.cfg = &cfg;
    rd.prob = &run->prob;
    rd.fit = &run->fit;
    rd.profiles = &run->profiles;
    detail::collect_fit_warnings(rd);
    detail::collect_profile_warnings(rd);

    std::vector<std::pair<int, int>> pairs = cfg.pairs;
    if (pairs.empty())
        for (int i = 0; i < run->fit.p; ++i)
            for (int j = i + 1; j < run->fit.p; ++j) pairs.emplace_back(i, j);
    for (auto [i, j] : pairs) {
        if (i < 0 || j < 0 || i >= run->fit.p || j >= run->fit.p || i == j) {
            diag << "error: bad contour pair (" << i << ", " << j << ")\n";
            return kExitInputError;
        }
        for (double alpha : cfg.contour_alphas) {
            try {
                ContourCurve cc =
                    profile_contour(run->fit, run->profiles.traces[i],
                                    run->profiles.traces[j], alpha, cfg.contour_steps);
                const std::string name = "contour_t" + std::to_string(i) + "_t" +
                                         std::to_string(j) + "_a" +
                                         detail::alpha_tag(alpha) + ".csv";
                write_contour_csv((dir / name).string(), cc);
                rd.files.push_back(name);
                if (cc.extrapolated)
                    rd.warn("contour_extrapolated",
                            "contour t" + std::to_string(i) + "/t" + std::to_string(j) +
                                " at alpha " + format_double(alpha) +
                                " used spline extrapolation beyond sampled tau");
            } catch (const ModelError& e) {
                rd.warn("contour_unavailable", e.what());
            }
        }
    }
    for (const auto& tr : run->profiles.traces) {
        const std::string name = "trace_t" + std::to_string(tr.param_index) + ".csv";
        write_trace_csv((dir / name).string(), tr, run->fit.p);
        rd.files.push_back(name);
    }
    rd.files.push_back("report.json");
    write_report_json((dir / "report.json").string(), rd);
    return rc;
}

inline int cmd_predict(const AnalysisConfig& cfg, std::ostream& diag = std::cerr) {
    std::optional<LoadedProblem> prob;
    std::vector<std::vector<double>> pts;
    try {
        prob.emplace(load_problem(cfg));
        pts = prediction_points(cfg);
    } catch (const Error& e) {
        diag << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    FitResult fr;
    try {
        fr = fit(prob->model, prob->data, prob->model.theta0, cfg.profile.fit);
    } catch (const Error& e) {
        diag << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    const auto dir = detail::ensure_out_dir(cfg);
    ReportData rd;
    rd.cfg = &cfg;
    rd.prob = &*prob;
    rd.fit = &fr;
    detail::collect_fit_warnings(rd);

    struct Row {
        PredictionInterval lin;
        double plo = 0.0, phi = 0.0;
        int flags = 0;
    };
    const auto compute = [&](const std::vector<double>& x, double alpha, bool noise) {
        Row row;
        row.lin = linear_prediction(prob->model, fr, x, alpha, noise);
        try {
            ProfilePrediction pp = profile_prediction_interval(
                prob->model, prob->data, fr, x, alpha, noise, cfg.profile);
            row.plo = pp.lower;
            row.phi = pp.upper;
            if (!pp.lower_bounded) row.flags |= kPredLowerUnbounded;
            if (!pp.upper_bounded) row.flags |= kPredUpperUnbounded;
            if (pp.restarts > 0) row.flags |= kPredRestarted;
        } catch (const ModelError&) {
            row.plo = row.lin.lower;
            row.phi = row.lin.upper;
            row.flags |= kPredFallbackLinear;
        }
        return row;
    };

    for (double alpha : cfg.alphas) {
        for (int noise = 0; noise <= 1; ++noise) {
            // per-point jobs are independent; run them in bounded batches
            std::vector<Row> rows(pts.size());
            const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
            for (std::size_t base = 0; base < pts.size(); base += hw) {
                std::vector<std::future<Row>> jobs;
                const std::size_t end = std::min(pts.size(), base + hw);
                for (std::size_t k = base; k < end; ++k)
                    jobs.push_back(std::async(std::launch::async, [&, k] {
                        return compute(pts[k], alpha, noise == 1);
                    }));
                for (std::size_t k = base; k < end; ++k) rows[k] = jobs[k - base].get();
            }
            std::vector<std::string> header = cfg.vars;
            header.insert(header.end(), {"center", "linear_lo", "linear_hi", "profile_lo",
                                         "profile_hi", "method_flags"});
            std::vector<std::vector<std::string>> cells;
            for (std::size_t k = 0; k < pts.size(); ++k) {
                std::vector<std::string> row;
                for (double v : pts[k]) row.push_back(csv_cell(v));
                row.push_back(csv_cell(rows[k].lin.center));
                row.push_back(csv_cell(rows[k].lin.lower));
                row.push_back(csv_cell(rows[k].lin.upper));
                row.push_back(csv_cell(rows[k].plo));
                row.push_back(csv_cell(rows[k].phi));
                row.push_back(csv_cell(rows[k].flags));
                cells.push_back(std::move(row));
            }
            std::string name = noise ? "predict_full" : "predict_expectation";
            if (cfg.alphas.size() > 1) name += "_a" + detail::alpha_tag(alpha);
            name += ".csv";
            write_csv_file((dir / name).string(), header, cells);
            rd.files.push_back(name);
        }
    }
    rd.files.push_back("report.json");
    write_report_json((dir / "report.json").string(), rd);
    return fr.converged ? kExitOk : kExitNotConverged;
}

inline int cmd_report(const AnalysisConfig& cfg, std::ostream& diag = std::cerr) {
    return cmd_contour(cfg, diag);  // contour already emits fit+profiles+traces+contours
}

inline int cmd_gen_kotanchek(std::uint64_t seed, int n_train, double noise_sd,
                             const std::string& out_dir, std::ostream& diag = std::cerr) {
    try {
        std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
        std::filesystem::create_directories(dir);
        KotanchekData kd = gen_kotanchek(seed, n_train, noise_sd);
        write_table((dir / "kotanchek_train.csv").string(), kd.train);
        write_table((dir / "kotanchek_test.csv").string(), kd.test);
        return kExitOk;
    } catch (const Error& e) {
        diag << "error: " << e.what() << '\n';
        return kExitInputError;
    }
}

}  // namespace nlreg
