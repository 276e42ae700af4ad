// Command-line front end.  Subcommands map one-to-one onto the command
// functions in nlreg/report.hpp; this file only parses flags.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlreg/report.hpp"

namespace {

struct CliState {
    nlreg::AnalysisConfig cfg;
    std::string expr_file;
    std::string transform = "none";
    std::vector<std::string> vars_csv;   // repeatable or comma separated
    std::vector<double> alphas;          // empty keeps per-command default
    std::vector<double> theta0;
    std::string pairs_spec;              // "0,1;0,2" or "all"
    std::uint64_t seed = 1;
    int gen_n = 100;
    double gen_noise = 0.0;
};

std::vector<std::string> split_commas(const std::vector<std::string>& in) {
    std::vector<std::string> out;
    for (const auto& item : in) {
        std::stringstream ss(item);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = nlreg::detail::trim(tok);
            if (!tok.empty()) out.push_back(tok);
        }
    }
    return out;
}

std::vector<std::pair<int, int>> parse_pairs(const std::string& spec) {
    std::vector<std::pair<int, int>> pairs;
    if (spec.empty() || spec == "all") return pairs;
    std::stringstream ss(spec);
    std::string grp;
    while (std::getline(ss, grp, ';')) {
        grp = nlreg::detail::trim(grp);
        if (grp.empty()) continue;
        auto comma = grp.find(',');
        if (comma == std::string::npos)
            throw nlreg::Error("bad --pairs entry '" + grp + "' (expected i,j)");
        pairs.emplace_back(std::stoi(grp.substr(0, comma)),
                           std::stoi(grp.substr(comma + 1)));
    }
    return pairs;
}

int finalize(CliState& st) {
    if (!st.expr_file.empty()) {
        std::ifstream in(st.expr_file);
        if (!in) throw nlreg::Error("cannot read '" + st.expr_file + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        st.cfg.expr_text = nlreg::detail::trim(ss.str());
    }
    st.cfg.vars = split_commas(st.vars_csv);
    if (!st.alphas.empty()) st.cfg.alphas = st.alphas;
    st.cfg.theta0 = st.theta0;
    if (st.transform == "log")
        st.cfg.transform = nlreg::TargetTransform::Log;
    else if (st.transform != "none")
        throw nlreg::Error("unknown --target-transform '" + st.transform + "'");
    st.cfg.pairs = parse_pairs(st.pairs_spec);
    return 0;
}

void add_common(CLI::App* sub, CliState& st, bool needs_points = false) {
    sub->add_option("--expr", st.cfg.expr_text, "model expression");
    sub->add_option("--expr-file", st.expr_file, "file containing the model expression");
    sub->add_option("--data", st.cfg.data_path, "CSV dataset")->required();
    sub->add_option("--target", st.cfg.target, "target column name")->required();
    sub->add_option("--vars", st.vars_csv,
                    "input variable column names (repeatable or comma separated)")
        ->required();
    sub->add_option("--target-transform", st.transform, "none|log applied to the target");
    sub->add_option("--alpha", st.alphas, "significance level(s), repeatable");
    sub->add_option("--theta0", st.theta0, "start values, repeatable");
    sub->add_option("--step", st.cfg.profile.step, "profile step divisor");
    sub->add_option("--kmax", st.cfg.profile.k_max, "max profile points per direction");
    sub->add_option("--tau-level", st.cfg.profile.tau_max_level,
                    "significance level defining the profile tau bound");
    sub->add_option("--max-iters", st.cfg.profile.fit.max_iterations,
                    "optimizer iteration cap");
    sub->add_option("--tol-f", st.cfg.profile.fit.tol_f, "relative loss tolerance");
    sub->add_option("--tol-x", st.cfg.profile.fit.tol_x, "relative step tolerance");
    sub->add_option("--out", st.cfg.out_dir, "output directory");
    sub->add_option("--format", st.cfg.format, "json|csv report format");
    if (needs_points) {
        sub->add_option("--points", st.cfg.point_specs,
                        "prediction points: var=value or var=lo:step:hi (repeatable)");
        sub->add_option("--points-csv", st.cfg.points_csv,
                        "CSV file with one column per input variable");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"confidence intervals, profile regions, and prediction intervals "
                 "for nonlinear regression models"};
    app.require_subcommand(1);

    CliState st;
    std::string mode;

    auto* fit_cmd = app.add_subcommand("fit", "fit the model and report parameter intervals");
    add_common(fit_cmd, st);
    fit_cmd->callback([&] { mode = "fit"; });

    auto* prof_cmd = app.add_subcommand("profile",
                                        "fit, walk likelihood profiles, report intervals");
    add_common(prof_cmd, st);
    prof_cmd->callback([&] { mode = "profile"; });

    auto* cont_cmd = app.add_subcommand("contour", "pairwise parameter confidence regions");
    add_common(cont_cmd, st);
    cont_cmd->add_option("--pairs", st.pairs_spec, "parameter pairs 'i,j;k,l' or 'all'");
    cont_cmd->add_option("--steps", st.cfg.contour_steps, "points per contour curve");
    cont_cmd->add_option("--contour-alpha", st.cfg.contour_alphas,
                         "contour significance level(s), repeatable");
    cont_cmd->callback([&] { mode = "contour"; });

    auto* pred_cmd = app.add_subcommand("predict", "prediction intervals at given points");
    add_common(pred_cmd, st, true);
    pred_cmd->callback([&] { mode = "predict"; });

    auto* rep_cmd = app.add_subcommand("report", "full report: fit, profiles, contours");
    add_common(rep_cmd, st);
    rep_cmd->add_option("--pairs", st.pairs_spec, "parameter pairs 'i,j;k,l' or 'all'");
    rep_cmd->add_option("--steps", st.cfg.contour_steps, "points per contour curve");
    rep_cmd->add_option("--contour-alpha", st.cfg.contour_alphas,
                        "contour significance level(s), repeatable");
    rep_cmd->callback([&] { mode = "report"; });

    auto* gen_cmd = app.add_subcommand("gen-kotanchek",
                                       "write the synthetic benchmark train/test tables");
    gen_cmd->add_option("--seed", st.seed, "RNG seed");
    gen_cmd->add_option("--n", st.gen_n, "number of training samples");
    gen_cmd->add_option("--noise", st.gen_noise, "Gaussian noise standard deviation");
    gen_cmd->add_option("--out", st.cfg.out_dir, "output directory");
    gen_cmd->callback([&] { mode = "gen"; });

    CLI11_PARSE(app, argc, argv);

    try {
        if (mode == "gen")
            return nlreg::cmd_gen_kotanchek(st.seed, st.gen_n, st.gen_noise, st.cfg.out_dir);
        finalize(st);
        if (mode == "fit") return nlreg::cmd_fit(st.cfg);
        if (mode == "profile") return nlreg::cmd_profile(st.cfg);
        if (mode == "contour") return nlreg::cmd_contour(st.cfg);
        if (mode == "predict") return nlreg::cmd_predict(st.cfg);
        if (mode == "report") return nlreg::cmd_report(st.cfg);
    } catch (const nlreg::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return nlreg::kExitInputError;
    }
    return nlreg::kExitInputError;
}
