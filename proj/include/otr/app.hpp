#pragma once

// Command implementations behind the `otr` executable: JSON configuration,
// the analyze / simulate / coverage / overlap / generate commands and their
// report files. Every command is a pure function of its inputs and seed.

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "otr/core.hpp"
#include "otr/coverage.hpp"
#include "otr/error.hpp"
#include "otr/inference.hpp"
#include "otr/io.hpp"
#include "otr/samplers/arm_models.hpp"
#include "otr/samplers/logistic.hpp"
#include "otr/simul.hpp"
#include "otr/stats.hpp"

namespace otr::app {

namespace fs = std::filesystem;
using nlohmann::json;

// Parses a JSON file; syntax errors carry the 1-based line number.
inline json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::missing_file, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw Error(ErrorKind::config_parse, path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
}

namespace detail {

[[noreturn]] inline void config_error(const std::string& msg) { throw Error(ErrorKind::config_parse, msg); }

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        config_error(std::string("field '") + key + "' has the wrong type");
    }
}

// Accepts numbers and the strings "log(3)", "-log(3)", "exp(-3)" style
// shorthands used for odds ratios and selection slopes.
inline double number(const json& v, const std::string& what) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
        double sign = 1.0;
        if (!s.empty() && s[0] == '-') {
            sign = -1.0;
            s.erase(0, 1);
        }
        auto inner = [&](const char* fn) -> std::optional<double> {
            const std::string prefix = std::string(fn) + "(";
            if (s.rfind(prefix, 0) != 0 || s.back() != ')') return std::nullopt;
            double x = 0.0;
            if (!io::parse_double(s.substr(prefix.size(), s.size() - prefix.size() - 1), x)) return std::nullopt;
            return x;
        };
        if (auto x = inner("log")) return sign * std::log(*x);
        if (auto x = inner("exp")) return sign * std::exp(*x);
        double x = 0.0;
        if (io::parse_double(s, x)) return sign * x;
    }
    config_error("field '" + what + "' must be a number");
}

}  // namespace detail

// ---------------------------------------------------------------- losses

inline LossSpec loss_preset(const std::string& name) {
    if (name == "OTRmax") return presets::otr_max();
    if (name == "OTR.25") return presets::otr_25();
    if (name == "OTR.50") return presets::otr_50();
    detail::config_error("unknown loss preset '" + name + "' (expected OTRmax, OTR.25 or OTR.50)");
}

// "OTR.25" | [8 coefficients] | {"conditional": [L00_1, L01_0, L10_1, L11_1]}
// | {"marginal": {"failure": x, "burden": y}}
inline LossSpec loss_from_json(const json& j) {
    try {
        if (j.is_string()) return loss_preset(j.get<std::string>());
        if (j.is_array()) {
            if (j.size() != 8) detail::config_error("explicit loss needs 8 coefficients");
            std::array<double, 8> c{};
            for (std::size_t i = 0; i < 8; ++i) c[i] = j[i].get<double>();
            return LossSpec(c);
        }
        if (j.is_object() && j.contains("preset")) return loss_preset(j.at("preset").get<std::string>());
        if (j.is_object() && j.contains("coefficients")) return loss_from_json(j.at("coefficients"));
        if (j.is_object() && j.contains("conditional")) {
            const auto& c = j.at("conditional");
            if (!c.is_array() || c.size() != 4) detail::config_error("conditional loss needs 4 coefficients");
            return conditional_loss_spec(c[0].get<double>(), c[1].get<double>(), c[2].get<double>(),
                                         c[3].get<double>());
        }
        if (j.is_object() && j.contains("marginal")) {
            const auto& m = j.at("marginal");
            return marginal_loss_spec(m.at("failure").get<double>(), m.at("burden").get<double>());
        }
    } catch (const json::exception& e) {
        detail::config_error(std::string("bad loss specification: ") + e.what());
    }
    detail::config_error("unrecognised loss specification");
}

inline std::string loss_label(const json& j) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_object() && j.contains("preset")) return j.at("preset").get<std::string>();
    return "custom";
}

inline PhiSpec phi_from_json(const json& j) {
    PhiSpec phi;
    if (j.is_number() || j.is_string()) return PhiSpec::fixed(detail::number(j, "phi"));
    if (!j.is_object()) detail::config_error("phi must be a number or an object");
    if (j.contains("phi0")) phi.phi0 = detail::number(j.at("phi0"), "phi.phi0");
    if (j.contains("lower")) phi.lower = detail::number(j.at("lower"), "phi.lower");
    if (j.contains("upper")) phi.upper = detail::number(j.at("upper"), "phi.upper");
    const std::string mode = detail::get_or<std::string>(j, "mode", "scan");
    if (mode == "fixed") {
        phi = PhiSpec::fixed(phi.phi0);
    } else if (mode == "scan") {
        phi.mode = PhiMode::scan;
    } else if (mode == "uniform" || mode == "uniform-prior") {
        phi.mode = PhiMode::uniform_prior;
    } else {
        detail::config_error("unknown phi mode '" + mode + "'");
    }
    try {
        phi.validate();
    } catch (const Error& e) {
        detail::config_error(e.what());
    }
    return phi;
}

inline McmcConfig mcmc_from_json(const json& j, McmcConfig base = {}) {
    base.draws = detail::get_or<int>(j, "draws", base.draws);
    base.burn_in = detail::get_or<int>(j, "burn_in", base.burn_in);
    base.thin = detail::get_or<int>(j, "thin", base.thin);
    base.seed = detail::get_or<std::uint64_t>(j, "seed", base.seed);
    try {
        base.validate();
    } catch (const Error& e) {
        detail::config_error(e.what());
    }
    return base;
}

// "logistic" | "bart" | {"type": ..., sampler options}; MCMC lengths may
// sit either inside the sampler object or next to it in `parent`.
inline SamplerConfig sampler_from_json(const json& j, const json& parent, DesignBasis default_basis) {
    const json opts = j.is_object() ? j : json::object();
    std::string type;
    if (j.is_string()) {
        type = j.get<std::string>();
    } else if (j.is_object()) {
        type = detail::get_or<std::string>(j, "type", "");
    } else {
        detail::config_error("sampler must be a string or an object");
    }
    McmcConfig mcmc = mcmc_from_json(opts, mcmc_from_json(parent));
    if (type == "logistic") {
        LogisticSampler s;
        s.mcmc = mcmc;
        const std::string basis = detail::get_or<std::string>(opts, "basis", to_string(default_basis));
        if (basis == "cubic") {
            s.basis = DesignBasis::cubic;
        } else if (basis == "linear") {
            s.basis = DesignBasis::linear;
        } else {
            detail::config_error("unknown design basis '" + basis + "'");
        }
        return s;
    }
    if (type == "bart") {
        BartConfig b;
        b.mcmc = mcmc;
        b.num_trees = detail::get_or<int>(opts, "num_trees", b.num_trees);
        b.kappa = detail::get_or<double>(opts, "kappa", b.kappa);
        b.eta = detail::get_or<double>(opts, "eta", b.eta);
        b.k = detail::get_or<double>(opts, "k", b.k);
        if (opts.contains("leaf_sd")) b.leaf_sd = detail::get_or<double>(opts, "leaf_sd", 0.0);
        b.num_cutpoints = detail::get_or<int>(opts, "num_cutpoints", b.num_cutpoints);
        b.min_leaf_size = detail::get_or<int>(opts, "min_leaf_size", b.min_leaf_size);
        try {
            b.validate();
        } catch (const Error& e) {
            detail::config_error(e.what());
        }
        return b;
    }
    detail::config_error("unknown sampler '" + type + "' (expected logistic or bart)");
}

// ---------------------------------------------------------------- analyze

struct AnalysisConfig {
    fs::path data;
    io::DatasetColumns columns;
    SamplerConfig sampler = BartConfig{};
    LossSpec loss = presets::otr_max();
    std::string loss_name = "OTRmax";
    PhiSpec phi;
    double gamma = 0.05;
    std::uint64_t seed = 1;
};

inline AnalysisConfig analysis_config_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) detail::config_error("analysis config must be a JSON object");
    AnalysisConfig cfg;
    const std::string data = detail::get_or<std::string>(j, "data", "");
    if (data.empty()) detail::config_error("analysis config needs a 'data' path");
    cfg.data = fs::path(data).is_absolute() ? fs::path(data) : base_dir / data;
    cfg.columns.outcome = detail::get_or<std::string>(j, "outcome", "y");
    cfg.columns.treatment = detail::get_or<std::string>(j, "treatment", "w");
    cfg.columns.covariates = detail::get_or<std::vector<std::string>>(j, "covariates", {});
    if (cfg.columns.covariates.empty()) throw Error(ErrorKind::bad_schema, "analysis config lists no covariates");
    cfg.seed = detail::get_or<std::uint64_t>(j, "seed", cfg.seed);
    json parent = j;
    parent["seed"] = cfg.seed;
    cfg.sampler = sampler_from_json(j.contains("sampler") ? j.at("sampler") : json("bart"), parent, DesignBasis::linear);
    if (j.contains("loss")) {
        cfg.loss = loss_from_json(j.at("loss"));
        cfg.loss_name = loss_label(j.at("loss"));
    }
    if (j.contains("phi")) cfg.phi = phi_from_json(j.at("phi"));
    cfg.gamma = detail::get_or<double>(j, "gamma", cfg.gamma);
    if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) detail::config_error("gamma must lie in (0,1)");
    return cfg;
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::missing_file, "cannot write " + path.string());
    out << text;
}

inline std::vector<double> quantile_levels() {
    std::vector<double> levels;
    for (int i = 0; i <= 100; ++i) levels.push_back(i / 100.0);
    return levels;
}

struct AnalysisResult {
    std::vector<DecisionRecord> records;
    CohortSummary summary;
    PosteriorDraws draws;
};

inline AnalysisResult run_analysis(const AnalysisConfig& cfg, const DataSet& data) {
    AnalysisResult res;
    SamplerConfig sampler = cfg.sampler;
    mcmc_of(sampler).seed = cfg.seed;
    res.draws = fit_arm_models(data, sampler);
    res.records = analyze_cohort(res.draws.prob0, res.draws.prob1, cfg.phi, cfg.loss, cfg.gamma, cfg.seed);
    res.summary = cohort_summary(res.records, data.treatment);
    return res;
}

inline const char* kDecisionsHeader =
    "subject,treatment,a1,a2,rho,sensitive,a1_lower,a1_upper,rho_lower,rho_upper,mean_contrast,"
    "mu_loss_mean,mu_loss_lower,mu_loss_upper,mu_outcome_mean,mu_outcome_lower,mu_outcome_upper,"
    "loss_mean_a0,loss_mean_a1,outcome_mean_a0,outcome_mean_a1";

inline void write_analysis(const fs::path& out_dir, const AnalysisConfig& cfg, const DataSet& data,
                           const AnalysisResult& res) {
    fs::create_directories(out_dir);
    using io::fmt;
    std::ostringstream dec;
    dec << kDecisionsHeader << '\n';
    for (std::size_t i = 0; i < res.records.size(); ++i) {
        const auto& r = res.records[i];
        dec << (i + 1) << ',' << data.treatment[i] << ',' << to_int(r.a1) << ',' << to_int(r.a2) << ','
            << fmt(r.rho) << ',' << (r.sensitive ? 1 : 0) << ',' << to_int(r.a1_lower) << ',' << to_int(r.a1_upper)
            << ',' << fmt(r.rho_lower) << ',' << fmt(r.rho_upper) << ',' << fmt(r.mean_contrast) << ','
            << fmt(r.mu_loss_mean) << ',' << fmt(r.loss_interval.lower) << ',' << fmt(r.loss_interval.upper) << ','
            << fmt(r.mu_outcome_mean) << ',' << fmt(r.outcome_interval.lower) << ','
            << fmt(r.outcome_interval.upper) << ',' << fmt(r.loss_mean_by_arm[0]) << ','
            << fmt(r.loss_mean_by_arm[1]) << ',' << fmt(r.outcome_mean_by_arm[0]) << ','
            << fmt(r.outcome_mean_by_arm[1]) << '\n';
    }
    write_text(out_dir / "decisions.csv", dec.str());

    const auto& s = res.summary;
    json summary = {
        {"n", s.n},
        {"loss", cfg.loss_name},
        {"loss_coefficients", cfg.loss.coefficients()},
        {"sampler", res.draws.sampler},
        {"draws", res.draws.num_draws()},
        {"phi", {{"phi0", cfg.phi.phi0}, {"lower", cfg.phi.lower}, {"upper", cfg.phi.upper}}},
        {"gamma", cfg.gamma},
        {"seed", cfg.seed},
        {"U_L_observed", s.loss_under_observed},
        {"U_L_rule", s.loss_under_rule},
        {"U_Y_observed", s.outcome_under_observed},
        {"U_Y_rule", s.outcome_under_rule},
        {"treated_observed", s.treated_under_observed},
        {"treated_rule", s.treated_under_rule},
        {"treated_median_rule", s.treated_under_median_rule},
        {"sensitive", s.sensitive},
        {"acceptance_rate", res.draws.acceptance_rate},
        {"separation", res.draws.separation},
    };
    write_text(out_dir / "summary.json", summary.dump(2) + "\n");

    // Quantile curves over subjects.
    const auto levels = quantile_levels();
    auto column = [&](auto getter) {
        std::vector<double> v;
        v.reserve(res.records.size());
        for (std::size_t i = 0; i < res.records.size(); ++i) v.push_back(getter(res.records[i], data.treatment[i]));
        return v;
    };
    auto emit = [&](const fs::path& path, const std::string& header, const std::vector<std::vector<double>>& cols) {
        std::ostringstream out;
        out << header << '\n';
        for (double p : levels) {
            out << fmt(p);
            for (const auto& c : cols) out << ',' << fmt(stats::quantile(c, p));
            out << '\n';
        }
        write_text(path, out.str());
    };
    emit(out_dir / "rho_quantiles.csv", "level,rho,rho_lower,rho_upper",
         {column([](const DecisionRecord& r, int) { return r.rho; }),
          column([](const DecisionRecord& r, int) { return r.rho_lower; }),
          column([](const DecisionRecord& r, int) { return r.rho_upper; })});
    emit(out_dir / "outcome_quantiles.csv", "level,mu_outcome_rule,mu_outcome_observed",
         {column([](const DecisionRecord& r, int) { return r.mu_outcome_mean; }),
          column([](const DecisionRecord& r, int w) { return r.outcome_mean_by_arm[static_cast<std::size_t>(w)]; })});
    emit(out_dir / "loss_quantiles.csv", "level,mu_loss_rule,mu_loss_observed",
         {column([](const DecisionRecord& r, int) { return r.mu_loss_mean; }),
          column([](const DecisionRecord& r, int w) { return r.loss_mean_by_arm[static_cast<std::size_t>(w)]; })});
}

inline CohortSummary cmd_analyze(const fs::path& config_path, const fs::path& out_dir,
                                 std::optional<std::uint64_t> seed) {
    AnalysisConfig cfg = analysis_config_from_json(read_json(config_path), config_path.parent_path());
    if (seed) cfg.seed = *seed;
    const DataSet data = io::load_dataset(cfg.data, cfg.columns);
    const AnalysisResult res = run_analysis(cfg, data);
    write_analysis(out_dir, cfg, data, res);
    return res.summary;
}

// ---------------------------------------------------------------- overlap

struct OverlapReport {
    std::vector<double> logit_propensity;
    std::array<std::vector<double>, 2> quantiles;  // per arm, at kOverlapLevels
    double support_lower = 0.0;
    double support_upper = 0.0;
    double caliper = 0.0;
    std::vector<bool> flagged;
    std::size_t num_flagged = 0;
};

inline const std::array<double, 7> kOverlapLevels{0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0};

// Logistic model of W on an intercept and the covariates (flat-prior MAP);
// the common support is [max of arm minima, min of arm maxima] of the
// logit propensity. Subjects further than a caliper of 0.2 pooled standard
// deviations outside it are flagged; without the caliper the most extreme
// subject of the cohort would always be flagged.
inline OverlapReport propensity_overlap(const DataSet& data) {
    data.validate();
    for (int arm = 0; arm <= 1; ++arm) {
        if (data.arm_rows(arm).empty()) {
            throw Error(ErrorKind::empty_arm, "no subjects received treatment " + std::to_string(arm));
        }
    }
    const Eigen::MatrixXd design = make_design(data.covariates, DesignBasis::linear);
    std::vector<double> w(data.treatment.begin(), data.treatment.end());
    const LogisticMode mode = logistic_mode(w, design);
    if (mode.separation) {
        throw Error(ErrorKind::separation_detected,
                    "treatment is perfectly predicted by the covariates; positivity is violated");
    }
    OverlapReport rep;
    const Eigen::VectorXd eta = design * mode.beta;
    rep.logit_propensity.assign(eta.data(), eta.data() + eta.size());
    std::array<std::vector<double>, 2> by_arm;
    for (std::size_t i = 0; i < data.size(); ++i) {
        by_arm[static_cast<std::size_t>(data.treatment[i])].push_back(rep.logit_propensity[i]);
    }
    for (std::size_t a = 0; a < 2; ++a) {
        for (double p : kOverlapLevels) rep.quantiles[a].push_back(stats::quantile(by_arm[a], p));
    }
    rep.support_lower = std::max(rep.quantiles[0].front(), rep.quantiles[1].front());
    rep.support_upper = std::min(rep.quantiles[0].back(), rep.quantiles[1].back());
    const double m = stats::mean(rep.logit_propensity);
    stats::CompensatedSum ss;
    for (double v : rep.logit_propensity) ss += (v - m) * (v - m);
    rep.caliper = 0.2 * std::sqrt(ss.value() / static_cast<double>(rep.logit_propensity.size() - 1));
    for (double v : rep.logit_propensity) {
        const bool out = v < rep.support_lower - rep.caliper || v > rep.support_upper + rep.caliper;
        rep.flagged.push_back(out);
        rep.num_flagged += out ? 1 : 0;
    }
    return rep;
}

inline OverlapReport cmd_overlap(const fs::path& config_path, const fs::path& out_dir) {
    const AnalysisConfig cfg = analysis_config_from_json(read_json(config_path), config_path.parent_path());
    const DataSet data = io::load_dataset(cfg.data, cfg.columns);
    const OverlapReport rep = propensity_overlap(data);
    fs::create_directories(out_dir);
    std::ostringstream csv;
    csv << "subject,treatment,logit_propensity,flagged\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        csv << (i + 1) << ',' << data.treatment[i] << ',' << io::fmt(rep.logit_propensity[i]) << ','
            << (rep.flagged[i] ? 1 : 0) << '\n';
    }
    write_text(out_dir / "overlap.csv", csv.str());
    json j = {{"levels", kOverlapLevels},
              {"arm0_quantiles", rep.quantiles[0]},
              {"arm1_quantiles", rep.quantiles[1]},
              {"support_lower", rep.support_lower},
              {"support_upper", rep.support_upper},
              {"caliper", rep.caliper},
              {"flagged", rep.num_flagged},
              {"n", data.size()}};
    write_text(out_dir / "overlap.json", j.dump(2) + "\n");
    return rep;
}

// ---------------------------------------------------------------- simulate

inline double default_phi(const std::string& loss_name) { return loss_name == "OTRmax" ? 1.0 : 5.0; }

inline simul::Scenario scenario_from_json(const json& j) {
    simul::Scenario s;
    try {
        s.heterogeneity = simul::heterogeneity_from(detail::get_or<std::string>(j, "heterogeneity", "strong"));
    } catch (const Error& e) {
        detail::config_error(e.what());
    }
    if (j.contains("lambda")) s.lambda = detail::number(j.at("lambda"), "lambda");
    s.n = detail::get_or<int>(j, "n", s.n);
    s.q = detail::get_or<int>(j, "q", s.q);
    if (j.contains("loss")) {
        s.loss = loss_from_json(j.at("loss"));
        s.loss_name = loss_label(j.at("loss"));
    }
    s.phi = j.contains("phi") ? detail::number(j.at("phi"), "phi") : default_phi(s.loss_name);
    s.replications = detail::get_or<int>(j, "replications", s.replications);
    s.seed = detail::get_or<std::uint64_t>(j, "seed", s.seed);
    s.gamma = detail::get_or<double>(j, "gamma", s.gamma);
    const std::string truth = detail::get_or<std::string>(j, "truth_at", "selected");
    if (truth == "selected") {
        s.truth_at = simul::TruthAt::selected;
    } else if (truth == "optimal") {
        s.truth_at = simul::TruthAt::optimal;
    } else {
        detail::config_error("truth_at must be 'selected' or 'optimal'");
    }
    s.sampler = sampler_from_json(j.contains("sampler") ? j.at("sampler") : json("logistic"), j, DesignBasis::cubic);
    try {
        s.validate();
    } catch (const Error& e) {
        detail::config_error(e.what());
    }
    return s;
}

// Expands every array-valued factor (heterogeneity, lambda, n, q, loss,
// sampler) into the full factorial, in that nesting order.
inline std::vector<json> expand_factorial(const json& j) {
    std::vector<json> out{j};
    for (const char* key : {"heterogeneity", "lambda", "n", "q", "loss", "sampler"}) {
        if (!j.contains(key) || !j.at(key).is_array()) continue;
        if (std::string(key) == "loss" && j.at(key).size() == 8 && j.at(key)[0].is_number()) continue;
        std::vector<json> next;
        for (const auto& base : out) {
            for (const auto& value : j.at(key)) {
                json cell = base;
                cell[key] = value;
                next.push_back(std::move(cell));
            }
        }
        out = std::move(next);
    }
    return out;
}

// The full simulation grid: heterogeneity x lambda x n, for OTRmax (phi=1)
// and OTR.25 (phi=5), with the cubic logistic model (q=0) and BART (q=5).
inline std::vector<json> paper_tables_preset(const json& overrides) {
    std::vector<json> out;
    for (const char* loss : {"OTRmax", "OTR.25"}) {
        for (const auto& [sampler, q] : std::vector<std::pair<const char*, int>>{{"logistic", 0}, {"bart", 5}}) {
            json cell = overrides;
            cell.erase("preset");
            cell["heterogeneity"] = {"strong", "mild", "none"};
            cell["lambda"] = {"-log(3)", 0, "log(3)"};
            cell["n"] = {250, 500, 1000};
            cell["loss"] = loss;
            cell["sampler"] = sampler;
            cell["q"] = q;
            if (!cell.contains("replications")) cell["replications"] = 100;
            for (auto& e : expand_factorial(cell)) out.push_back(std::move(e));
        }
    }
    return out;
}

inline std::vector<simul::Scenario> scenarios_from_json(const json& j) {
    std::vector<json> cells;
    if (j.is_object() && j.contains("preset")) {
        const std::string preset = j.at("preset").get<std::string>();
        if (preset != "paper-tables") detail::config_error("unknown scenario preset '" + preset + "'");
        cells = paper_tables_preset(j);
    } else if (j.is_object() && j.contains("scenarios")) {
        for (const auto& s : j.at("scenarios")) {
            for (auto& e : expand_factorial(s)) cells.push_back(std::move(e));
        }
    } else if (j.is_object()) {
        cells = expand_factorial(j);
    } else {
        detail::config_error("scenario file must hold a JSON object");
    }
    if (cells.empty()) detail::config_error("scenario file defines no scenarios");
    std::vector<simul::Scenario> out;
    for (const auto& c : cells) out.push_back(scenario_from_json(c));
    return out;
}

inline const char* kMetricsHeader =
    "Het.,λ,n,B_L,B_Y,ω_L,ω_Y,C_L,C_Y,A,loss,phi,sampler,q,K,completed,failed";
inline const char* kReplicationsHeader =
    "scenario,replication,ok,B_L,B_Y,ω_L,ω_Y,C_L,C_Y,A,treated,acceptance0,acceptance1,separation,error";

inline std::string metrics_line(const simul::Scenario& s, const simul::MetricsRow& m) {
    using io::fmt;
    std::ostringstream out;
    out << simul::to_string(s.heterogeneity) << ',' << fmt(s.lambda) << ',' << s.n << ',' << fmt(m.bias_loss) << ','
        << fmt(m.bias_outcome) << ',' << fmt(m.width_loss) << ',' << fmt(m.width_outcome) << ','
        << fmt(m.coverage_loss) << ',' << fmt(m.coverage_outcome) << ',' << fmt(m.accuracy) << ',' << s.loss_name
        << ',' << fmt(s.phi) << ',' << sampler_name(s.sampler) << ',' << s.q << ',' << s.replications << ','
        << m.completed << ',' << m.failed;
    return out.str();
}

inline std::string replication_line(std::size_t scenario, const simul::ReplicationResult& r) {
    using io::fmt;
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    std::ostringstream out;
    out << scenario << ',' << r.replication << ',' << (r.ok ? 1 : 0) << ',' << fmt(r.bias_loss) << ','
        << fmt(r.bias_outcome) << ',' << fmt(r.width_loss) << ',' << fmt(r.width_outcome) << ','
        << fmt(r.coverage_loss) << ',' << fmt(r.coverage_outcome) << ',' << fmt(r.accuracy) << ','
        << fmt(r.treated_fraction) << ',' << fmt(r.acceptance0) << ',' << fmt(r.acceptance1) << ','
        << (r.separation ? 1 : 0) << ',' << err;
    return out.str();
}

inline std::vector<simul::SimulationResult> cmd_simulate(const fs::path& scenario_path, const fs::path& out_dir,
                                                         std::optional<std::uint64_t> seed, unsigned threads,
                                                         std::ostream* progress = nullptr) {
    auto scenarios = scenarios_from_json(read_json(scenario_path));
    if (seed) {
        for (auto& s : scenarios) s.seed = *seed;
    }
    fs::create_directories(out_dir);
    std::ostringstream metrics;
    std::ostringstream reps;
    metrics << kMetricsHeader << '\n';
    reps << kReplicationsHeader << '\n';
    std::vector<simul::SimulationResult> results;
    for (std::size_t c = 0; c < scenarios.size(); ++c) {
        results.push_back(simul::run_replications(scenarios[c], threads));
        metrics << metrics_line(scenarios[c], results.back().metrics) << '\n';
        for (const auto& r : results.back().details) reps << replication_line(c, r) << '\n';
        if (progress) {
            *progress << "[" << (c + 1) << "/" << scenarios.size() << "] " << metrics_line(scenarios[c], results.back().metrics)
                      << '\n';
        }
    }
    write_text(out_dir / "metrics.csv", metrics.str());
    write_text(out_dir / "replications.csv", reps.str());
    return results;
}

// ---------------------------------------------------------------- coverage

inline coverage::CoverageConfig coverage_cell_from_json(const json& j, const coverage::CoverageConfig& base) {
    coverage::CoverageConfig c = base;
    if (j.contains("mu")) c.mu = detail::number(j.at("mu"), "mu");
    if (j.contains("nu")) c.nu = detail::number(j.at("nu"), "nu");
    if (j.contains("sigma")) c.sigma = detail::number(j.at("sigma"), "sigma");
    if (j.contains("tau")) c.tau = detail::number(j.at("tau"), "tau");
    if (j.contains("rho")) c.rho = detail::number(j.at("rho"), "rho");
    if (j.contains("alpha")) c.alpha = detail::number(j.at("alpha"), "alpha");
    c.replications = detail::get_or<long>(j, "replications", c.replications);
    c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed);
    try {
        c.validate();
    } catch (const Error& e) {
        detail::config_error(e.what());
    }
    return c;
}

// {"cells": [{...}, ...]} lists cells explicitly; otherwise the factors
// "gap" (mu - nu, with nu = 0), "ratio" (sigma / tau, with tau = 1) and
// "rho" are crossed. A bare object with mu/nu/... is a single cell.
inline std::vector<coverage::CoverageConfig> coverage_grid_from_json(const json& j) {
    if (!j.is_object()) detail::config_error("coverage grid must be a JSON object");
    coverage::CoverageConfig base;
    base.alpha = j.contains("alpha") ? detail::number(j.at("alpha"), "alpha") : base.alpha;
    base.replications = detail::get_or<long>(j, "replications", base.replications);
    base.seed = detail::get_or<std::uint64_t>(j, "seed", base.seed);
    std::vector<coverage::CoverageConfig> grid;
    if (j.contains("cells")) {
        for (const auto& c : j.at("cells")) grid.push_back(coverage_cell_from_json(c, base));
    } else if (j.contains("gap") || j.contains("ratio")) {
        auto values = [&](const char* key, double fallback) {
            std::vector<double> v;
            if (!j.contains(key)) return std::vector<double>{fallback};
            const auto& node = j.at(key);
            if (node.is_array()) {
                for (const auto& e : node) v.push_back(detail::number(e, key));
            } else {
                v.push_back(detail::number(node, key));
            }
            return v;
        };
        for (double gap : values("gap", 0.0)) {
            for (double ratio : values("ratio", 1.0)) {
                for (double rho : values("rho", 0.0)) {
                    json cell = {{"mu", gap}, {"nu", 0.0}, {"sigma", ratio}, {"tau", 1.0}, {"rho", rho}};
                    grid.push_back(coverage_cell_from_json(cell, base));
                }
            }
        }
    } else {
        grid.push_back(coverage_cell_from_json(j, base));
    }
    if (grid.empty()) throw Error(ErrorKind::empty_grid, "coverage grid has no cells");
    return grid;
}

inline const char* kSweepHeader =
    "mu,nu,sigma,tau,rho,alpha,replications,estimate,se,select_first,case,bracket_lower,bracket_upper,floor,within";

inline std::vector<coverage::SweepRow> cmd_coverage(const fs::path& grid_path, const fs::path& out_dir,
                                                    std::optional<std::uint64_t> seed, unsigned threads) {
    auto grid = coverage_grid_from_json(read_json(grid_path));
    if (seed) {
        for (auto& c : grid) c.seed = *seed;
    }
    const auto rows = coverage::grid_sweep(grid, threads);
    fs::create_directories(out_dir);
    std::ostringstream out;
    out << kSweepHeader << '\n';
    using io::fmt;
    for (const auto& r : rows) {
        const auto& c = r.config;
        out << fmt(c.mu) << ',' << fmt(c.nu) << ',' << fmt(c.sigma) << ',' << fmt(c.tau) << ',' << fmt(c.rho) << ','
            << fmt(c.alpha) << ',' << c.replications << ',' << fmt(r.estimate.estimate) << ','
            << fmt(r.estimate.standard_error) << ',' << fmt(r.estimate.select_first) << ','
            << coverage::to_string(r.bracket.which) << ',' << fmt(r.bracket.lower) << ',' << fmt(r.bracket.upper)
            << ',' << fmt(r.bracket.floor) << ',' << (r.within ? 1 : 0) << '\n';
    }
    write_text(out_dir / "sweep.csv", out.str());
    return rows;
}

// ---------------------------------------------------------------- generate

// Writes cohort.csv (id, y, w, x1..) and truth.csv for one simulated data set.
inline void cmd_generate(const simul::Scenario& scn, const fs::path& out_dir) {
    const simul::Replicate rep = simul::generate_dataset(scn, 0);
    fs::create_directories(out_dir);
    io::write_dataset(out_dir / "cohort.csv", rep.data);
    std::ostringstream out;
    out << "id,theta1plus,thetaplus1,theta11,loss_a0,loss_a1,outcome_a0,outcome_a1,optimal\n";
    for (std::size_t i = 0; i < rep.truth.size(); ++i) {
        const auto& t = rep.truth[i];
        out << (i + 1) << ',' << io::fmt(t.marginals.theta1plus) << ',' << io::fmt(t.marginals.thetaPlus1) << ','
            << io::fmt(t.theta.theta11) << ',' << io::fmt(t.loss[0]) << ',' << io::fmt(t.loss[1]) << ','
            << io::fmt(t.outcome[0]) << ',' << io::fmt(t.outcome[1]) << ',' << to_int(t.optimal) << '\n';
    }
    write_text(out_dir / "truth.csv", out.str());
}

}  // namespace otr::app
