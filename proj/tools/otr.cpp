// otr: optimal treatment regime analysis, simulation and coverage tool.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>

#include "otr/app.hpp"

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    unsigned threads = 0;

    unsigned worker_count() const { return threads == 0 ? otr::default_threads() : threads; }
};

void print_summary(const otr::CohortSummary& s) {
    std::printf("n=%zu  treated(W)=%.4f  treated(a1)=%.4f  U_Y(W)=%.4f  U_Y(a1)=%.4f  U_L(W)=%.4f  U_L(a1)=%.4f  "
                "sensitive=%zu\n",
                s.n, s.treated_under_observed, s.treated_under_rule, s.outcome_under_observed, s.outcome_under_rule,
                s.loss_under_observed, s.loss_under_rule, s.sensitive);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Bayesian optimal treatment regimes for binary outcomes"};
    cli.require_subcommand(1);
    Globals g;
    cli.add_option("--seed", g.seed, "Override the seed in the configuration");
    cli.add_option("--out-dir", g.out_dir, "Directory for report files")->capture_default_str();
    cli.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();

    std::string analyze_cfg;
    auto* analyze = cli.add_subcommand("analyze", "Fit arm models to a cohort and report per-subject decisions");
    analyze->add_option("--config", analyze_cfg, "Analysis JSON")->required()->check(CLI::ExistingFile);

    std::string scenario_file;
    auto* simulate = cli.add_subcommand("simulate", "Run Monte Carlo replications of one or more scenarios");
    simulate->add_option("--scenario", scenario_file, "Scenario JSON")->required()->check(CLI::ExistingFile);

    std::string grid_file;
    auto* cover = cli.add_subcommand("coverage", "Coverage of the selected interval under the bivariate normal model");
    cover->add_option("--grid", grid_file, "Coverage grid JSON")->required()->check(CLI::ExistingFile);

    std::string overlap_cfg;
    auto* overlap = cli.add_subcommand("overlap", "Propensity-score overlap diagnostic");
    overlap->add_option("--config", overlap_cfg, "Analysis JSON (data and columns)")->required()->check(CLI::ExistingFile);

    otr::simul::Scenario gen;
    std::string gen_het = "strong";
    std::string gen_lambda = "0";
    auto* generate = cli.add_subcommand("generate", "Write a simulated cohort and its ground truth");
    generate->add_option("--heterogeneity", gen_het, "strong, mild or none")->capture_default_str();
    generate->add_option("--lambda", gen_lambda, "Selection slope, e.g. 0 or log(3)")->capture_default_str();
    generate->add_option("--n", gen.n, "Subjects")->capture_default_str();
    generate->add_option("--q", gen.q, "Noise covariates")->capture_default_str();

    for (auto* sub : {analyze, simulate, cover, overlap, generate}) {
        sub->fallthrough();
    }

    CLI11_PARSE(cli, argc, argv);

    try {
        const std::filesystem::path out(g.out_dir);
        if (*analyze) {
            print_summary(otr::app::cmd_analyze(analyze_cfg, out, g.seed));
        } else if (*simulate) {
            const auto results = otr::app::cmd_simulate(scenario_file, out, g.seed, g.worker_count(), &std::cout);
            for (const auto& r : results) {
                if (r.metrics.failed > 0) {
                    std::cerr << "warning: " << r.metrics.failed << " replication(s) failed; see replications.csv\n";
                }
            }
        } else if (*cover) {
            const auto rows = otr::app::cmd_coverage(grid_file, out, g.seed, g.worker_count());
            int violations = 0;
            for (const auto& r : rows) {
                std::printf("mu=%g nu=%g sigma=%g tau=%g rho=%g  coverage=%.5f +- %.5f  case %s [%g, %g]%s\n",
                            r.config.mu, r.config.nu, r.config.sigma, r.config.tau, r.config.rho,
                            r.estimate.estimate, r.estimate.standard_error,
                            otr::coverage::to_string(r.bracket.which).c_str(), r.bracket.lower, r.bracket.upper,
                            r.within ? "" : "  VIOLATION");
                violations += r.within ? 0 : 1;
            }
            if (violations > 0) {
                std::cerr << violations << " cell(s) outside the predicted bracket\n";
                return 3;
            }
        } else if (*overlap) {
            const auto rep = otr::app::cmd_overlap(overlap_cfg, out);
            std::printf("common support [%g, %g], %zu subject(s) outside\n", rep.support_lower, rep.support_upper,
                        rep.num_flagged);
        } else if (*generate) {
            gen.heterogeneity = otr::simul::heterogeneity_from(gen_het);
            gen.lambda = otr::app::detail::number(nlohmann::json(gen_lambda), "lambda");
            if (g.seed) gen.seed = *g.seed;
            gen.replications = 1;
            otr::app::cmd_generate(gen, out);
        }
    } catch (const otr::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
