// Command-line driver.  Every option can come from a config file
// (--config file, flat key-value tables per section) or from flags; flags
// override the file.  Exit codes: 0 success, 1 failed check, 2 validation
// problem, 3 numerical failure.

#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pcdyn/experiments.hpp"

namespace {

std::string config_path;

void add_common_options(CLI::App* sub, pcdyn::ExperimentConfig& cfg) {
    sub->add_option("--config", config_path, "read options from a config file");

    sub->add_option("--model.name,--model", cfg.model_name, "model name")
        ->capture_default_str();
    sub->add_option("--model.param,--param", cfg.param_overrides,
                    "parameter override name=value (repeatable)")
        ->delimiter(',');
    sub->add_option("--model.ic,--ic", cfg.initial_state, "initial state override")
        ->delimiter(',');

    sub->add_option("--pc.order,--order", cfg.order, "chaos truncation order")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--pc.mode,--mode", cfg.mode, "projection mode")
        ->capture_default_str()
        ->check(CLI::IsMember({"full", "linearized_fluctuations"}));
    sub->add_option("--pc.family,--family", cfg.family, "basis family")
        ->capture_default_str()
        ->check(CLI::IsMember({"auto", "hermite_gaussian", "legendre_uniform"}));

    sub->add_option("--integrate.method,--method", cfg.method, "integration method")
        ->capture_default_str()
        ->check(CLI::IsMember({"rk45_adaptive", "rk4_fixed", "stormer_verlet"}));
    sub->add_option("--integrate.rtol,--rtol", cfg.rtol, "relative tolerance")
        ->capture_default_str();
    sub->add_option("--integrate.atol,--atol", cfg.atol, "absolute tolerance")
        ->capture_default_str();
    sub->add_option("--integrate.step,--step", cfg.step, "fixed step size")
        ->capture_default_str();
    sub->add_option("--integrate.t0,--t0", cfg.t0, "start time")->capture_default_str();
    sub->add_option("--integrate.t1,--t1", cfg.t1, "end time")->capture_default_str();
    sub->add_option("--integrate.sample_dt,--sample-dt", cfg.sample_dt, "output sample spacing")
        ->capture_default_str();

    sub->add_option("--analysis.n_mc,--n-mc", cfg.n_mc, "Monte Carlo / probe sample count")
        ->capture_default_str();
    sub->add_option("--analysis.seed,--seed", cfg.seed, "random seed")->capture_default_str();
    sub->add_option("--analysis.phase,--phase", cfg.phase, "section phase")
        ->capture_default_str();
    sub->add_option("--analysis.n_points,--n-points", cfg.n_points,
                    "section / report point count")
        ->capture_default_str();
    sub->add_option("--analysis.section_omega,--section-omega", cfg.section_omega,
                    "section frequency (0: model forcing frequency)")
        ->capture_default_str();
    sub->add_option("--analysis.horizon,--horizon", cfg.horizon,
                    "analysis horizon (0: use t1 - t0)")
        ->capture_default_str();
    sub->add_option("--analysis.transient,--transient", cfg.transient,
                    "discarded transient (negative: 5% of horizon)")
        ->capture_default_str();
    sub->add_option("--analysis.renorm_dt,--renorm-dt", cfg.renorm_dt,
                    "tangent renormalization interval")
        ->capture_default_str();
    sub->add_option("--analysis.threshold,--threshold", cfg.threshold,
                    "moment divergence threshold")
        ->capture_default_str();
    sub->add_option("--analysis.epsilons,--epsilons", cfg.epsilons,
                    "epsilon sweep values (switches compare-mc to the two-time study)")
        ->delimiter(',');
    sub->add_option("--analysis.chi_max,--chi-max", cfg.chi_max, "slow-time horizon of the sweep")
        ->capture_default_str();

    sub->add_option("--output.dir,--out", cfg.out_dir, "output directory");
}

// Apply a config file to an already-parsed subcommand.  Sections become
// dotted prefixes ([model] name -> --model.name); options already given on
// the command line keep their values, so flags override the file.  Unknown
// keys are rejected.
void apply_config_file(CLI::App* sub, const std::string& path) {
    std::ifstream input(path);
    if (!input.good()) throw CLI::FileError::Missing(path);
    const CLI::ConfigTOML reader;
    for (const CLI::ConfigItem& item : reader.from_config(input)) {
        if (item.name == "++" || item.name == "--") continue;  // section markers
        const std::string dotted = item.fullname();
        CLI::Option* op = sub->get_option_no_throw("--" + dotted);
        if (op == nullptr) throw CLI::ConfigError::Extras(dotted);
        if (op->count() > 0) continue;  // the command line wins
        if (item.inputs.empty()) {
            op->add_result("true");
        } else {
            for (const std::string& v : item.inputs) op->add_result(v);
        }
        op->run_callback();
    }
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const pcdyn::IntegrationError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"polynomial chaos expansions of uncertain dynamical systems"};
    app.set_version_flag("--version", "pcdyn 1.0.0");
    app.require_subcommand(1);

    pcdyn::ExperimentConfig cfg;

    CLI::App* expand = app.add_subcommand(
        "expand", "project a model onto chaos coefficients and print/write the term list");
    add_common_options(expand, cfg);
    expand->add_flag("--check-paper", cfg.check_reference,
                     "diff the expansion against the bundled reference term lists");

    CLI::App* run = app.add_subcommand(
        "run", "integrate the coefficient system; write trajectory, moments, sections");
    add_common_options(run, cfg);

    CLI::App* compare = app.add_subcommand(
        "compare-mc", "chaos moments against a Monte Carlo ensemble (or the epsilon sweep)");
    add_common_options(compare, cfg);

    CLI::App* lyapunov =
        app.add_subcommand("lyapunov", "largest Lyapunov exponent of the coefficient system");
    add_common_options(lyapunov, cfg);

    CLI::App* theorem1 = app.add_subcommand(
        "theorem1", "check that the coefficient system is the canonical flow of the averaged "
                    "Hamiltonian");
    add_common_options(theorem1, cfg);

    CLI::App* harmonic = app.add_subcommand(
        "harmonic", "volume preservation vs coefficient decay for the uncertain-frequency "
                    "oscillator");
    add_common_options(harmonic, cfg);

    try {
        app.parse(argc, argv);
        if (!config_path.empty()) {
            for (CLI::App* sub : {expand, run, compare, lyapunov, theorem1, harmonic})
                if (sub->parsed()) apply_config_file(sub, config_path);
        }
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (expand->parsed()) return guarded([&] { return pcdyn::run_expand(cfg); });
    if (run->parsed()) return guarded([&] { return pcdyn::run_run(cfg); });
    if (compare->parsed()) return guarded([&] { return pcdyn::run_compare_mc(cfg); });
    if (lyapunov->parsed()) return guarded([&] { return pcdyn::run_lyapunov(cfg); });
    if (theorem1->parsed()) return guarded([&] { return pcdyn::run_theorem1(cfg); });
    if (harmonic->parsed()) return guarded([&] { return pcdyn::run_harmonic(cfg); });
    return 2;
}
