// fewphoton command-line front end.
//
// Subcommands: hom-scan, phase-scan, chsh, analyze, state-check.
// Outputs are CSV files (plus optional SVG plots) under --out; every file
// embeds its resolved configuration, so runs are reproducible byte for byte.
// Exit codes: 0 success, 2 configuration error, 3 numerical contract
// violation.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fewphoton/experiments.hpp"

namespace {

using namespace fewphoton;

struct CommonFlags {
    std::string config_file;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool svg = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_file, "JSON scenario config");
    cmd->add_option("--seed", flags.seed, "override the RNG seed");
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_flag("--svg", flags.svg, "also write SVG plots");
}

ScenarioConfig make_config(const CommonFlags& flags, Scenario scenario) {
    ScenarioConfig cfg;
    if (!flags.config_file.empty()) {
        cfg = load_config(flags.config_file, scenario);
        if (cfg.scenario != scenario) {
            throw config_error("config file is for scenario '" + to_string(cfg.scenario) +
                               "', expected '" + to_string(scenario) + "'");
        }
    }
    cfg.scenario = scenario;
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.out_dir) cfg.out_dir = *flags.out_dir;
    if (flags.svg) cfg.svg = true;
    return cfg;
}

void print_chsh_result(const ChshResult& r) {
    std::printf("  setting            E        sigma     sign\n");
    for (int k = 0; k < 4; ++k) {
        const auto& est = r.estimates[k];
        std::printf("  (%5.1f, %5.1f)  %9.6f  %9.6f  %+d\n", est.counts.setting.alice_deg,
                    est.counts.setting.bob_deg, est.e_value, est.sigma, r.sign_vector[k]);
    }
    std::printf("S      = %.6f\n", r.s_value);
    std::printf("sigmaS = %.6f\n", r.sigma_s);
    std::printf("violation of |S| <= 2: %.2f standard deviations\n", r.n_sigma_violation);
}

int run(int argc, char** argv) {
    CLI::App app{"few-photon interferometer simulator and Bell-test statistics"};
    app.require_subcommand(1);

    CommonFlags hom_flags, phase_flags, chsh_flags, analyze_flags, check_flags;
    std::string analyze_input;

    auto* hom = app.add_subcommand("hom-scan", "two-photon dip vs path delay");
    add_common_flags(hom, hom_flags);
    auto* phase = app.add_subcommand("phase-scan", "coincidence fringes vs piezo phase");
    add_common_flags(phase, phase_flags);
    auto* chsh_cmd = app.add_subcommand("chsh", "four-setting CHSH run with sampled counts");
    add_common_flags(chsh_cmd, chsh_flags);
    auto* analyze = app.add_subcommand("analyze", "CHSH combination from a CSV of counts or (E, sigma) rows");
    add_common_flags(analyze, analyze_flags);
    analyze->add_option("input", analyze_input, "input CSV (overrides config input_csv)");
    auto* check = app.add_subcommand("state-check", "certify the post-selected state at a target phase");
    add_common_flags(check, check_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // bad usage is a config error; --help stays 0
    }

    if (hom->parsed()) {
        const auto run = run_hom_scan(make_config(hom_flags, Scenario::HomScan));
        std::printf("wrote %s\n", run.csv_path.string().c_str());
        std::printf("dip visibility alice (1-3): %.6f\n", run.visibility_alice);
        std::printf("dip visibility bob   (2-4): %.6f\n", run.visibility_bob);
    } else if (phase->parsed()) {
        const auto run = run_phase_scan(make_config(phase_flags, Scenario::PhaseScan));
        std::printf("wrote %s\n", run.csv_path.string().c_str());
        static const char* names[4] = {"D1-D3", "D1-D4", "D2-D3", "D2-D4"};
        for (int k = 0; k < 4; ++k) {
            std::printf("fringe visibility %s: %.6f\n", names[k], run.fits[k].visibility);
        }
        std::printf("fringe maximum of D1-D3 at piezo phase phi0 = %.6f rad\n", run.phi0);
    } else if (chsh_cmd->parsed()) {
        const auto run = run_chsh(make_config(chsh_flags, Scenario::Chsh));
        std::printf("wrote %s\n", run.csv_path.string().c_str());
        print_chsh_result(run.sampled);
        std::printf("analytic (infinite statistics) S = %.9f\n", run.s_analytic);
    } else if (analyze->parsed()) {
        auto cfg = make_config(analyze_flags, Scenario::Analyze);
        if (!analyze_input.empty()) cfg.input_csv = analyze_input;
        if (cfg.input_csv.empty()) throw config_error("analyze: no input CSV given");
        const auto result = run_analyze(cfg.input_csv, cfg.sign_vector);
        print_chsh_result(result);
    } else if (check->parsed()) {
        const auto run = run_state_check(make_config(check_flags, Scenario::StateCheck));
        std::printf("wrote %s\n", run.csv_path.string().c_str());
        std::printf("target phase: %.6f rad (piezo at %.6f rad)\n", run.target_phi_rad, run.piezo_rad);
        std::printf("E(45, 45)   : %.9f\n", run.e_diag);
        std::printf("fidelity    : %.9f -> %s\n", run.fidelity_value, run.pass ? "PASS" : "FAIL");
        if (!run.pass) return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const numeric_contract_error& e) {
        std::fprintf(stderr, "numerical contract violation: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
