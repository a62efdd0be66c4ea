// experiments.hpp
// Scenario layer: JSON configs, the piezo-phase calibration, and the five
// runnable experiments (hom-scan, phase-scan, chsh, analyze, state-check).
// Every output CSV embeds its fully resolved config, including the seed, as
// header comments; re-running with the same config reproduces the file
// byte for byte.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fewphoton/bell.hpp"
#include "fewphoton/circuit.hpp"
#include "fewphoton/detection.hpp"
#include "fewphoton/svg.hpp"

namespace fewphoton {

// Bad user input: malformed config, unreadable files, empty ranges.
// The CLI maps this to exit code 2 (numeric_contract_error maps to 3).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Scenario { HomScan, PhaseScan, Chsh, Analyze, StateCheck };

inline std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::HomScan: return "hom_scan";
        case Scenario::PhaseScan: return "phase_scan";
        case Scenario::Chsh: return "chsh";
        case Scenario::Analyze: return "analyze";
        case Scenario::StateCheck: return "state_check";
    }
    return "?";
}

inline Scenario parse_scenario(std::string name) {
    for (auto& c : name) {
        if (c == '-') c = '_';
    }
    if (name == "hom_scan") return Scenario::HomScan;
    if (name == "phase_scan") return Scenario::PhaseScan;
    if (name == "chsh") return Scenario::Chsh;
    if (name == "analyze") return Scenario::Analyze;
    if (name == "state_check") return Scenario::StateCheck;
    throw config_error("unknown scenario '" + name + "'");
}

struct ScenarioConfig {
    Scenario scenario = Scenario::Chsh;

    // circuit parameters
    double phi_rad = 0.0;  // target phase for chsh / state_check (0 maximizes |S|)
    double delay1_fs = 0.0;
    double delay2_fs = 0.0;
    double delay3_fs = 0.0;
    double efficiency = -1.0;  // <0: per-scenario default (scans 1.0, chsh/state_check 0.74)
    double mode_overlap = 1.0;
    double mode_overlap_alice = -1.0;  // hom-scan per-side override, <0: use mode_overlap
    double mode_overlap_bob = -1.0;
    double sigma_fs = 100.0;

    // scan grid; NaN/0: per-scenario default
    double scan_min = std::numeric_limits<double>::quiet_NaN();
    double scan_max = std::numeric_limits<double>::quiet_NaN();
    int scan_points = 0;

    // chsh settings, canonical order (alpha, alpha') x (beta, beta')
    std::array<double, 2> alice_settings_deg{22.5, 67.5};
    std::array<double, 2> bob_settings_deg{45.0, 0.0};
    // signs for [(a,b), (a',b), (a,b'), (a',b')]; default -1 on (a,b')
    std::array<int, 4> sign_vector{+1, +1, -1, +1};

    double fidelity_threshold = 0.99;  // state_check pass bar

    // sampling
    bool sample = false;  // add sampled-count columns to scans
    double mean_total_pairs = 4700.0;
    std::uint64_t seed = 1;

    // input / output
    std::string input_csv;  // analyze
    std::string out_dir = ".";
    bool svg = false;

    void resolve_defaults() {
        const bool scan = scenario == Scenario::HomScan || scenario == Scenario::PhaseScan;
        if (efficiency < 0.0) efficiency = scan ? 1.0 : 0.74;
        const bool hom = scenario == Scenario::HomScan;
        if (std::isnan(scan_min)) scan_min = hom ? -500.0 : 0.0;
        if (std::isnan(scan_max)) scan_max = hom ? 500.0 : 2.0 * kPi;
        if (scan_points <= 0) scan_points = hom ? 81 : 65;
    }

    void validate() const {
        if (scan_points < 2 || !(scan_max > scan_min)) {
            throw config_error("scan range is empty: need scan_max > scan_min and scan_points >= 2");
        }
        if (!(efficiency > 0.0 && efficiency <= 1.0)) {
            throw config_error("efficiency must lie in (0, 1]");
        }
        if (!(mode_overlap >= 0.0 && mode_overlap <= 1.0)) {
            throw config_error("mode_overlap must lie in [0, 1]");
        }
        if (!(sigma_fs > 0.0)) throw config_error("sigma_fs must be positive");
        if (!(mean_total_pairs > 0.0)) throw config_error("mean_total_pairs must be positive");
        try {
            validate_sign_vector(sign_vector);
        } catch (const std::invalid_argument& e) {
            throw config_error(e.what());
        }
    }

    double dip_overlap_alice() const { return mode_overlap_alice >= 0.0 ? mode_overlap_alice : mode_overlap; }
    double dip_overlap_bob() const { return mode_overlap_bob >= 0.0 ? mode_overlap_bob : mode_overlap; }
};

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline double json_number(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw config_error("config key '" + key + "' must be a number");
    return v.get<double>();
}

}  // namespace detail

inline ScenarioConfig config_from_json(const nlohmann::json& j, Scenario scenario) {
    ScenarioConfig cfg;
    cfg.scenario = scenario;
    for (const auto& [key, value] : j.items()) {
        if (key == "scenario") {
            cfg.scenario = parse_scenario(value.get<std::string>());
        } else if (key == "phi_rad") {
            cfg.phi_rad = detail::json_number(value, key);
        } else if (key == "delay1_fs") {
            cfg.delay1_fs = detail::json_number(value, key);
        } else if (key == "delay2_fs") {
            cfg.delay2_fs = detail::json_number(value, key);
        } else if (key == "delay3_fs") {
            cfg.delay3_fs = detail::json_number(value, key);
        } else if (key == "efficiency") {
            cfg.efficiency = detail::json_number(value, key);
        } else if (key == "mode_overlap") {
            cfg.mode_overlap = detail::json_number(value, key);
        } else if (key == "mode_overlap_alice") {
            cfg.mode_overlap_alice = detail::json_number(value, key);
        } else if (key == "mode_overlap_bob") {
            cfg.mode_overlap_bob = detail::json_number(value, key);
        } else if (key == "sigma_fs") {
            cfg.sigma_fs = detail::json_number(value, key);
        } else if (key == "scan_min") {
            cfg.scan_min = detail::json_number(value, key);
        } else if (key == "scan_max") {
            cfg.scan_max = detail::json_number(value, key);
        } else if (key == "scan_points") {
            cfg.scan_points = value.get<int>();
        } else if (key == "alice_settings_deg") {
            cfg.alice_settings_deg = {value.at(0).get<double>(), value.at(1).get<double>()};
        } else if (key == "bob_settings_deg") {
            cfg.bob_settings_deg = {value.at(0).get<double>(), value.at(1).get<double>()};
        } else if (key == "sign_vector") {
            for (int i = 0; i < 4; ++i) cfg.sign_vector[i] = value.at(i).get<int>();
        } else if (key == "fidelity_threshold") {
            cfg.fidelity_threshold = detail::json_number(value, key);
        } else if (key == "sample") {
            cfg.sample = value.get<bool>();
        } else if (key == "mean_total_pairs") {
            cfg.mean_total_pairs = detail::json_number(value, key);
        } else if (key == "seed") {
            cfg.seed = value.get<std::uint64_t>();
        } else if (key == "input_csv") {
            cfg.input_csv = value.get<std::string>();
        } else if (key == "out_dir") {
            cfg.out_dir = value.get<std::string>();
        } else if (key == "svg") {
            cfg.svg = value.get<bool>();
        } else {
            throw config_error("unknown config key '" + key + "'");
        }
    }
    return cfg;
}

inline ScenarioConfig load_config(const std::filesystem::path& file, Scenario scenario) {
    std::ifstream in(file);
    if (!in) throw config_error("cannot read config file " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        return config_from_json(j, scenario);
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("bad config value: ") + e.what());
    }
}

// Fully resolved config as "# key = value" lines for CSV headers.
inline std::vector<std::string> config_header_lines(const ScenarioConfig& c) {
    using detail::fmt;
    std::vector<std::string> lines;
    auto add = [&](const std::string& k, const std::string& v) { lines.push_back("# " + k + " = " + v); };
    add("scenario", to_string(c.scenario));
    if (c.scenario == Scenario::Chsh || c.scenario == Scenario::StateCheck) {
        add("phi_rad", fmt(c.phi_rad));
    }
    add("delay1_fs", fmt(c.delay1_fs));
    add("delay2_fs", fmt(c.delay2_fs));
    add("delay3_fs", fmt(c.delay3_fs));
    add("efficiency", fmt(c.efficiency));
    add("mode_overlap", fmt(c.mode_overlap));
    if (c.scenario == Scenario::HomScan) {
        add("mode_overlap_alice", fmt(c.dip_overlap_alice()));
        add("mode_overlap_bob", fmt(c.dip_overlap_bob()));
    }
    add("sigma_fs", fmt(c.sigma_fs));
    if (c.scenario == Scenario::HomScan || c.scenario == Scenario::PhaseScan) {
        add("scan_min", fmt(c.scan_min));
        add("scan_max", fmt(c.scan_max));
        add("scan_points", std::to_string(c.scan_points));
        add("sample", c.sample ? "true" : "false");
    }
    if (c.scenario == Scenario::Chsh) {
        add("alice_settings_deg", fmt(c.alice_settings_deg[0]) + "," + fmt(c.alice_settings_deg[1]));
        add("bob_settings_deg", fmt(c.bob_settings_deg[0]) + "," + fmt(c.bob_settings_deg[1]));
        add("sign_vector", std::to_string(c.sign_vector[0]) + "," + std::to_string(c.sign_vector[1]) + "," +
                               std::to_string(c.sign_vector[2]) + "," + std::to_string(c.sign_vector[3]));
    }
    if (c.scenario == Scenario::StateCheck) add("fidelity_threshold", fmt(c.fidelity_threshold));
    add("mean_total_pairs", fmt(c.mean_total_pairs));
    add("seed", std::to_string(c.seed));
    return lines;
}

namespace detail {

inline std::ofstream open_output(const ScenarioConfig& cfg, const std::string& filename,
                                 std::filesystem::path& out_path) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw config_error("cannot create output directory " + dir.string());
    out_path = dir / filename;
    std::ofstream out(out_path, std::ios::binary);  // fixed '\n' endings for byte reproducibility
    if (!out) throw config_error("cannot write output file " + out_path.string());
    return out;
}

inline long long sample_poisson(double mean, std::uint64_t stream_seed) {
    if (mean <= 0.0) return 0;
    std::mt19937_64 rng(stream_seed);
    std::poisson_distribution<long long> poisson(mean);
    return poisson(rng);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Piezo phase calibration
// ---------------------------------------------------------------------------

// The element phase conventions fix how the piezo phase enters the
// post-selected state. Rather than hardcoding that offset, scan the piezo,
// locate the D1-D3 fringe maximum (the zero-phase point) and determine the
// direction in which a target phase moves the piezo.
struct PhaseCalibration {
    double piezo_at_max = 0.0;
    double sign = 1.0;
};

inline PhaseCalibration calibrate_piezo_phase(double sigma_fs = 100.0) {
    std::vector<std::pair<double, double>> fringe;
    const int n = 64;
    for (int i = 0; i <= n; ++i) {
        const double piezo = 2.0 * kPi * i / n;
        InterferometerSetup setup;
        setup.phi_rad = piezo;
        setup.sigma_fs = sigma_fs;
        const auto out = evolve(entangling_interferometer(setup), entangler_source()).state;
        const auto dist = outcome_distribution(out, entangler_detector_map(), {1.0, false});
        const auto it = dist.find(ClickPattern{"D1", "D3"});
        fringe.emplace_back(piezo, it == dist.end() ? 0.0 : it->second);
    }
    PhaseCalibration cal;
    cal.piezo_at_max = -fit_fringe(fringe).phase0;

    // Probe a quarter period to learn which direction advances the state.
    InterferometerSetup probe;
    probe.phi_rad = cal.piezo_at_max + kPi / 2.0;
    probe.sigma_fs = sigma_fs;
    const auto out = evolve(entangling_interferometer_core(probe), entangler_source()).state;
    const auto cond = conditional_polarization_state(out, "a1", "b1");
    cal.sign = fidelity(cond, psi_phi(kPi / 2.0)) > 0.5 ? 1.0 : -1.0;
    return cal;
}

inline double piezo_for_target(const PhaseCalibration& cal, double target_phi_rad) {
    return cal.piezo_at_max + cal.sign * target_phi_rad;
}

// ---------------------------------------------------------------------------
// hom-scan
// ---------------------------------------------------------------------------

struct HomScanRun {
    std::vector<double> delays_fs;
    std::vector<double> p_alice;  // 1-3 dip bench (Alice side)
    std::vector<double> p_bob;    // 2-4 dip bench (Bob side)
    std::vector<long long> n_alice, n_bob;  // sampled, when requested
    double visibility_alice = 0.0;
    double visibility_bob = 0.0;
    std::filesystem::path csv_path;
};

inline double hom_coincidence_probability(double delay_fs, double mode_overlap, double sigma_fs,
                                          double efficiency) {
    const auto out = evolve(hom_test_circuit(delay_fs, mode_overlap, sigma_fs), hom_source()).state;
    const auto dist = outcome_distribution(out, hom_detector_map(), {efficiency, false});
    const auto it = dist.find(ClickPattern{"Dp", "Dq"});
    return it == dist.end() ? 0.0 : it->second;
}

inline HomScanRun run_hom_scan(ScenarioConfig cfg) {
    cfg.scenario = Scenario::HomScan;
    cfg.resolve_defaults();
    cfg.validate();

    HomScanRun run;
    const int n = cfg.scan_points;
    for (int i = 0; i < n; ++i) {
        const double delay = cfg.scan_min + (cfg.scan_max - cfg.scan_min) * i / (n - 1);
        run.delays_fs.push_back(delay);
        run.p_alice.push_back(
            hom_coincidence_probability(delay, cfg.dip_overlap_alice(), cfg.sigma_fs, cfg.efficiency));
        run.p_bob.push_back(
            hom_coincidence_probability(delay, cfg.dip_overlap_bob(), cfg.sigma_fs, cfg.efficiency));
        if (cfg.sample) {
            run.n_alice.push_back(detail::sample_poisson(run.p_alice.back() * cfg.mean_total_pairs,
                                                         derive_stream_seed(cfg.seed, 2 * i)));
            run.n_bob.push_back(detail::sample_poisson(run.p_bob.back() * cfg.mean_total_pairs,
                                                       derive_stream_seed(cfg.seed, 2 * i + 1)));
        }
    }

    auto visibility = [&](const std::vector<double>& p) {
        std::vector<std::pair<double, double>> scan;
        for (int i = 0; i < n; ++i) scan.emplace_back(run.delays_fs[i], p[i]);
        const double baseline = std::max(p.front(), p.back());
        return dip_visibility(scan, baseline);
    };
    run.visibility_alice = visibility(run.p_alice);
    run.visibility_bob = visibility(run.p_bob);

    auto out = detail::open_output(cfg, "hom_scan.csv", run.csv_path);
    for (const auto& line : config_header_lines(cfg)) out << line << '\n';
    out << "# visibility_alice = " << detail::fmt(run.visibility_alice) << '\n';
    out << "# visibility_bob = " << detail::fmt(run.visibility_bob) << '\n';
    out << "delay_fs,p_coincidence_alice,p_coincidence_bob";
    if (cfg.sample) out << ",n_alice,n_bob";
    out << '\n';
    for (int i = 0; i < n; ++i) {
        out << detail::fmt(run.delays_fs[i]) << ',' << detail::fmt(run.p_alice[i]) << ','
            << detail::fmt(run.p_bob[i]);
        if (cfg.sample) out << ',' << run.n_alice[i] << ',' << run.n_bob[i];
        out << '\n';
    }
    out.close();

    if (cfg.svg) {
        std::vector<SvgSeries> series(2);
        series[0].label = "alice (1-3)";
        series[1].label = "bob (2-4)";
        for (int i = 0; i < n; ++i) {
            series[0].points.emplace_back(run.delays_fs[i], run.p_alice[i]);
            series[1].points.emplace_back(run.delays_fs[i], run.p_bob[i]);
        }
        write_svg_chart(run.csv_path.parent_path() / "hom_scan.svg", "coincidence vs delay (fs)", series);
    }
    return run;
}

// ---------------------------------------------------------------------------
// phase-scan
// ---------------------------------------------------------------------------

struct PhaseScanRun {
    std::vector<double> phi_rad;              // piezo phase
    std::array<std::vector<double>, 4> p;     // D1D3, D1D4, D2D3, D2D4
    std::array<std::vector<long long>, 4> n;  // sampled, when requested
    std::array<VisibilityFit, 4> fits{};
    double phi0 = 0.0;  // D1-D3 fringe maximum
    std::filesystem::path csv_path;
};

inline const std::array<ClickPattern, 4>& cross_patterns() {
    static const std::array<ClickPattern, 4> patterns{
        ClickPattern{"D1", "D3"}, ClickPattern{"D1", "D4"},
        ClickPattern{"D2", "D3"}, ClickPattern{"D2", "D4"}};
    return patterns;
}

inline PhaseScanRun run_phase_scan(ScenarioConfig cfg) {
    cfg.scenario = Scenario::PhaseScan;
    cfg.resolve_defaults();
    cfg.validate();

    PhaseScanRun run;
    const int n = cfg.scan_points;
    for (int i = 0; i < n; ++i) {
        const double phi = cfg.scan_min + (cfg.scan_max - cfg.scan_min) * i / (n - 1);
        run.phi_rad.push_back(phi);
        InterferometerSetup setup;
        setup.phi_rad = phi;
        setup.delay1_fs = cfg.delay1_fs;
        setup.delay2_fs = cfg.delay2_fs;
        setup.delay3_fs = cfg.delay3_fs;
        setup.mode_overlap = cfg.mode_overlap;
        setup.sigma_fs = cfg.sigma_fs;
        // the 45/45 analysis basis of the fringe measurement
        setup.analyzer_alice_hwp_deg = 22.5;
        setup.analyzer_bob_hwp_deg = 22.5;
        const auto out = evolve(entangling_interferometer(setup), entangler_source()).state;
        const auto dist = outcome_distribution(out, entangler_detector_map(), {cfg.efficiency, false});
        for (int k = 0; k < 4; ++k) {
            const auto it = dist.find(cross_patterns()[k]);
            run.p[k].push_back(it == dist.end() ? 0.0 : it->second);
            if (cfg.sample) {
                run.n[k].push_back(detail::sample_poisson(run.p[k].back() * cfg.mean_total_pairs,
                                                          derive_stream_seed(cfg.seed, 4 * i + k)));
            }
        }
    }

    for (int k = 0; k < 4; ++k) {
        std::vector<std::pair<double, double>> pts;
        for (int i = 0; i < n; ++i) pts.emplace_back(run.phi_rad[i], run.p[k][i]);
        run.fits[k] = fit_fringe(pts);
    }
    run.phi0 = std::remainder(-run.fits[0].phase0, 2.0 * kPi);
    if (run.phi0 == 0.0) run.phi0 = 0.0;  // drop the sign of -0

    auto out = detail::open_output(cfg, "phase_scan.csv", run.csv_path);
    for (const auto& line : config_header_lines(cfg)) out << line << '\n';
    static const char* names[4] = {"d1d3", "d1d4", "d2d3", "d2d4"};
    for (int k = 0; k < 4; ++k) {
        out << "# visibility_" << names[k] << " = " << detail::fmt(run.fits[k].visibility) << '\n';
    }
    out << "# phi0 = " << detail::fmt(run.phi0) << '\n';
    out << "phi_rad,p_d1d3,p_d1d4,p_d2d3,p_d2d4";
    if (cfg.sample) out << ",n_d1d3,n_d1d4,n_d2d3,n_d2d4";
    out << '\n';
    for (int i = 0; i < n; ++i) {
        out << detail::fmt(run.phi_rad[i]);
        for (int k = 0; k < 4; ++k) out << ',' << detail::fmt(run.p[k][i]);
        if (cfg.sample) {
            for (int k = 0; k < 4; ++k) out << ',' << run.n[k][i];
        }
        out << '\n';
    }
    out.close();

    if (cfg.svg) {
        std::vector<SvgSeries> series(4);
        for (int k = 0; k < 4; ++k) {
            series[k].label = names[k];
            for (int i = 0; i < n; ++i) series[k].points.emplace_back(run.phi_rad[i], run.p[k][i]);
        }
        write_svg_chart(run.csv_path.parent_path() / "phase_scan.svg",
                        "coincidence probabilities vs piezo phase (rad)", series);
    }
    return run;
}

// ---------------------------------------------------------------------------
// chsh
// ---------------------------------------------------------------------------

struct ChshRun {
    std::array<MeasurementSetting, 4> settings{};      // canonical order
    std::array<std::array<double, 4>, 4> probabilities{};  // post-selected, per setting
    std::array<double, 4> acceptance{};
    std::array<CorrelationEstimate, 4> estimates{};    // from sampled counts
    std::array<double, 4> analytic_e{};
    ChshResult sampled{};
    double s_analytic = 0.0;
    PhaseCalibration calibration{};
    std::filesystem::path csv_path;
};

// Post-selected coincidence distribution of the interferometer with
// analyzers at the given polarization angles (HWP at half of each).
inline std::pair<std::array<double, 4>, double> chsh_setting_probabilities(
    const ScenarioConfig& cfg, double piezo_rad, const MeasurementSetting& setting) {
    InterferometerSetup setup;
    setup.phi_rad = piezo_rad;
    setup.delay1_fs = cfg.delay1_fs;
    setup.delay2_fs = cfg.delay2_fs;
    setup.delay3_fs = cfg.delay3_fs;
    setup.mode_overlap = cfg.mode_overlap;
    setup.sigma_fs = cfg.sigma_fs;
    setup.analyzer_alice_hwp_deg = setting.alice_deg / 2.0;
    setup.analyzer_bob_hwp_deg = setting.bob_deg / 2.0;
    const auto out = evolve(entangling_interferometer(setup), entangler_source()).state;
    const auto dist = outcome_distribution(out, entangler_detector_map(), {cfg.efficiency, false});
    const auto sel = post_select(dist);
    return {coincidence_probabilities(sel.conditional), sel.acceptance};
}

inline ChshRun run_chsh(ScenarioConfig cfg) {
    cfg.scenario = Scenario::Chsh;
    cfg.resolve_defaults();
    cfg.validate();

    ChshRun run;
    run.calibration = calibrate_piezo_phase(cfg.sigma_fs);
    const double piezo = piezo_for_target(run.calibration, cfg.phi_rad);

    const double a = cfg.alice_settings_deg[0], ap = cfg.alice_settings_deg[1];
    const double b = cfg.bob_settings_deg[0], bp = cfg.bob_settings_deg[1];
    run.settings = {MeasurementSetting{a, b}, MeasurementSetting{ap, b},
                    MeasurementSetting{a, bp}, MeasurementSetting{ap, bp}};

    for (int k = 0; k < 4; ++k) {
        const auto [probs, acc] = chsh_setting_probabilities(cfg, piezo, run.settings[k]);
        run.probabilities[k] = probs;
        run.acceptance[k] = acc;
        run.analytic_e[k] = probs[0] - probs[1] - probs[2] + probs[3];
        const auto counts = sample_counts(probs, cfg.mean_total_pairs,
                                          derive_stream_seed(cfg.seed, static_cast<std::uint64_t>(k)),
                                          run.settings[k]);
        run.estimates[k] = correlation_from_counts(counts);
        run.s_analytic += cfg.sign_vector[k] * run.analytic_e[k];
    }
    run.sampled = chsh(run.estimates, cfg.sign_vector);

    auto out = detail::open_output(cfg, "chsh.csv", run.csv_path);
    for (const auto& line : config_header_lines(cfg)) out << line << '\n';
    out << "# piezo_rad = " << detail::fmt(piezo) << '\n';
    out << "# s_sampled = " << detail::fmt(run.sampled.s_value) << '\n';
    out << "# sigma_s = " << detail::fmt(run.sampled.sigma_s) << '\n';
    out << "# n_sigma_violation = " << detail::fmt(run.sampled.n_sigma_violation) << '\n';
    out << "# s_analytic = " << detail::fmt(run.s_analytic) << '\n';
    out << "alice_deg,bob_deg,n_pp,n_pm,n_mp,n_mm,e,sigma\n";
    for (int k = 0; k < 4; ++k) {
        const auto& est = run.estimates[k];
        out << detail::fmt(run.settings[k].alice_deg) << ',' << detail::fmt(run.settings[k].bob_deg) << ','
            << est.counts.n_pp << ',' << est.counts.n_pm << ',' << est.counts.n_mp << ','
            << est.counts.n_mm << ',' << detail::fmt(est.e_value) << ',' << detail::fmt(est.sigma) << '\n';
    }
    out.close();
    return run;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

namespace detail {

struct AnalyzeRow {
    double alice_deg = 0.0, bob_deg = 0.0;
    std::optional<CountsTable> counts;
    double e = 0.0, sigma = 0.0;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding whitespace
        const auto begin = field.find_first_not_of(" \t\r");
        const auto end = field.find_last_not_of(" \t\r");
        fields.push_back(begin == std::string::npos ? "" : field.substr(begin, end - begin + 1));
    }
    return fields;
}

inline double parse_double(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw config_error("malformed number '" + s + "'");
        return v;
    } catch (const std::exception&) {
        throw config_error("malformed number '" + s + "'");
    }
}

}  // namespace detail

// Reads four correlation rows, either as (alice_deg, bob_deg, e, sigma) or
// as raw counts (alice_deg, bob_deg, n_pp, n_pm, n_mp, n_mm[, e, sigma]),
// and forms the CHSH combination. Rows are canonicalized by their angles:
// (alpha, beta) is the first row's pair, and the default sign vector puts
// the -1 on the (alpha, beta') term.
inline ChshResult run_analyze(const std::filesystem::path& input_csv,
                              const std::array<int, 4>& sign_vector = {+1, +1, -1, +1}) {
    std::ifstream in(input_csv);
    if (!in) throw config_error("cannot read input CSV " + input_csv.string());

    std::vector<detail::AnalyzeRow> rows;
    std::string line;
    bool saw_header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.empty()) continue;
        // a non-numeric first field is the column header
        if (!saw_header && !fields[0].empty() &&
            fields[0].find_first_not_of("+-.0123456789eE") != std::string::npos) {
            saw_header = true;
            continue;
        }
        detail::AnalyzeRow row;
        if (fields.size() == 4) {
            row.alice_deg = detail::parse_double(fields[0]);
            row.bob_deg = detail::parse_double(fields[1]);
            row.e = detail::parse_double(fields[2]);
            row.sigma = detail::parse_double(fields[3]);
        } else if (fields.size() == 6 || fields.size() == 8) {
            row.alice_deg = detail::parse_double(fields[0]);
            row.bob_deg = detail::parse_double(fields[1]);
            CountsTable counts;
            counts.n_pp = static_cast<long long>(detail::parse_double(fields[2]));
            counts.n_pm = static_cast<long long>(detail::parse_double(fields[3]));
            counts.n_mp = static_cast<long long>(detail::parse_double(fields[4]));
            counts.n_mm = static_cast<long long>(detail::parse_double(fields[5]));
            counts.setting = {row.alice_deg, row.bob_deg};
            const auto est = correlation_from_counts(counts);
            row.counts = counts;
            row.e = est.e_value;
            row.sigma = est.sigma;
        } else {
            throw config_error("analyze: rows must have 4, 6 or 8 columns (got " +
                               std::to_string(fields.size()) + ")");
        }
        rows.push_back(row);
    }
    if (rows.size() != 4) {
        throw config_error("analyze: expected exactly 4 setting rows, got " + std::to_string(rows.size()));
    }

    // canonical order [(a,b), (a',b), (a,b'), (a',b')]
    const double alpha = rows[0].alice_deg;
    const double beta = rows[0].bob_deg;
    double alpha_p = alpha, beta_p = beta;
    for (const auto& r : rows) {
        if (r.alice_deg != alpha) alpha_p = r.alice_deg;
        if (r.bob_deg != beta) beta_p = r.bob_deg;
    }
    if (alpha_p == alpha || beta_p == beta) {
        throw config_error("analyze: need two distinct settings per side");
    }
    auto find_row = [&](double a, double b) -> const detail::AnalyzeRow& {
        for (const auto& r : rows) {
            if (r.alice_deg == a && r.bob_deg == b) return r;
        }
        throw config_error("analyze: missing row for setting pair");
    };
    const std::array<const detail::AnalyzeRow*, 4> ordered{
        &find_row(alpha, beta), &find_row(alpha_p, beta), &find_row(alpha, beta_p),
        &find_row(alpha_p, beta_p)};

    std::array<CorrelationEstimate, 4> estimates{};
    for (int k = 0; k < 4; ++k) {
        estimates[k].e_value = ordered[k]->e;
        estimates[k].sigma = ordered[k]->sigma;
        if (ordered[k]->counts) estimates[k].counts = *ordered[k]->counts;
        estimates[k].counts.setting = {ordered[k]->alice_deg, ordered[k]->bob_deg};
    }
    return chsh(estimates, sign_vector);
}

// ---------------------------------------------------------------------------
// state-check
// ---------------------------------------------------------------------------

struct StateCheckRun {
    double target_phi_rad = 0.0;
    double piezo_rad = 0.0;
    double e_diag = 0.0;          // analytic E at 45/45
    double fidelity_value = 0.0;  // against psi(target)
    double acceptance = 0.0;
    bool pass = false;
    std::filesystem::path csv_path;
};

inline StateCheckRun run_state_check(ScenarioConfig cfg) {
    cfg.scenario = Scenario::StateCheck;
    cfg.resolve_defaults();
    cfg.validate();

    StateCheckRun run;
    run.target_phi_rad = cfg.phi_rad;
    const auto cal = calibrate_piezo_phase(cfg.sigma_fs);
    run.piezo_rad = piezo_for_target(cal, cfg.phi_rad);

    InterferometerSetup setup;
    setup.phi_rad = run.piezo_rad;
    setup.delay1_fs = cfg.delay1_fs;
    setup.delay2_fs = cfg.delay2_fs;
    setup.delay3_fs = cfg.delay3_fs;
    setup.mode_overlap = cfg.mode_overlap;
    setup.sigma_fs = cfg.sigma_fs;
    const auto out_state = evolve(entangling_interferometer_core(setup), entangler_source()).state;
    const auto ensemble = conditional_polarization_ensemble(out_state, "a1", "b1");
    run.acceptance = ensemble.acceptance;

    const auto target = psi_phi(cfg.phi_rad);
    for (const auto& c : ensemble.components) {
        run.fidelity_value += c.weight * fidelity(c.state, target);
    }
    run.e_diag = analytic_correlation(ensemble.components, MeasurementSetting{45.0, 45.0});
    run.pass = run.fidelity_value >= cfg.fidelity_threshold;

    auto out = detail::open_output(cfg, "state_check.csv", run.csv_path);
    for (const auto& line : config_header_lines(cfg)) out << line << '\n';
    out << "target_phi_rad,piezo_rad,e_45_45,fidelity,acceptance,pass\n";
    out << detail::fmt(run.target_phi_rad) << ',' << detail::fmt(run.piezo_rad) << ','
        << detail::fmt(run.e_diag) << ',' << detail::fmt(run.fidelity_value) << ','
        << detail::fmt(run.acceptance) << ',' << (run.pass ? "1" : "0") << '\n';
    out.close();
    return run;
}

}  // namespace fewphoton
