#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "fewphoton/bell.hpp"
#include "fewphoton/circuit.hpp"
#include "fewphoton/detection.hpp"

using namespace fewphoton;
using Catch::Approx;

namespace {

ModeLabel mode(const std::string& path, Polarization pol, int temporal = 0) {
    return ModeLabel{path, pol, temporal};
}

// Lossless circuits over three paths, drawn from BS / PBS / HWP / phase.
Circuit random_lossless_circuit(std::mt19937& rng, int max_elements) {
    Circuit c;
    c.paths = {"p0", "p1", "p2"};
    std::uniform_int_distribution<int> kind(0, 3);
    std::uniform_int_distribution<int> path_pick(0, 2);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<int> count(1, max_elements);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
        const int a = path_pick(rng);
        int b = path_pick(rng);
        while (b == a) b = path_pick(rng);
        switch (kind(rng)) {
            case 0: c.elements.push_back(BeamSplitter{c.paths[a], c.paths[b], unif(rng)}); break;
            case 1: c.elements.push_back(PolarizingBS{c.paths[a], c.paths[b]}); break;
            case 2: c.elements.push_back(HalfWavePlate{c.paths[a], 180.0 * unif(rng)}); break;
            default: c.elements.push_back(PhaseShift{c.paths[a], 2.0 * kPi * unif(rng)}); break;
        }
    }
    return c;
}

double coincidence_probability(const FockState& state, const std::string& pa, const std::string& pb) {
    double p = 0.0;
    for (const auto& [occ, amp] : state.terms()) {
        int on_a = 0, on_b = 0;
        for (const auto& [m, k] : occ) {
            if (m.path == pa) on_a += k;
            if (m.path == pb) on_b += k;
        }
        if (on_a == 1 && on_b == 1) p += std::norm(amp);
    }
    return p;
}

}  // namespace

TEST_CASE("evolve basics") {
    SECTION("empty circuit is the identity with survival 1") {
        Circuit c;
        c.paths = {"a", "b"};
        const auto in = make_source_state(SourcePreset::PhiPlusSign, "a", "b");
        const auto out = evolve(c, in);
        REQUIRE(out.survival_probability == 1.0);
        REQUIRE(fidelity(out.state, in) == Approx(1.0).epsilon(1e-14));
    }
    SECTION("single-element circuit matches the direct element call") {
        Circuit c;
        c.paths = {"a", "b"};
        c.elements = {BeamSplitter{"a", "b", 0.37}};
        const auto in = FockState::basis({{mode("a", Polarization::H), 1}});
        const auto via_circuit = evolve(c, in).state;
        const auto direct = apply_beamsplitter(in, "a", "b", 0.37);
        REQUIRE(fidelity(via_circuit, direct) == Approx(1.0).epsilon(1e-14));
    }
    SECTION("input on an undeclared path is rejected") {
        Circuit c;
        c.paths = {"a"};
        REQUIRE_THROWS_AS(evolve(c, make_source_state(SourcePreset::VVInput, "a", "b")),
                          std::invalid_argument);
    }
    SECTION("element on an undeclared path is rejected") {
        Circuit c;
        c.paths = {"a", "b"};
        c.elements = {HalfWavePlate{"zz", 10.0}};
        REQUIRE_THROWS_AS(evolve(c, FockState::vacuum()), std::invalid_argument);
    }
    SECTION("an unnormalized input breaks the norm contract") {
        Circuit c;
        c.paths = {"a"};
        c.elements = {HalfWavePlate{"a", 10.0}};
        const auto bad = FockState::basis({{mode("a", Polarization::H), 1}}, Amplitude(0.5, 0.0));
        REQUIRE_THROWS_AS(evolve(c, bad), numeric_contract_error);
    }
    SECTION("polarizer losses accumulate in survival_probability") {
        Circuit c;
        c.paths = {"a", "b"};
        c.elements = {Polarizer{"a", Polarization::V}, Polarizer{"b", Polarization::V}};
        const auto out = evolve(c, make_source_state(SourcePreset::PhiPlusSign, "a", "b"));
        REQUIRE(out.survival_probability == Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("the interferometer reproduces the four-term mode expansion") {
    // Input section of the entangling interferometer, stopped before the
    // recombining PBS pair: 1/2 (a1 a2 + i e^{i phi} a1 b2 + i a2 b1
    // - e^{i phi} b1 b2), photon 1 horizontal, photon 2 vertical.
    const double phi = 0.7;
    Circuit c;
    c.paths = {"a1", "a2", "b1", "b2"};
    c.elements = {
        HalfWavePlate{"a1", 45.0},
        BeamSplitter{"a1", "b1", 0.5},
        BeamSplitter{"a2", "b2", 0.5},
        PhaseShift{"b2", phi},
    };
    const auto out = evolve(c, entangler_source()).state;
    REQUIRE(out.term_count() == 4);

    const Amplitude eiphi = std::polar(1.0, phi);
    const Amplitude i1(0.0, 1.0);
    const auto h = [](const std::string& p) { return mode(p, Polarization::H); };
    const auto v = [](const std::string& p) { return mode(p, Polarization::V); };

    REQUIRE(std::abs(out.amplitude({{h("a1"), 1}, {v("a2"), 1}}) - Amplitude(0.5, 0.0)) < 1e-12);
    REQUIRE(std::abs(out.amplitude({{h("a1"), 1}, {v("b2"), 1}}) - 0.5 * i1 * eiphi) < 1e-12);
    REQUIRE(std::abs(out.amplitude({{v("a2"), 1}, {h("b1"), 1}}) - 0.5 * i1) < 1e-12);
    REQUIRE(std::abs(out.amplitude({{h("b1"), 1}, {v("b2"), 1}}) + 0.5 * eiphi) < 1e-12);
}

TEST_CASE("transfer matrix blocks") {
    SECTION("50/50 beamsplitter block is [[1, i], [i, 1]] / sqrt(2)") {
        Circuit c;
        c.paths = {"a", "b"};
        c.elements = {BeamSplitter{"a", "b", 0.5}};
        const auto t = transfer_matrix(c);
        const double isq2 = 1.0 / std::sqrt(2.0);
        for (Polarization pol : {Polarization::H, Polarization::V}) {
            const auto ia = t.index("a", pol);
            const auto ib = t.index("b", pol);
            REQUIRE(std::abs(t.at(ia, ia) - Amplitude(isq2, 0.0)) < 1e-12);
            REQUIRE(std::abs(t.at(ib, ia) - Amplitude(0.0, isq2)) < 1e-12);
            REQUIRE(std::abs(t.at(ia, ib) - Amplitude(0.0, isq2)) < 1e-12);
            REQUIRE(std::abs(t.at(ib, ib) - Amplitude(isq2, 0.0)) < 1e-12);
        }
    }
    SECTION("HWP(22.5) block is [[c, s], [s, -c]] with c = s = 1/sqrt(2)") {
        Circuit c;
        c.paths = {"a"};
        c.elements = {HalfWavePlate{"a", 22.5}};
        const auto t = transfer_matrix(c);
        const double isq2 = 1.0 / std::sqrt(2.0);
        REQUIRE(t.at(0, 0).real() == Approx(isq2));
        REQUIRE(t.at(1, 0).real() == Approx(isq2));
        REQUIRE(t.at(0, 1).real() == Approx(isq2));
        REQUIRE(t.at(1, 1).real() == Approx(-isq2));
    }
    SECTION("two cascaded 50/50 beamsplitters match evolve on a single photon") {
        Circuit c;
        c.paths = {"a", "b"};
        c.elements = {BeamSplitter{"a", "b", 0.5}, BeamSplitter{"a", "b", 0.5}};
        const auto t = transfer_matrix(c);
        const auto in = FockState::basis({{mode("a", Polarization::H), 1}});
        const auto out = evolve(c, in).state;
        std::vector<Amplitude> v(t.dim, Amplitude(0.0, 0.0));
        v[t.index("a", Polarization::H)] = 1.0;
        const auto w = t.apply(v);
        for (const auto& path : c.paths) {
            for (Polarization pol : {Polarization::H, Polarization::V}) {
                const auto amp = out.amplitude({{mode(path, pol), 1}});
                REQUIRE(std::abs(amp - w[t.index(path, pol)]) < 1e-12);
            }
        }
    }
    SECTION("polarizers and temporally nontrivial delays are rejected") {
        Circuit c;
        c.paths = {"a", "b"};
        c.elements = {Polarizer{"a", Polarization::H}};
        REQUIRE_THROWS_AS(transfer_matrix(c), std::invalid_argument);
        c.elements = {Delay{"a", 250.0}};
        REQUIRE_THROWS_AS(transfer_matrix(c), std::invalid_argument);
        c.elements = {Delay{"a", 0.0}};  // temporally trivial: fine
        REQUIRE_NOTHROW(transfer_matrix(c));
    }
}

TEST_CASE("single-photon evolve equals transfer-matrix action on random circuits") {
    std::mt19937 rng(20240917);
    for (int trial = 0; trial < 20; ++trial) {
        const auto c = random_lossless_circuit(rng, 12);
        const auto t = transfer_matrix(c);
        for (const auto& path : c.paths) {
            for (Polarization pol : {Polarization::H, Polarization::V}) {
                const auto in = FockState::basis({{mode(path, pol), 1}});
                const auto out = evolve(c, in).state;
                std::vector<Amplitude> v(t.dim, Amplitude(0.0, 0.0));
                v[t.index(path, pol)] = 1.0;
                const auto w = t.apply(v);
                for (const auto& p2 : c.paths) {
                    for (Polarization pol2 : {Polarization::H, Polarization::V}) {
                        const auto amp = out.amplitude({{mode(p2, pol2), 1}});
                        REQUIRE(std::abs(amp - w[t.index(p2, pol2)]) < 1e-12);
                    }
                }
            }
        }
    }
}

TEST_CASE("entangling interferometer output") {
    SECTION("post-selected state is psi(-phi) up to global phase") {
        for (double phi : {0.0, 0.4, kPi / 2, 2.2, kPi, 5.0}) {
            InterferometerSetup setup;
            setup.phi_rad = phi;
            const auto out = evolve(entangling_interferometer_core(setup), entangler_source()).state;
            const auto cond = conditional_polarization_state(out, "a1", "b1");
            REQUIRE(fidelity(cond, psi_phi(-phi)) == Approx(1.0).epsilon(1e-12));
        }
    }
    SECTION("both photons exit to the same side with probability 1/2") {
        const auto out = evolve(entangling_interferometer_core({}), entangler_source()).state;
        const double cross = coincidence_probability(out, "a1", "b1");
        REQUIRE(cross == Approx(0.5).epsilon(1e-12));
    }
    SECTION("reduced one-side polarization marginals are uniform for all phi") {
        for (double phi : {0.0, 1.0, 2.5}) {
            InterferometerSetup setup;
            setup.phi_rad = phi;
            const auto out = evolve(entangling_interferometer_core(setup), entangler_source()).state;
            const auto cond = conditional_polarization_state(out, "a1", "b1");
            const double p_alice_h = std::norm(cond.amp[0]) + std::norm(cond.amp[1]);
            const double p_bob_h = std::norm(cond.amp[0]) + std::norm(cond.amp[2]);
            REQUIRE(p_alice_h == Approx(0.5).margin(1e-10));
            REQUIRE(p_bob_h == Approx(0.5).margin(1e-10));
        }
    }
    SECTION("an input-timing mismatch far beyond the coherence width removes the phase term") {
        InterferometerSetup setup;
        setup.phi_rad = 1.1;
        setup.delay2_fs = 1e6;
        const auto out = evolve(entangling_interferometer_core(setup), entangler_source()).state;
        const auto ensemble = conditional_polarization_ensemble(out, "a1", "b1");
        // every sector is |HV> or |VH>: no coherence between the branches
        for (const auto& c : ensemble.components) {
            const double cross = std::abs(c.state.amp[1]) * std::abs(c.state.amp[2]);
            REQUIRE(cross < 1e-12);
        }
        const MeasurementSetting diag{45.0, 45.0};
        TwoQubitEnsemble e = ensemble.components;
        REQUIRE(std::abs(analytic_correlation(e, diag)) < 1e-10);
    }
    SECTION("coincidence probabilities are invariant under a global input phase") {
        InterferometerSetup setup;
        setup.phi_rad = 0.9;
        const auto circuit = entangling_interferometer(setup);
        const auto base = evolve(circuit, entangler_source()).state;
        auto rotated_src = apply_phase(apply_phase(entangler_source(), "a1", 0.77), "a2", 0.77);
        const auto rotated = evolve(circuit, rotated_src).state;
        const auto d1 = outcome_distribution(base, entangler_detector_map(), {1.0, false});
        const auto d2 = outcome_distribution(rotated, entangler_detector_map(), {1.0, false});
        REQUIRE(d1.size() == d2.size());
        for (const auto& [pat, p] : d1) {
            REQUIRE(d2.at(pat) == Approx(p).margin(1e-12));
        }
    }
}

TEST_CASE("alignment-dip bench") {
    SECTION("zero delay: coincidences vanish identically") {
        const auto out = evolve(hom_test_circuit(0.0), hom_source()).state;
        REQUIRE(coincidence_probability(out, "p", "q") == 0.0);
    }
    SECTION("large delay: distinguishable photons give 1/2") {
        const auto out = evolve(hom_test_circuit(1e9), hom_source()).state;
        REQUIRE(coincidence_probability(out, "p", "q") == Approx(0.5).epsilon(1e-12));
    }
    SECTION("dip profile matches 0.5 (1 - exp(-tau^2 / (2 sigma^2)))") {
        const double sigma = 100.0;
        for (double tau : {-350.0, -150.0, -50.0, 30.0, 100.0, 240.0, 480.0}) {
            const auto out = evolve(hom_test_circuit(tau, 1.0, sigma), hom_source()).state;
            const double expected = 0.5 * (1.0 - std::exp(-tau * tau / (2.0 * sigma * sigma)));
            REQUIRE(coincidence_probability(out, "p", "q") == Approx(expected).margin(1e-12));
        }
    }
    SECTION("mode-overlap multiplier floors the dip at (1 - m^2)/2") {
        const double m = 0.961;
        const auto out = evolve(hom_test_circuit(0.0, m), hom_source()).state;
        REQUIRE(coincidence_probability(out, "p", "q") == Approx((1.0 - m * m) / 2.0).epsilon(1e-12));
    }
}
