#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "fewphoton/elements.hpp"
#include "fewphoton/fock_state.hpp"
#include "fewphoton/modes.hpp"

using namespace fewphoton;
using Catch::Approx;

namespace {

// Independent oracle: normalized amplitude-overlap of two Gaussian packets
// by composite Simpson quadrature.
double overlap_by_quadrature(const TemporalWavepacket& a, const TemporalWavepacket& b) {
    const double lo = std::min(a.center_fs, b.center_fs) - 10.0 * std::max(a.sigma_fs, b.sigma_fs);
    const double hi = std::max(a.center_fs, b.center_fs) + 10.0 * std::max(a.sigma_fs, b.sigma_fs);
    const int n = 4000;  // even
    const double h = (hi - lo) / n;
    auto amp = [](const TemporalWavepacket& w, double t) {
        const double d = t - w.center_fs;
        return std::exp(-d * d / (2.0 * w.sigma_fs * w.sigma_fs));
    };
    double cross = 0.0, na = 0.0, nb = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = lo + i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        cross += w * amp(a, t) * amp(b, t);
        na += w * amp(a, t) * amp(a, t);
        nb += w * amp(b, t) * amp(b, t);
    }
    return cross / std::sqrt(na * nb);
}

ModeLabel mode(const std::string& path, Polarization pol, int temporal = 0) {
    return ModeLabel{path, pol, temporal};
}

FockState single_photon(const std::string& path, Polarization pol) {
    return FockState::basis({{mode(path, pol), 1}});
}

}  // namespace

TEST_CASE("temporal overlap: closed form against quadrature oracle") {
    const TemporalWavepacket ref{0.0, 100.0};

    SECTION("identical packets overlap exactly 1") {
        REQUIRE(temporal_overlap(ref, ref) == 1.0);
    }
    SECTION("equal widths, delay tau: exp(-tau^2 / (4 sigma^2))") {
        for (double tau : {25.0, 100.0, 200.0, 350.0}) {
            const double expected = std::exp(-tau * tau / (4.0 * 100.0 * 100.0));
            const double got = temporal_overlap(ref, shifted(ref, tau));
            REQUIRE(got == Approx(expected).epsilon(1e-12));
            REQUIRE(got == Approx(overlap_by_quadrature(ref, shifted(ref, tau))).epsilon(1e-9));
        }
        // frozen classic point: tau = 2 sigma gives exp(-1)
        REQUIRE(temporal_overlap(ref, shifted(ref, 200.0)) == Approx(0.36787944117144233).epsilon(1e-12));
    }
    SECTION("unequal widths against quadrature") {
        const TemporalWavepacket narrow{0.0, 80.0};
        const TemporalWavepacket wide{50.0, 120.0};
        REQUIRE(temporal_overlap(narrow, wide) ==
                Approx(overlap_by_quadrature(narrow, wide)).epsilon(1e-9));
        REQUIRE(temporal_overlap(narrow, wide) == Approx(temporal_overlap(wide, narrow)));
    }
    SECTION("large delay kills the overlap") {
        REQUIRE(temporal_overlap(ref, shifted(ref, 1e7)) == Approx(0.0).margin(1e-300));
    }
    SECTION("invalid widths rejected") {
        REQUIRE_THROWS_AS(temporal_overlap({0.0, 0.0}, ref), std::invalid_argument);
    }
}

TEST_CASE("source presets") {
    SECTION("VVInput is a single |VV> term") {
        const auto s = make_source_state(SourcePreset::VVInput, "a1", "a2");
        REQUIRE(s.term_count() == 1);
        const Occupation vv{{mode("a1", Polarization::V), 1}, {mode("a2", Polarization::V), 1}};
        REQUIRE(s.amplitude(vv) == Amplitude(1.0, 0.0));
        REQUIRE(s.total_photons() == 2);
    }
    SECTION("PhiPlusSign puts 1/sqrt(2) on HH and VV") {
        const auto s = make_source_state(SourcePreset::PhiPlusSign, "a1", "a2");
        REQUIRE(s.term_count() == 2);
        const Occupation hh{{mode("a1", Polarization::H), 1}, {mode("a2", Polarization::H), 1}};
        const Occupation vv{{mode("a1", Polarization::V), 1}, {mode("a2", Polarization::V), 1}};
        REQUIRE(s.amplitude(hh).real() == Approx(0.7071067811865476));
        REQUIRE(s.amplitude(vv).real() == Approx(0.7071067811865476));
        REQUIRE(s.norm_squared() == Approx(1.0).epsilon(1e-14));
    }
    SECTION("path order does not matter") {
        const auto s = make_source_state(SourcePreset::VVInput, "z", "a");
        REQUIRE(s.norm_squared() == Approx(1.0));
        REQUIRE(s.has_path("z"));
        REQUIRE(s.has_path("a"));
    }
    SECTION("identical paths rejected") {
        REQUIRE_THROWS_AS(make_source_state(SourcePreset::VVInput, "a", "a"), std::invalid_argument);
    }
    SECTION("filtering PhiPlusSign to VV succeeds with probability 1/2") {
        const auto phi = make_source_state(SourcePreset::PhiPlusSign, "a1", "a2");
        const auto first = apply_polarizer(phi, "a1", Polarization::V);
        const auto second = apply_polarizer(first.state, "a2", Polarization::V);
        REQUIRE(first.success_probability * second.success_probability == Approx(0.5).epsilon(1e-12));
        const auto vv = make_source_state(SourcePreset::VVInput, "a1", "a2");
        REQUIRE(fidelity(second.state, vv) == Approx(1.0).epsilon(1e-12));
        REQUIRE(second.state.removed_mass() == Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("beamsplitter action") {
    SECTION("single H photon at r = 1/2 splits with i on reflection") {
        const auto out = apply_beamsplitter(single_photon("a", Polarization::H), "a", "b", 0.5);
        const auto amp_a = out.amplitude({{mode("a", Polarization::H), 1}});
        const auto amp_b = out.amplitude({{mode("b", Polarization::H), 1}});
        REQUIRE(amp_a.real() == Approx(0.7071067811865476));
        REQUIRE(amp_a.imag() == Approx(0.0).margin(1e-15));
        REQUIRE(amp_b.real() == Approx(0.0).margin(1e-15));
        REQUIRE(amp_b.imag() == Approx(0.7071067811865476));
    }
    SECTION("vacuum is unchanged") {
        const auto out = apply_beamsplitter(FockState::vacuum(), "a", "b", 0.5);
        REQUIRE(out.amplitude(Occupation{}) == Amplitude(1.0, 0.0));
        REQUIRE(out.term_count() == 1);
    }
    SECTION("two identical photons bunch: |1,1> -> i(|2,0> + |0,2>)/sqrt(2)") {
        const auto in = make_source_state(SourcePreset::VVInput, "a", "b");
        const auto out = apply_beamsplitter(in, "a", "b", 0.5);
        const Occupation both{{mode("a", Polarization::V), 1}, {mode("b", Polarization::V), 1}};
        const Occupation two_a{{mode("a", Polarization::V), 2}};
        const Occupation two_b{{mode("b", Polarization::V), 2}};
        REQUIRE(out.amplitude(both) == Amplitude(0.0, 0.0));  // exact null: amplitudes cancel
        REQUIRE(out.amplitude(two_a).imag() == Approx(0.7071067811865476));
        REQUIRE(out.amplitude(two_b).imag() == Approx(0.7071067811865476));
        REQUIRE(out.norm_squared() == Approx(1.0).epsilon(1e-12));
    }
    SECTION("a doubly occupied mode splits with binomial weights") {
        // (a^dag)^2 / sqrt(2) -> (a^2 + 2i ab - b^2) / (2 sqrt(2))
        const auto in = FockState::basis({{mode("a", Polarization::V), 2}});
        const auto out = apply_beamsplitter(in, "a", "b", 0.5);
        const Occupation two_a{{mode("a", Polarization::V), 2}};
        const Occupation two_b{{mode("b", Polarization::V), 2}};
        const Occupation split{{mode("a", Polarization::V), 1}, {mode("b", Polarization::V), 1}};
        REQUIRE(out.amplitude(two_a).real() == Approx(0.5).epsilon(1e-12));
        REQUIRE(out.amplitude(two_b).real() == Approx(-0.5).epsilon(1e-12));
        REQUIRE(out.amplitude(split).imag() == Approx(0.7071067811865476).epsilon(1e-12));
        REQUIRE(out.norm_squared() == Approx(1.0).epsilon(1e-12));
    }
    SECTION("distinguishable photons keep half the coincidences") {
        auto in = make_source_state(SourcePreset::VVInput, "a", "b");
        in = set_delay(in, "b", {0.0, 100.0}, 1e9);  // fully orthogonal component
        const auto out = apply_beamsplitter(in, "a", "b", 0.5);
        double coincidence = 0.0;
        for (const auto& [occ, amp] : out.terms()) {
            int on_a = 0, on_b = 0;
            for (const auto& [m, k] : occ) (m.path == "a" ? on_a : on_b) += k;
            if (on_a == 1 && on_b == 1) coincidence += std::norm(amp);
        }
        REQUIRE(coincidence == Approx(0.5).epsilon(1e-12));
    }
    SECTION("reflectivity outside [0,1] rejected") {
        REQUIRE_THROWS_AS(apply_beamsplitter(FockState::vacuum(), "a", "b", 1.5), std::invalid_argument);
        REQUIRE_THROWS_AS(apply_beamsplitter(FockState::vacuum(), "a", "b", -0.1), std::invalid_argument);
    }
    SECTION("norm preserved for random reflectivities") {
        std::mt19937 rng(7);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        auto state = make_source_state(SourcePreset::PhiPlusSign, "a", "b");
        for (int i = 0; i < 20; ++i) {
            state = apply_beamsplitter(state, "a", "b", unif(rng));
            REQUIRE(state.norm_squared() == Approx(1.0).epsilon(1e-12));
            REQUIRE(state.total_photons() == 2);
        }
    }
}

TEST_CASE("polarizing beamsplitter action") {
    SECTION("H transmits in place") {
        const auto out = apply_pbs(single_photon("a", Polarization::H), "a", "b");
        REQUIRE(out.amplitude({{mode("a", Polarization::H), 1}}) == Amplitude(1.0, 0.0));
    }
    SECTION("V reflects across with factor i") {
        const auto out = apply_pbs(single_photon("a", Polarization::V), "a", "b");
        REQUIRE(out.amplitude({{mode("b", Polarization::V), 1}}) == Amplitude(0.0, 1.0));
    }
    SECTION("two V photons swap deterministically, no bunching") {
        const auto in = make_source_state(SourcePreset::VVInput, "a", "b");
        const auto out = apply_pbs(in, "a", "b");
        const Occupation swapped{{mode("a", Polarization::V), 1}, {mode("b", Polarization::V), 1}};
        REQUIRE(out.term_count() == 1);
        REQUIRE(out.amplitude(swapped).real() == Approx(-1.0));  // i^2 from the double reflection
        REQUIRE(out.norm_squared() == Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("half-wave plate action") {
    SECTION("theta = 0: H -> H, V -> -V") {
        const auto h = apply_hwp(single_photon("a", Polarization::H), "a", 0.0);
        REQUIRE(h.amplitude({{mode("a", Polarization::H), 1}}) == Amplitude(1.0, 0.0));
        const auto v = apply_hwp(single_photon("a", Polarization::V), "a", 0.0);
        REQUIRE(v.amplitude({{mode("a", Polarization::V), 1}}).real() == Approx(-1.0));
    }
    SECTION("theta = 22.5: H -> (H + V)/sqrt(2)") {
        const auto out = apply_hwp(single_photon("a", Polarization::H), "a", 22.5);
        REQUIRE(out.amplitude({{mode("a", Polarization::H), 1}}).real() == Approx(0.7071067811865476));
        REQUIRE(out.amplitude({{mode("a", Polarization::V), 1}}).real() == Approx(0.7071067811865476));
    }
    SECTION("theta = 45: V photon becomes H photon") {
        const auto out = apply_hwp(single_photon("a", Polarization::V), "a", 45.0);
        REQUIRE(std::abs(out.amplitude({{mode("a", Polarization::H), 1}})) == Approx(1.0));
        REQUIRE(std::abs(out.amplitude({{mode("a", Polarization::V), 1}})) < 1e-12);
    }
    SECTION("applying the same plate twice is the identity") {
        std::mt19937 rng(11);
        std::uniform_real_distribution<double> angle(0.0, 180.0);
        for (int i = 0; i < 10; ++i) {
            const double theta = angle(rng);
            auto state = make_source_state(SourcePreset::PhiPlusSign, "a", "b");
            state = apply_hwp(state, "a", 30.0);  // something non-trivial first
            const auto twice = apply_hwp(apply_hwp(state, "a", theta), "a", theta);
            REQUIRE(fidelity(twice, state) == Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("phase shifter action") {
    SECTION("phi = 0 is the identity") {
        const auto s = single_photon("a", Polarization::V);
        const auto out = apply_phase(s, "a", 0.0);
        REQUIRE(fidelity(out, s) == Approx(1.0).epsilon(1e-15));
    }
    SECTION("phi = pi flips the sign of a one-photon amplitude") {
        const auto out = apply_phase(single_photon("a", Polarization::V), "a", kPi);
        const auto amp = out.amplitude({{mode("a", Polarization::V), 1}});
        REQUIRE(amp.real() == Approx(-1.0).epsilon(1e-15));
        REQUIRE(amp.imag() == Approx(0.0).margin(1e-15));
    }
    SECTION("phase applies once per photon") {
        const auto in = FockState::basis({{mode("a", Polarization::V), 2}});
        const auto out = apply_phase(in, "a", kPi / 2.0);
        const auto amp = out.amplitude({{mode("a", Polarization::V), 2}});
        REQUIRE(amp.real() == Approx(-1.0).epsilon(1e-12));  // (e^{i pi/2})^2
        REQUIRE(out.norm_squared() == Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("polarizer action") {
    SECTION("pass axis matching the photon is lossless") {
        const auto r = apply_polarizer(single_photon("a", Polarization::V), "a", Polarization::V);
        REQUIRE(r.success_probability == Approx(1.0));
        REQUIRE(r.state.removed_mass() == Approx(0.0));
    }
    SECTION("orthogonal photon leaves nothing") {
        REQUIRE_THROWS_AS(apply_polarizer(single_photon("a", Polarization::V), "a", Polarization::H),
                          std::domain_error);
    }
    SECTION("success probability equals removed-mass complement") {
        const auto phi = make_source_state(SourcePreset::PhiPlusSign, "a", "b");
        const auto r = apply_polarizer(phi, "a", Polarization::V);
        REQUIRE(r.success_probability == Approx(0.5).epsilon(1e-12));
        REQUIRE(r.state.norm_squared() == Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("delay lines and distinguishability") {
    const TemporalWavepacket ref{0.0, 100.0};

    SECTION("zero delay is the identity") {
        const auto in = make_source_state(SourcePreset::VVInput, "a", "b");
        const auto out = set_delay(in, "b", ref, 0.0);
        REQUIRE(fidelity(out, in) == 1.0);
        REQUIRE(out.next_temporal_index() == in.next_temporal_index());
    }
    SECTION("huge delay moves the photon fully into an orthogonal component") {
        const auto in = single_photon("a", Polarization::V);
        const auto out = set_delay(in, "a", ref, 1e9);
        REQUIRE(std::abs(out.amplitude({{mode("a", Polarization::V, 0), 1}})) < 1e-12);
        REQUIRE(std::abs(out.amplitude({{mode("a", Polarization::V, 1), 1}})) == Approx(1.0));
    }
    SECTION("overlap split matches gamma = exp(-tau^2/(4 sigma^2))") {
        const double tau = 140.0;
        const double gamma = std::exp(-tau * tau / (4.0 * 100.0 * 100.0));
        const auto out = set_delay(single_photon("a", Polarization::V), "a", ref, tau);
        REQUIRE(out.amplitude({{mode("a", Polarization::V, 0), 1}}).real() == Approx(gamma).epsilon(1e-12));
        REQUIRE(out.amplitude({{mode("a", Polarization::V, 1), 1}}).real() ==
                Approx(std::sqrt(1.0 - gamma * gamma)).epsilon(1e-12));
        REQUIRE(out.norm_squared() == Approx(1.0).epsilon(1e-12));
    }
    SECTION("mode-overlap multiplier degrades even a zero delay") {
        const auto out = set_delay(single_photon("a", Polarization::V), "a", ref, 0.0, 0.961);
        REQUIRE(out.amplitude({{mode("a", Polarization::V, 0), 1}}).real() == Approx(0.961));
    }
    SECTION("delays consume fresh orthogonal components") {
        auto s = make_source_state(SourcePreset::VVInput, "a", "b");
        s = set_delay(s, "a", ref, 150.0);
        s = set_delay(s, "b", ref, 150.0);
        REQUIRE(s.next_temporal_index() == 3);
        REQUIRE(s.norm_squared() == Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("fidelity basics") {
    const auto s = make_source_state(SourcePreset::PhiPlusSign, "a", "b");
    REQUIRE(fidelity(s, s) == Approx(1.0).epsilon(1e-14));
    const auto vv = make_source_state(SourcePreset::VVInput, "a", "b");
    const auto hh_only = apply_polarizer(s, "a", Polarization::H).state;
    REQUIRE(fidelity(hh_only, vv) == Approx(0.0).margin(1e-14));
}
