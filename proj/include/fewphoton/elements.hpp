// elements.hpp
// Actions of individual linear-optical elements on Fock states.
//
// Conventions (fixed project-wide):
//   beamsplitter   a -> sqrt(t) a + i sqrt(r) b,  b -> i sqrt(r) a + sqrt(t) b
//   polarizing BS  H transmits, V reflects with factor i
//   half-wave plate at theta: H -> cos2t H + sin2t V, V -> sin2t H - cos2t V
//   phase shifter  every creation operator on the path gains e^{i phi}
// All elements act identically on every temporal component and preserve
// photon number; only the polarizer removes probability mass.

#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "fewphoton/fock_state.hpp"
#include "fewphoton/modes.hpp"

namespace fewphoton {

enum class SourcePreset {
    PhiPlusSign,  // (|HH> + |VV>)/sqrt(2), amplitudes as printed
    VVInput,      // |VV>
};

inline FockState make_source_state(SourcePreset preset, const std::string& path1,
                                   const std::string& path2) {
    if (path1 == path2) {
        throw std::invalid_argument("make_source_state: source paths must be distinct");
    }
    const ModeLabel h1{path1, Polarization::H, 0};
    const ModeLabel v1{path1, Polarization::V, 0};
    const ModeLabel h2{path2, Polarization::H, 0};
    const ModeLabel v2{path2, Polarization::V, 0};

    Occupation hh;
    occupation_add(hh, h1);
    occupation_add(hh, h2);
    Occupation vv;
    occupation_add(vv, v1);
    occupation_add(vv, v2);

    FockState s;
    switch (preset) {
        case SourcePreset::VVInput:
            s.set_amplitude(vv, Amplitude(1.0, 0.0));
            break;
        case SourcePreset::PhiPlusSign: {
            const double isq2 = 1.0 / std::sqrt(2.0);
            s.set_amplitude(hh, Amplitude(isq2, 0.0));
            s.set_amplitude(vv, Amplitude(isq2, 0.0));
            break;
        }
    }
    return s;
}

inline FockState apply_beamsplitter(const FockState& state, const std::string& path_a,
                                    const std::string& path_b, double reflectivity) {
    if (!(reflectivity >= 0.0 && reflectivity <= 1.0)) {
        throw std::invalid_argument("apply_beamsplitter: reflectivity must lie in [0, 1]");
    }
    const double t = std::sqrt(1.0 - reflectivity);
    const double r = std::sqrt(reflectivity);
    const Amplitude ir(0.0, r);
    return state.apply_mode_map([&](const ModeLabel& m) -> std::vector<std::pair<ModeLabel, Amplitude>> {
        if (m.path == path_a) {
            return {{m, Amplitude(t, 0.0)}, {ModeLabel{path_b, m.pol, m.temporal}, ir}};
        }
        if (m.path == path_b) {
            return {{ModeLabel{path_a, m.pol, m.temporal}, ir}, {m, Amplitude(t, 0.0)}};
        }
        return {};
    });
}

inline FockState apply_pbs(const FockState& state, const std::string& path_a,
                           const std::string& path_b) {
    const Amplitude i1(0.0, 1.0);
    return state.apply_mode_map([&](const ModeLabel& m) -> std::vector<std::pair<ModeLabel, Amplitude>> {
        if (m.pol == Polarization::H) return {};  // H transmits in place
        if (m.path == path_a) return {{ModeLabel{path_b, m.pol, m.temporal}, i1}};
        if (m.path == path_b) return {{ModeLabel{path_a, m.pol, m.temporal}, i1}};
        return {};
    });
}

inline FockState apply_hwp(const FockState& state, const std::string& path, double angle_deg) {
    const double c = std::cos(deg_to_rad(2.0 * angle_deg));
    const double s = std::sin(deg_to_rad(2.0 * angle_deg));
    return state.apply_mode_map([&](const ModeLabel& m) -> std::vector<std::pair<ModeLabel, Amplitude>> {
        if (m.path != path) return {};
        const ModeLabel h{path, Polarization::H, m.temporal};
        const ModeLabel v{path, Polarization::V, m.temporal};
        if (m.pol == Polarization::H) {
            return {{h, Amplitude(c, 0.0)}, {v, Amplitude(s, 0.0)}};
        }
        return {{h, Amplitude(s, 0.0)}, {v, Amplitude(-c, 0.0)}};
    });
}

inline FockState apply_phase(const FockState& state, const std::string& path, double phi_rad) {
    const Amplitude factor = std::polar(1.0, phi_rad);
    return state.apply_mode_map([&](const ModeLabel& m) -> std::vector<std::pair<ModeLabel, Amplitude>> {
        if (m.path != path) return {};
        return {{m, factor}};
    });
}

struct PolarizerResult {
    FockState state;
    double success_probability = 0.0;
};

// Removes every term holding a blocked-polarization photon on the path and
// renormalizes the remainder. The removed mass accumulates in the state's
// norm deficit.
inline PolarizerResult apply_polarizer(const FockState& state, const std::string& path,
                                       Polarization pass_axis) {
    FockState out;
    out.set_prune_threshold(state.prune_threshold());
    out.set_next_temporal_index(state.next_temporal_index());

    double surviving = 0.0;
    const double total = state.norm_squared();
    for (const auto& [occ, amp] : state.terms()) {
        bool blocked = false;
        for (const auto& [mode, k] : occ) {
            if (mode.path == path && mode.pol != pass_axis) {
                blocked = true;
                break;
            }
        }
        if (!blocked) {
            out.set_amplitude(occ, amp);
            surviving += std::norm(amp);
        }
    }
    if (total <= 0.0) throw std::domain_error("apply_polarizer: empty input state");
    const double success = surviving / total;
    if (surviving <= 0.0) {
        throw std::domain_error("apply_polarizer: no amplitude survives (post-selection of measure zero)");
    }
    out.normalize();
    out.set_removed_mass(state.removed_mass() + (1.0 - state.removed_mass()) * (1.0 - success));
    return {std::move(out), success};
}

// Recenters the wavepacket of every photon on the path by delay_fs. In the
// orthonormal temporal register this splits reference component 0 into
// g * (component 0) + sqrt(1 - g^2) * (fresh orthogonal component), with
// g = mode_overlap * temporal_overlap(reference, delayed reference).
// Components >= 1 were already orthogonal to the reference and pass through.
inline FockState set_delay(const FockState& state, const std::string& path,
                           const TemporalWavepacket& reference, double delay_fs,
                           double mode_overlap = 1.0) {
    if (!(mode_overlap >= 0.0 && mode_overlap <= 1.0)) {
        throw std::invalid_argument("set_delay: mode_overlap must lie in [0, 1]");
    }
    const double g = mode_overlap * temporal_overlap(reference, shifted(reference, delay_fs));
    if (g >= 1.0) return state;

    FockState working = state;
    const int fresh = working.allocate_temporal_index();
    const double kappa = std::sqrt(std::max(0.0, 1.0 - g * g));
    return working.apply_mode_map([&](const ModeLabel& m) -> std::vector<std::pair<ModeLabel, Amplitude>> {
        if (m.path != path || m.temporal != 0) return {};
        return {{m, Amplitude(g, 0.0)}, {ModeLabel{path, m.pol, fresh}, Amplitude(kappa, 0.0)}};
    });
}

}  // namespace fewphoton
