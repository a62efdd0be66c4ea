// circuit.hpp
// Interferometers as ordered element lists, plus compilation to a
// single-photon mode transfer matrix and the two circuit presets used
// throughout: the two-photon entangling interferometer and a two-detector
// alignment-dip bench.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fewphoton/elements.hpp"
#include "fewphoton/fock_state.hpp"
#include "fewphoton/modes.hpp"

namespace fewphoton {

struct BeamSplitter {
    std::string path_a, path_b;
    double reflectivity = 0.5;
};
struct PolarizingBS {
    std::string path_a, path_b;
};
struct HalfWavePlate {
    std::string path;
    double angle_deg = 0.0;
};
struct PhaseShift {
    std::string path;
    double phi_rad = 0.0;
};
struct Polarizer {
    std::string path;
    Polarization pass_axis = Polarization::H;
};
struct Delay {
    std::string path;
    double delay_fs = 0.0;
};

using Element = std::variant<BeamSplitter, PolarizingBS, HalfWavePlate, PhaseShift, Polarizer, Delay>;

inline std::vector<std::string> element_paths(const Element& e) {
    return std::visit(
        [](const auto& el) -> std::vector<std::string> {
            using T = std::decay_t<decltype(el)>;
            if constexpr (std::is_same_v<T, BeamSplitter> || std::is_same_v<T, PolarizingBS>) {
                return {el.path_a, el.path_b};
            } else {
                return {el.path};
            }
        },
        e);
}

struct Circuit {
    std::vector<std::string> paths;
    std::vector<Element> elements;
    TemporalWavepacket wavepacket_reference{0.0, 100.0};
    // Spatial mode-matching multiplier applied to every delay line's
    // temporal overlap; 1.0 is perfect alignment.
    double mode_overlap = 1.0;

    bool has_path(const std::string& p) const {
        return std::find(paths.begin(), paths.end(), p) != paths.end();
    }

    void validate() const {
        for (const auto& e : elements) {
            for (const auto& p : element_paths(e)) {
                if (!has_path(p)) {
                    throw std::invalid_argument("Circuit: element references undeclared path '" + p + "'");
                }
            }
        }
        for (const auto& e : elements) {
            if (const auto* b = std::get_if<BeamSplitter>(&e)) {
                if (!(b->reflectivity >= 0.0 && b->reflectivity <= 1.0)) {
                    throw std::invalid_argument("Circuit: beamsplitter reflectivity outside [0, 1]");
                }
            }
        }
    }
};

struct EvolveResult {
    FockState state;
    double survival_probability = 1.0;
};

// Applies the elements in order. survival_probability collects polarizer
// post-selection losses (1.0 for lossless circuits); the returned state is
// normalized. Norm drift beyond tolerance is a numeric contract violation.
inline EvolveResult evolve(const Circuit& circuit, const FockState& input) {
    circuit.validate();
    for (const auto& p : input.populated_paths()) {
        if (!circuit.has_path(p)) {
            throw std::invalid_argument("evolve: input state populates undeclared path '" + p + "'");
        }
    }

    EvolveResult result{input, 1.0};
    for (const auto& e : circuit.elements) {
        std::visit(
            [&](const auto& el) {
                using T = std::decay_t<decltype(el)>;
                if constexpr (std::is_same_v<T, BeamSplitter>) {
                    result.state = apply_beamsplitter(result.state, el.path_a, el.path_b, el.reflectivity);
                } else if constexpr (std::is_same_v<T, PolarizingBS>) {
                    result.state = apply_pbs(result.state, el.path_a, el.path_b);
                } else if constexpr (std::is_same_v<T, HalfWavePlate>) {
                    result.state = apply_hwp(result.state, el.path, el.angle_deg);
                } else if constexpr (std::is_same_v<T, PhaseShift>) {
                    result.state = apply_phase(result.state, el.path, el.phi_rad);
                } else if constexpr (std::is_same_v<T, Polarizer>) {
                    auto pol = apply_polarizer(result.state, el.path, el.pass_axis);
                    result.state = std::move(pol.state);
                    result.survival_probability *= pol.success_probability;
                } else if constexpr (std::is_same_v<T, Delay>) {
                    result.state = set_delay(result.state, el.path, circuit.wavepacket_reference,
                                             el.delay_fs, circuit.mode_overlap);
                }
            },
            e);
    }
    const double drift = std::abs(result.state.norm_squared() - 1.0);
    if (drift > 1e-9) {
        throw numeric_contract_error("evolve: norm drifted by " + std::to_string(drift));
    }
    return result;
}

// Compiled single-photon action over the (path x polarization) basis,
// temporal-index-agnostic. Row-major; basis index = 2 * path_index + pol.
struct TransferMatrix {
    std::vector<std::string> paths;
    std::size_t dim = 0;
    std::vector<Amplitude> m;

    std::size_t index(const std::string& path, Polarization pol) const {
        auto it = std::find(paths.begin(), paths.end(), path);
        if (it == paths.end()) throw std::invalid_argument("TransferMatrix: unknown path " + path);
        return 2 * static_cast<std::size_t>(it - paths.begin()) + (pol == Polarization::V ? 1 : 0);
    }

    Amplitude at(std::size_t row, std::size_t col) const { return m[row * dim + col]; }
    Amplitude& at(std::size_t row, std::size_t col) { return m[row * dim + col]; }

    std::vector<Amplitude> apply(const std::vector<Amplitude>& v) const {
        std::vector<Amplitude> out(dim, Amplitude(0.0, 0.0));
        for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t c = 0; c < dim; ++c) out[r] += at(r, c) * v[c];
        }
        return out;
    }
};

namespace detail {

inline TransferMatrix identity_matrix(const std::vector<std::string>& paths) {
    TransferMatrix t;
    t.paths = paths;
    t.dim = 2 * paths.size();
    t.m.assign(t.dim * t.dim, Amplitude(0.0, 0.0));
    for (std::size_t i = 0; i < t.dim; ++i) t.at(i, i) = Amplitude(1.0, 0.0);
    return t;
}

inline TransferMatrix multiply(const TransferMatrix& a, const TransferMatrix& b) {
    TransferMatrix out = a;
    for (std::size_t r = 0; r < a.dim; ++r) {
        for (std::size_t c = 0; c < a.dim; ++c) {
            Amplitude acc(0.0, 0.0);
            for (std::size_t k = 0; k < a.dim; ++k) acc += a.at(r, k) * b.at(k, c);
            out.at(r, c) = acc;
        }
    }
    return out;
}

inline double unitarity_defect(const TransferMatrix& t) {
    double worst = 0.0;
    for (std::size_t i = 0; i < t.dim; ++i) {
        for (std::size_t j = 0; j < t.dim; ++j) {
            Amplitude acc(0.0, 0.0);
            for (std::size_t k = 0; k < t.dim; ++k) acc += std::conj(t.at(k, i)) * t.at(k, j);
            const double expect = (i == j) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(acc - Amplitude(expect, 0.0)));
        }
    }
    return worst;
}

}  // namespace detail

// Product of per-element mode matrices. Polarizers are rejected; delay
// lines are accepted only when temporally trivial, since a matrix over
// (path x polarization) cannot express a temporal split.
inline TransferMatrix transfer_matrix(const Circuit& circuit) {
    circuit.validate();
    TransferMatrix total = detail::identity_matrix(circuit.paths);

    for (const auto& e : circuit.elements) {
        TransferMatrix em = detail::identity_matrix(circuit.paths);
        std::visit(
            [&](const auto& el) {
                using T = std::decay_t<decltype(el)>;
                if constexpr (std::is_same_v<T, BeamSplitter>) {
                    const double t = std::sqrt(1.0 - el.reflectivity);
                    const Amplitude ir(0.0, std::sqrt(el.reflectivity));
                    for (Polarization pol : {Polarization::H, Polarization::V}) {
                        const auto ia = em.index(el.path_a, pol);
                        const auto ib = em.index(el.path_b, pol);
                        em.at(ia, ia) = Amplitude(t, 0.0);
                        em.at(ib, ia) = ir;
                        em.at(ia, ib) = ir;
                        em.at(ib, ib) = Amplitude(t, 0.0);
                    }
                } else if constexpr (std::is_same_v<T, PolarizingBS>) {
                    const auto av = em.index(el.path_a, Polarization::V);
                    const auto bv = em.index(el.path_b, Polarization::V);
                    em.at(av, av) = Amplitude(0.0, 0.0);
                    em.at(bv, bv) = Amplitude(0.0, 0.0);
                    em.at(bv, av) = Amplitude(0.0, 1.0);
                    em.at(av, bv) = Amplitude(0.0, 1.0);
                } else if constexpr (std::is_same_v<T, HalfWavePlate>) {
                    const double c = std::cos(deg_to_rad(2.0 * el.angle_deg));
                    const double s = std::sin(deg_to_rad(2.0 * el.angle_deg));
                    const auto ih = em.index(el.path, Polarization::H);
                    const auto iv = em.index(el.path, Polarization::V);
                    em.at(ih, ih) = Amplitude(c, 0.0);
                    em.at(iv, ih) = Amplitude(s, 0.0);
                    em.at(ih, iv) = Amplitude(s, 0.0);
                    em.at(iv, iv) = Amplitude(-c, 0.0);
                } else if constexpr (std::is_same_v<T, PhaseShift>) {
                    const Amplitude f = std::polar(1.0, el.phi_rad);
                    em.at(em.index(el.path, Polarization::H), em.index(el.path, Polarization::H)) = f;
                    em.at(em.index(el.path, Polarization::V), em.index(el.path, Polarization::V)) = f;
                } else if constexpr (std::is_same_v<T, Polarizer>) {
                    throw std::invalid_argument("transfer_matrix: circuit contains a non-unitary polarizer");
                } else if constexpr (std::is_same_v<T, Delay>) {
                    const double g = circuit.mode_overlap *
                                     temporal_overlap(circuit.wavepacket_reference,
                                                      shifted(circuit.wavepacket_reference, el.delay_fs));
                    if (g < 1.0) {
                        throw std::invalid_argument(
                            "transfer_matrix: temporally nontrivial delay has no path x polarization matrix");
                    }
                }
            },
            e);
        total = detail::multiply(em, total);
    }

    const double defect = detail::unitarity_defect(total);
    if (defect > 1e-10) {
        throw numeric_contract_error("transfer_matrix: unitarity defect " + std::to_string(defect));
    }
    return total;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

// The entangling interferometer. Wire names:
//   a1  source photon 1 -> BS1 -> PBS3 (Alice analyzer port after PBS3)
//   b1  BS1 -> PBS4 (Bob analyzer port after PBS4)
//   a2  source photon 2 -> BS2 -> PBS3 (dark after PBS3)
//   b2  BS2 -> PBS4, carries the piezo phase (dark after PBS4)
//   am, bm  reflected analyzer ports on Alice's and Bob's side
// Detectors: D1 = a1, D2 = am (Alice), D3 = b1, D4 = bm (Bob).
struct InterferometerSetup {
    double phi_rad = 0.0;                   // piezo phase on the b2 arm
    double delay1_fs = 0.0;                 // trombone prism 1: a1 arm
    double delay2_fs = 0.0;                 // trombone prism 2: photon-2 input
    double delay3_fs = 0.0;                 // trombone prism 3: b1 arm
    double analyzer_alice_hwp_deg = 22.5;   // physical HWP angle (pol. basis = twice this)
    double analyzer_bob_hwp_deg = 22.5;
    double mode_overlap = 1.0;
    double sigma_fs = 100.0;
};

// Interferometer up to and including the recombining PBS pair; the
// cross-side component of its output is the post-selected two-qubit state.
inline Circuit entangling_interferometer_core(const InterferometerSetup& p) {
    Circuit c;
    c.paths = {"a1", "a2", "b1", "b2"};
    c.wavepacket_reference = {0.0, p.sigma_fs};
    c.mode_overlap = p.mode_overlap;
    c.elements = {
        HalfWavePlate{"a1", 45.0},           // photon 1: V -> H before BS1
        Delay{"a2", p.delay2_fs},            // prism 2: input timing of photon 2
        BeamSplitter{"a1", "b1", 0.5},       // BS1
        BeamSplitter{"a2", "b2", 0.5},       // BS2
        PhaseShift{"b2", p.phi_rad},         // piezo
        Delay{"a1", p.delay1_fs},            // prism 1
        Delay{"b1", p.delay3_fs},            // prism 3
        PolarizingBS{"a1", "a2"},            // PBS3, Alice port = a1
        PolarizingBS{"b1", "b2"},            // PBS4, Bob port = b1
    };
    return c;
}

inline Circuit entangling_interferometer(const InterferometerSetup& p) {
    Circuit c = entangling_interferometer_core(p);
    c.paths.insert(c.paths.end(), {"am", "bm"});
    c.elements.push_back(HalfWavePlate{"a1", p.analyzer_alice_hwp_deg});
    c.elements.push_back(HalfWavePlate{"b1", p.analyzer_bob_hwp_deg});
    c.elements.push_back(PolarizingBS{"a1", "am"});  // PBS5: D1 transmitted, D2 reflected
    c.elements.push_back(PolarizingBS{"b1", "bm"});  // PBS6: D3 transmitted, D4 reflected
    return c;
}

inline FockState entangler_source() { return make_source_state(SourcePreset::VVInput, "a1", "a2"); }

inline std::map<std::string, std::string> entangler_detector_map() {
    return {{"a1", "D1"}, {"am", "D2"}, {"b1", "D3"}, {"bm", "D4"}};
}

// Alignment-dip bench for one meeting point of the interferometer: the two
// V photons are merged on a PBS after one of them is converted to H, then
// analyzed in the 45 degree basis. Coincidences between the two output
// detectors vanish at zero delay and approach 1/2 for distinguishable
// photons: p(tau) = (1 - g(tau)^2) / 2.
inline Circuit hom_test_circuit(double delay_fs, double mode_overlap = 1.0, double sigma_fs = 100.0) {
    Circuit c;
    c.paths = {"p", "q"};
    c.wavepacket_reference = {0.0, sigma_fs};
    c.mode_overlap = mode_overlap;
    c.elements = {
        HalfWavePlate{"p", 45.0},   // one photon V -> H so the PBS merges them
        Delay{"q", delay_fs},
        PolarizingBS{"p", "q"},     // meeting point; both photons exit on p
        HalfWavePlate{"p", 22.5},   // analyze in the 45 degree basis
        PolarizingBS{"p", "q"},     // split onto the two detectors
    };
    return c;
}

inline FockState hom_source() { return make_source_state(SourcePreset::VVInput, "p", "q"); }

inline std::map<std::string, std::string> hom_detector_map() {
    return {{"p", "Dp"}, {"q", "Dq"}};
}

}  // namespace fewphoton
