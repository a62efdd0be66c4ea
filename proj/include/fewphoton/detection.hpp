// detection.hpp
// Bucket-detector click statistics, coincidence post-selection, conditional
// two-photon polarization states, and seeded count sampling.
//
// Detectors are Geiger-mode buckets: they do not resolve photon number,
// polarization, or temporal component. With efficiency eta each photon is
// thinned independently with probability eta before click patterns form,
// so every k-photon coincidence probability scales by eta^k while
// post-selected (renormalized) probabilities are unchanged - the model's
// version of the fair-sampling assumption.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fewphoton/fock_state.hpp"
#include "fewphoton/modes.hpp"

namespace fewphoton {

// Polarization analysis angles in degrees (the physical half-wave plate
// angle is half of these). Taken modulo 180.
struct MeasurementSetting {
    double alice_deg = 0.0;
    double bob_deg = 0.0;
};

struct DetectorModel {
    double efficiency = 0.74;
    bool number_resolving = false;  // Geiger-mode buckets only

    void validate() const {
        if (!(efficiency > 0.0 && efficiency <= 1.0)) {
            throw std::invalid_argument("DetectorModel: efficiency must lie in (0, 1]");
        }
        if (number_resolving) {
            throw std::invalid_argument("DetectorModel: number-resolving detectors are not modeled");
        }
    }
};

using ClickPattern = std::set<std::string>;
using ClickDistribution = std::map<ClickPattern, double>;

// Born-rule distribution over click patterns. Every populated path must be
// mapped to a detector; temporal components are traced out. The returned
// probabilities (including the no-click pattern when eta < 1) sum to 1.
inline ClickDistribution outcome_distribution(const FockState& state,
                                              const std::map<std::string, std::string>& detector_of_path,
                                              const DetectorModel& model = {}) {
    model.validate();
    const double norm = state.norm_squared();
    if (std::abs(norm - 1.0) > 1e-9) {
        throw numeric_contract_error("outcome_distribution: state is not normalized");
    }

    const double eta = model.efficiency;
    ClickDistribution dist;

    for (const auto& [occ, amp] : state.terms()) {
        const double p_term = std::norm(amp);

        // photons per detector for this term
        std::map<std::string, int> photons;
        for (const auto& [mode, k] : occ) {
            auto it = detector_of_path.find(mode.path);
            if (it == detector_of_path.end()) {
                throw std::invalid_argument("outcome_distribution: populated path '" + mode.path +
                                            "' is not mapped to a detector");
            }
            photons[it->second] += k;
        }

        // Independent thinning: detector with k photons clicks with
        // probability 1 - (1-eta)^k. Expand over click/no-click subsets.
        std::vector<std::pair<ClickPattern, double>> partial{{ClickPattern{}, p_term}};
        for (const auto& [det, k] : photons) {
            const double p_click = 1.0 - std::pow(1.0 - eta, k);
            std::vector<std::pair<ClickPattern, double>> next;
            next.reserve(partial.size() * 2);
            for (const auto& [pat, w] : partial) {
                if (p_click > 0.0) {
                    ClickPattern with = pat;
                    with.insert(det);
                    next.emplace_back(std::move(with), w * p_click);
                }
                if (p_click < 1.0) next.emplace_back(pat, w * (1.0 - p_click));
            }
            partial = std::move(next);
        }
        for (auto& [pat, w] : partial) dist[pat] += w;
    }

    double total = 0.0;
    for (const auto& [pat, w] : dist) total += w;
    if (std::abs(total - 1.0) > 1e-10) {
        throw numeric_contract_error("outcome_distribution: probabilities sum to " + std::to_string(total));
    }
    return dist;
}

// Detector partition for coincidence post-selection, with the +/- port
// assignment used to form correlation outcomes.
struct CoincidenceRule {
    std::string alice_plus = "D1";
    std::string alice_minus = "D2";
    std::string bob_plus = "D3";
    std::string bob_minus = "D4";

    bool is_alice(const std::string& d) const { return d == alice_plus || d == alice_minus; }
    bool is_bob(const std::string& d) const { return d == bob_plus || d == bob_minus; }
};

inline bool is_coincidence(const ClickPattern& pattern, const CoincidenceRule& rule) {
    int alice = 0, bob = 0;
    for (const auto& d : pattern) {
        if (rule.is_alice(d)) {
            ++alice;
        } else if (rule.is_bob(d)) {
            ++bob;
        } else {
            return false;
        }
    }
    return alice == 1 && bob == 1;
}

struct PostSelection {
    ClickDistribution conditional;  // renormalized over accepted patterns
    double acceptance = 0.0;
};

// Keeps patterns with exactly one click on each side.
inline PostSelection post_select(const ClickDistribution& dist, const CoincidenceRule& rule = {}) {
    PostSelection out;
    for (const auto& [pat, w] : dist) {
        if (is_coincidence(pat, rule)) {
            out.conditional[pat] = w;
            out.acceptance += w;
        }
    }
    if (out.acceptance <= 0.0) {
        throw std::domain_error("post_select: no probability mass on coincidence patterns");
    }
    for (auto& [pat, w] : out.conditional) w /= out.acceptance;
    return out;
}

// The four coincidence outcomes (++, +-, -+, --) of a post-selected
// distribution.
inline std::array<double, 4> coincidence_probabilities(const ClickDistribution& conditional,
                                                       const CoincidenceRule& rule = {}) {
    std::array<double, 4> p{0.0, 0.0, 0.0, 0.0};
    for (const auto& [pat, w] : conditional) {
        const bool ap = pat.count(rule.alice_plus) > 0;
        const bool bp = pat.count(rule.bob_plus) > 0;
        p[(ap ? 0 : 2) + (bp ? 0 : 1)] += w;
    }
    return p;
}

// Pure two-photon polarization state over Alice (x) Bob; amplitude order
// HH, HV, VH, VV.
struct TwoQubitState {
    std::array<std::complex<double>, 4> amp{};

    double norm_squared() const {
        double n = 0.0;
        for (const auto& a : amp) n += std::norm(a);
        return n;
    }
    std::complex<double> inner_product(const TwoQubitState& other) const {
        std::complex<double> acc(0.0, 0.0);
        for (int i = 0; i < 4; ++i) acc += std::conj(amp[i]) * other.amp[i];
        return acc;
    }
};

inline double fidelity(const TwoQubitState& state, const TwoQubitState& reference) {
    return std::norm(reference.inner_product(state));
}

struct WeightedTwoQubit {
    double weight = 0.0;
    TwoQubitState state;
};

using TwoQubitEnsemble = std::vector<WeightedTwoQubit>;

struct ConditionalPolarization {
    TwoQubitEnsemble components;  // weights sum to 1
    double acceptance = 0.0;      // cross-side probability mass
};

// Renormalized cross-side component of a two-photon state, as a classical
// ensemble of pure two-qubit states, one per temporal sector. Coherence is
// carried only within matching temporal sectors; a single component means
// the photons are fully indistinguishable there.
inline ConditionalPolarization conditional_polarization_ensemble(const FockState& state,
                                                                 const std::string& alice_path,
                                                                 const std::string& bob_path) {
    if (state.total_photons() != 2) {
        throw std::invalid_argument("conditional_polarization: requires a two-photon state");
    }

    // (temporal_A, temporal_B) sector -> unnormalized amplitudes
    std::map<std::pair<int, int>, TwoQubitState> sectors;
    double acceptance = 0.0;

    for (const auto& [occ, amp] : state.terms()) {
        if (occ.size() != 2) continue;
        const auto& [m0, k0] = occ[0];
        const auto& [m1, k1] = occ[1];
        if (k0 != 1 || k1 != 1) continue;

        const ModeLabel* alice = nullptr;
        const ModeLabel* bob = nullptr;
        if (m0.path == alice_path && m1.path == bob_path) {
            alice = &m0;
            bob = &m1;
        } else if (m1.path == alice_path && m0.path == bob_path) {
            alice = &m1;
            bob = &m0;
        } else {
            continue;
        }

        auto& sector = sectors[{alice->temporal, bob->temporal}];
        const int idx = (alice->pol == Polarization::V ? 2 : 0) + (bob->pol == Polarization::V ? 1 : 0);
        sector.amp[idx] += amp;
        acceptance += std::norm(amp);
    }

    if (acceptance <= 0.0) {
        throw std::domain_error("conditional_polarization: no cross-side probability mass");
    }

    ConditionalPolarization out;
    out.acceptance = acceptance;
    for (auto& [key, sector] : sectors) {
        const double mass = sector.norm_squared();
        if (mass <= 0.0) continue;
        const double scale = 1.0 / std::sqrt(mass);
        for (auto& a : sector.amp) a *= scale;
        out.components.push_back({mass / acceptance, sector});
    }
    return out;
}

// Pure-state variant, valid only when one temporal sector holds all the
// cross-side mass (indistinguishable photons).
inline TwoQubitState conditional_polarization_state(const FockState& state,
                                                    const std::string& alice_path,
                                                    const std::string& bob_path,
                                                    double purity_tolerance = 1e-10) {
    auto ensemble = conditional_polarization_ensemble(state, alice_path, bob_path);
    const WeightedTwoQubit* dominant = nullptr;
    for (const auto& c : ensemble.components) {
        if (dominant == nullptr || c.weight > dominant->weight) dominant = &c;
    }
    if (dominant == nullptr || dominant->weight < 1.0 - purity_tolerance) {
        throw std::domain_error(
            "conditional_polarization_state: temporal sectors are mixed; use the ensemble variant");
    }
    return dominant->state;
}

// Four coincidence counts for one analyzer setting pair.
struct CountsTable {
    long long n_pp = 0;
    long long n_pm = 0;
    long long n_mp = 0;
    long long n_mm = 0;
    MeasurementSetting setting{};

    long long total() const { return n_pp + n_pm + n_mp + n_mm; }
};

// splitmix64; used to derive independent per-point RNG streams.
inline std::uint64_t derive_stream_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Independent Poisson draw per outcome with mean p_i * mean_total_pairs;
// identical seed and inputs give identical counts.
inline CountsTable sample_counts(const std::array<double, 4>& probs, double mean_total_pairs,
                                 std::uint64_t seed, const MeasurementSetting& setting = {}) {
    double total = 0.0;
    for (double p : probs) {
        if (p < -1e-12) throw std::invalid_argument("sample_counts: negative probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("sample_counts: probabilities must sum to 1");
    }
    if (!(mean_total_pairs > 0.0)) {
        throw std::invalid_argument("sample_counts: mean_total_pairs must be positive");
    }

    std::mt19937_64 rng(derive_stream_seed(seed, 0));
    auto draw = [&](double p) -> long long {
        const double mean = std::max(0.0, p) * mean_total_pairs;
        if (mean == 0.0) return 0;
        std::poisson_distribution<long long> poisson(mean);
        return poisson(rng);
    };

    CountsTable counts;
    counts.setting = setting;
    counts.n_pp = draw(probs[0]);
    counts.n_pm = draw(probs[1]);
    counts.n_mp = draw(probs[2]);
    counts.n_mm = draw(probs[3]);
    return counts;
}

}  // namespace fewphoton
