// fock_state.hpp
// Sparse bosonic Fock states over labeled modes.
//
// A state is a map occupation-vector -> complex amplitude. Occupation
// vectors are sorted (mode, count) lists. Linear-optical elements act by
// substituting creation operators, a_m^dag -> sum_n c_n a_n^dag, and
// expanding the resulting operator polynomial; bosonic sqrt(n!) factors
// are handled so that amplitudes always refer to normalized Fock basis
// states.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fewphoton/modes.hpp"

namespace fewphoton {

using Amplitude = std::complex<double>;

// Sorted list of (mode, count), counts >= 1.
using Occupation = std::vector<std::pair<ModeLabel, int>>;

inline int photon_count(const Occupation& occ) {
    int n = 0;
    for (const auto& [mode, k] : occ) n += k;
    return n;
}

// Adds k photons in `mode`, keeping the vector sorted.
inline void occupation_add(Occupation& occ, const ModeLabel& mode, int k = 1) {
    auto it = std::lower_bound(occ.begin(), occ.end(), mode,
                               [](const auto& entry, const ModeLabel& m) { return entry.first < m; });
    if (it != occ.end() && it->first == mode) {
        it->second += k;
    } else {
        occ.insert(it, {mode, k});
    }
}

inline int occupation_of(const Occupation& occ, const ModeLabel& mode) {
    auto it = std::lower_bound(occ.begin(), occ.end(), mode,
                               [](const auto& entry, const ModeLabel& m) { return entry.first < m; });
    if (it != occ.end() && it->first == mode) return it->second;
    return 0;
}

class FockState {
public:
    using TermMap = std::map<Occupation, Amplitude>;

    // Maps one creation operator to a linear combination of creation
    // operators. An empty result is treated as identity on that mode.
    using ModeMap = std::function<std::vector<std::pair<ModeLabel, Amplitude>>(const ModeLabel&)>;

    static constexpr double kDefaultPruneThreshold = 1e-12;

    FockState() = default;

    static FockState vacuum() {
        FockState s;
        s.terms_[Occupation{}] = Amplitude(1.0, 0.0);
        return s;
    }

    static FockState basis(Occupation occ, Amplitude amp = Amplitude(1.0, 0.0)) {
        FockState s;
        std::sort(occ.begin(), occ.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        s.terms_[std::move(occ)] = amp;
        return s;
    }

    const TermMap& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    std::size_t term_count() const { return terms_.size(); }

    Amplitude amplitude(const Occupation& occ) const {
        auto it = terms_.find(occ);
        return it == terms_.end() ? Amplitude(0.0, 0.0) : it->second;
    }

    void set_amplitude(const Occupation& occ, Amplitude amp) { terms_[occ] = amp; }

    double norm_squared() const {
        double n = 0.0;
        for (const auto& [occ, amp] : terms_) n += std::norm(amp);
        return n;
    }

    // Probability mass removed so far by lossy elements (polarizers).
    double removed_mass() const { return removed_mass_; }
    void set_removed_mass(double m) { removed_mass_ = m; }

    double prune_threshold() const { return prune_threshold_; }
    void set_prune_threshold(double t) { prune_threshold_ = t; }

    // Next unused orthogonal temporal component; delay lines allocate from
    // here. Indices are meaningful within one evolution history only.
    int next_temporal_index() const { return next_temporal_; }
    void set_next_temporal_index(int idx) { next_temporal_ = idx; }

    int allocate_temporal_index() { return next_temporal_++; }

    void prune() {
        for (auto it = terms_.begin(); it != terms_.end();) {
            if (std::abs(it->second) < prune_threshold_) {
                it = terms_.erase(it);
            } else {
                ++it;
            }
        }
    }

    void normalize() {
        const double n = std::sqrt(norm_squared());
        if (n <= 0.0) throw std::domain_error("FockState::normalize: zero-norm state");
        for (auto& [occ, amp] : terms_) amp /= n;
    }

    // Total photon number, identical across terms for fixed-number sources.
    int total_photons() const {
        if (terms_.empty()) return 0;
        return photon_count(terms_.begin()->first);
    }

    // <this|other>.
    Amplitude inner_product(const FockState& other) const {
        Amplitude acc(0.0, 0.0);
        for (const auto& [occ, amp] : terms_) {
            auto it = other.terms_.find(occ);
            if (it != other.terms_.end()) acc += std::conj(amp) * it->second;
        }
        return acc;
    }

    // Applies a linear creation-operator substitution to every term.
    // The substitution must act within a fixed single-photon subspace
    // (norm preservation is the caller's contract, checked downstream).
    FockState apply_mode_map(const ModeMap& map) const {
        FockState out;
        out.removed_mass_ = removed_mass_;
        out.next_temporal_ = next_temporal_;
        out.prune_threshold_ = prune_threshold_;

        for (const auto& [occ, amp] : terms_) {
            // Seed polynomial: amplitude with bosonic prefactor 1/sqrt(prod n_i!).
            double prefactor = 1.0;
            for (const auto& [mode, n] : occ) prefactor *= factorial(n);
            TermMap poly;
            poly[Occupation{}] = amp / std::sqrt(prefactor);

            for (const auto& [mode, n] : occ) {
                auto targets = map(mode);
                if (targets.empty()) targets = {{mode, Amplitude(1.0, 0.0)}};
                for (int k = 0; k < n; ++k) {
                    TermMap next;
                    for (const auto& [mon, coef] : poly) {
                        for (const auto& [tmode, tcoef] : targets) {
                            Occupation mon2 = mon;
                            occupation_add(mon2, tmode);
                            next[std::move(mon2)] += coef * tcoef;
                        }
                    }
                    poly = std::move(next);
                }
            }

            for (const auto& [mon, coef] : poly) {
                double post = 1.0;
                for (const auto& [mode, k] : mon) post *= factorial(k);
                out.terms_[mon] += coef * std::sqrt(post);
            }
        }
        out.prune();
        return out;
    }

    bool has_path(const std::string& path) const {
        for (const auto& [occ, amp] : terms_) {
            for (const auto& [mode, k] : occ) {
                if (mode.path == path) return true;
            }
        }
        return false;
    }

    std::vector<std::string> populated_paths() const {
        std::vector<std::string> paths;
        for (const auto& [occ, amp] : terms_) {
            for (const auto& [mode, k] : occ) {
                if (std::find(paths.begin(), paths.end(), mode.path) == paths.end()) {
                    paths.push_back(mode.path);
                }
            }
        }
        std::sort(paths.begin(), paths.end());
        return paths;
    }

private:
    static double factorial(int n) {
        static const double table[] = {1, 1, 2, 6, 24, 120, 720, 5040, 40320};
        if (n < 0 || n > 8) throw std::domain_error("factorial: photon count out of supported range");
        return table[n];
    }

    TermMap terms_;
    double removed_mass_ = 0.0;
    int next_temporal_ = 1;
    double prune_threshold_ = kDefaultPruneThreshold;
};

// |<reference|state>|^2.
inline double fidelity(const FockState& state, const FockState& reference) {
    return std::norm(reference.inner_product(state));
}

}  // namespace fewphoton
