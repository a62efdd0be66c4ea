// bell.hpp
// Correlation estimation from coincidence counts, analytic correlations of
// two-qubit polarization states, the CHSH combination with Poisson error
// propagation, an exhaustive deterministic local-hidden-variable bound, and
// fringe/dip visibility fits.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fewphoton/detection.hpp"
#include "fewphoton/modes.hpp"

namespace fewphoton {

struct CorrelationEstimate {
    double e_value = 0.0;
    double sigma = 0.0;
    CountsTable counts{};
};

// E = (N++ + N-- - N+- - N-+) / N with sigma from independent Poisson
// channel counts: sigma^2 = sum_i (s_i - E)^2 n_i / N^2.
inline CorrelationEstimate correlation_from_counts(const CountsTable& counts) {
    const long long total = counts.total();
    if (total <= 0) throw std::invalid_argument("correlation_from_counts: zero total count");

    const double n = static_cast<double>(total);
    const double e = (static_cast<double>(counts.n_pp) + counts.n_mm - counts.n_pm - counts.n_mp) / n;

    const std::array<std::pair<double, long long>, 4> channels{{
        {+1.0, counts.n_pp},
        {-1.0, counts.n_pm},
        {-1.0, counts.n_mp},
        {+1.0, counts.n_mm},
    }};
    double var = 0.0;
    for (const auto& [s, count] : channels) {
        var += (s - e) * (s - e) * static_cast<double>(count);
    }
    return {e, std::sqrt(var) / n, counts};
}

// (|HV> + e^{i phi} |VH>) / sqrt(2)
inline TwoQubitState psi_phi(double phi_rad) {
    TwoQubitState s;
    const double isq2 = 1.0 / std::sqrt(2.0);
    s.amp[1] = std::complex<double>(isq2, 0.0);
    s.amp[2] = std::polar(isq2, phi_rad);
    return s;
}

// V psi(phi) + (1 - V) equal mixture of |HV> and |VH>.
inline TwoQubitEnsemble dephased_psi(double phi_rad, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("dephased_psi: V must lie in [0, 1]");
    TwoQubitState hv, vh;
    hv.amp[1] = 1.0;
    vh.amp[2] = 1.0;
    TwoQubitEnsemble e;
    if (v > 0.0) e.push_back({v, psi_phi(phi_rad)});
    if (v < 1.0) {
        e.push_back({(1.0 - v) / 2.0, hv});
        e.push_back({(1.0 - v) / 2.0, vh});
    }
    return e;
}

namespace detail {

// +1/-1 outcome probabilities for linear analyzers at polarization angles
// (a_deg, b_deg): projectors onto cos(a) H + sin(a) V and its orthogonal.
inline std::array<double, 4> setting_probabilities(const TwoQubitState& state,
                                                   const MeasurementSetting& setting) {
    const double a = deg_to_rad(setting.alice_deg);
    const double b = deg_to_rad(setting.bob_deg);
    const double ca = std::cos(a), sa = std::sin(a);
    const double cb = std::cos(b), sb = std::sin(b);

    // rows: (+,-) for Alice; columns H,V coefficients of the analyzer states
    const std::array<std::array<double, 2>, 2> alice{{{ca, sa}, {-sa, ca}}};
    const std::array<std::array<double, 2>, 2> bob{{{cb, sb}, {-sb, cb}}};

    std::array<double, 4> p{};
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            std::complex<double> amp(0.0, 0.0);
            for (int ap = 0; ap < 2; ++ap) {
                for (int bp = 0; bp < 2; ++bp) {
                    amp += alice[i][ap] * bob[j][bp] * state.amp[2 * ap + bp];
                }
            }
            p[2 * i + j] = std::norm(amp);
        }
    }
    return p;
}

}  // namespace detail

inline double analytic_correlation(const TwoQubitState& state, const MeasurementSetting& setting) {
    const double norm = state.norm_squared();
    if (std::abs(norm - 1.0) > 1e-9) {
        throw std::invalid_argument("analytic_correlation: state is not normalized");
    }
    const auto p = detail::setting_probabilities(state, setting);
    return p[0] - p[1] - p[2] + p[3];
}

inline double analytic_correlation(const TwoQubitEnsemble& ensemble, const MeasurementSetting& setting) {
    if (ensemble.empty()) throw std::invalid_argument("analytic_correlation: empty ensemble");
    double weight = 0.0, e = 0.0;
    for (const auto& c : ensemble) {
        e += c.weight * analytic_correlation(c.state, setting);
        weight += c.weight;
    }
    if (std::abs(weight - 1.0) > 1e-9) {
        throw std::invalid_argument("analytic_correlation: ensemble weights must sum to 1");
    }
    return e;
}

struct ChshResult {
    std::array<CorrelationEstimate, 4> estimates{};
    std::array<int, 4> sign_vector{+1, +1, -1, +1};
    double s_value = 0.0;
    double sigma_s = 0.0;
    double n_sigma_violation = 0.0;
};

inline void validate_sign_vector(const std::array<int, 4>& signs) {
    int minus = 0;
    for (int s : signs) {
        if (s != 1 && s != -1) throw std::invalid_argument("sign vector entries must be +1 or -1");
        if (s == -1) ++minus;
    }
    if (minus != 1) throw std::invalid_argument("sign vector must have exactly one -1");
}

// S = sum_i sign_i E_i, sigma_S = sqrt(sum sigma_i^2),
// violation = (|S| - 2) / sigma_S.
inline ChshResult chsh(const std::array<CorrelationEstimate, 4>& estimates,
                       const std::array<int, 4>& sign_vector = {+1, +1, -1, +1}) {
    validate_sign_vector(sign_vector);
    ChshResult r;
    r.estimates = estimates;
    r.sign_vector = sign_vector;
    double var = 0.0;
    for (int i = 0; i < 4; ++i) {
        r.s_value += sign_vector[i] * estimates[i].e_value;
        var += estimates[i].sigma * estimates[i].sigma;
    }
    r.sigma_s = std::sqrt(var);
    r.n_sigma_violation = r.sigma_s > 0.0 ? (std::abs(r.s_value) - 2.0) / r.sigma_s : 0.0;
    return r;
}

// Maximum of the signed CHSH combination over all 16 deterministic local
// strategies. Outcomes depend only on which local setting is used, so the
// setting values themselves never enter; with exactly one -1 the result is
// always 2 (and 4 for the degenerate all-plus vector).
inline double lhv_max(const std::array<MeasurementSetting, 4>& settings,
                      const std::array<int, 4>& sign_vector = {+1, +1, -1, +1}) {
    (void)settings;
    int best = -16;
    for (int a0 : {-1, 1}) {
        for (int a1 : {-1, 1}) {
            for (int b0 : {-1, 1}) {
                for (int b1 : {-1, 1}) {
                    // term order: (a,b), (a',b), (a,b'), (a',b')
                    const int s = sign_vector[0] * a0 * b0 + sign_vector[1] * a1 * b0 +
                                  sign_vector[2] * a0 * b1 + sign_vector[3] * a1 * b1;
                    best = std::max(best, s);
                }
            }
        }
    }
    return static_cast<double>(best);
}

struct VisibilityFit {
    double offset = 0.0;
    double amplitude = 0.0;
    double phase0 = 0.0;  // y = offset + amplitude * cos(x + phase0)
    double visibility = 0.0;
    double residual_rms = 0.0;
};

// Linear least squares on (1, cos x, sin x) regressors; the phase axis must
// be linear in radians and span at least one period.
inline VisibilityFit fit_fringe(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 5) throw std::invalid_argument("fit_fringe: need at least 5 points");
    double xmin = points.front().first, xmax = points.front().first;
    for (const auto& [x, y] : points) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
    }
    if (xmax - xmin < 2.0 * kPi * (1.0 - 1e-9)) {
        throw std::invalid_argument("fit_fringe: points must span at least one period");
    }

    // normal equations for y ~ c0 + c1 cos x + c2 sin x
    double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double rhs[3] = {0, 0, 0};
    for (const auto& [x, y] : points) {
        const double basis[3] = {1.0, std::cos(x), std::sin(x)};
        for (int i = 0; i < 3; ++i) {
            rhs[i] += basis[i] * y;
            for (int j = 0; j < 3; ++j) m[i][j] += basis[i] * basis[j];
        }
    }

    // Gaussian elimination with partial pivoting
    int perm[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r) {
            if (std::abs(m[perm[r]][col]) > std::abs(m[perm[pivot]][col])) pivot = r;
        }
        std::swap(perm[col], perm[pivot]);
        const double diag = m[perm[col]][col];
        if (std::abs(diag) < 1e-30) throw std::invalid_argument("fit_fringe: singular design matrix");
        for (int r = col + 1; r < 3; ++r) {
            const double f = m[perm[r]][col] / diag;
            for (int c = col; c < 3; ++c) m[perm[r]][c] -= f * m[perm[col]][c];
            rhs[perm[r]] -= f * rhs[perm[col]];
        }
    }
    double c[3];
    for (int row = 2; row >= 0; --row) {
        double acc = rhs[perm[row]];
        for (int col = row + 1; col < 3; ++col) acc -= m[perm[row]][col] * c[col];
        c[row] = acc / m[perm[row]][row];
    }

    VisibilityFit fit;
    fit.offset = c[0];
    fit.amplitude = std::hypot(c[1], c[2]);
    fit.phase0 = std::atan2(-c[2], c[1]);
    if (!(fit.offset > 0.0)) throw std::domain_error("fit_fringe: non-positive fitted offset");
    fit.visibility = fit.amplitude / fit.offset;

    double ss = 0.0;
    for (const auto& [x, y] : points) {
        const double model = c[0] + c[1] * std::cos(x) + c[2] * std::sin(x);
        ss += (y - model) * (y - model);
    }
    fit.residual_rms = std::sqrt(ss / static_cast<double>(points.size()));
    return fit;
}

// Dip contrast 1 - min(scan) / baseline, with baseline the large-delay
// coincidence level.
inline double dip_visibility(const std::vector<std::pair<double, double>>& scan, double baseline) {
    if (scan.empty()) throw std::invalid_argument("dip_visibility: empty scan");
    if (!(baseline > 0.0)) throw std::invalid_argument("dip_visibility: baseline must be positive");
    double lowest = scan.front().second;
    for (const auto& [x, y] : scan) lowest = std::min(lowest, y);
    return 1.0 - lowest / baseline;
}

}  // namespace fewphoton
