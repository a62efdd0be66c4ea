// modes.hpp
// Mode labels and temporal wavepackets for few-photon linear optics.
//
// A mode is a (spatial path, polarization, temporal component) triple.
// Temporal components index an orthonormal register: component 0 is the
// shared reference wavepacket, components >= 1 are orthogonal remainders
// produced by delay lines. Overlaps between distinct indices are exactly
// zero by construction.

#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fewphoton {

enum class Polarization : std::uint8_t { H = 0, V = 1 };

inline char to_char(Polarization p) { return p == Polarization::H ? 'H' : 'V'; }

struct ModeLabel {
    std::string path;
    Polarization pol = Polarization::H;
    int temporal = 0;

    friend auto operator<=>(const ModeLabel&, const ModeLabel&) = default;
};

inline std::string to_string(const ModeLabel& m) {
    std::string s = m.path;
    s += ':';
    s += to_char(m.pol);
    if (m.temporal != 0) {
        s += '@';
        s += std::to_string(m.temporal);
    }
    return s;
}

// Gaussian amplitude wavepacket exp(-(t - center)^2 / (2 sigma^2)), up to
// normalization. sigma is the standard deviation of the amplitude envelope;
// with equal widths the overlap below reduces to exp(-tau^2 / (4 sigma^2)).
struct TemporalWavepacket {
    double center_fs = 0.0;
    double sigma_fs = 100.0;
};

// Normalized amplitude-overlap integral of two Gaussian wavepackets.
// Symmetric, in [0, 1], and exactly 1 for identical packets.
inline double temporal_overlap(const TemporalWavepacket& a, const TemporalWavepacket& b) {
    if (!(a.sigma_fs > 0.0) || !(b.sigma_fs > 0.0)) {
        throw std::invalid_argument("temporal_overlap: wavepacket widths must be positive");
    }
    if (a.center_fs == b.center_fs && a.sigma_fs == b.sigma_fs) return 1.0;
    const double s2 = a.sigma_fs * a.sigma_fs + b.sigma_fs * b.sigma_fs;
    const double tau = a.center_fs - b.center_fs;
    const double width_factor = std::sqrt(2.0 * a.sigma_fs * b.sigma_fs / s2);
    return width_factor * std::exp(-tau * tau / (2.0 * s2));
}

inline TemporalWavepacket shifted(const TemporalWavepacket& w, double delay_fs) {
    return TemporalWavepacket{w.center_fs + delay_fs, w.sigma_fs};
}

constexpr double kPi = 3.141592653589793238462643383279502884;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Raised when a numerical contract is broken (norm drift, non-unitary
// compiled matrix, probabilities that fail to sum to one). The CLI maps
// this to exit code 3.
struct numeric_contract_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fewphoton
