#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <vector>

#include "ampx/errors.hpp"
#include "ampx/transfer_function.hpp"

namespace ampx {

// ---------------------------------------------------------------------------
// Excitation

/// Exponential (logarithmic) swept-sine excitation.
struct ChirpSpec {
    double f0_hz = 0.1;
    double f1_hz = 20.0;
    double duration_s = 300.0;
    double amplitude_Nm = 4.0;
    double sample_rate_hz = 1000.0;

    void validate() const {
        if (!(0.0 < f0_hz && f0_hz < f1_hz && f1_hz < sample_rate_hz / 2.0))
            throw Error("ChirpSpec: require 0 < f0 < f1 < sample_rate/2");
        if (duration_s <= 0.0) throw Error("ChirpSpec: duration must be > 0");
    }
};

/// u(t) = A sin(phi(t)) with instantaneous frequency f0*(f1/f0)^(t/T).
inline std::vector<double> exponential_chirp(const ChirpSpec& spec) {
    spec.validate();
    const size_t n = static_cast<size_t>(std::llround(spec.duration_s * spec.sample_rate_hz));
    const double T = spec.duration_s;
    const double lnr = std::log(spec.f1_hz / spec.f0_hz);
    std::vector<double> u(n);
    for (size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / spec.sample_rate_hz;
        const double phi =
            2.0 * std::numbers::pi * spec.f0_hz * T / lnr * (std::exp(t / T * lnr) - 1.0);
        u[i] = spec.amplitude_Nm * std::sin(phi);
    }
    return u;
}

/// Instantaneous frequency of the chirp at time t (Hz).
inline double chirp_instantaneous_hz(const ChirpSpec& spec, double t) {
    return spec.f0_hz * std::pow(spec.f1_hz / spec.f0_hz, t / spec.duration_s);
}

// ---------------------------------------------------------------------------
// Spectral estimation

namespace detail {

/// In-place iterative radix-2 Cooley-Tukey FFT; size must be a power of two.
inline void fft_pow2(std::vector<Complex>& a) {
    const size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw Error("fft_pow2: size must be a power of two");
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const Complex wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            Complex w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const Complex u = a[i + k];
                const Complex v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

inline size_t floor_pow2(size_t v) {
    size_t p = 1;
    while (p * 2 <= v) p *= 2;
    return p;
}

}  // namespace detail

/// Empirical frequency response with per-bin coherence.
struct FrfEstimate {
    std::vector<double> omegas;    // rad/s, ascending
    std::vector<Complex> values;   // H(j*omega)
    std::vector<double> coherence; // [0, 1]

    size_t size() const { return omegas.size(); }
};

/// Welch H1 estimator H = S_uy/S_uu with Hann windows and 50% overlap;
/// coherence |S_uy|^2/(S_uu*S_yy) per bin. Requires at least 4 segments.
inline FrfEstimate estimate_frf(const std::vector<double>& u, const std::vector<double>& y,
                                double sample_rate_hz, double window_s) {
    if (u.size() != y.size()) throw Error("estimate_frf: series lengths differ");
    if (sample_rate_hz <= 0.0 || window_s <= 0.0)
        throw Error("estimate_frf: sample rate and window length must be > 0");
    const size_t nper =
        detail::floor_pow2(static_cast<size_t>(window_s * sample_rate_hz));
    const size_t hop = nper / 2;
    if (nper < 8 || u.size() < nper + 3 * hop)
        throw TooShort("estimate_frf: need at least 4 half-overlapping windows of data");
    const size_t n_seg = (u.size() - nper) / hop + 1;

    std::vector<double> hann(nper);
    for (size_t i = 0; i < nper; ++i)
        hann[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                        static_cast<double>(nper - 1)));

    const size_t n_bins = nper / 2;  // skip DC; keep up to (not incl.) Nyquist
    std::vector<double> suu(n_bins, 0.0), syy(n_bins, 0.0);
    std::vector<Complex> suy(n_bins, 0.0);
    std::vector<Complex> bu(nper), by(nper);
    for (size_t s = 0; s < n_seg; ++s) {
        const size_t off = s * hop;
        for (size_t i = 0; i < nper; ++i) {
            bu[i] = Complex(u[off + i] * hann[i], 0.0);
            by[i] = Complex(y[off + i] * hann[i], 0.0);
        }
        detail::fft_pow2(bu);
        detail::fft_pow2(by);
        for (size_t k = 1; k <= n_bins; ++k) {
            suu[k - 1] += std::norm(bu[k]);
            syy[k - 1] += std::norm(by[k]);
            suy[k - 1] += std::conj(bu[k]) * by[k];
        }
    }

    FrfEstimate frf;
    frf.omegas.resize(n_bins);
    frf.values.resize(n_bins);
    frf.coherence.resize(n_bins);
    for (size_t k = 1; k <= n_bins; ++k) {
        frf.omegas[k - 1] = 2.0 * std::numbers::pi * sample_rate_hz *
                            static_cast<double>(k) / static_cast<double>(nper);
        const double denom = suu[k - 1] + 1e-300;
        frf.values[k - 1] = suy[k - 1] / denom;
        frf.coherence[k - 1] =
            std::clamp(std::norm(suy[k - 1]) / (denom * (syy[k - 1] + 1e-300)), 0.0, 1.0);
    }
    return frf;
}

// ---------------------------------------------------------------------------
// Impedance fit

/// Second-order impedance parameters recovered from an FRF of tau_s/theta_e.
struct ImpedanceFit {
    double K_h = 0.0;       // Nm/rad
    double B_h = 0.0;       // Nms/rad
    double M_total = 0.0;   // kg m^2 (human + exoskeleton + load)
    double zeta = 0.0;      // B/(2*sqrt(K*M_total)); valid only if omega_h_defined
    bool omega_h_defined = false;  // false when K_h is (numerically) zero
    double band_lo = 0.0, band_hi = 0.0;  // rad/s actually used
    size_t bins_used = 0;
};

struct FitOptions {
    double coherence_threshold = 0.9;
    /// Fraction of a decade at the top of the trusted band used for the
    /// inertial |H| ~ M*omega^2 asymptote fit.
    double asymptote_decades = 0.5;
    std::optional<double> M_known;
};

/// Fits H(jw) = K - M w^2 + j B w over the coherent bins of the band.
/// M comes from the high-frequency +40 dB/dec asymptote unless supplied.
inline ImpedanceFit fit_impedance(const FrfEstimate& frf, double omega_lo, double omega_hi,
                                  const FitOptions& opt = {}) {
    if (omega_lo <= 0.0 || omega_lo >= omega_hi)
        throw Error("fit_impedance: require 0 < omega_lo < omega_hi");
    std::vector<size_t> idx;
    for (size_t i = 0; i < frf.size(); ++i)
        if (frf.omegas[i] >= omega_lo && frf.omegas[i] <= omega_hi &&
            frf.coherence[i] >= opt.coherence_threshold)
            idx.push_back(i);
    if (idx.size() < 10)
        throw BandTooNoisy("fit_impedance: fewer than 10 bins in band with coherence >= " +
                           std::to_string(opt.coherence_threshold));

    ImpedanceFit fit;
    fit.band_lo = frf.omegas[idx.front()];
    fit.band_hi = frf.omegas[idx.back()];
    fit.bins_used = idx.size();

    double M = 0.0;
    if (opt.M_known) {
        M = *opt.M_known;
    } else {
        // Top asymptote_decades of the trusted band: |H| should rise at
        // +40 dB/dec, i.e. Re(H) ~ -M w^2 dominating.
        const double w_top = fit.band_hi;
        const double w_cut = w_top / std::pow(10.0, opt.asymptote_decades);
        std::vector<size_t> hi_idx;
        for (size_t i : idx)
            if (frf.omegas[i] >= w_cut) hi_idx.push_back(i);
        if (hi_idx.size() < 5)
            throw NoInertialAsymptote("fit_impedance: too few coherent bins in the "
                                      "high-frequency asymptote region");
        // Log-log slope check over the asymptote region.
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (size_t i : hi_idx) {
            const double lx = std::log10(frf.omegas[i]);
            const double ly = std::log10(std::abs(frf.values[i]) + 1e-300);
            sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        }
        const double nn = static_cast<double>(hi_idx.size());
        const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx + 1e-300);
        // Re(H) = K - M w^2: fit both so the local stiffness offset does not
        // bias M (which the w^2 lever would amplify enormously in K later).
        double s1 = 0.0, sw2 = 0.0, sw4 = 0.0, sr = 0.0, srw2 = 0.0;
        for (size_t i : hi_idx) {
            const double w2 = frf.omegas[i] * frf.omegas[i];
            s1 += 1.0; sw2 += w2; sw4 += w2 * w2;
            sr += frf.values[i].real();
            srw2 += frf.values[i].real() * w2;
        }
        const double det = s1 * sw4 - sw2 * sw2;
        M = (sw2 * sr - s1 * srw2) / (det + 1e-300);
        if (slope < 1.5 || M <= 0.0)
            throw NoInertialAsymptote(
                "fit_impedance: no +40 dB/dec inertial asymptote in the band (log-log "
                "slope " + std::to_string(slope) + ")");
    }
    fit.M_total = M;

    // With M fixed: Re(H) + M w^2 ~ K, Im(H) ~ B w.
    double k_sum = 0.0, b_num = 0.0, b_den = 0.0;
    for (size_t i : idx) {
        const double w = frf.omegas[i];
        k_sum += frf.values[i].real() + M * w * w;
        b_num += frf.values[i].imag() * w;
        b_den += w * w;
    }
    fit.K_h = k_sum / static_cast<double>(idx.size());
    fit.B_h = b_num / b_den;

    // K at or below numerical zero leaves the natural frequency undefined.
    double h_scale = 0.0;
    for (size_t i : idx) h_scale = std::max(h_scale, std::abs(frf.values[i]));
    fit.omega_h_defined = fit.K_h > 1e-6 * h_scale && M > 0.0;
    if (fit.omega_h_defined) fit.zeta = fit.B_h / (2.0 * std::sqrt(fit.K_h * fit.M_total));
    return fit;
}

/// The fitted model's impedance K - M w^2 + j B w as a rational function
/// (over denominator 1), for residual checks against the raw FRF.
inline Complex impedance_model_eval(const ImpedanceFit& fit, double omega) {
    return Complex(fit.K_h - fit.M_total * omega * omega, fit.B_h * omega);
}

struct ZetaStatistics {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

inline ZetaStatistics zeta_statistics(const std::vector<ImpedanceFit>& fits) {
    if (fits.size() < 2) throw Error("zeta_statistics: need at least 2 fits");
    ZetaStatistics st;
    st.min = st.max = fits.front().zeta;
    for (const auto& f : fits) {
        st.mean += f.zeta;
        st.min = std::min(st.min, f.zeta);
        st.max = std::max(st.max, f.zeta);
    }
    st.mean /= static_cast<double>(fits.size());
    return st;
}

}  // namespace ampx
