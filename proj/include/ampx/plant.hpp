#pragma once

#include <cmath>
#include <numbers>

#include "ampx/errors.hpp"
#include "ampx/transfer_function.hpp"

namespace ampx {

// ---------------------------------------------------------------------------
// Physical parameter records

/// Human elbow parameters in rotary joint space.
struct HumanParams {
    double K_h = 0.0;  // Nm/rad
    double B_h = 0.0;  // Nms/rad
    double M_h = 0.0;  // kg m^2
};

/// Exoskeleton arm, load, and the operating-point transmission ratio.
struct ExoParams {
    double M_e_bar = 0.0;    // kg m^2, unloaded exoskeleton
    double M_e_tilde = 0.0;  // kg m^2, load
    double r = 1.0;          // m, rotary -> linear transmission at the operating point
};

/// Series elastic actuator in linear actuator space.
struct ActuatorParams {
    double k_s = 0.0;  // N/m
    double m_a = 0.0;  // kg
    double b_a = 0.0;  // Ns/m
};

/// Spring-force loop shaping: virtual impedance plus the observer filter.
struct SpringLoopConfig {
    double k_ss = 0.0;        // N/m
    double b_ss = 0.0;        // Ns/m
    double q_cutoff_hz = 40.0;
    int q_order = 2;          // 2 analytical, 4 mimics firmware
};

/// Rotary parameters reflected through r into the linear actuator space.
struct LinearParams {
    double m_h = 0.0, b_h = 0.0, k_h = 0.0;
    double m_e_bar = 0.0, m_e_tilde = 0.0, m_e = 0.0;
    double r = 1.0;
};

inline LinearParams reflect_to_linear(const HumanParams& h, const ExoParams& e) {
    if (e.r <= 0.0) throw NonPositiveRatio("reflect_to_linear: transmission ratio must be > 0");
    const double rr = e.r * e.r;
    LinearParams p;
    p.m_h = h.M_h / rr;
    p.b_h = h.B_h / rr;
    p.k_h = h.K_h / rr;
    p.m_e_bar = e.M_e_bar / rr;
    p.m_e_tilde = e.M_e_tilde / rr;
    p.m_e = p.m_e_bar + p.m_e_tilde;
    p.r = e.r;
    return p;
}

// ---------------------------------------------------------------------------
// Impedances

/// Z_h(s) = m_h s + b_h + k_h/s, written over denominator s (improper).
inline TransferFunction impedance_human(const LinearParams& p) {
    return TransferFunction(Polynomial{p.k_h, p.b_h, p.m_h}, Polynomial{0.0, 1.0});
}

struct ExoImpedances {
    TransferFunction Z_e_bar, Z_e_tilde, Z_e;
};

inline ExoImpedances impedance_exo(const LinearParams& p) {
    return {TransferFunction(Polynomial{0.0, p.m_e_bar}, Polynomial{1.0}),
            TransferFunction(Polynomial{0.0, p.m_e_tilde}, Polynomial{1.0}),
            TransferFunction(Polynomial{0.0, p.m_e}, Polynomial{1.0})};
}

namespace detail {

/// Quadratic numerator of Z_{h-e} over denominator s:
/// q(s) = (m_h+m_e)s^2 + b_h s + k_h.
inline Polynomial combined_stiffness_poly(const LinearParams& p, double alpha = 1.0) {
    return Polynomial{alpha * p.k_h, alpha * p.b_h, alpha * p.m_h + p.m_e};
}

inline Polynomial virtual_spring_poly(const SpringLoopConfig& c) {
    return Polynomial{c.k_ss, c.b_ss};  // b_ss s + k_ss
}

inline Polynomial actuator_poly(const ActuatorParams& a) {
    return Polynomial{a.b_a, a.m_a};  // m_a s + b_a
}

/// Butterworth denominator with all coefficients real, B(0) = wc^n.
inline Polynomial butterworth_den(int order, double wc) {
    Polynomial b = Polynomial::one();
    int k = 0;
    if (order % 2 == 1) {
        b = b * Polynomial{wc, 1.0};
        k = 1;
    }
    for (; k < order; k += 2) {
        const double theta = std::numbers::pi * (order + k + 1) / (2.0 * order);
        // Conjugate pole pair at wc*exp(+-j*theta): s^2 - 2*wc*cos(theta)*s + wc^2.
        b = b * Polynomial{wc * wc, -2.0 * wc * std::cos(theta), 1.0};
    }
    return b;
}

}  // namespace detail

/// Unity-DC Butterworth low-pass used as the observer filter Q.
inline TransferFunction dob_q_filter(const SpringLoopConfig& cfg) {
    if (cfg.q_order < 2) throw Error("dob_q_filter: order must be >= 2");
    const double wc = 2.0 * std::numbers::pi * cfg.q_cutoff_hz;
    return TransferFunction(Polynomial{std::pow(wc, cfg.q_order)},
                            detail::butterworth_den(cfg.q_order, wc));
}

// ---------------------------------------------------------------------------
// Designed plants

/// Open (uncompensated) force plant f_s/f_a =
/// Z_he*Z_s / (Z_he*Z_s + (Z_he+Z_s)*Z_a), cleared of the 1/s factors so no
/// spurious origin pole/zero pairs appear.
inline TransferFunction force_plant_open(const LinearParams& p, const ActuatorParams& a) {
    const Polynomial q = detail::combined_stiffness_poly(p);
    const Polynomial za = detail::actuator_poly(a);
    const Polynomial num = a.k_s * q;
    const Polynomial den = a.k_s * q + Polynomial{0.0, 1.0} * (q + Polynomial{a.k_s}) * za;
    return TransferFunction(num, den);
}

namespace detail {

/// Shared assembly of the DoB-compensated plant family with an arbitrary
/// unity-or-less DC filter Q = nq/dq. Numerator stiffness polynomial q_num
/// lets the amplification variant scale the human term.
inline TransferFunction dob_plant(const Polynomial& q_num, const Polynomial& q_den_poly,
                                  const ActuatorParams& a, const SpringLoopConfig& cfg,
                                  const TransferFunction& Q) {
    const Polynomial zss = virtual_spring_poly(cfg);
    const Polynomial za = actuator_poly(a);
    const Polynomial s = Polynomial{0.0, 1.0};
    // Multiply Eq-form numerator/denominator by s^2 * dq:
    //   num = q_num * zss * dq
    //   den = q * zss * dq + s * za * (q*dq + k_s*(dq - nq))
    const Polynomial num = q_num * zss * Q.den;
    const Polynomial den = q_den_poly * zss * Q.den +
                           s * za * (q_den_poly * Q.den + a.k_s * (Q.den - Q.num));
    return TransferFunction(num, den);
}

}  // namespace detail

/// Spring-force tracking plant P_s(s) = f_s/f_d under the DoB inner loop.
inline TransferFunction force_plant_dob(const LinearParams& p, const ActuatorParams& a,
                                        const SpringLoopConfig& cfg) {
    const Polynomial q = detail::combined_stiffness_poly(p);
    return detail::dob_plant(q, q, a, cfg, dob_q_filter(cfg));
}

/// Same structure but with an explicit Q, used by tests that probe the
/// Q -> 0 and Q -> 1 limits.
inline TransferFunction force_plant_dob_with_q(const LinearParams& p, const ActuatorParams& a,
                                               const SpringLoopConfig& cfg,
                                               const TransferFunction& Q) {
    const Polynomial q = detail::combined_stiffness_poly(p);
    return detail::dob_plant(q, q, a, cfg, Q);
}

/// Amplification-error plant P_alpha(s) = f_alpha/f_d with the loop delay
/// attached. DC gain is exactly alpha.
inline TransferFunction amplification_plant(const LinearParams& p, const ActuatorParams& a,
                                            const SpringLoopConfig& cfg, double alpha,
                                            double delay_s = 0.0) {
    if (alpha < 1.0) throw Error("amplification_plant: alpha must be >= 1");
    const Polynomial q = detail::combined_stiffness_poly(p);
    const Polynomial q_alpha = detail::combined_stiffness_poly(p, alpha);
    TransferFunction g = detail::dob_plant(q_alpha, q, a, cfg, dob_q_filter(cfg));
    return g.with_delay(delay_s);
}

/// Low-frequency approximation Z_{alpha h-e} Z_ss / (Z_{h-e} Z_{ss-a}),
/// valid well below the Q cutoff. Shares the exact zero locations of the
/// full plant.
inline TransferFunction amplification_plant_approx(const LinearParams& p,
                                                   const ActuatorParams& a,
                                                   const SpringLoopConfig& cfg, double alpha,
                                                   double delay_s = 0.0) {
    if (alpha < 1.0) throw Error("amplification_plant_approx: alpha must be >= 1");
    const Polynomial q = detail::combined_stiffness_poly(p);
    const Polynomial q_alpha = detail::combined_stiffness_poly(p, alpha);
    const Polynomial zss = detail::virtual_spring_poly(cfg);
    const Polynomial zsa = Polynomial{cfg.k_ss, a.b_a + cfg.b_ss, a.m_a};
    return TransferFunction(q_alpha * zss, q * zsa, delay_s);
}

// ---------------------------------------------------------------------------
// Characteristic quantities

struct CharacteristicFrequencies {
    double omega_h = 0.0;       // sqrt(k_h/m_h)
    double omega_he = 0.0;      // sqrt(k_h/(m_e+m_h))
    double omega_alpha_he = 0.0;  // sqrt(k_h/(m_e/alpha+m_h))
    double omega_ssa = 0.0;     // sqrt(k_ss/m_a)
    double zeta_he = 0.0;       // b_h/(2*sqrt(k_h*(m_h+m_e)))
};

inline CharacteristicFrequencies characteristic_frequencies(const LinearParams& p,
                                                            const ActuatorParams& a,
                                                            const SpringLoopConfig& cfg,
                                                            double alpha) {
    if (p.k_h <= 0.0)
        throw ZeroStiffness("characteristic_frequencies: k_h = 0 leaves the natural "
                            "frequencies undefined");
    CharacteristicFrequencies f;
    f.omega_h = std::sqrt(p.k_h / p.m_h);
    f.omega_he = std::sqrt(p.k_h / (p.m_e + p.m_h));
    f.omega_alpha_he = std::sqrt(p.k_h / (p.m_e / alpha + p.m_h));
    f.omega_ssa = std::sqrt(cfg.k_ss / a.m_a);
    f.zeta_he = p.b_h / (2.0 * std::sqrt(p.k_h * (p.m_h + p.m_e)));
    return f;
}

/// Invariant-damping-ratio human model: B_h = 2*zeta*sqrt(K_h*(M_h+M_e)).
inline double human_damping_from_zeta(double K_h, double M_h, double M_e, double zeta) {
    return 2.0 * zeta * std::sqrt(K_h * (M_h + M_e));
}

}  // namespace ampx
