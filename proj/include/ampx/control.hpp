#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "ampx/errors.hpp"
#include "ampx/plant.hpp"
#include "ampx/transfer_function.hpp"

namespace ampx {

/// PI amplification compensator C(s) = k_p (s+z)/(s+p); p = 0 is an ideal
/// integrator, a small p > 0 gives the leaky form used on hardware.
struct AmplifierConfig {
    double alpha = 10.0;
    double k_p = 0.1;
    double z = 10.0;   // rad/s
    double p = 0.0;    // rad/s, 0 <= p < z

    void validate() const {
        if (alpha < 1.0) throw Error("AmplifierConfig: alpha must be >= 1");
        if (k_p <= 0.0) throw Error("AmplifierConfig: k_p must be > 0");
        if (z <= 0.0) throw Error("AmplifierConfig: z must be > 0");
        if (p < 0.0 || p >= z) throw Error("AmplifierConfig: require 0 <= p < z");
    }
};

inline TransferFunction make_amplification_controller(const AmplifierConfig& cfg) {
    cfg.validate();
    return TransferFunction(cfg.k_p * Polynomial{cfg.z, 1.0}, Polynomial{cfg.p, 1.0});
}

inline TransferFunction open_loop(const TransferFunction& plant,
                                  const TransferFunction& controller) {
    return tf_series(controller, plant);
}

// ---------------------------------------------------------------------------
// Margins

struct Crossover {
    double omega_c = 0.0;       // rad/s
    double phase_margin = 0.0;  // deg
};

struct MarginReport {
    std::vector<Crossover> crossovers;           // sorted by omega_c
    std::optional<double> gain_margin_db;
    bool stable = false;
    std::optional<double> worst_pm;              // deg, min over crossovers
};

namespace detail {

inline double principal_deg(Complex v) {
    return std::arg(v) * 180.0 / std::numbers::pi;
}

/// Continuous (unwrapped) phase in degrees along an increasing grid,
/// anchored at the principal value of the first point.
inline std::vector<double> unwrap_phase_deg(const std::vector<Complex>& vals) {
    std::vector<double> ph(vals.size());
    if (vals.empty()) return ph;
    ph[0] = principal_deg(vals[0]);
    for (size_t i = 1; i < vals.size(); ++i) {
        double d = principal_deg(vals[i]) - principal_deg(vals[i - 1]);
        while (d > 180.0) d -= 360.0;
        while (d < -180.0) d += 360.0;
        ph[i] = ph[i - 1] + d;
    }
    return ph;
}

/// Accumulated argument change (degrees) of f(jw)+shift from w_lo to w_hi,
/// recursively refined so no single segment turns more than ~30 degrees.
inline double winding_angle_deg(const TransferFunction& L, double w_lo, double w_hi,
                                Complex v_lo, Complex v_hi, int depth) {
    double d = principal_deg(v_hi) - principal_deg(v_lo);
    while (d > 180.0) d -= 360.0;
    while (d < -180.0) d += 360.0;
    if (std::abs(d) <= 30.0 || depth >= 40) return d;
    const double w_mid = std::sqrt(w_lo * w_hi);
    const Complex v_mid = tf_eval(L, w_mid) + 1.0;
    return winding_angle_deg(L, w_lo, w_mid, v_lo, v_mid, depth + 1) +
           winding_angle_deg(L, w_mid, w_hi, v_mid, v_hi, depth + 1);
}

}  // namespace detail

/// Gain/phase margins and a delay-exact Nyquist stability verdict for an
/// open-loop transfer function L. Unity-gain crossings are located by
/// bisection on the supplied grid; the verdict comes from the winding number
/// of 1+L(jw) (conjugate symmetry doubles the positive-frequency sweep, and
/// integrator poles contribute their indentation arcs), compared against the
/// count of open right-half-plane poles of the rational part.
inline MarginReport margins(const TransferFunction& L, const std::vector<double>& omega_grid) {
    if (omega_grid.size() < 2) throw Error("margins: omega grid too small");
    MarginReport rep;

    std::vector<double> mag(omega_grid.size());
    std::vector<Complex> vals(omega_grid.size());
    for (size_t i = 0; i < omega_grid.size(); ++i) {
        vals[i] = tf_eval(L, omega_grid[i]);
        mag[i] = std::abs(vals[i]);
    }
    const std::vector<double> phase = detail::unwrap_phase_deg(vals);

    // Unity-gain crossovers by bisection on |L|-1.
    for (size_t i = 0; i + 1 < omega_grid.size(); ++i) {
        const double a = mag[i] - 1.0, b = mag[i + 1] - 1.0;
        if (a == 0.0) {  // grid point lands exactly on the crossover
            rep.crossovers.push_back({omega_grid[i], 180.0 + phase[i]});
            continue;
        }
        if (a * b >= 0.0) continue;
        double lo = omega_grid[i], hi = omega_grid[i + 1];
        for (int it = 0; it < 100 && (hi - lo) > 1e-6 * lo; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = std::abs(tf_eval(L, mid)) - 1.0;
            if (fm == 0.0) { lo = hi = mid; break; }
            ((a < 0.0) == (fm < 0.0) ? lo : hi) = mid;
        }
        const double wc = 0.5 * (lo + hi);
        // Phase at wc, unwrapped relative to the nearest grid point below.
        double ph = detail::principal_deg(tf_eval(L, wc));
        double ref = phase[i];
        while (ph - ref > 180.0) ph -= 360.0;
        while (ph - ref < -180.0) ph += 360.0;
        rep.crossovers.push_back({wc, 180.0 + ph});
    }
    if (!rep.crossovers.empty()) {
        double worst = rep.crossovers.front().phase_margin;
        for (const auto& c : rep.crossovers) worst = std::min(worst, c.phase_margin);
        rep.worst_pm = worst;
    }

    // Gain margin at -180 deg (mod 360) phase crossings of the unwrapped phase.
    for (size_t i = 0; i + 1 < omega_grid.size(); ++i) {
        for (double target = -180.0; target > phase[i + 1] - 360.0; target -= 360.0) {
            const double a = phase[i] - target, b = phase[i + 1] - target;
            if (a == 0.0 || a * b >= 0.0) continue;
            double lo = omega_grid[i], hi = omega_grid[i + 1];
            double plo = a;
            for (int it = 0; it < 100 && (hi - lo) > 1e-9 * lo; ++it) {
                const double mid = 0.5 * (lo + hi);
                double pm = detail::principal_deg(tf_eval(L, mid)) - target;
                while (pm > 180.0) pm -= 360.0;
                while (pm < -180.0) pm += 360.0;
                if ((plo < 0.0) == (pm < 0.0)) lo = mid; else hi = mid;
            }
            const double gm = -20.0 * std::log10(std::abs(tf_eval(L, 0.5 * (lo + hi))));
            if (!rep.gain_margin_db || gm < *rep.gain_margin_db) rep.gain_margin_db = gm;
        }
    }

    // Nyquist winding count.
    const auto poles = tf_poles(L);
    const double pole_scale = [&] {
        double m = 1.0;
        for (const auto& p : poles) m = std::max(m, std::abs(p));
        return m;
    }();
    int origin_poles = 0, rhp_poles = 0;
    for (const auto& p : poles) {
        if (std::abs(p) < 1e-9 * pole_scale) ++origin_poles;
        else if (p.real() > 1e-9 * pole_scale) ++rhp_poles;
    }
    double half_sweep = 0.0;
    Complex prev = vals[0] + 1.0;
    for (size_t i = 1; i < omega_grid.size(); ++i) {
        const Complex cur = vals[i] + 1.0;
        half_sweep +=
            detail::winding_angle_deg(L, omega_grid[i - 1], omega_grid[i], prev, cur, 0);
        prev = cur;
    }
    // Tail toward infinity: 1+L -> 1, so close back to zero argument.
    half_sweep -= detail::principal_deg(vals.back() + 1.0);
    if (origin_poles == 0) {
        // Head toward DC: 1+L(0) is real, argument 0 or +-180.
        const double arg_lo = detail::principal_deg(vals.front() + 1.0);
        double arg0 = 0.0;
        const double den0 = L.den[0];
        if (den0 != 0.0 && L.num[0] / den0 < -1.0) arg0 = arg_lo >= 0.0 ? 180.0 : -180.0;
        half_sweep += arg_lo - arg0;
    }
    // Origin poles map the indentation arc to -180 deg each at infinity.
    const double full_turns = (2.0 * half_sweep - 180.0 * origin_poles) / 360.0;
    const int encirclements_ccw = static_cast<int>(std::lround(full_turns));
    rep.stable = (rhp_poles - encirclements_ccw) == 0;
    return rep;
}

/// Default analysis grid satisfying the margins precondition.
inline std::vector<double> default_margin_grid(double w_lo = 1e-2, double w_hi = 1e4,
                                               int n = 400) {
    return log_grid(w_lo, w_hi, n);
}

// ---------------------------------------------------------------------------
// Ensemble sweeps

struct Range {
    double lo = 0.0, hi = 0.0;
    int count = 1;

    double at(int i) const {
        if (count <= 1) return lo;
        return lo + (hi - lo) * i / (count - 1);
    }
};

/// Uncertain-plant grid: K_h x M_e x r with B_h generated from the invariant
/// damping ratio.
struct EnsembleSpec {
    Range K_h;               // Nm/rad
    Range M_e;               // kg m^2 (count 1 => fixed)
    Range r;                 // m
    double zeta = 0.23;
    double delay_s = 0.006;
    double M_h = 0.09;       // kg m^2, subject held constant
    double M_e_bar = 0.1;    // kg m^2, split of M_e into frame + load

    void validate() const {
        if (K_h.lo > K_h.hi || M_e.lo > M_e.hi || r.lo > r.hi)
            throw Error("EnsembleSpec: range lo > hi");
        if (K_h.count < 1 || M_e.count < 1 || r.count < 1)
            throw Error("EnsembleSpec: counts must be >= 1");
        if (zeta <= 0.0) throw Error("EnsembleSpec: zeta must be > 0");
    }

    int size() const { return K_h.count * M_e.count * r.count; }
};

struct EnsembleMember {
    HumanParams human;
    ExoParams exo;
    MarginReport report;
};

/// Worst-case margin sweep over the Cartesian grid (K_h outer, M_e middle,
/// r inner) with the PI compensator closed around P_alpha.
inline std::vector<EnsembleMember> ensemble_sweep(const EnsembleSpec& spec,
                                                  const ActuatorParams& act,
                                                  const SpringLoopConfig& spring,
                                                  const AmplifierConfig& amp,
                                                  const std::vector<double>& grid) {
    spec.validate();
    const TransferFunction controller = make_amplification_controller(amp);
    std::vector<EnsembleMember> out;
    out.reserve(static_cast<size_t>(spec.size()));
    for (int ik = 0; ik < spec.K_h.count; ++ik) {
        for (int im = 0; im < spec.M_e.count; ++im) {
            for (int ir = 0; ir < spec.r.count; ++ir) {
                EnsembleMember m;
                const double K = spec.K_h.at(ik);
                const double Me = spec.M_e.at(im);
                m.human = {K, human_damping_from_zeta(K, spec.M_h, Me, spec.zeta), spec.M_h};
                m.exo = {std::min(spec.M_e_bar, Me), Me - std::min(spec.M_e_bar, Me),
                         spec.r.at(ir)};
                const LinearParams lp = reflect_to_linear(m.human, m.exo);
                const TransferFunction plant =
                    amplification_plant(lp, act, spring, amp.alpha, spec.delay_s);
                m.report = margins(open_loop(plant, controller), grid);
                out.push_back(std::move(m));
            }
        }
    }
    return out;
}

/// Model prediction of the amplification tracking ratio -f_s/f_c:
/// (alpha-1) * L/(1+L) at jw with L = C_alpha * P_s (loop delay included
/// via P_s.delay_s).
inline Complex expected_amplification(const AmplifierConfig& amp, const TransferFunction& P_s,
                                      double omega) {
    const TransferFunction L = tf_series(make_amplification_controller(amp), P_s);
    const Complex l = tf_eval(L, omega);
    if (std::abs(1.0 + l) < 1e-12)
        throw DegenerateLoop("expected_amplification: 1 + L vanishes at this frequency");
    return (amp.alpha - 1.0) * l / (1.0 + l);
}

}  // namespace ampx
