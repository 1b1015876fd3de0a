#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

#include "ampx/control.hpp"
#include "ampx/errors.hpp"
#include "ampx/plant.hpp"
#include "ampx/transfer_function.hpp"

namespace ampx {

// ---------------------------------------------------------------------------
// Experiment description

enum class ExperimentKind { step_release, tracking, chirp };
enum class WaveformKind { trapezoid, sinusoid };

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::tracking;
    double duration_s = 20.0;
    double dt = 1e-4;

    // tracking: the operator's commanded joint motion, plus a constant
    // environment torque standing in for the gravity load the rig carries
    // (without it the flat-top equilibrium carries no force at all)
    WaveformKind waveform = WaveformKind::trapezoid;
    double waveform_freq_hz = 0.1;
    double waveform_amplitude_rad = 0.3;
    double tracking_bias_tau_Nm = 5.0;

    // step_release: pre-tensioned external spring torque, dropped at release
    double step_tau_Nm = 15.0;
    double release_time_s = 1.0;

    // chirp: torque command to the spring-force loop (amplification off)
    double chirp_f0_hz = 0.1;
    double chirp_f1_hz = 20.0;
    double chirp_tau_Nm = 4.0;

    // optional clamp on the commanded force magnitude (N); 0 disables
    double saturation_N = 0.0;

    void validate() const {
        if (duration_s <= 0.0) throw ConfigInconsistent("ExperimentSpec: duration <= 0");
        if (dt <= 0.0 || dt > 1e-3)
            throw ConfigInconsistent("ExperimentSpec: require 0 < dt <= 1e-3 s");
    }
};

/// Exogenous input signals as functions of time; the experiment kinds are
/// sugar over these, and tests may inject arbitrary waveforms directly.
struct InputSignals {
    std::function<double(double)> x_cmd = [](double) { return 0.0; };
    std::function<double(double)> v_cmd = [](double) { return 0.0; };
    std::function<double(double)> f_ext = [](double) { return 0.0; };
    std::function<double(double)> f_delta = [](double) { return 0.0; };
    std::function<double(double)> f_d_cmd = [](double) { return 0.0; };
};

// ---------------------------------------------------------------------------
// Closed-loop system (Fig.-2-style interconnection)

/// Explicit ODE + delay-buffer realization of the spring-force loop, DoB and
/// amplification loop around the human--exoskeleton--actuator mechanics.
///
/// The spring-force PD acts through the virtual impedance identity
/// f_a - f_s = (Z_ss/Z_s)(f_r - f_s); the derivative part is absorbed into
/// the momentum-like state w = m_a v_a - (b_ss/k_s)(f_r - f_s), which keeps
/// every right-hand side algebraic in the states. The observer terms
/// Q*(Z_ssa/Z_ss)*f_s and Q*f_r are strictly proper filters realized in
/// controllable-canonical form, so f_r itself stays algebraic.
class ClosedLoopSystem {
  public:
    ClosedLoopSystem(const LinearParams& lp, const ActuatorParams& act,
                     const SpringLoopConfig& spring, const AmplifierConfig& amp,
                     double delay_s, bool amplification_on = true,
                     bool spring_loop_on = true, bool dob_on = true)
        : lp_(lp), act_(act), spring_(spring), amp_(amp), delay_s_(delay_s),
          amplification_on_(amplification_on), spring_loop_on_(spring_loop_on),
          dob_on_(dob_on) {
        if (lp.m_h + lp.m_e <= 0.0 || act.m_a <= 0.0 || act.k_s <= 0.0)
            throw ConfigInconsistent("ClosedLoopSystem: nonpositive inertia or stiffness");
        if (delay_s < 0.0) throw ConfigInconsistent("ClosedLoopSystem: negative delay");
        const TransferFunction Q = dob_q_filter(spring);
        // G1 = Q * Z_{ss-a}/Z_ss, strictly proper for order >= 2.
        const Polynomial zsa{spring.k_ss, act.b_a + spring.b_ss, act.m_a};
        const TransferFunction g1(Q.num * zsa, Q.den * Polynomial{spring.k_ss, spring.b_ss});
        obs_ = to_state_space(g1);
        qf_ = to_state_space(Q);
        n_obs_ = obs_.order();
        n_q_ = qf_.order();
    }

    int state_dim() const { return 4 + n_obs_ + n_q_ + 1; }

    const LinearParams& params() const { return lp_; }
    const ActuatorParams& actuator() const { return act_; }
    const SpringLoopConfig& spring_loop() const { return spring_; }
    const AmplifierConfig& amplifier() const { return amp_; }
    double delay() const { return delay_s_; }
    bool amplification_on() const { return amplification_on_; }
    bool spring_loop_on() const { return spring_loop_on_; }
    bool dob_on() const { return dob_on_; }

    /// Exogenous inputs evaluated at time t.
    struct Inputs {
        double x_cmd = 0.0, v_cmd = 0.0;  // operator intent, linear space
        double f_ext = 0.0;               // environment force on the exoskeleton
        double f_delta = 0.0;             // drive-train disturbance at the motor
        double f_d_cmd = 0.0;             // direct spring-force command (chirp mode)
    };

    /// Algebraic signals reconstructed from a state vector.
    struct Signals {
        double f_s = 0.0, f_c = 0.0, f_r = 0.0, f_d = 0.0, f_alpha = 0.0;
        double v_a = 0.0, a_e = 0.0;
    };

    Signals signals(const Eigen::VectorXd& x, const Inputs& u, double f_d_delayed) const {
        Signals s;
        const double x_e = x(0), v_e = x(1), x_a = x(2), w = x(3);
        s.f_s = act_.k_s * (x_a - x_e);
        s.a_e = (s.f_s + u.f_ext - lp_.b_h * (v_e - u.v_cmd) - lp_.k_h * (x_e - u.x_cmd)) /
                (lp_.m_h + lp_.m_e);
        s.f_c = lp_.m_h * s.a_e + lp_.b_h * (v_e - u.v_cmd) + lp_.k_h * (x_e - u.x_cmd);
        s.f_alpha = (amp_.alpha - 1.0) * s.f_c + s.f_s;
        if (amplification_on_) {
            const double xi = x(4 + n_obs_ + n_q_);
            s.f_d = amp_.k_p * (-s.f_alpha + xi);
        } else {
            s.f_d = u.f_d_cmd;
        }
        if (!spring_loop_on_) {
            s.f_r = 0.0;
            s.v_a = w / act_.m_a;
            return s;
        }
        const double y_obs = dob_on_ ? (obs_.C * x.segment(4, n_obs_)).value() : 0.0;
        const double y_q = (dob_on_ && n_q_ > 0)
                               ? (qf_.C * x.segment(4 + n_obs_, n_q_)).value()
                               : 0.0;
        s.f_r = f_d_delayed - y_obs + y_q;
        s.v_a = (w + spring_.b_ss / act_.k_s * (s.f_r - s.f_s)) / act_.m_a;
        return s;
    }

    void derivative(const Eigen::VectorXd& x, const Inputs& u, double f_d_delayed,
                    Eigen::VectorXd& dx) const {
        const Signals s = signals(x, u, f_d_delayed);
        dx.resize(state_dim());
        dx(0) = x(1);
        dx(1) = s.a_e;
        dx(2) = s.v_a;
        if (spring_loop_on_) {
            dx(3) = spring_.k_ss / act_.k_s * (s.f_r - s.f_s) - act_.b_a * s.v_a + u.f_delta;
            if (dob_on_) {
                dx.segment(4, n_obs_) = obs_.A * x.segment(4, n_obs_) + obs_.B * s.f_s;
                dx.segment(4 + n_obs_, n_q_) =
                    qf_.A * x.segment(4 + n_obs_, n_q_) + qf_.B * s.f_r;
            } else {
                dx.segment(4, n_obs_ + n_q_).setZero();
            }
        } else {
            dx(3) = -s.f_s - act_.b_a * s.v_a + u.f_delta;
            dx.segment(4, n_obs_ + n_q_).setZero();
        }
        const int ixi = 4 + n_obs_ + n_q_;
        dx(ixi) = amplification_on_
                      ? -amp_.p * x(ixi) + (amp_.z - amp_.p) * (-s.f_alpha)
                      : 0.0;
    }

  private:
    LinearParams lp_;
    ActuatorParams act_;
    SpringLoopConfig spring_;
    AmplifierConfig amp_;
    double delay_s_;
    bool amplification_on_;
    bool spring_loop_on_;
    bool dob_on_;
    StateSpaceModel obs_, qf_;
    int n_obs_ = 0, n_q_ = 0;
};

inline ClosedLoopSystem assemble(const LinearParams& lp, const ActuatorParams& act,
                                 const SpringLoopConfig& spring, const AmplifierConfig& amp,
                                 double delay_s, bool amplification_on = true,
                                 bool spring_loop_on = true, bool dob_on = true) {
    return ClosedLoopSystem(lp, act, spring, amp, delay_s, amplification_on, spring_loop_on,
                            dob_on);
}

// ---------------------------------------------------------------------------
// Simulation trace

struct SimTrace {
    std::vector<double> t;
    std::vector<double> theta_e, omega_e;  // rad, rad/s
    std::vector<double> tau_s, tau_c;      // Nm
    std::vector<double> x_e, v_e, x_a, v_a;
    std::vector<double> f_s, f_c, f_d, f_alpha;
    double r = 1.0;
    double dt = 0.0;
    bool diverged = false;

    size_t size() const { return t.size(); }
};

namespace detail {

/// Smooth trapezoid between -A and +A; flat for half of each period, with
/// minimum-jerk transitions (a person holding and moving a limb produces
/// acceleration-continuous motion, not triangle-wave corners).
inline std::pair<double, double> trapezoid_wave(double t, double A, double freq_hz) {
    const double P = 1.0 / freq_hz;
    const double tr = P / 4.0;  // transition duration
    // Phase-shift so the wave starts at 0 mid-rise instead of jumping to -A.
    const double tau = std::fmod(t + 0.5 * tr, P);
    auto blend = [&](double u, double sign) {  // quintic min-jerk from -sA to +sA
        const double x = -1.0 + 2.0 * (u * u * u * (10.0 + u * (-15.0 + 6.0 * u)));
        const double v = 60.0 * u * u * (1.0 - u) * (1.0 - u) / tr;
        return std::pair{sign * A * x, sign * A * v};
    };
    if (tau < tr) return blend(tau / tr, 1.0);
    if (tau < 2.0 * tr) return {A, 0.0};
    if (tau < 3.0 * tr) return blend((tau - 2.0 * tr) / tr, -1.0);
    return {-A, 0.0};
}

inline InputSignals experiment_inputs(const ExperimentSpec& exp, double r) {
    InputSignals in;
    switch (exp.kind) {
        case ExperimentKind::step_release: {
            const double f0 = exp.step_tau_Nm / r;
            const double t_rel = exp.release_time_s;
            in.f_ext = [f0, t_rel](double t) { return t < t_rel ? f0 : 0.0; };
            break;
        }
        case ExperimentKind::tracking: {
            const double A = exp.waveform_amplitude_rad * r;  // linear-space amplitude
            const double f = exp.waveform_freq_hz;
            const double bias = exp.tracking_bias_tau_Nm / r;
            in.f_ext = [bias](double) { return bias; };
            if (exp.waveform == WaveformKind::trapezoid) {
                in.x_cmd = [A, f](double t) { return trapezoid_wave(t, A, f).first; };
                in.v_cmd = [A, f](double t) { return trapezoid_wave(t, A, f).second; };
            } else {
                const double w = 2.0 * std::numbers::pi * f;
                in.x_cmd = [A, w](double t) { return A * std::sin(w * t); };
                in.v_cmd = [A, w](double t) { return A * w * std::cos(w * t); };
            }
            break;
        }
        case ExperimentKind::chirp: {
            const double A = exp.chirp_tau_Nm / r;
            const double f0 = exp.chirp_f0_hz, f1 = exp.chirp_f1_hz, T = exp.duration_s;
            const double lnr = std::log(f1 / f0);
            in.f_d_cmd = [A, f0, T, lnr](double t) {
                // phase of an exponential sweep: 2*pi*f0*T/ln(f1/f0)*(e^{t/T*ln r}-1)
                const double phi =
                    2.0 * std::numbers::pi * f0 * T / lnr * (std::exp(t / T * lnr) - 1.0);
                return A * std::sin(phi);
            };
            break;
        }
    }
    return in;
}

}  // namespace detail

/// Fixed-step RK4 with the loop delay read from a ring buffer of past f_d
/// samples (linear interpolation at stage times). Deterministic; instability
/// is reported through SimTrace::diverged rather than by throwing.
inline SimTrace run(const ClosedLoopSystem& sys, const InputSignals& in, double duration_s,
                    double dt, double saturation_N = 0.0, int record_stride = 1) {
    if (duration_s <= 0.0) throw ConfigInconsistent("run: duration <= 0");
    if (dt <= 0.0 || dt > 1e-3) throw ConfigInconsistent("run: require 0 < dt <= 1e-3 s");
    if (sys.delay() > 0.0 && sys.delay() < dt)
        throw ConfigInconsistent("run: delay shorter than the integration step");
    const int n_steps = static_cast<int>(std::llround(duration_s / dt));
    const double state_bound = 1e7;

    SimTrace tr;
    tr.r = sys.params().r;
    tr.dt = dt * record_stride;
    const size_t cap = static_cast<size_t>(n_steps / record_stride) + 2;
    for (auto* v : {&tr.t, &tr.theta_e, &tr.omega_e, &tr.tau_s, &tr.tau_c, &tr.x_e, &tr.v_e,
                    &tr.x_a, &tr.v_a, &tr.f_s, &tr.f_c, &tr.f_d, &tr.f_alpha})
        v->reserve(cap);

    std::vector<double> fd_hist(static_cast<size_t>(n_steps) + 1, 0.0);
    const double T = sys.delay();
    auto fd_delayed = [&](double t_query) {
        if (T == 0.0) return -1.0;  // unused sentinel; resolved below
        const double tp = t_query - T;
        if (tp <= 0.0) return 0.0;
        const double idx = tp / dt;
        const size_t i0 = static_cast<size_t>(idx);
        const double frac = idx - static_cast<double>(i0);
        return fd_hist[i0] * (1.0 - frac) + fd_hist[i0 + 1] * frac;
    };

    Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.state_dim());
    Eigen::VectorXd k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size()), xt(x.size());

    auto eval_fd = [&](const Eigen::VectorXd& xs, double t) {
        ClosedLoopSystem::Inputs u;
        u.x_cmd = in.x_cmd(t);
        u.v_cmd = in.v_cmd(t);
        u.f_ext = in.f_ext(t);
        u.f_delta = in.f_delta(t);
        u.f_d_cmd = in.f_d_cmd(t);
        double fd = sys.signals(xs, u, 0.0).f_d;
        if (saturation_N > 0.0) fd = std::clamp(fd, -saturation_N, saturation_N);
        return fd;
    };

    auto deriv = [&](const Eigen::VectorXd& xs, double t, Eigen::VectorXd& dx) {
        ClosedLoopSystem::Inputs u;
        u.x_cmd = in.x_cmd(t);
        u.v_cmd = in.v_cmd(t);
        u.f_ext = in.f_ext(t);
        u.f_delta = in.f_delta(t);
        u.f_d_cmd = in.f_d_cmd(t);
        const double fdd = (T == 0.0) ? eval_fd(xs, t) : fd_delayed(t);
        sys.derivative(xs, u, fdd, dx);
    };

    auto record = [&](int step, double t) {
        if (step % record_stride != 0) return;
        ClosedLoopSystem::Inputs u;
        u.x_cmd = in.x_cmd(t);
        u.v_cmd = in.v_cmd(t);
        u.f_ext = in.f_ext(t);
        u.f_delta = in.f_delta(t);
        u.f_d_cmd = in.f_d_cmd(t);
        const double fdd = (T == 0.0) ? eval_fd(x, t) : fd_delayed(t);
        const auto s = sys.signals(x, u, fdd);
        const double r = tr.r;
        tr.t.push_back(t);
        tr.theta_e.push_back(x(0) / r);
        tr.omega_e.push_back(x(1) / r);
        tr.tau_s.push_back(s.f_s * r);
        tr.tau_c.push_back(s.f_c * r);
        tr.x_e.push_back(x(0));
        tr.v_e.push_back(x(1));
        tr.x_a.push_back(x(2));
        tr.v_a.push_back(s.v_a);
        tr.f_s.push_back(s.f_s);
        tr.f_c.push_back(s.f_c);
        tr.f_d.push_back(s.f_d);
        tr.f_alpha.push_back(s.f_alpha);
    };

    fd_hist[0] = eval_fd(x, 0.0);
    record(0, 0.0);
    for (int step = 0; step < n_steps; ++step) {
        const double t = step * dt;
        deriv(x, t, k1);
        xt = x + 0.5 * dt * k1;
        deriv(xt, t + 0.5 * dt, k2);
        xt = x + 0.5 * dt * k2;
        deriv(xt, t + 0.5 * dt, k3);
        xt = x + dt * k3;
        deriv(xt, t + dt, k4);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        const double t_next = (step + 1) * dt;
        if (!x.allFinite() || x.cwiseAbs().maxCoeff() > state_bound) {
            tr.diverged = true;
            break;
        }
        fd_hist[static_cast<size_t>(step) + 1] = eval_fd(x, t_next);
        record(step + 1, t_next);
    }
    return tr;
}

inline SimTrace run(const ClosedLoopSystem& sys, const ExperimentSpec& exp,
                    int record_stride = 1) {
    exp.validate();
    return run(sys, detail::experiment_inputs(exp, sys.params().r), exp.duration_s, exp.dt,
               exp.saturation_N, record_stride);
}

// ---------------------------------------------------------------------------
// Metrics

struct AmplificationMetrics {
    double static_gain = 0.0;          // -tau_s/tau_c over flat-top windows
    double dynamic_gain = 0.0;         // |{-tau_s/tau_c}| at the excitation frequency
    double dynamic_phase_deg = 0.0;
    int flat_windows = 0;
};

namespace detail {

/// Least-squares phasor of y at angular frequency w over [i0, i1).
inline Complex phasor_fit(const std::vector<double>& t, const std::vector<double>& y,
                          size_t i0, size_t i1, double w) {
    // y ~ a*cos(wt) + b*sin(wt) + c
    Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (size_t i = i0; i < i1; ++i) {
        const Eigen::Vector3d row(std::cos(w * t[i]), std::sin(w * t[i]), 1.0);
        M += row * row.transpose();
        rhs += row * y[i];
    }
    const Eigen::Vector3d sol = M.ldlt().solve(rhs);
    return Complex(sol(0), -sol(1));  // a*cos+b*sin = Re{(a - jb) e^{jwt}}
}

}  // namespace detail

/// Static amplification ratio from the flat-top (|omega_e| below 2% of peak)
/// windows, skipping the first waveform period, plus a least-squares phasor
/// ratio at the excitation frequency for dynamic tests.
inline AmplificationMetrics amplification_metrics(const SimTrace& tr, double excitation_hz,
                                                  bool require_flat_top = false) {
    const size_t n = tr.size();
    const double period = 1.0 / excitation_hz;
    if (n < 10 || tr.t.back() < 3.0 * period + period)
        throw InsufficientData("amplification_metrics: trace shorter than one transient "
                               "period plus three excitation periods");
    const size_t skip = static_cast<size_t>(period / tr.dt);

    AmplificationMetrics m;

    // Flat-top static ratio, detected on a moving-average speed envelope so
    // residual ringing does not shred the windows.
    const size_t half_avg = std::max<size_t>(1, static_cast<size_t>(0.1 / tr.dt));
    std::vector<double> speed(n, 0.0);
    {
        double acc = 0.0;
        size_t lo = 0, hi = 0;
        for (size_t i2 = 0; i2 < n; ++i2) {
            const size_t want_hi = std::min(n, i2 + half_avg);
            const size_t want_lo = i2 > half_avg ? i2 - half_avg : 0;
            while (hi < want_hi) acc += std::abs(tr.omega_e[hi++]);
            while (lo < want_lo) acc -= std::abs(tr.omega_e[lo++]);
            speed[i2] = acc / static_cast<double>(hi - lo);
        }
    }
    double peak = 0.0;
    for (size_t i2 = skip; i2 < n; ++i2) peak = std::max(peak, speed[i2]);
    const double thresh = 0.02 * peak;
    double ratio_sum = 0.0;
    size_t i = skip;
    const size_t min_window = static_cast<size_t>(0.5 / tr.dt);  // ignore slivers
    while (i < n) {
        if (speed[i] >= thresh) { ++i; continue; }
        size_t j = i;
        while (j < n && speed[j] < thresh) ++j;
        if (j - i >= min_window) {
            double num = 0.0, den = 0.0;
            for (size_t k = i; k < j; ++k) {
                num += -tr.tau_s[k] * tr.tau_c[k];
                den += tr.tau_c[k] * tr.tau_c[k];
            }
            if (den > 0.0) {
                ratio_sum += num / den;
                ++m.flat_windows;
            }
        }
        i = j;
    }
    if (m.flat_windows > 0) m.static_gain = ratio_sum / m.flat_windows;
    else if (require_flat_top)
        throw NoFlatRegion("amplification_metrics: no settled flat-top window found");

    // Phasor ratio over the last three full periods.
    const double w = 2.0 * std::numbers::pi * excitation_hz;
    const size_t span = static_cast<size_t>(3.0 * period / tr.dt);
    const size_t i0 = n > span ? n - span : 0;
    const Complex ps = detail::phasor_fit(tr.t, tr.tau_s, i0, n, w);
    const Complex pc = detail::phasor_fit(tr.t, tr.tau_c, i0, n, w);
    if (std::abs(pc) > 0.0) {
        const Complex ratio = -ps / pc;
        m.dynamic_gain = std::abs(ratio);
        m.dynamic_phase_deg = std::arg(ratio) * 180.0 / std::numbers::pi;
    }
    return m;
}

struct StepMetrics {
    double growth_ratio = 0.0;    // RMS(tau_c) late window / early window
    double settling_time_s = 0.0; // after release, 5% of peak deviation
    bool unstable = false;
};

/// Envelope diagnosis of a step-release trace: RMS growth of tau_c across
/// the 4 s after release, and the time at which |tau_c - final| last exceeds
/// 5% of the post-release peak.
inline StepMetrics step_metrics(const SimTrace& tr, double release_time_s) {
    StepMetrics m;
    if (tr.diverged) {
        m.unstable = true;
        m.growth_ratio = std::numeric_limits<double>::infinity();
        m.settling_time_s = std::numeric_limits<double>::infinity();
        return m;
    }
    const size_t n = tr.size();
    auto idx = [&](double t) {
        return std::min(n, static_cast<size_t>(std::max(0.0, t / tr.dt)));
    };
    const size_t ir = idx(release_time_s);
    if (ir + 10 >= n) throw InsufficientData("step_metrics: trace ends before release");

    const double final_v = tr.tau_c.back();
    auto rms_dev = [&](size_t a, size_t b) {
        double acc = 0.0;
        for (size_t k = a; k < b; ++k) acc += (tr.tau_c[k] - final_v) * (tr.tau_c[k] - final_v);
        return std::sqrt(acc / static_cast<double>(b - a));
    };
    const size_t i2 = std::min(n, idx(release_time_s + 2.0));
    const size_t i4 = std::min(n, idx(release_time_s + 4.0));
    const double early = rms_dev(ir, i2);
    const double late = i4 > i2 + 10 ? rms_dev(i2, i4) : early;
    m.growth_ratio = early > 0.0 ? late / early : 0.0;
    m.unstable = m.growth_ratio > 1.0;

    double peak = 0.0;
    for (size_t k = ir; k < n; ++k) peak = std::max(peak, std::abs(tr.tau_c[k] - final_v));
    const double band = 0.05 * peak;
    size_t last = ir;
    for (size_t k = ir; k < n; ++k)
        if (std::abs(tr.tau_c[k] - final_v) > band) last = k;
    m.settling_time_s = static_cast<double>(last - ir) * tr.dt;
    return m;
}

struct HumanFit {
    double K_hat = 0.0;   // Nm/rad
    double B_hat = 0.0;   // Nms/rad
    double zeta_hat_Me = 0.0;        // B/(2*sqrt(K*M_e)), as printed in the paper
    double zeta_hat_Mtotal = 0.0;    // B/(2*sqrt(K*(M_h+M_e)))
    double r_squared = 0.0;
};

/// Linear regression tau_c ~ B*omega_e + K*theta_e over the whole trace.
inline HumanFit fit_human_from_trace(const SimTrace& tr, double M_e, double M_h) {
    const size_t n = tr.size();
    if (n < 10) throw InsufficientData("fit_human_from_trace: trace too short");
    Eigen::Matrix2d M = Eigen::Matrix2d::Zero();
    Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
    double yy = 0.0, ysum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const Eigen::Vector2d row(tr.omega_e[i], tr.theta_e[i]);
        M += row * row.transpose();
        rhs += row * tr.tau_c[i];
        yy += tr.tau_c[i] * tr.tau_c[i];
        ysum += tr.tau_c[i];
    }
    const double det = M.determinant();
    const double scale = M.trace() * M.trace() + 1e-300;
    if (std::abs(det) < 1e-12 * scale)
        throw RankDeficient("fit_human_from_trace: theta_e and omega_e are collinear or "
                            "quiescent");
    const Eigen::Vector2d sol = M.inverse() * rhs;
    HumanFit f;
    f.B_hat = sol(0);
    f.K_hat = sol(1);
    const double mean = ysum / static_cast<double>(n);
    double ss_res = 0.0, ss_tot = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double pred = f.B_hat * tr.omega_e[i] + f.K_hat * tr.theta_e[i];
        ss_res += (tr.tau_c[i] - pred) * (tr.tau_c[i] - pred);
        ss_tot += (tr.tau_c[i] - mean) * (tr.tau_c[i] - mean);
    }
    f.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    if (f.K_hat > 0.0) {
        f.zeta_hat_Me = f.B_hat / (2.0 * std::sqrt(f.K_hat * M_e));
        f.zeta_hat_Mtotal = f.B_hat / (2.0 * std::sqrt(f.K_hat * (M_h + M_e)));
    }
    return f;
}

}  // namespace ampx
