#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "ampx/control.hpp"
#include "ampx/plant.hpp"
#include "ampx/simulate.hpp"

using namespace ampx;
using Catch::Approx;

namespace {

const ActuatorParams kActuator{796958.0, 250.0, 4500.0};
const SpringLoopConfig kSpringLoop{2.0 * 796958.0, 0.039 * 796958.0, 40.0, 2};
const AmplifierConfig kRobust{10.0, 0.1, 10.0, 0.01};
const AmplifierConfig kAggressive{10.0, 0.1, 30.0, 0.0};

LinearParams make_lp(double K, double B, double M_e, double r = 0.025) {
    return reflect_to_linear({K, B, 0.09}, {std::min(0.1, M_e), M_e - std::min(0.1, M_e), r});
}

LinearParams nominal() { return make_lp(50.18, 4.21, 1.05); }

/// Steady-state phasor of f_s for a sinusoidal force command at w (amp loop off).
Complex measured_force_response(const ClosedLoopSystem& sys, double w) {
    InputSignals in;
    in.f_d_cmd = [w](double t) { return 50.0 * std::sin(w * t); };
    const SimTrace tr = run(sys, in, 12.0, 1e-4);
    REQUIRE_FALSE(tr.diverged);
    const size_t n = tr.size();
    const size_t i0 = n - static_cast<size_t>(3.0 * 2.0 * std::numbers::pi / w / tr.dt);
    return detail::phasor_fit(tr.t, tr.f_s, i0, n, w) / Complex(0.0, -50.0);
}

}  // namespace

TEST_CASE("quiescent system stays quiescent") {
    auto sys = assemble(nominal(), kActuator, kSpringLoop, kRobust, 0.006);
    const SimTrace tr = run(sys, InputSignals{}, 2.0, 1e-4);
    REQUIRE_FALSE(tr.diverged);
    for (size_t i = 0; i < tr.size(); ++i) {
        CHECK(tr.tau_s[i] == 0.0);
        CHECK(tr.theta_e[i] == 0.0);
        CHECK(tr.f_d[i] == 0.0);
    }
}

TEST_CASE("time-domain loop matches the frequency-domain force plant") {
    // Amplification off: the spring-force loop from command to spring force
    // should reproduce the analytic closed-loop transfer at steady state.
    auto sys = assemble(nominal(), kActuator, kSpringLoop, kRobust, 0.0, false, true);
    const TransferFunction ps = force_plant_dob(nominal(), kActuator, kSpringLoop);
    for (double f : {0.5, 2.0, 8.0, 15.0}) {
        const double w = 2.0 * std::numbers::pi * f;
        const Complex H = measured_force_response(sys, w);
        const Complex Href = tf_eval(ps, w);
        CHECK(std::abs(H - Href) / std::abs(Href) < 1e-6);
    }

    // A rigidly held output (huge K_h) reduces the loop to the virtual-
    // impedance quotient Z_ss / Z_ss+a.
    LinearParams stiff = nominal();
    stiff.k_h = 1e9;
    stiff.b_h = 1e5;
    auto frozen = assemble(stiff, kActuator, kSpringLoop, kRobust, 0.0, false, true);
    const TransferFunction zss(Polynomial{kSpringLoop.k_ss, kSpringLoop.b_ss},
                               Polynomial{0.0, 1.0});
    const TransferFunction zssa(
        Polynomial{kSpringLoop.k_ss, kSpringLoop.b_ss + kActuator.b_a, kActuator.m_a},
        Polynomial{0.0, 1.0});
    for (double f : {0.5, 2.0, 8.0}) {
        const double w = 2.0 * std::numbers::pi * f;
        const Complex H = measured_force_response(frozen, w);
        const Complex Href = tf_eval(zss, w) / tf_eval(zssa, w);
        CHECK(std::abs(H - Href) / std::abs(Href) < 1e-3);
    }
}

TEST_CASE("observer loop rejects drive-train disturbance") {
    auto rms_with_observer = [&](bool dob_on) {
        auto sys =
            assemble(nominal(), kActuator, kSpringLoop, kRobust, 0.0, false, true, dob_on);
        InputSignals in;
        in.f_delta = [](double t) { return std::fmod(t, 1.0) < 0.5 ? 200.0 : -200.0; };
        const SimTrace tr = run(sys, in, 10.0, 1e-4);
        REQUIRE_FALSE(tr.diverged);
        double acc = 0.0;
        const size_t n = tr.size(), i0 = n / 2;
        for (size_t i = i0; i < n; ++i) acc += tr.f_s[i] * tr.f_s[i];
        return std::sqrt(acc / static_cast<double>(n - i0));
    };
    const double on = rms_with_observer(true);
    const double off = rms_with_observer(false);
    CHECK(on > 0.0);
    CHECK(off / on > 9.5);  // an order of magnitude below the filter cutoff
}

TEST_CASE("step release envelopes for the identified stiffness pair") {
    auto release = [&](double K, double B, double M_e) {
        auto sys = assemble(make_lp(K, B, M_e), kActuator, kSpringLoop, kAggressive, 0.006);
        ExperimentSpec e;
        e.kind = ExperimentKind::step_release;
        e.duration_s = 8.0;
        const SimTrace tr = run(sys, e);
        REQUIRE_FALSE(tr.diverged);
        return step_metrics(tr, e.release_time_s);
    };

    // Heavy rendered load: the low-stiffness grip rings near the stability
    // boundary (its envelope decays only slowly) while the stiff grip damps
    // out much faster. Both decay; neither trips the growth verdict.
    const StepMetrics soft = release(27.12, 2.34, 1.05);
    CHECK(soft.growth_ratio > 0.4);
    CHECK(soft.growth_ratio < 0.9);
    CHECK_FALSE(soft.unstable);
    CHECK(soft.settling_time_s > 3.0);

    const StepMetrics firm = release(59.34, 3.99, 1.05);
    CHECK(firm.growth_ratio < 0.4);
    CHECK(firm.growth_ratio < soft.growth_ratio);
    CHECK(firm.settling_time_s > 3.0);
    CHECK(firm.settling_time_s < 5.5);

    // With the light rendered load the same grips settle almost immediately.
    CHECK(release(27.12, 2.34, 0.19).settling_time_s < 1.0);
    CHECK(release(59.34, 3.99, 0.19).settling_time_s < 0.5);
}

TEST_CASE("time-domain verdicts agree with loop-gain stability") {
    const auto grid = default_margin_grid();
    for (double K : {7.44, 70.11}) {
        for (double r : {0.005, 0.025}) {
            const double B = human_damping_from_zeta(K, 0.09, 1.05, 0.23);
            const LinearParams lp = make_lp(K, B, 1.05, r);
            const auto rep =
                margins(open_loop(amplification_plant(lp, kActuator, kSpringLoop, 10.0, 0.006),
                                  make_amplification_controller(kAggressive)),
                        grid);
            auto sys = assemble(lp, kActuator, kSpringLoop, kAggressive, 0.006);
            ExperimentSpec e;
            e.kind = ExperimentKind::step_release;
            e.duration_s = 6.0;
            const SimTrace tr = run(sys, e);
            const StepMetrics m = step_metrics(tr, e.release_time_s);
            CHECK(rep.stable == (!tr.diverged && !m.unstable));
        }
    }
}

TEST_CASE("step metrics edge cases") {
    SimTrace blown;
    blown.diverged = true;
    const StepMetrics m = step_metrics(blown, 1.0);
    CHECK(m.unstable);
    CHECK(std::isinf(m.growth_ratio));

    SimTrace stub;
    stub.dt = 0.01;
    for (int i = 0; i < 20; ++i) {
        stub.t.push_back(i * stub.dt);
        stub.tau_c.push_back(0.0);
    }
    CHECK_THROWS_AS(step_metrics(stub, 1.0), InsufficientData);
}

TEST_CASE("amplification metrics on a synthetic exact-ratio trace") {
    SimTrace tr;
    tr.dt = 0.01;
    const double w = 2.0 * std::numbers::pi * 0.1;
    for (int i = 0; i <= 4000; ++i) {
        const double t = i * tr.dt;
        tr.t.push_back(t);
        // a burst of motion mid-trace separates two long settled windows
        tr.omega_e.push_back(t > 12.0 && t < 14.0 ? std::sin(2.0 * std::numbers::pi * t)
                                                  : 0.0);
        const double tc = 2.0 + std::cos(w * t);
        tr.tau_c.push_back(tc);
        tr.tau_s.push_back(-9.0 * tc);
    }
    const auto m = amplification_metrics(tr, 0.1, true);
    CHECK(m.flat_windows == 2);
    CHECK(m.static_gain == Approx(9.0).epsilon(1e-9));
    CHECK(m.dynamic_gain == Approx(9.0).epsilon(1e-6));
    CHECK(m.dynamic_phase_deg == Approx(0.0).margin(1e-4));

    SimTrace tiny;
    tiny.dt = 0.01;
    for (int i = 0; i < 50; ++i) tiny.t.push_back(i * tiny.dt);
    CHECK_THROWS_AS(amplification_metrics(tiny, 0.1), InsufficientData);
}

TEST_CASE("tracking experiments reach the designed amplification") {
    auto sys = assemble(nominal(), kActuator, kSpringLoop, kRobust, 0.006);

    // Slow hold-and-move: flat tops carry the bias load at nearly the full
    // designed ratio (finite DC loop gain leaves it just short of alpha - 1).
    ExperimentSpec hold;
    hold.duration_s = 40.0;
    hold.dt = 2e-4;
    const auto ms = amplification_metrics(run(sys, hold), 0.1, true);
    CHECK(ms.flat_windows >= 4);
    CHECK(ms.static_gain > 8.5);
    CHECK(ms.static_gain < 9.0);

    // 1 Hz sinusoid: dynamic ratio rolls off and lags, matching the
    // closed-loop prediction from the loop transfer.
    ExperimentSpec dyn;
    dyn.waveform = WaveformKind::sinusoid;
    dyn.waveform_freq_hz = 1.0;
    dyn.duration_s = 10.0;
    dyn.dt = 2e-4;
    const SimTrace trd = run(sys, dyn);
    const auto md = amplification_metrics(trd, 1.0);
    const Complex pred = expected_amplification(
        kRobust, force_plant_dob(nominal(), kActuator, kSpringLoop).with_delay(0.006),
        2.0 * std::numbers::pi);
    CHECK(md.dynamic_gain == Approx(std::abs(pred)).epsilon(0.05));
    CHECK(md.dynamic_phase_deg ==
          Approx(std::arg(pred) * 180.0 / std::numbers::pi).margin(3.0));
    CHECK(md.dynamic_gain > 1.2);
    CHECK(md.dynamic_gain < 1.8);
    CHECK(md.dynamic_phase_deg > -65.0);
    CHECK(md.dynamic_phase_deg < -45.0);

    // Continuous motion has no settled window to average over.
    CHECK_THROWS_AS(amplification_metrics(trd, 1.0, true), NoFlatRegion);
}

TEST_CASE("human impedance fit from a trace") {
    // Exact synthetic round trip.
    SimTrace tr;
    tr.dt = 1e-3;
    const double K = 59.34, B = 3.99;
    for (int i = 0; i <= 20000; ++i) {
        const double t = i * tr.dt;
        tr.t.push_back(t);
        tr.theta_e.push_back(0.1 * std::sin(1.3 * t) + 0.05 * std::sin(0.4 * t));
        tr.omega_e.push_back(0.13 * std::cos(1.3 * t) + 0.02 * std::cos(0.4 * t));
        tr.tau_c.push_back(B * tr.omega_e.back() + K * tr.theta_e.back());
    }
    const HumanFit f = fit_human_from_trace(tr, 1.05, 0.09);
    CHECK(f.K_hat == Approx(K).epsilon(0.01));
    CHECK(f.B_hat == Approx(B).epsilon(0.01));
    CHECK(f.r_squared == Approx(1.0).margin(1e-9));
    CHECK(f.zeta_hat_Me == Approx(B / (2.0 * std::sqrt(K * 1.05))).epsilon(0.02));

    // Pure stiffness: damping estimate collapses to zero.
    SimTrace ks;
    ks.dt = 1e-2;
    for (int i = 0; i <= 5000; ++i) {
        const double t = i * ks.dt;
        ks.t.push_back(t);
        ks.theta_e.push_back(std::sin(0.1 * t));
        ks.omega_e.push_back(0.1 * std::cos(0.1 * t));
        ks.tau_c.push_back(40.0 * ks.theta_e.back());
    }
    const HumanFit fk = fit_human_from_trace(ks, 1.05, 0.09);
    CHECK(fk.K_hat == Approx(40.0).epsilon(1e-6));
    CHECK(fk.B_hat == Approx(0.0).margin(1e-6));

    // A quiescent trace has no information.
    SimTrace flat;
    flat.dt = 1e-2;
    for (int i = 0; i < 100; ++i) {
        flat.t.push_back(i * flat.dt);
        flat.theta_e.push_back(0.0);
        flat.omega_e.push_back(0.0);
        flat.tau_c.push_back(0.0);
    }
    CHECK_THROWS_AS(fit_human_from_trace(flat, 1.05, 0.09), RankDeficient);
}

TEST_CASE("impedance fit on a simulated release ring") {
    // The two-regressor fit omits the inertial torque, so the ring-frequency
    // content pulls K down and the damping ratio up a few hundredths relative
    // to the generating parameters; the fit still explains the trace.
    auto sys = assemble(make_lp(27.12, 2.34, 1.05), kActuator, kSpringLoop, kAggressive,
                        0.006);
    ExperimentSpec e;
    e.kind = ExperimentKind::step_release;
    e.duration_s = 8.0;
    const HumanFit f = fit_human_from_trace(run(sys, e), 1.05, 0.09);
    CHECK(f.r_squared > 0.99);
    CHECK(f.B_hat == Approx(2.34).epsilon(0.02));
    CHECK(f.K_hat < 27.12);
    CHECK(f.K_hat > 15.0);
    CHECK(f.zeta_hat_Me > 0.20);
    CHECK(f.zeta_hat_Me < 0.30);
}

TEST_CASE("mechanical energy decays with both loops off") {
    const LinearParams lp = nominal();
    auto sys = assemble(lp, kActuator, kSpringLoop, kRobust, 0.0, false, false);
    ExperimentSpec e;
    e.kind = ExperimentKind::step_release;
    e.duration_s = 8.0;
    const SimTrace tr = run(sys, e);
    REQUIRE_FALSE(tr.diverged);
    const size_t ir = static_cast<size_t>(e.release_time_s / tr.dt) + 5;
    double prev = 1e300;
    double worst = -1e300;
    for (size_t i = ir; i < tr.size(); ++i) {
        const double ds = tr.x_a[i] - tr.x_e[i];
        const double E = 0.5 * (lp.m_h + lp.m_e) * tr.v_e[i] * tr.v_e[i] +
                         0.5 * kActuator.m_a * tr.v_a[i] * tr.v_a[i] +
                         0.5 * kActuator.k_s * ds * ds + 0.5 * lp.k_h * tr.x_e[i] * tr.x_e[i];
        if (i > ir) worst = std::max(worst, E - prev);
        prev = E;
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("response is linear in the input amplitude") {
    auto sys = assemble(nominal(), kActuator, kSpringLoop, kRobust, 0.006);
    ExperimentSpec e;
    e.kind = ExperimentKind::step_release;
    e.duration_s = 4.0;
    const SimTrace a = run(sys, e);
    e.step_tau_Nm *= 3.0;
    const SimTrace b = run(sys, e);
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(b.tau_s[i] - 3.0 * a.tau_s[i]));
    CHECK(worst < 1e-9);
}

TEST_CASE("integration step is converged") {
    auto sys = assemble(nominal(), kActuator, kSpringLoop, kRobust, 0.006);
    ExperimentSpec e;
    e.duration_s = 5.0;
    e.dt = 1e-4;
    const SimTrace coarse = run(sys, e);
    e.dt = 5e-5;
    const SimTrace fine = run(sys, e);
    const double ref = std::abs(fine.tau_s.back());
    CHECK(std::abs(coarse.tau_s.back() - fine.tau_s.back()) / ref < 1e-4);
}

TEST_CASE("run rejects inconsistent timing") {
    auto sys = assemble(nominal(), kActuator, kSpringLoop, kRobust, 0.006);
    ExperimentSpec e;
    e.dt = 0.0;
    CHECK_THROWS_AS(run(sys, e), ConfigInconsistent);
    e.dt = 0.008;  // coarser than the loop delay
    CHECK_THROWS_AS(run(sys, e), ConfigInconsistent);
    e.dt = 1e-4;
    e.duration_s = -1.0;
    CHECK_THROWS_AS(run(sys, e), ConfigInconsistent);
}
