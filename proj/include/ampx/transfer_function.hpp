#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "ampx/errors.hpp"
#include "ampx/polynomial.hpp"

namespace ampx {

using Complex = std::complex<double>;

/// Rational transfer function num(s)/den(s) * exp(-s*delay_s).
/// Properness is not required: improper impedances (e.g. m*s + b + k/s
/// written over a common denominator s) are first-class values.
struct TransferFunction {
    Polynomial num;
    Polynomial den{1.0};
    double delay_s = 0.0;

    TransferFunction() = default;
    TransferFunction(Polynomial n, Polynomial d, double delay = 0.0)
        : num(std::move(n)), den(std::move(d)), delay_s(delay) {
        if (den.is_zero()) throw Error("TransferFunction: zero denominator");
        if (delay_s < 0.0) throw Error("TransferFunction: negative delay");
    }

    static TransferFunction constant(double k) {
        return TransferFunction(Polynomial{k}, Polynomial{1.0});
    }

    bool is_proper() const { return num.degree() <= den.degree(); }
    int relative_degree() const { return den.degree() - num.degree(); }

    TransferFunction with_delay(double delay) const {
        return TransferFunction(num, den, delay);
    }
};

/// Sampled frequency response on a strictly increasing positive grid.
struct FrequencyResponse {
    std::vector<double> omegas;   // rad/s
    std::vector<Complex> values;
};

/// Controllable-canonical realization of a proper transfer function.
struct StateSpaceModel {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
    double D = 0.0;
    double delay_s = 0.0;

    int order() const { return static_cast<int>(A.rows()); }

    Complex eval(double omega) const {
        const int n = order();
        Eigen::MatrixXcd M = Complex(0.0, omega) * Eigen::MatrixXcd::Identity(n, n) -
                             A.cast<Complex>();
        Eigen::VectorXcd x = M.partialPivLu().solve(B.cast<Complex>());
        Complex h = (C.cast<Complex>() * x)(0) + D;
        return h * std::exp(Complex(0.0, -omega * delay_s));
    }
};

// ---------------------------------------------------------------------------
// Algebra

inline TransferFunction tf_series(const TransferFunction& g, const TransferFunction& h) {
    return TransferFunction(g.num * h.num, g.den * h.den, g.delay_s + h.delay_s);
}

inline TransferFunction tf_parallel(const TransferFunction& g, const TransferFunction& h) {
    if (g.delay_s != h.delay_s)
        throw DelayMismatch("tf_parallel: delays differ (" + std::to_string(g.delay_s) +
                            " vs " + std::to_string(h.delay_s) + ")");
    return TransferFunction(g.num * h.den + h.num * g.den, g.den * h.den, g.delay_s);
}

/// Closes the unity-path loop g/(1+g*h). Exact rational form exists only for
/// delay-free loops; delayed loops must go through Padé or stay in the
/// frequency domain.
inline TransferFunction tf_feedback(const TransferFunction& g, const TransferFunction& h) {
    if (g.delay_s + h.delay_s > 0.0)
        throw DelayedFeedbackUnsupported(
            "tf_feedback: loop contains transport delay; use a Pade approximation "
            "or frequency-domain evaluation");
    // g/(1+gh) = g.num*h.den / (g.den*h.den + g.num*h.num)
    Polynomial den = g.den * h.den + g.num * h.num;
    if (den.is_zero()) throw DegenerateLoop("tf_feedback: 1 + g*h is identically zero");
    return TransferFunction(g.num * h.den, den, 0.0);
}

inline Complex tf_eval(const TransferFunction& g, double omega) {
    const Complex jw(0.0, omega);
    const Complex d = g.den.eval(jw);
    // Scale against the worst-case magnitude sum so the test tracks actual
    // cancellation rather than raw coefficient size.
    double scale = 1e-300;
    double wk = 1.0;
    for (double c : g.den.coeffs()) {
        scale += std::abs(c) * wk;
        wk *= std::abs(omega);
    }
    if (std::abs(d) < 1e-13 * scale)
        throw PoleOnAxis("tf_eval: denominator vanishes at omega = " + std::to_string(omega));
    return g.num.eval(jw) / d * std::exp(Complex(0.0, -omega * g.delay_s));
}

inline FrequencyResponse tf_eval_grid(const TransferFunction& g,
                                      const std::vector<double>& omegas) {
    FrequencyResponse fr;
    fr.omegas = omegas;
    fr.values.reserve(omegas.size());
    for (double w : omegas) fr.values.push_back(tf_eval(g, w));
    return fr;
}

inline std::vector<double> log_grid(double w_lo, double w_hi, int n) {
    std::vector<double> w(static_cast<size_t>(n));
    const double a = std::log(w_lo), b = std::log(w_hi);
    for (int i = 0; i < n; ++i)
        w[static_cast<size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
    return w;
}

// ---------------------------------------------------------------------------
// Roots

namespace detail {

/// Parlett-Reinsch style balancing by powers of two; improves eigenvalue
/// conditioning of companion matrices whose entries span many decades.
inline void balance_in_place(Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    bool changed = true;
    int sweeps = 0;
    while (changed && sweeps++ < 50) {
        changed = false;
        for (int i = 0; i < n; ++i) {
            double r = 0.0, c = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                r += std::abs(m(i, j));
                c += std::abs(m(j, i));
            }
            if (r == 0.0 || c == 0.0) continue;
            double f = 1.0;
            const double s = r + c;
            while (c < r / 2.0) { c *= 2.0; r /= 2.0; f *= 2.0; }
            while (c > r * 2.0) { c /= 2.0; r *= 2.0; f /= 2.0; }
            if (c + r < 0.95 * s) {
                changed = true;
                m.row(i) /= f;
                m.col(i) *= f;
            }
        }
    }
}

}  // namespace detail

/// All roots of a polynomial via balanced companion-matrix eigenvalues.
/// Conjugate pairs come out adjacent (positive imaginary part first).
inline std::vector<Complex> poly_roots(const Polynomial& p) {
    if (p.is_zero() || p.degree() == 0) return {};
    const auto& c = p.coeffs();
    int n = p.degree();
    // Monic-normalize; strip exact zero roots at the origin first.
    int zeros_at_origin = 0;
    while (zeros_at_origin < n && c[static_cast<size_t>(zeros_at_origin)] == 0.0)
        ++zeros_at_origin;
    const int m = n - zeros_at_origin;
    std::vector<Complex> roots(static_cast<size_t>(zeros_at_origin), Complex(0.0, 0.0));
    if (m > 0) {
        Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(m, m);
        const double lead = c[static_cast<size_t>(n)];
        for (int k = 0; k < m; ++k)
            comp(0, k) = -c[static_cast<size_t>(n - 1 - k)] / lead;
        for (int k = 1; k < m; ++k) comp(k, k - 1) = 1.0;
        detail::balance_in_place(comp);
        Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);
        for (int k = 0; k < m; ++k) roots.push_back(es.eigenvalues()(k));
    }
    // Adjacent conjugate ordering: sort by (|Im| bucket via real part, then Im desc).
    std::sort(roots.begin(), roots.end(), [](const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() > b.imag();
    });
    return roots;
}

/// Worst relative residual |p(r)| / (max|coeff| * max(1,|r|)^deg) over roots.
inline double root_residual(const Polynomial& p, const std::vector<Complex>& roots) {
    double worst = 0.0;
    const double scale = p.max_abs_coeff();
    for (const Complex& r : roots) {
        const double denom = scale * std::pow(std::max(1.0, std::abs(r)), p.degree());
        worst = std::max(worst, std::abs(p.eval(r)) / denom);
    }
    return worst;
}

inline std::vector<Complex> tf_poles(const TransferFunction& g) {
    if (g.den.degree() < 1) return {};
    return poly_roots(g.den);
}

inline std::vector<Complex> tf_zeros(const TransferFunction& g) {
    return poly_roots(g.num);
}

struct HurwitzResult {
    bool stable = false;
    double margin = 0.0;  // max real part over poles
};

/// Pole-location stability for delay-free systems.
inline HurwitzResult is_hurwitz(const TransferFunction& g) {
    if (g.delay_s > 0.0)
        throw DelayedSystem("is_hurwitz: delayed system; judge by frequency-domain margins");
    const auto poles = tf_poles(g);
    if (poles.empty()) return {true, -std::numeric_limits<double>::infinity()};
    double worst = -std::numeric_limits<double>::infinity();
    for (const Complex& p : poles) worst = std::max(worst, p.real());
    return {worst < 0.0, worst};
}

// ---------------------------------------------------------------------------
// Delay approximation and realization

/// 2nd-order Pade rational approximation of exp(-s*T).
inline TransferFunction pade2_delay(double T) {
    if (T == 0.0) return TransferFunction::constant(1.0);
    return TransferFunction(Polynomial{12.0, -6.0 * T, T * T},
                            Polynomial{12.0, 6.0 * T, T * T});
}

/// Replaces the transport delay by its 2nd-order Pade factor so pole-based
/// diagnostics can run on a purely rational model.
inline TransferFunction fold_delay_pade2(const TransferFunction& g) {
    if (g.delay_s == 0.0) return g;
    TransferFunction p = pade2_delay(g.delay_s);
    return TransferFunction(g.num * p.num, g.den * p.den, 0.0);
}

inline StateSpaceModel to_state_space(const TransferFunction& g) {
    if (!g.is_proper())
        throw ImproperSystem("to_state_space: numerator degree exceeds denominator degree");
    const int n = g.den.degree();
    const double dn = g.den.leading();
    StateSpaceModel ss;
    ss.delay_s = g.delay_s;
    if (n == 0) {
        ss.A.resize(0, 0);
        ss.B.resize(0);
        ss.C.resize(0);
        ss.D = g.num[0] / dn;
        return ss;
    }
    // Normalize to monic denominator; split off feedthrough.
    std::vector<double> a(static_cast<size_t>(n));   // den = s^n + a[n-1]s^{n-1}+...+a[0]
    for (int k = 0; k < n; ++k) a[static_cast<size_t>(k)] = g.den[static_cast<size_t>(k)] / dn;
    const double d = (g.num.degree() == n) ? g.num.leading() / dn : 0.0;
    std::vector<double> b(static_cast<size_t>(n), 0.0);  // num - d*den, degree < n
    for (int k = 0; k < n; ++k)
        b[static_cast<size_t>(k)] =
            g.num[static_cast<size_t>(k)] / dn - d * a[static_cast<size_t>(k)];
    ss.A = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n - 1; ++k) ss.A(k, k + 1) = 1.0;
    for (int k = 0; k < n; ++k) ss.A(n - 1, k) = -a[static_cast<size_t>(k)];
    ss.B = Eigen::VectorXd::Zero(n);
    ss.B(n - 1) = 1.0;
    ss.C = Eigen::RowVectorXd::Zero(n);
    for (int k = 0; k < n; ++k) ss.C(k) = b[static_cast<size_t>(k)];
    ss.D = d;
    return ss;
}

}  // namespace ampx
