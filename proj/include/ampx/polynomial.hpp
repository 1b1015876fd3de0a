#pragma once

#include <cmath>
#include <complex>
#include <initializer_list>
#include <vector>

namespace ampx {

/// Real polynomial in s, coefficients stored in ascending powers:
/// coeffs()[k] multiplies s^k. Trailing (leading-power) zeros are trimmed
/// on construction so degree() is always meaningful. The zero polynomial
/// is represented by the single coefficient {0}.
class Polynomial {
  public:
    Polynomial() : c_{0.0} {}
    Polynomial(std::initializer_list<double> coeffs) : c_(coeffs) { trim(); }
    explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }

    static Polynomial zero() { return Polynomial(); }
    static Polynomial one() { return Polynomial{1.0}; }

    /// Monomial c * s^k.
    static Polynomial term(double c, int k) {
        std::vector<double> v(static_cast<size_t>(k) + 1, 0.0);
        v.back() = c;
        return Polynomial(std::move(v));
    }

    const std::vector<double>& coeffs() const { return c_; }
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const { return c_.size() == 1 && c_[0] == 0.0; }
    double leading() const { return c_.back(); }
    double operator[](size_t k) const { return k < c_.size() ? c_[k] : 0.0; }

    std::complex<double> eval(std::complex<double> s) const {
        std::complex<double> acc = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
        return acc;
    }

    double eval(double s) const {
        double acc = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
        return acc;
    }

    double max_abs_coeff() const {
        double m = 0.0;
        for (double x : c_) m = std::max(m, std::abs(x));
        return m;
    }

    Polynomial derivative() const {
        if (degree() < 1) return zero();
        std::vector<double> d(c_.size() - 1);
        for (size_t k = 1; k < c_.size(); ++k) d[k - 1] = c_[k] * static_cast<double>(k);
        return Polynomial(std::move(d));
    }

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
        std::vector<double> v(std::max(a.c_.size(), b.c_.size()), 0.0);
        for (size_t k = 0; k < a.c_.size(); ++k) v[k] += a.c_[k];
        for (size_t k = 0; k < b.c_.size(); ++k) v[k] += b.c_[k];
        return Polynomial(std::move(v));
    }

    friend Polynomial operator-(const Polynomial& a, const Polynomial& b) {
        std::vector<double> v(std::max(a.c_.size(), b.c_.size()), 0.0);
        for (size_t k = 0; k < a.c_.size(); ++k) v[k] += a.c_[k];
        for (size_t k = 0; k < b.c_.size(); ++k) v[k] -= b.c_[k];
        return Polynomial(std::move(v));
    }

    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        if (a.is_zero() || b.is_zero()) return zero();
        std::vector<double> v(a.c_.size() + b.c_.size() - 1, 0.0);
        for (size_t i = 0; i < a.c_.size(); ++i)
            for (size_t j = 0; j < b.c_.size(); ++j) v[i + j] += a.c_[i] * b.c_[j];
        return Polynomial(std::move(v));
    }

    friend Polynomial operator*(double k, const Polynomial& p) {
        std::vector<double> v = p.c_;
        for (double& x : v) x *= k;
        return Polynomial(std::move(v));
    }

    friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.c_ == b.c_; }

    /// Coefficient-wise closeness relative to the larger coefficient scale.
    friend bool approx_equal(const Polynomial& a, const Polynomial& b, double rtol) {
        const double scale = std::max(a.max_abs_coeff(), b.max_abs_coeff());
        if (scale == 0.0) return true;
        const size_t n = std::max(a.c_.size(), b.c_.size());
        for (size_t k = 0; k < n; ++k)
            if (std::abs(a[k] - b[k]) > rtol * scale) return false;
        return true;
    }

  private:
    void trim() {
        while (c_.size() > 1 && c_.back() == 0.0) c_.pop_back();
        if (c_.empty()) c_.push_back(0.0);
    }

    std::vector<double> c_;
};

}  // namespace ampx
