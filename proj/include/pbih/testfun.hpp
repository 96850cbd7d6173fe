#ifndef PBIH_TESTFUN_HPP
#define PBIH_TESTFUN_HPP

/// \file testfun.hpp
/// The radial bump test functions, their Laplacians, and the constants built
/// from them (sigma, K, eta, Phi, r).
///
/// Every constant is assembled in log space: 2^{5p+1} alone overflows a
/// double near p = 200, and p is unbounded above.

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pbih/core.hpp"
#include "pbih/numerics.hpp"

namespace pbih::testfun {

inline constexpr double kLn2 = 0.693147180559945309417232121458176568;
inline constexpr double kLnPi = 1.14472988584940017414342735135305871;
inline constexpr double kLn3 = 1.09861228866810969139524523692252570;

/// Radial test function: flat top `delta` on [0, inner), a C^1 polynomial
/// shoulder on [inner, outer), zero beyond.
///
/// The u_delta shape (inner = tau/2, outer = tau) and the v_delta shape
/// (arbitrary 0 < r1 < r2) are evaluated by their own closed forms, so the
/// identity v_delta(tau/2, tau) == u_delta is a genuine cross-check.
class RadialTestFunction {
  public:
    static RadialTestFunction u_delta(double tau, double delta) {
        if (!(tau > 0.0))
            throw std::invalid_argument("u_delta: tau must be positive");
        return RadialTestFunction(tau, delta, std::nullopt);
    }

    static RadialTestFunction v_delta(double r1, double r2, double delta) {
        if (!(r1 > 0.0 && r2 > r1))
            throw std::invalid_argument("v_delta: need 0 < r1 < r2");
        return RadialTestFunction(r2, delta, AnnulusRadii{r1, r2});
    }

    bool generalised() const { return radii_.has_value(); }
    double inner() const { return radii_ ? radii_->r1 : 0.5 * tau_; }
    double outer() const { return radii_ ? radii_->r2 : tau_; }
    double delta() const { return delta_; }

    double value(double l) const {
        if (l >= outer())
            return 0.0;
        if (l <= inner())
            return delta_;
        if (!radii_) {
            const double t2 = tau_ * tau_;
            return 16.0 * l * l * (tau_ - l) * (tau_ - l) * delta_ / (t2 * t2);
        }
        const double r1 = radii_->r1, r2 = radii_->r2;
        const double l2 = l * l, r22 = r2 * r2;
        const double num = 3.0 * (l2 * l2 - r22 * r22) - 4.0 * (r1 + r2) * (l2 * l - r22 * r2) + 6.0 * r1 * r2 * (l2 - r22);
        return delta_ * num / (std::pow(r2 - r1, 3) * (r1 + r2));
    }

    /// Radial derivative d/dl of the profile.
    double slope(double l) const {
        if (l >= outer() || l <= inner())
            return 0.0;
        if (!radii_) {
            const double t2 = tau_ * tau_;
            return 32.0 * delta_ * l * (tau_ - l) * (tau_ - 2.0 * l) / (t2 * t2);
        }
        const double r1 = radii_->r1, r2 = radii_->r2;
        return delta_ * 12.0 * l * (l - r1) * (l - r2) / (std::pow(r2 - r1, 3) * (r1 + r2));
    }

    /// Laplacian in R^N: zero off the shoulder, the closed form on it.
    double laplacian(double l, int N) const {
        if (l >= outer() || l <= inner())
            return 0.0;
        if (!radii_) {
            const double t2 = tau_ * tau_;
            return 32.0 * delta_ * (2.0 * (N + 2) * l * l - 3.0 * (N + 1) * tau_ * l + N * t2) / (t2 * t2);
        }
        const double r1 = radii_->r1, r2 = radii_->r2;
        return 12.0 * delta_ * ((N + 2.0) * l * l - (N + 1.0) * (r1 + r2) * l + N * r1 * r2) /
               (std::pow(r2 - r1, 3) * (r1 + r2));
    }

  private:
    RadialTestFunction(double tau, double delta, std::optional<AnnulusRadii> radii)
      : tau_(tau)
      , delta_(delta)
      , radii_(radii) {}

    double tau_;
    double delta_;
    std::optional<AnnulusRadii> radii_;
};

struct TestFnSample {
    double value;
    double laplacian;
};

inline double distance(std::span<const double> x, std::span<const double> center) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        d2 += (x[i] - center[i]) * (x[i] - center[i]);
    return std::sqrt(d2);
}

inline TestFnSample eval_u_delta(double tau, double delta, std::span<const double> center, std::span<const double> x) {
    const auto u = RadialTestFunction::u_delta(tau, delta);
    const double l = distance(x, center);
    return {u.value(l), u.laplacian(l, static_cast<int>(x.size()))};
}

inline double eval_v_delta(double r1, double r2, double delta, std::span<const double> center,
                           std::span<const double> x) {
    return RadialTestFunction::v_delta(r1, r2, delta).value(distance(x, center));
}

// ---------------------------------------------------------------------------
// sigma

/// Integration settings for the sigma integrals; tight enough for 1e-10
/// relative agreement between independent routes.
inline numerics::QuadOptions sigma_quad_options(double quad_tol) {
    return numerics::QuadOptions{1e-300, std::min(quad_tol, 1e-13), 20000};
}

namespace detail {

/// \int_{a}^{b} |A (s - lo)(s - hi)|^p s^{N-1} ds. The quadratic is
/// evaluated in factored form so it keeps full relative accuracy when the
/// interval shrinks onto a root; roots inside (a, b) become kinks.
inline numerics::QuadResult quadratic_power_integral(double A, double lo, double hi, double p, int N, double a, double b,
                                                     double quad_tol) {
    auto q = [=](double s) { return A * (s - lo) * (s - hi); };
    std::vector<double> kinks;
    for (double root : {lo, hi})
        if (root > a && root < b)
            kinks.push_back(root);
    auto integrand = [&](double s) { return pow_abs(q(s), p) * std::pow(s, N - 1); };
    return numerics::integrate(integrand, a, b, sigma_quad_options(quad_tol), kinks);
}

/// Roots of A s^2 + B s + C with B < 0 < A, C > 0 and discriminant B^2 - 4AC
/// supplied in a cancellation-free form; the small root comes from Vieta.
inline std::pair<double, double> positive_roots(double A, double B, double C, double disc) {
    const double big = (-B + std::sqrt(disc)) / (2.0 * A);
    return {C / (A * big), big};
}

} // namespace detail

/// sigma_{p,N}(tau) = \int_{tau/2}^{tau} |2(N+2)s^2 - 3(N+1)tau s + N tau^2|^p s^{N-1} ds,
/// quadrature directly at the given tau.
inline numerics::QuadResult sigma_quad(double p, int N, double tau, double quad_tol = 1e-10) {
    // discriminant 9(N+1)^2 - 8N(N+2) = N^2 + 2N + 9, times tau^2
    const double A = 2.0 * (N + 2);
    const auto [lo, hi] = detail::positive_roots(A, -3.0 * (N + 1) * tau, N * tau * tau, (N * N + 2.0 * N + 9.0) * tau * tau);
    return detail::quadratic_power_integral(A, lo, hi, p, N, 0.5 * tau, tau, quad_tol);
}

inline double sigma(double p, int N, double tau, double quad_tol = 1e-10) { return sigma_quad(p, N, tau, quad_tol).value; }

/// sigma_{p,N}(r1, r2) = \int_{r1}^{r2} |(N+2)s^2 - (N+1)(r1+r2)s + N r1 r2|^p s^{N-1} ds.
inline numerics::QuadResult sigma_general_quad(double p, int N, double r1, double r2, double quad_tol = 1e-10) {
    if (!(r1 > 0.0 && r2 > r1))
        throw std::invalid_argument("sigma_general: need 0 < r1 < r2");
    // discriminant (N+1)^2 (r2-r1)^2 + 4 r1 r2
    const double A = N + 2.0;
    const double disc = (N + 1.0) * (N + 1.0) * (r2 - r1) * (r2 - r1) + 4.0 * r1 * r2;
    const auto [lo, hi] = detail::positive_roots(A, -(N + 1.0) * (r1 + r2), N * r1 * r2, disc);
    return detail::quadratic_power_integral(A, lo, hi, p, N, r1, r2, quad_tol);
}

inline double sigma_general(double p, int N, double r1, double r2, double quad_tol = 1e-10) {
    return sigma_general_quad(p, N, r1, r2, quad_tol).value;
}

/// log sigma_{p,N}(r1, r2) with relative error bound, overflow-safe for
/// large p: the integral is taken on the rescaled interval [r1/r2, 1] and
/// the factor r2^{2p+N} restored in log space.
struct LogValue {
    double log_value;
    double rel_error;
};

inline LogValue log_sigma_general(double p, int N, double r1, double r2, double quad_tol = 1e-10) {
    const auto unit = sigma_general_quad(p, N, r1 / r2, 1.0, quad_tol);
    return {(2.0 * p + N) * std::log(r2) + std::log(unit.value), unit.error_estimate / unit.value};
}

inline LogValue log_sigma(double p, int N, double tau, double quad_tol = 1e-10) {
    const auto unit = sigma_quad(p, N, 1.0, quad_tol);
    return {(2.0 * p + N) * std::log(tau) + std::log(unit.value), unit.error_estimate / unit.value};
}

// ---------------------------------------------------------------------------
// Constants

/// log of 2^{5p+1} pi^{N/2} / (tau^{4p} Gamma(N/2)), the common factor of
/// Phi(u_delta), K and eta.
inline double log_shape_factor(double p, int N, double tau) {
    return (5.0 * p + 1.0) * kLn2 + 0.5 * N * kLnPi - 4.0 * p * std::log(tau) - std::lgamma(0.5 * N);
}

/// K_{p,N}(tau) = tau^{4p} Gamma(N/2) / (2^{5p+1} pi^{N/2} k^p sigma).
inline double log_K_const(double p, int N, double tau, double k, double log_sig) {
    return -log_shape_factor(p, N, tau) - p * std::log(k) - log_sig;
}

inline double K_const(double p, int N, double tau, double k, double quad_tol = 1e-10) {
    if (!(k > 0.0))
        throw std::invalid_argument("K_const: k must be positive");
    return std::exp(log_K_const(p, N, tau, k, log_sigma(p, N, tau, quad_tol).log_value));
}

/// K_{p,N}(r1, r2) = (r2-r1)^{3p} (r1+r2)^p Gamma(N/2) / (2^{2p+1} 3^p pi^{N/2} k^p sigma(r1, r2)).
inline double log_K_general(double p, int N, double r1, double r2, double k, double log_sig) {
    return 3.0 * p * std::log(r2 - r1) + p * std::log(r1 + r2) + std::lgamma(0.5 * N) -
           (2.0 * p + 1.0) * kLn2 - p * kLn3 - 0.5 * N * kLnPi - p * std::log(k) - log_sig;
}

inline double K_general(double p, int N, double r1, double r2, double k, double quad_tol = 1e-10) {
    if (!(k > 0.0))
        throw std::invalid_argument("K_general: k must be positive");
    return std::exp(log_K_general(p, N, r1, r2, k, log_sigma_general(p, N, r1, r2, quad_tol).log_value));
}

/// Phi(u_delta) = 2^{5p+1} pi^{N/2} delta^p sigma / (tau^{4p} Gamma(N/2) p).
inline double log_phi_u_delta(double p, int N, double tau, double delta, double log_sig) {
    return log_shape_factor(p, N, tau) + p * std::log(delta) + log_sig - std::log(p);
}

inline double phi_u_delta(double p, int N, double tau, double delta, double quad_tol = 1e-10) {
    if (delta == 0.0)
        return 0.0;
    return std::exp(log_phi_u_delta(p, N, tau, delta, log_sigma(p, N, tau, quad_tol).log_value));
}

/// Phi(v_delta) = delta^p / (p k^p K(r1, r2)); k cancels.
inline double log_phi_v_delta(double p, double delta, double k, double log_K_gen) {
    return p * std::log(delta) - std::log(p) - p * std::log(k) - log_K_gen;
}

inline double phi_v_delta(double p, int N, double r1, double r2, double delta, double k, double quad_tol = 1e-10) {
    if (delta == 0.0)
        return 0.0;
    const double log_kg = log_K_general(p, N, r1, r2, k, log_sigma_general(p, N, r1, r2, quad_tol).log_value);
    return std::exp(log_phi_v_delta(p, delta, k, log_kg));
}

/// r = gamma^p / (p k^p).
inline double log_r_level(double gamma, double p, double k) { return p * std::log(gamma / k) - std::log(p); }

inline double r_level(double gamma, double p, double k) { return std::exp(log_r_level(gamma, p, k)); }

/// eta(gamma, delta) = A / (A + B) with A = tau^{4p} Gamma(N/2) gamma^p and
/// B = k^p 2^{5p+1} pi^{N/2} delta^p sigma.
inline double eta_from_log_sigma(double gamma, double delta, double p, int N, double tau, double k, double log_sig) {
    const double log_ratio = p * std::log(k) + log_shape_factor(p, N, tau) + p * std::log(delta / gamma) + log_sig;
    return 1.0 / (1.0 + std::exp(log_ratio));
}

inline double eta(double gamma, double delta, double p, int N, double tau, double k, double quad_tol = 1e-10) {
    return eta_from_log_sigma(gamma, delta, p, N, tau, k, log_sigma(p, N, tau, quad_tol).log_value);
}

} // namespace pbih::testfun

#endif // PBIH_TESTFUN_HPP
