#ifndef PBIH_GEOMETRY_HPP
#define PBIH_GEOMETRY_HPP

/// \file geometry.hpp
/// Domain measure, inradius and incentre, the embedding-constant bound, and
/// integration of polynomials and general integrands over balls, annuli and
/// boxes.

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pbih/core.hpp"
#include "pbih/numerics.hpp"

namespace pbih::geometry {

struct GeometryData {
    double meas = 0.0;
    double tau = 0.0;
    std::vector<double> center;
    double k = 0.0;
    KSource k_source = KSource::TalentiBound;
};

/// Surface measure of the unit sphere S^{N-1}: 2 pi^{N/2} / Gamma(N/2).
inline double sphere_area(int N) { return 2.0 * std::pow(kPi, N / 2.0) / std::tgamma(N / 2.0); }

inline double ball_measure(int N, double R) { return std::pow(kPi, N / 2.0) * std::pow(R, N) / std::tgamma(N / 2.0 + 1.0); }

inline double measure(const DomainSpec& domain, int N) {
    if (const auto* ball = std::get_if<Ball>(&domain.shape))
        return ball_measure(N, ball->radius);
    const auto& box = std::get<Box>(domain.shape);
    double v = 1.0;
    for (int i = 0; i < N; ++i)
        v *= box.upper[static_cast<std::size_t>(i)] - box.lower[static_cast<std::size_t>(i)];
    return v;
}

inline std::pair<double, std::vector<double>> inradius_center(const DomainSpec& domain) {
    if (const auto* ball = std::get_if<Ball>(&domain.shape))
        return {ball->radius, ball->center};
    const auto& box = std::get<Box>(domain.shape);
    double side = kInf;
    std::vector<double> mid(box.lower.size());
    for (std::size_t i = 0; i < box.lower.size(); ++i) {
        side = std::min(side, box.upper[i] - box.lower[i]);
        mid[i] = 0.5 * (box.lower[i] + box.upper[i]);
    }
    return {0.5 * side, mid};
}

/// True when x lies in the closure of the domain, up to tol.
inline bool contains(const DomainSpec& domain, std::span<const double> x, double tol = 1e-12) {
    if (const auto* ball = std::get_if<Ball>(&domain.shape)) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            d2 += (x[i] - ball->center[i]) * (x[i] - ball->center[i]);
        return std::sqrt(d2) <= ball->radius + tol;
    }
    const auto& box = std::get<Box>(domain.shape);
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < box.lower[i] - tol || x[i] > box.upper[i] + tol)
            return false;
    return true;
}

/// Exponent of meas(Omega) in the embedding bound: 2/N + 1/p' - 1.
inline double talenti_meas_exponent(int N, double p) { return 2.0 / N + (p - 1.0) / p - 1.0; }

/// Upper bound for the embedding constant k, evaluated as
///   meas^{2/N + 1/p' - 1} Gamma(1+N/2)^{2/N} / (N(N-2) pi)
///     * [Gamma(1+p') Gamma(N/(N-2) - p') / Gamma(N/(N-2))]^{1/p'}.
/// Needs N >= 3 and p > N/2. The bound blows up like Gamma(0+) as p -> N/2.
inline double talenti_k_bound(double meas, int N, double p) {
    if (N < 3)
        throw std::domain_error("embedding bound unavailable for N < 3; supply k");
    if (!(p > N / 2.0))
        throw std::domain_error("embedding bound needs p > N/2");
    if (!(meas > 0.0))
        throw std::domain_error("embedding bound needs a positive measure");
    const double pc = p / (p - 1.0);
    const double crit = static_cast<double>(N) / (N - 2.0);
    if (!(crit - pc > 0.0))
        throw std::domain_error("embedding bound: conjugate exponent reaches N/(N-2)");
    const double log_bracket = std::lgamma(1.0 + pc) + std::lgamma(crit - pc) - std::lgamma(crit);
    const double log_k = talenti_meas_exponent(N, p) * std::log(meas) + (2.0 / N) * std::lgamma(1.0 + N / 2.0) -
                         std::log(N * (N - 2.0) * kPi) + log_bracket / pc;
    return std::exp(log_k);
}

inline std::pair<double, KSource> resolve_k(const ProblemSpec& spec, double meas) {
    if (spec.k_override)
        return {*spec.k_override, KSource::UserOverride};
    if (spec.dimension < 3)
        throw SpecError("embedding bound unavailable; supply k");
    return {talenti_k_bound(meas, spec.dimension, spec.p), KSource::TalentiBound};
}

inline GeometryData resolve_geometry(const ProblemSpec& spec) {
    GeometryData geo;
    geo.meas = measure(spec.domain, spec.dimension);
    auto [tau, center] = inradius_center(spec.domain);
    geo.tau = tau;
    geo.center = std::move(center);
    std::tie(geo.k, geo.k_source) = resolve_k(spec, geo.meas);
    return geo;
}

// ---------------------------------------------------------------------------
// Polynomial integrals

/// \int_{S^{N-1}} theta^alpha dsigma = 2 prod Gamma(b_i) / Gamma(sum b_i),
/// b_i = (alpha_i + 1)/2, zero unless every alpha_i is even.
inline double sphere_monomial_integral(std::span<const int> alpha) {
    double log_num = 0.0, sum_b = 0.0;
    for (int a : alpha) {
        if (a % 2 != 0)
            return 0.0;
        const double b = 0.5 * (a + 1.0);
        log_num += std::lgamma(b);
        sum_b += b;
    }
    return 2.0 * std::exp(log_num - std::lgamma(sum_b));
}

/// Coefficients A_m with \int_{S^{N-1}} a(c + s theta) dtheta = sum_m A_m s^m.
inline std::vector<double> spherical_moments(const SpatialPolynomial& a, std::span<const double> c) {
    std::vector<double> moments(static_cast<std::size_t>(a.degree() + 1), 0.0);
    const std::size_t N = c.size();
    std::vector<int> j(N, 0);
    for (const auto& term : a.terms) {
        // expand prod_i (c_i + s theta_i)^{alpha_i} over all j <= alpha
        std::function<void(std::size_t, double)> expand = [&](std::size_t i, double coef) {
            if (i == N) {
                int m = 0;
                for (int v : j)
                    m += v;
                moments[static_cast<std::size_t>(m)] += coef * sphere_monomial_integral(j);
                return;
            }
            const int alpha = term.exponents[i];
            double binom = 1.0;
            for (int ji = 0; ji <= alpha; ++ji) {
                j[i] = ji;
                expand(i + 1, coef * binom * std::pow(c[i], alpha - ji));
                binom = binom * (alpha - ji) / (ji + 1.0);
            }
            j[i] = 0;
        };
        expand(0, term.coef);
    }
    return moments;
}

/// Exact \int over the annulus r1 < |x - c| < r2 (r1 = 0 gives the ball).
inline double annulus_polynomial_integral(const SpatialPolynomial& a, std::span<const double> c, double r1, double r2) {
    const auto moments = spherical_moments(a, c);
    const double N = static_cast<double>(c.size());
    double acc = 0.0;
    for (std::size_t m = 0; m < moments.size(); ++m) {
        const double e = static_cast<double>(m) + N;
        acc += moments[m] * (std::pow(r2, e) - std::pow(r1, e)) / e;
    }
    return acc;
}

inline double box_polynomial_integral(const SpatialPolynomial& a, const Box& box) {
    double acc = 0.0;
    for (const auto& term : a.terms) {
        double v = term.coef;
        for (std::size_t i = 0; i < term.exponents.size(); ++i) {
            const double e = term.exponents[i] + 1.0;
            v *= (std::pow(box.upper[i], e) - std::pow(box.lower[i], e)) / e;
        }
        acc += v;
    }
    return acc;
}

inline double domain_polynomial_integral(const SpatialPolynomial& a, const DomainSpec& domain) {
    if (const auto* ball = std::get_if<Ball>(&domain.shape))
        return annulus_polynomial_integral(a, ball->center, 0.0, ball->radius);
    return box_polynomial_integral(a, std::get<Box>(domain.shape));
}

// ---------------------------------------------------------------------------
// Product quadrature over a domain

struct QuadPoint {
    std::vector<double> x;
    double weight;
};

/// Tensor Gauss-Legendre points on a box, `per_dim` nodes per coordinate
/// split over `panels` equal panels.
inline std::vector<QuadPoint> box_points(const Box& box, int per_dim, int panels) {
    const auto rule = numerics::gauss_legendre(per_dim);
    const std::size_t N = box.lower.size();
    std::vector<std::vector<std::pair<double, double>>> axes(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double width = (box.upper[i] - box.lower[i]) / panels;
        for (int k = 0; k < panels; ++k) {
            const double lo = box.lower[i] + k * width;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q)
                axes[i].emplace_back(lo + 0.5 * width * (rule.nodes[q] + 1.0), 0.5 * width * rule.weights[q]);
        }
    }
    std::vector<QuadPoint> pts;
    std::vector<std::size_t> idx(N, 0);
    while (true) {
        QuadPoint pt{std::vector<double>(N), 1.0};
        for (std::size_t i = 0; i < N; ++i) {
            pt.x[i] = axes[i][idx[i]].first;
            pt.weight *= axes[i][idx[i]].second;
        }
        pts.push_back(std::move(pt));
        std::size_t i = 0;
        while (i < N && ++idx[i] == axes[i].size())
            idx[i++] = 0;
        if (i == N)
            break;
    }
    return pts;
}

/// Product rule on the ball B(c, R) in hyperspherical coordinates: Gauss
/// nodes in r and the polar angles, the trapezoid rule in the azimuth.
inline std::vector<QuadPoint> ball_points(const Ball& ball, int per_dim, int panels) {
    const std::size_t N = ball.center.size();
    const auto rule = numerics::gauss_legendre(per_dim);
    auto panel_nodes = [&](double lo, double hi) {
        std::vector<std::pair<double, double>> out;
        const double width = (hi - lo) / panels;
        for (int k = 0; k < panels; ++k)
            for (std::size_t q = 0; q < rule.nodes.size(); ++q)
                out.emplace_back(lo + k * width + 0.5 * width * (rule.nodes[q] + 1.0), 0.5 * width * rule.weights[q]);
        return out;
    };
    const auto radial = panel_nodes(0.0, ball.radius);
    // directions with weights summing to the sphere area
    std::vector<std::pair<std::vector<double>, double>> dirs;
    if (N == 1) {
        dirs = {{{1.0}, 1.0}, {{-1.0}, 1.0}};
    } else {
        const auto polar = panel_nodes(0.0, kPi);
        const int n_az = 2 * per_dim * panels;
        std::vector<std::size_t> idx(N - 2, 0);
        while (true) {
            for (int a = 0; a < n_az; ++a) {
                const double phi = 2.0 * kPi * (a + 0.5) / n_az;
                std::vector<double> dir(N);
                double w = 2.0 * kPi / n_az;
                double s = 1.0;
                for (std::size_t k = 0; k < N - 2; ++k) {
                    const auto [theta, wt] = polar[idx[k]];
                    dir[k] = s * std::cos(theta);
                    w *= wt * std::pow(std::sin(theta), static_cast<double>(N - 2 - k));
                    s *= std::sin(theta);
                }
                dir[N - 2] = s * std::cos(phi);
                dir[N - 1] = s * std::sin(phi);
                dirs.emplace_back(std::move(dir), w);
            }
            std::size_t i = 0;
            while (i < N - 2 && ++idx[i] == polar.size())
                idx[i++] = 0;
            if (i == N - 2)
                break;
        }
    }
    std::vector<QuadPoint> pts;
    pts.reserve(radial.size() * dirs.size());
    for (const auto& [r, wr] : radial) {
        const double jac = wr * std::pow(r, static_cast<double>(N - 1));
        for (const auto& [dir, wd] : dirs) {
            QuadPoint pt{ball.center, jac * wd};
            for (std::size_t i = 0; i < N; ++i)
                pt.x[i] += r * dir[i];
            pts.push_back(std::move(pt));
        }
    }
    return pts;
}

/// Product quadrature points for the domain. `resolution` scales the
/// number of panels per coordinate; the node count is capped near 2e6.
inline std::vector<QuadPoint> domain_points(const DomainSpec& domain, int N, int resolution) {
    constexpr int per_dim = 8;
    int panels = std::max(1, resolution);
    auto count = [&](int pan) { return std::pow(static_cast<double>(per_dim * pan), N) * (domain.is_ball() ? 2.0 : 1.0); };
    while (panels > 1 && count(panels) > 2e6)
        --panels;
    if (const auto* ball = std::get_if<Ball>(&domain.shape))
        return ball_points(*ball, per_dim, panels);
    return box_points(std::get<Box>(domain.shape), per_dim, panels);
}

/// Integrals of the positive and negative parts of a polynomial over the
/// domain. When sampling finds no sign change the exact polynomial integral
/// is used; otherwise product quadrature at two resolutions, the difference
/// being the error bound.
struct SignedParts {
    double positive = 0.0;
    double negative = 0.0; ///< \int a^- with a^- = max(-a, 0) >= 0
    double error = 0.0;
    bool exact = true;
};

inline SignedParts polynomial_signed_parts(const SpatialPolynomial& a, const DomainSpec& domain, int N) {
    const double total = domain_polynomial_integral(a, domain);
    const auto coarse = domain_points(domain, N, 2);
    double lo = kInf, hi = -kInf;
    for (const auto& pt : coarse) {
        const double v = a(pt.x);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo >= 0.0)
        return SignedParts{total, 0.0, 0.0, true};
    if (hi <= 0.0)
        return SignedParts{0.0, -total, 0.0, true};
    auto positive_part = [&](const std::vector<QuadPoint>& pts) {
        double acc = 0.0;
        for (const auto& pt : pts)
            acc += pt.weight * std::max(a(pt.x), 0.0);
        return acc;
    };
    const double pos_coarse = positive_part(coarse);
    const double pos_fine = positive_part(domain_points(domain, N, 4));
    // \int a^+ - \int a^- = \int a, exactly
    return SignedParts{pos_fine, pos_fine - total, 2.0 * std::fabs(pos_fine - pos_coarse), false};
}

} // namespace pbih::geometry

#endif // PBIH_GEOMETRY_HPP
