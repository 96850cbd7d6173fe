#ifndef PBIH_NUMERICS_HPP
#define PBIH_NUMERICS_HPP

/// \file numerics.hpp
/// One-dimensional kernels: Gamma, adaptive Gauss-Kronrod quadrature with
/// kink splitting, bracketed root finding, and a sampling maximiser.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pbih::numerics {

class QuadratureError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class RootError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline double gamma(double x) {
    if (!(x > 0.0))
        throw std::domain_error("gamma: argument must be positive");
    return std::tgamma(x);
}

inline double log_gamma(double x) {
    if (!(x > 0.0))
        throw std::domain_error("log_gamma: argument must be positive");
    return std::lgamma(x);
}

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int subdivisions = 0;
};

/// Acceptance test is error <= max(abs_tol, rel_tol * |value|).
struct QuadOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_subdivisions = 5000;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error, abs_value;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <typename Fn>
Segment gauss_kronrod15(Fn& fn, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = fn(center);
    double kronrod = fc * kKronrodWeights[7];
    double gauss = fc * kGaussWeights[3];
    double abs_sum = std::fabs(fc) * kKronrodWeights[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kKronrodNodes[static_cast<std::size_t>(j)];
        const double f1 = fn(center - dx);
        const double f2 = fn(center + dx);
        kronrod += kKronrodWeights[static_cast<std::size_t>(j)] * (f1 + f2);
        abs_sum += kKronrodWeights[static_cast<std::size_t>(j)] * (std::fabs(f1) + std::fabs(f2));
        if (j % 2 == 1)
            gauss += kGaussWeights[static_cast<std::size_t>(j / 2)] * (f1 + f2);
    }
    kronrod *= half;
    gauss *= half;
    abs_sum *= std::fabs(half);
    return Segment{a, b, kronrod, std::fabs(kronrod - gauss), abs_sum};
}

} // namespace detail

/// Globally adaptive G7-K15 quadrature of fn over [a, b], pre-split at each
/// interior kink. The error estimate is |K15 - G7| summed over segments.
/// Throws QuadratureError when the subdivision budget runs out.
template <typename Fn>
QuadResult integrate(Fn&& fn, double a, double b, const QuadOptions& opts, std::span<const double> kinks = {}) {
    if (!(a < b))
        throw std::invalid_argument("integrate: need a < b");
    std::vector<double> cuts{a};
    for (double k : kinks)
        if (k > a && k < b)
            cuts.push_back(k);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::priority_queue<detail::Segment> heap;
    double value = 0.0, error = 0.0, abs_value = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto seg = detail::gauss_kronrod15(fn, cuts[i], cuts[i + 1]);
        value += seg.value;
        error += seg.error;
        abs_value += seg.abs_value;
        heap.push(seg);
    }
    int subdivisions = static_cast<int>(heap.size());
    constexpr double eps = std::numeric_limits<double>::epsilon();
    while (true) {
        const double target = std::max(opts.abs_tol, opts.rel_tol * std::fabs(value));
        // 50 eps |f|-integral is the rounding floor of the rule itself
        if (error <= target || error <= 50.0 * eps * abs_value)
            break;
        if (subdivisions >= opts.max_subdivisions)
            throw QuadratureError("integrate: subdivision budget exhausted (error " + std::to_string(error) +
                                  ", target " + std::to_string(target) + ")");
        const auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b))
            throw QuadratureError("integrate: interval cannot be split further");
        auto left = detail::gauss_kronrod15(fn, worst.a, mid);
        auto right = detail::gauss_kronrod15(fn, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        abs_value += left.abs_value + right.abs_value - worst.abs_value;
        heap.push(left);
        heap.push(right);
        ++subdivisions;
    }
    // recompute sums to shed the drift of the incremental updates
    value = 0.0;
    error = 0.0;
    for (; !heap.empty(); heap.pop()) {
        value += heap.top().value;
        error += heap.top().error;
    }
    return QuadResult{value, error, subdivisions};
}

/// integrate with absolute tolerance tol and a relative fallback of the same size.
template <typename Fn>
QuadResult integrate(Fn&& fn, double a, double b, double tol, std::span<const double> kinks = {}) {
    return integrate(std::forward<Fn>(fn), a, b, QuadOptions{tol, tol, 5000}, kinks);
}

/// Bisection on a sign-changing bracket; the returned point lies in a
/// final bracket of width <= tol.
template <typename Fn>
double find_root(Fn&& fn, double a, double b, double tol) {
    double fa = fn(a);
    double fb = fn(b);
    if (fa == 0.0)
        return a;
    if (fb == 0.0)
        return b;
    if (!(fa * fb < 0.0))
        throw RootError("find_root: no sign change on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
    double lo = a, hi = b;
    for (int it = 0; it < 400 && (hi - lo) > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        const double fm = fn(mid);
        if (fm == 0.0)
            return mid;
        if ((fm < 0.0) == (fa < 0.0)) {
            lo = mid;
            fa = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct MaxResult {
    double argmax = 0.0;
    double max = 0.0;
};

namespace detail {

template <typename Fn>
MaxResult golden_section(Fn& fn, double lo, double hi) {
    constexpr double inv_phi = 0.61803398874989484820;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = fn(x1), f2 = fn(x2);
    for (int it = 0; it < 200 && (hi - lo) > 1e-15 * (1.0 + std::fabs(lo) + std::fabs(hi)); ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = fn(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = fn(x1);
        }
    }
    return f1 >= f2 ? MaxResult{x1, f1} : MaxResult{x2, f2};
}

} // namespace detail

/// Heuristic global maximiser: dense sampling, then golden-section refinement
/// around the best sample; the endpoints are always candidates.
template <typename Fn>
MaxResult max_on_interval(Fn&& fn, double a, double b, int samples = 1024) {
    if (samples < 64)
        throw std::invalid_argument("max_on_interval: need at least 64 samples");
    if (!(a <= b))
        throw std::invalid_argument("max_on_interval: need a <= b");
    MaxResult best{a, fn(a)};
    int best_index = 0;
    const double step = (b - a) / samples;
    for (int i = 1; i <= samples; ++i) {
        const double t = i == samples ? b : a + i * step;
        const double v = fn(t);
        if (v > best.max) {
            best = {t, v};
            best_index = i;
        }
    }
    if (step > 0.0) {
        const double lo = a + std::max(0, best_index - 1) * step;
        const double hi = best_index + 1 >= samples ? b : a + (best_index + 1) * step;
        const auto refined = detail::golden_section(fn, lo, hi);
        if (refined.max > best.max)
            best = refined;
    }
    return best;
}

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n).
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussRule gauss_legendre(int n) {
    if (n < 1)
        throw std::invalid_argument("gauss_legendre: need n >= 1");
    // (P_n(x), P_n'(x)) by the three-term recurrence
    auto legendre = [n](double x) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        if (n == 1)
            p0 = 1.0;
        return std::pair<double, double>{p1, n * (x * p1 - p0) / (x * x - 1.0)};
    };
    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [pn, dpn] = legendre(x);
            const double dx = pn / dpn;
            x -= dx;
            if (std::fabs(dx) < 1e-16)
                break;
        }
        const double dpn = legendre(x).second;
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[lo] = -x;
        rule.nodes[hi] = x;
        rule.weights[lo] = rule.weights[hi] = 2.0 / ((1.0 - x * x) * dpn * dpn);
    }
    if (n % 2 == 1)
        rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return rule;
}

} // namespace pbih::numerics

#endif // PBIH_NUMERICS_HPP
