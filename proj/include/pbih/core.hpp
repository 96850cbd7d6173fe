#ifndef PBIH_CORE_HPP
#define PBIH_CORE_HPP

/// \file core.hpp
/// Problem specification, the nonlinearity catalog and the report records
/// shared by every other module.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace pbih {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// Thrown for any invalid problem data (parse errors, violated invariants).
class SpecError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// |x|^p with the exact zero mapped to zero.
inline double pow_abs(double x, double p) {
    if (x == 0.0)
        return 0.0;
    return std::exp(p * std::log(std::fabs(x)));
}

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// ---------------------------------------------------------------------------
// Polynomials

/// Polynomial in one variable, coefficients in ascending powers.
struct Poly1 {
    std::vector<double> coeffs;

    double operator()(double t) const {
        double acc = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
            acc = acc * t + *it;
        return acc;
    }

    Poly1 derivative() const {
        Poly1 d;
        for (std::size_t j = 1; j < coeffs.size(); ++j)
            d.coeffs.push_back(static_cast<double>(j) * coeffs[j]);
        return d;
    }

    /// Exact \int_a^b of the polynomial.
    double integral(double a, double b) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < coeffs.size(); ++j) {
            const double e = static_cast<double>(j + 1);
            acc += coeffs[j] * (std::pow(b, e) - std::pow(a, e)) / e;
        }
        return acc;
    }
};

struct Monomial {
    double coef = 0.0;
    std::vector<int> exponents; ///< one entry per coordinate
};

/// Polynomial in x = (x_1, ..., x_N), used for spatial factors a(x) and
/// growth bounds alpha(x).
struct SpatialPolynomial {
    std::vector<Monomial> terms;

    static SpatialPolynomial constant(double c, int dimension) {
        return SpatialPolynomial{{Monomial{c, std::vector<int>(static_cast<std::size_t>(dimension), 0)}}};
    }

    double operator()(std::span<const double> x) const {
        double acc = 0.0;
        for (const auto& m : terms) {
            double v = m.coef;
            for (std::size_t i = 0; i < m.exponents.size(); ++i)
                v *= std::pow(x[i], m.exponents[i]);
            acc += v;
        }
        return acc;
    }

    int degree() const {
        int d = 0;
        for (const auto& m : terms)
            d = std::max(d, std::accumulate(m.exponents.begin(), m.exponents.end(), 0));
        return d;
    }

    void check(int dimension) const {
        for (const auto& m : terms) {
            if (m.exponents.size() != static_cast<std::size_t>(dimension))
                throw SpecError("polynomial term has " + std::to_string(m.exponents.size()) +
                                " exponents, dimension is " + std::to_string(dimension));
            for (int e : m.exponents)
                if (e < 0)
                    throw SpecError("polynomial exponents must be non-negative");
            if (!std::isfinite(m.coef))
                throw SpecError("polynomial coefficient is not finite");
        }
    }
};

// ---------------------------------------------------------------------------
// Nonlinearity catalog

/// f(t) = 0 for t < 2, sqrt(t - 2) for t >= 2.
struct Example36 {};

struct PowerTerm {
    double c = 0.0;
    double q = 2.0; ///< the term is c sign(t)|t|^{q-1}, primitive c|xi|^q / q
};

/// Odd power sum; an empty term list is f = 0.
struct PowerSum {
    std::vector<PowerTerm> terms;
};

/// f(t) = c (t - t0)_+^{q-1}; vanishes identically for t <= t0.
struct FlatThenPower {
    double threshold = 0.0;
    double exponent = 2.0;
    double scale = 1.0;
};

/// Continuous piecewise polynomial; pieces.size() == breakpoints.size() + 1.
struct PiecewisePolynomial {
    std::vector<double> breakpoints;
    std::vector<Poly1> pieces;
};

using Profile = std::variant<Example36, PowerSum, FlatThenPower, PiecewisePolynomial>;

enum class GrowthKind { None, H3, H3Prime, H3Star };

inline const char* to_string(GrowthKind k) {
    switch (k) {
    case GrowthKind::None: return "none";
    case GrowthKind::H3: return "h3";
    case GrowthKind::H3Prime: return "h3prime";
    case GrowthKind::H3Star: return "h3star";
    }
    return "?";
}

/// Declared growth of the primitive, validated later by sampling.
struct GrowthMetadata {
    GrowthKind kind = GrowthKind::None;
    double s = 1.0;
    SpatialPolynomial alpha; ///< used by H3
    double b = 0.0;          ///< used by H3Prime
};

/// Separable nonlinearity f(x,t) = a(x) g(t) drawn from a closed catalog.
/// Without a spatial factor the problem is autonomous.
class Nonlinearity {
  public:
    Nonlinearity() = default;

    explicit Nonlinearity(Profile profile, std::optional<SpatialPolynomial> spatial = std::nullopt,
                          GrowthMetadata growth = {})
      : profile_(std::move(profile))
      , spatial_(std::move(spatial))
      , growth_(std::move(growth)) {
        validate();
    }

    static Nonlinearity example36() {
        // F(xi) <= (2/3) xi^{3/2} <= 1 + |xi|^{3/2}
        return Nonlinearity(Example36{}, std::nullopt, GrowthMetadata{GrowthKind::H3Prime, 1.5, {}, 1.0});
    }

    static Nonlinearity zero() {
        return Nonlinearity(PowerSum{}, std::nullopt, GrowthMetadata{GrowthKind::H3Prime, 1.0, {}, 1.0});
    }

    const Profile& profile() const { return profile_; }
    const std::optional<SpatialPolynomial>& spatial() const { return spatial_; }
    const GrowthMetadata& growth() const { return growth_; }
    bool autonomous() const { return !spatial_.has_value(); }

    std::string kind_name() const {
        return std::visit(
            [](const auto& p) -> std::string {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, Example36>)
                    return "example36";
                else if constexpr (std::is_same_v<T, PowerSum>)
                    return p.terms.empty() ? "zero" : "power";
                else if constexpr (std::is_same_v<T, FlatThenPower>)
                    return "flat_power";
                else
                    return "piecewise";
            },
            profile_);
    }

    /// g(t), the t-dependent factor.
    double g(double t) const {
        return std::visit(
            [t](const auto& p) -> double {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, Example36>) {
                    return t < 2.0 ? 0.0 : std::sqrt(t - 2.0);
                } else if constexpr (std::is_same_v<T, PowerSum>) {
                    double acc = 0.0;
                    for (const auto& term : p.terms)
                        acc += term.c * sign(t) * pow_abs(t, term.q - 1.0);
                    return acc;
                } else if constexpr (std::is_same_v<T, FlatThenPower>) {
                    return t <= p.threshold ? 0.0 : p.scale * pow_abs(t - p.threshold, p.exponent - 1.0);
                } else {
                    return p.pieces[piece_index(p, t)](t);
                }
            },
            profile_);
    }

    /// G(xi) = \int_0^xi g, exact.
    double G(double xi) const {
        return std::visit(
            [xi](const auto& p) -> double {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, Example36>) {
                    return xi < 2.0 ? 0.0 : 2.0 * std::pow(xi - 2.0, 1.5) / 3.0;
                } else if constexpr (std::is_same_v<T, PowerSum>) {
                    double acc = 0.0;
                    for (const auto& term : p.terms)
                        acc += term.c * pow_abs(xi, term.q) / term.q;
                    return acc;
                } else if constexpr (std::is_same_v<T, FlatThenPower>) {
                    // \int_0^xi c (t - t0)_+^{q-1} dt = c/q [ (xi - t0)_+^q - (0 - t0)_+^q ]
                    auto part = [&](double v) { return v <= p.threshold ? 0.0 : pow_abs(v - p.threshold, p.exponent); };
                    return p.scale * (part(xi) - part(0.0)) / p.exponent;
                } else {
                    return piecewise_primitive(p, xi);
                }
            },
            profile_);
    }

    /// g'(t); +inf where the derivative is unbounded (e.g. Example36 at t = 2).
    double g_prime(double t) const {
        return std::visit(
            [t](const auto& p) -> double {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, Example36>) {
                    if (t < 2.0)
                        return 0.0;
                    return t == 2.0 ? kInf : 0.5 / std::sqrt(t - 2.0);
                } else if constexpr (std::is_same_v<T, PowerSum>) {
                    double acc = 0.0;
                    for (const auto& term : p.terms) {
                        if (term.q == 2.0)
                            acc += term.c;
                        else if (t == 0.0)
                            acc += term.q < 2.0 ? kInf * sign(term.c) : 0.0;
                        else
                            acc += term.c * (term.q - 1.0) * pow_abs(t, term.q - 2.0);
                    }
                    return acc;
                } else if constexpr (std::is_same_v<T, FlatThenPower>) {
                    if (t < p.threshold)
                        return 0.0;
                    if (p.exponent == 2.0)
                        return t == p.threshold ? 0.5 * p.scale : p.scale;
                    if (t == p.threshold)
                        return p.exponent < 2.0 ? kInf : 0.0;
                    return p.scale * (p.exponent - 1.0) * pow_abs(t - p.threshold, p.exponent - 2.0);
                } else {
                    return p.pieces[piece_index(p, t)].derivative()(t);
                }
            },
            profile_);
    }

    double spatial_factor(std::span<const double> x) const { return spatial_ ? (*spatial_)(x) : 1.0; }

    double f(std::span<const double> x, double t) const { return spatial_factor(x) * g(t); }
    double F(std::span<const double> x, double xi) const { return spatial_factor(x) * G(xi); }

    /// Points where g (or a derivative of g) is not smooth.
    std::vector<double> breakpoints() const {
        return std::visit(
            [](const auto& p) -> std::vector<double> {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, Example36>)
                    return {2.0};
                else if constexpr (std::is_same_v<T, PowerSum>)
                    return {0.0};
                else if constexpr (std::is_same_v<T, FlatThenPower>)
                    return {p.threshold};
                else
                    return p.breakpoints;
            },
            profile_);
    }

  private:
    static std::size_t piece_index(const PiecewisePolynomial& p, double t) {
        return static_cast<std::size_t>(std::upper_bound(p.breakpoints.begin(), p.breakpoints.end(), t) -
                                        p.breakpoints.begin());
    }

    static double piecewise_primitive(const PiecewisePolynomial& p, double xi) {
        if (xi == 0.0)
            return 0.0;
        const double lo = std::min(0.0, xi);
        const double hi = std::max(0.0, xi);
        double acc = 0.0;
        double a = lo;
        for (std::size_t j = 0; j <= p.breakpoints.size(); ++j) {
            const double right = j < p.breakpoints.size() ? p.breakpoints[j] : kInf;
            if (right <= a)
                continue;
            const double b = std::min(right, hi);
            acc += p.pieces[j].integral(a, b);
            a = b;
            if (a >= hi)
                break;
        }
        return xi > 0.0 ? acc : -acc;
    }

    void validate() const {
        std::visit(
            [](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, PowerSum>) {
                    for (const auto& term : p.terms)
                        if (!(term.q > 1.0) || !std::isfinite(term.c) || !std::isfinite(term.q))
                            throw SpecError("power term needs finite c and q > 1 (q <= 1 is discontinuous at 0)");
                } else if constexpr (std::is_same_v<T, FlatThenPower>) {
                    if (!(p.exponent > 1.0) || !std::isfinite(p.threshold) || !std::isfinite(p.scale))
                        throw SpecError("flat_power needs finite threshold/scale and exponent > 1");
                } else if constexpr (std::is_same_v<T, PiecewisePolynomial>) {
                    if (p.pieces.size() != p.breakpoints.size() + 1)
                        throw SpecError("piecewise polynomial needs one more piece than breakpoints");
                    if (!std::is_sorted(p.breakpoints.begin(), p.breakpoints.end()) ||
                        std::adjacent_find(p.breakpoints.begin(), p.breakpoints.end()) != p.breakpoints.end())
                        throw SpecError("piecewise breakpoints must be strictly increasing");
                    for (std::size_t j = 0; j < p.breakpoints.size(); ++j) {
                        const double b = p.breakpoints[j];
                        const double left = p.pieces[j](b);
                        const double right = p.pieces[j + 1](b);
                        if (std::fabs(left - right) > 1e-12 * (1.0 + std::fabs(left)))
                            throw SpecError("piecewise polynomial is discontinuous at t = " + std::to_string(b));
                    }
                }
            },
            profile_);
        if (growth_.kind == GrowthKind::H3Star && !(growth_.s >= 1.0))
            throw SpecError("h3star needs s >= 1");
        if (growth_.kind != GrowthKind::None && !(growth_.s > 0.0))
            throw SpecError("growth exponent s must be positive");
    }

    Profile profile_ = PowerSum{};
    std::optional<SpatialPolynomial> spatial_;
    GrowthMetadata growth_;
};

inline double eval_f(const Nonlinearity& nl, std::span<const double> x, double t) {
    if (x.empty() != nl.autonomous())
        throw std::invalid_argument("eval_f: a point is required iff the nonlinearity has a spatial factor");
    return nl.f(x, t);
}

inline double eval_F(const Nonlinearity& nl, std::span<const double> x, double xi) {
    if (x.empty() != nl.autonomous())
        throw std::invalid_argument("eval_F: a point is required iff the nonlinearity has a spatial factor");
    return nl.F(x, xi);
}

// ---------------------------------------------------------------------------
// Problem specification

struct Ball {
    std::vector<double> center;
    double radius = 1.0;
};

struct Box {
    std::vector<double> lower;
    std::vector<double> upper;
};

struct DomainSpec {
    std::variant<Ball, Box> shape;

    bool is_ball() const { return std::holds_alternative<Ball>(shape); }
};

struct AnnulusRadii {
    double r1 = 0.0;
    double r2 = 0.0;
};

struct SolverSettings {
    int n = 200;
    double tol = 1e-8;
    int max_iter = 5000;
    std::uint64_t seed = 1;
    int multistart = 4;
    double distinct_tol = 1e-4;
};

struct ProblemSpec {
    int dimension = 3;
    double p = 2.0;
    DomainSpec domain{Ball{{0.0, 0.0, 0.0}, 1.0}};
    Nonlinearity nonlinearity;
    double gamma = 1.0;
    double delta = 1.0;
    double h = 2.0;
    std::optional<double> k_override;
    double quad_tol = 1e-10;
    std::optional<AnnulusRadii> radii; ///< optional (r1, r2) for the generalised test function
    SolverSettings solver;
};

/// Enforces every ProblemSpec invariant; throws SpecError.
inline void validate(const ProblemSpec& spec) {
    const int N = spec.dimension;
    if (N < 1)
        throw SpecError("dimension must be >= 1");
    if (!(spec.p > std::max(1.0, N / 2.0)) || !std::isfinite(spec.p))
        throw SpecError("p must exceed max{1, N/2}");
    const auto n = static_cast<std::size_t>(N);
    if (const auto* ball = std::get_if<Ball>(&spec.domain.shape)) {
        if (ball->center.size() != n)
            throw SpecError("ball center must have N coordinates");
        if (!(ball->radius > 0.0))
            throw SpecError("ball radius must be positive");
    } else {
        const auto& box = std::get<Box>(spec.domain.shape);
        if (box.lower.size() != n || box.upper.size() != n)
            throw SpecError("box corners must have N coordinates");
        for (std::size_t i = 0; i < n; ++i)
            if (!(box.upper[i] > box.lower[i]))
                throw SpecError("box side lengths must be positive");
    }
    if (!(spec.gamma > 0.0))
        throw SpecError("gamma must be positive");
    if (!(spec.delta > 0.0))
        throw SpecError("delta must be positive");
    if (!(spec.h > 1.0))
        throw SpecError("h must exceed 1");
    if (spec.k_override && !(*spec.k_override > 0.0))
        throw SpecError("k must be positive");
    if (!(spec.quad_tol > 0.0))
        throw SpecError("quad_tol must be positive");
    if (spec.radii && !(spec.radii->r1 > 0.0 && spec.radii->r2 > spec.radii->r1))
        throw SpecError("annulus radii need 0 < r1 < r2");
    if (const auto& a = spec.nonlinearity.spatial())
        a->check(N);
    if (spec.nonlinearity.growth().kind == GrowthKind::H3)
        spec.nonlinearity.growth().alpha.check(N);
    if (spec.solver.n < 8)
        throw SpecError("solver grid needs n >= 8");
    if (!(spec.solver.tol > 0.0))
        throw SpecError("solver tolerance must be positive");
    if (spec.solver.max_iter < 1)
        throw SpecError("solver max_iter must be >= 1");
    if (spec.solver.multistart < 2)
        throw SpecError("multistart count must be >= 2");
}

// ---------------------------------------------------------------------------
// Report records

enum class Hypothesis { H1, H1Star, H2, H2Star, H2Prime, H3, H3Prime, H3Star, J1, J2, J1Prime, J2Prime };

inline const char* to_string(Hypothesis h) {
    switch (h) {
    case Hypothesis::H1: return "h1";
    case Hypothesis::H1Star: return "h1star";
    case Hypothesis::H2: return "h2";
    case Hypothesis::H2Star: return "h2star";
    case Hypothesis::H2Prime: return "h2prime";
    case Hypothesis::H3: return "h3";
    case Hypothesis::H3Prime: return "h3prime";
    case Hypothesis::H3Star: return "h3star";
    case Hypothesis::J1: return "j1";
    case Hypothesis::J2: return "j2";
    case Hypothesis::J1Prime: return "j1prime";
    case Hypothesis::J2Prime: return "j2prime";
    }
    return "?";
}

/// margin is "left minus right" oriented so that positive means satisfied,
/// already reduced by the accumulated quadrature error bound.
struct HypothesisVerdict {
    Hypothesis name = Hypothesis::H1;
    bool holds = false;
    double margin = 0.0;
    double error_bound = 0.0;
    bool sampled = false; ///< validated by sampling rather than checked exactly
    std::string detail;
};

enum class Overlap { Disjoint, Overlapping };

inline const char* to_string(Overlap o) { return o == Overlap::Disjoint ? "disjoint" : "overlapping"; }

struct IntervalPair {
    double lambda1 = 0.0;
    double lambda2 = kInf; ///< extended real
    double lambda3h = 0.0;
    double h = 2.0;
    Overlap overlap = Overlap::Overlapping;
    bool nonempty = false;
};

enum class KSource { TalentiBound, UserOverride };

inline const char* to_string(KSource s) { return s == KSource::TalentiBound ? "talenti_bound" : "user_override"; }

struct CertificateReport {
    int dimension = 0;
    double p = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
    double k = 0.0;
    KSource k_source = KSource::TalentiBound;
    double tau = 0.0;
    std::vector<double> center;
    double meas = 0.0;
    double meas_inner_ball = 0.0; ///< meas(B(x0, tau/2))
    double sigma = 0.0;
    double K = 0.0;
    double eta = 0.0;
    double r = 0.0;
    double phi_u_delta = 0.0;
    double sup_level_integral = 0.0;
    double annulus_integral = 0.0; ///< R_F, or G_F in the autonomous case
    double inner_integral = 0.0;   ///< \int_{B(x0,tau/2)} F(x, delta) dx
    double psi_u_delta = 0.0;      ///< annulus_integral + inner_integral
    double quadrature_error = 0.0;
    bool autonomous = true;
    std::string variant; ///< "autonomous" or "separable": which interval formulas were used

    // generalised test function, present when (r1, r2) were supplied
    std::optional<AnnulusRadii> radii;
    double sigma_general = 0.0;
    double K_general = 0.0;
    double phi_v_delta = 0.0;
    double psi_v_delta = 0.0;

    std::vector<HypothesisVerdict> verdicts;
    std::optional<IntervalPair> interval;
    std::optional<IntervalPair> interval_general; ///< interval from the (r1, r2) test function
    bool granted = false;
    std::vector<std::string> notes;

    const HypothesisVerdict* verdict(Hypothesis h) const {
        for (const auto& v : verdicts)
            if (v.name == h)
                return &v;
        return nullptr;
    }
};

} // namespace pbih

#endif // PBIH_CORE_HPP
