#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "pbih/certificate.hpp"

using namespace pbih;
using namespace pbih::certificate;

namespace {

constexpr double pi = std::numbers::pi;

double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

ProblemSpec ball_spec(Nonlinearity nl, int N = 3, double p = 2.0, double R = 1.0, double gamma = 2.0, double delta = 8.0,
                      double h = 2.0) {
    ProblemSpec s;
    s.dimension = N;
    s.p = p;
    s.domain = DomainSpec{Ball{std::vector<double>(static_cast<std::size_t>(N), 0.0), R}};
    s.nonlinearity = std::move(nl);
    s.gamma = gamma;
    s.delta = delta;
    s.h = h;
    return s;
}

Nonlinearity with_growth(Profile prof, GrowthKind kind, double s, double b = 1.0) {
    return Nonlinearity(std::move(prof), std::nullopt, GrowthMetadata{kind, s, {}, b});
}

const HypothesisVerdict& verdict(const CertificateReport& r, Hypothesis h) {
    const auto* v = r.verdict(h);
    if (!v)
        throw std::runtime_error(std::string("missing verdict ") + to_string(h));
    return *v;
}

// lambda_1^* assembled independently: sigma = 83/1120, Gamma(3/2) = sqrt(pi)/2,
// G_F by Boost quadrature of 4 pi \int F(u_delta(s)) s^2 ds.
double example36_lambda1_star(double delta) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto F = [](double xi) { return xi < 2.0 ? 0.0 : 2.0 * std::pow(xi - 2.0, 1.5) / 3.0; };
    auto u = [&](double s) { return 16.0 * s * s * (1.0 - s) * (1.0 - s) * delta; };
    // u falls through the level 2 at s0 in (1/2, 1); F(u) vanishes beyond it
    double a = 0.5, b = 1.0;
    for (int i = 0; i < 200; ++i)
        ((u(0.5 * (a + b)) > 2.0) ? a : b) = 0.5 * (a + b);
    const double GF = 4.0 * pi * GK::integrate([&](double s) { return F(u(s)) * s * s; }, 0.5, a, 15, 1e-14);
    const double inner = 4.0 * pi / 3.0 / 8.0 * F(delta);
    return 1024.0 * std::pow(pi, 1.5) * (83.0 / 1120.0) * delta * delta / ((std::sqrt(pi) / 2.0) * (GF + inner));
}

} // namespace

TEST(SupLevel, Examples) {
    auto s36 = ball_spec(Nonlinearity::example36());
    const auto g36 = geometry::resolve_geometry(s36);
    EXPECT_EQ(sup_level_integral(s36, g36, 2.0).value, 0.0);

    // f(t) = t on a measure-2 interval, gamma = 1: 2 * max F = 2 * 1/2
    ProblemSpec lin;
    lin.dimension = 1;
    lin.p = 2.0;
    lin.domain = DomainSpec{Box{{0.0}, {2.0}}};
    lin.nonlinearity = Nonlinearity(PowerSum{{{1.0, 2.0}}});
    lin.k_override = 1.0;
    EXPECT_DOUBLE_EQ(sup_level_integral(lin, geometry::resolve_geometry(lin), 1.0).value, 1.0);

    // F = |xi|^3 on the unit ball, gamma = 2: (4 pi / 3) * 8
    auto cubic = ball_spec(Nonlinearity(PowerSum{{{3.0, 3.0}}}));
    EXPECT_NEAR(sup_level_integral(cubic, geometry::resolve_geometry(cubic), 2.0).value, 4.0 * pi / 3.0 * 8.0, 1e-12);
}

TEST(SupLevel, SeparableSplitsBySign) {
    // a(x) = x1 on [-1, 2] x [0, 1], g(t) = t, gamma = 1: max G = 1/2 and max(-G) = 0
    ProblemSpec s;
    s.dimension = 2;
    s.p = 2.0;
    s.domain = DomainSpec{Box{{-1.0, 0.0}, {2.0, 1.0}}};
    s.nonlinearity = Nonlinearity(PowerSum{{{1.0, 2.0}}}, SpatialPolynomial{{Monomial{1.0, {1, 0}}}});
    s.k_override = 1.0;
    const auto res = sup_level_integral(s, geometry::resolve_geometry(s), 1.0);
    EXPECT_NEAR(res.value, 2.0 * 0.5, 1e-3 + res.error);
}

TEST(AnnulusIntegral, Examples) {
    auto zero = ball_spec(Nonlinearity::zero());
    const auto geo = geometry::resolve_geometry(zero);
    EXPECT_EQ(annulus_F_integral(zero, geo, RadialTestFunction::u_delta(1.0, 1.0)).value, 0.0);

    auto s36 = ball_spec(Nonlinearity::example36());
    EXPECT_EQ(annulus_F_integral(s36, geo, RadialTestFunction::u_delta(1.0, 2.0)).value, 0.0);

    // f = 1, F = xi, delta = 1: 4 pi * 16 \int_{1/2}^1 s^4 - 2 s^5 + s^6 ds
    auto one = ball_spec(Nonlinearity(PiecewisePolynomial{{}, {Poly1{{1.0}}}}));
    auto prim = [](double s) { return std::pow(s, 5) / 5.0 - std::pow(s, 6) / 3.0 + std::pow(s, 7) / 7.0; };
    const double oracle = 4.0 * pi * 16.0 * (prim(1.0) - prim(0.5));
    EXPECT_LE(rel(annulus_F_integral(one, geo, RadialTestFunction::u_delta(1.0, 1.0)).value, oracle), 1e-12);
}

TEST(AnnulusIntegral, SeparableAgreesWithAutonomousWhenFactorIsOne) {
    auto nl = Nonlinearity(PowerSum{{{1.0, 3.0}}});
    auto auton = ball_spec(nl);
    auto sep = ball_spec(Nonlinearity(PowerSum{{{1.0, 3.0}}}, SpatialPolynomial::constant(1.0, 3)));
    const auto geo = geometry::resolve_geometry(auton);
    const auto tf = RadialTestFunction::u_delta(1.0, 3.0);
    EXPECT_LE(rel(annulus_F_integral(sep, geo, tf).value, annulus_F_integral(auton, geo, tf).value), 1e-13);
}

TEST(Certify, Example36Reproduction) {
    const auto spec = ball_spec(Nonlinearity::example36());
    const auto rep = certify(spec);
    EXPECT_TRUE(rep.granted);
    EXPECT_EQ(rep.sup_level_integral, 0.0);
    EXPECT_TRUE(verdict(rep, Hypothesis::H1).holds);
    EXPECT_TRUE(verdict(rep, Hypothesis::H2Prime).holds);
    EXPECT_TRUE(verdict(rep, Hypothesis::H3Prime).holds);
    ASSERT_TRUE(rep.interval.has_value());
    EXPECT_TRUE(std::isinf(rep.interval->lambda2));
    EXPECT_LE(rel(rep.interval->lambda1, example36_lambda1_star(8.0)), 1e-10);
    for (double h : {1.5, 2.0, 10.0})
        EXPECT_LE(rel(lambda_interval(rep, h).lambda3h, h * rep.interval->lambda1), 1e-10);
    EXPECT_EQ(rep.interval->overlap, Overlap::Overlapping);
}

TEST(Certify, Example36DeltaThreshold) {
    // h1 is delta > K^{1/p} gamma; the example's sufficient condition delta > 2 max{1, K^{1/p}} implies it
    auto spec = ball_spec(Nonlinearity::example36());
    const auto rep = certify(spec);
    const double k_root = std::sqrt(rep.K);
    EXPECT_GT(spec.delta, 2.0 * std::max(1.0, k_root));
    EXPECT_TRUE(verdict(rep, Hypothesis::H1).holds);
    spec.delta = 0.9 * k_root * spec.gamma;
    EXPECT_FALSE(verdict(certify(spec), Hypothesis::H1).holds);
    spec.delta = 1.1 * k_root * spec.gamma;
    EXPECT_TRUE(verdict(certify(spec), Hypothesis::H1).holds);
}

TEST(Certify, Example36GrowthDeclarations) {
    // f(t)/|t|^{s-1} -> 0 needs s > 3/2 for sqrt(t - 2)
    auto s2 = ball_spec(with_growth(Example36{}, GrowthKind::H3Star, 2.0));
    EXPECT_TRUE(verdict(certify(s2), Hypothesis::H3Star).holds);
    auto s15 = ball_spec(with_growth(Example36{}, GrowthKind::H3Star, 1.5));
    EXPECT_FALSE(verdict(certify(s15), Hypothesis::H3Star).holds);
}

TEST(Certify, SuperlinearPowerFailsVanishingRatio) {
    const double p = 2.0;
    auto spec = ball_spec(with_growth(PowerSum{{{1.0, p + 1.0}}}, GrowthKind::H3Star, p));
    const auto rep = certify(spec);
    EXPECT_FALSE(verdict(rep, Hypothesis::H3Star).holds);
    EXPECT_FALSE(rep.granted);
}

TEST(Certify, BoundedGrowthCounterexample) {
    // F = xi^4 / 4 is not below b (1 + |xi|^{1.5})
    auto spec = ball_spec(with_growth(PowerSum{{{1.0, 4.0}}}, GrowthKind::H3Prime, 1.5, 10.0));
    EXPECT_FALSE(verdict(certify(spec), Hypothesis::H3Prime).holds);
}

TEST(Certify, ZeroNonlinearityDenied) {
    const auto rep = certify(ball_spec(Nonlinearity::zero()));
    EXPECT_FALSE(rep.granted);
    EXPECT_FALSE(verdict(rep, Hypothesis::H2).holds);
    EXPECT_FALSE(verdict(rep, Hypothesis::H2Prime).holds);
    EXPECT_FALSE(rep.interval.has_value());
}

TEST(Certify, AutonomousAsSeparableGivesSameReport) {
    auto a = ball_spec(Nonlinearity::example36());
    auto g = Nonlinearity::example36().growth();
    auto b = ball_spec(Nonlinearity(Example36{}, SpatialPolynomial::constant(1.0, 3), g));
    const auto ra = certify(a), rb = certify(b);
    EXPECT_EQ(rb.variant, "separable");
    for (auto [x, y] : {std::pair{ra.sigma, rb.sigma}, {ra.K, rb.K}, {ra.eta, rb.eta}, {ra.r, rb.r},
                        {ra.phi_u_delta, rb.phi_u_delta}, {ra.psi_u_delta, rb.psi_u_delta},
                        {ra.annulus_integral, rb.annulus_integral}, {ra.inner_integral, rb.inner_integral}})
        EXPECT_LE(rel(y, x), 1e-10);
    EXPECT_EQ(ra.sup_level_integral, rb.sup_level_integral);
    ASSERT_TRUE(ra.interval && rb.interval);
    EXPECT_LE(rel(rb.interval->lambda1, ra.interval->lambda1), 1e-10);
    EXPECT_LE(rel(rb.interval->lambda3h, ra.interval->lambda3h), 1e-10);
    EXPECT_EQ(ra.granted, rb.granted);
}

TEST(Certify, ReductionToInnerHalfRadius) {
    for (double p : {2.0, 2.5}) {
        auto base = ball_spec(with_growth(FlatThenPower{1.0, 2.2, 1.0}, GrowthKind::H3Star, 2.0), 3, p, 1.3, 1.0, 40.0);
        auto gen = base;
        gen.radii = AnnulusRadii{0.65, 1.3};
        const auto rb = certify(base), rg = certify(gen);
        EXPECT_LE(rel(rg.K_general, rb.K), 1e-10);
        EXPECT_LE(rel(rg.phi_v_delta, rb.phi_u_delta), 1e-10);
        EXPECT_LE(rel(verdict(rg, Hypothesis::H2Star).margin, verdict(rb, Hypothesis::H2).margin), 1e-10);
        ASSERT_TRUE(rg.interval_general && rb.interval);
        EXPECT_LE(rel(rg.interval_general->lambda1, rb.interval->lambda1), 1e-10);
    }
}

TEST(Certify, RadiusBeyondInradiusRejected) {
    auto spec = ball_spec(Nonlinearity::example36());
    spec.radii = AnnulusRadii{0.5, 1.2};
    EXPECT_THROW(certify(spec), SpecError);
}

TEST(Certify, Invariants) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int accepted = 0;
    for (int t = 0; t < 60; ++t) {
        const int N = 3 + static_cast<int>(rng() % 2);
        const double p = N / 2.0 + 0.3 + 2.0 * U(rng);
        auto spec = ball_spec(with_growth(FlatThenPower{0.5 + 2.0 * U(rng), 1.5 + U(rng), 0.2 + U(rng)}, GrowthKind::H3Star,
                                          std::min(p, 1.2)),
                              N, p, 0.5 + U(rng), 0.2 + U(rng), 1.0 + 30.0 * U(rng), 1.0 + 5.0 * U(rng));
        const auto rep = certify(spec);
        EXPECT_LE(rel(rep.eta, rep.r / (rep.r + rep.phi_u_delta)), 1e-12);
        if (verdict(rep, Hypothesis::H1).holds) {
            EXPECT_GT(rep.phi_u_delta, rep.r);
        }
        if (verdict(rep, Hypothesis::H2).holds) {
            ASSERT_TRUE(rep.interval.has_value());
            EXPECT_LT(rep.interval->lambda1, rep.interval->lambda2);
            ++accepted;
        }
        EXPECT_EQ(std::isinf(rep.interval ? rep.interval->lambda2 : kInf), rep.sup_level_integral == 0.0 || !rep.interval);
    }
    EXPECT_GT(accepted, 5);
}

TEST(LambdaInterval, Monotonicity) {
    // sup-level integral > 0 so lambda2 is finite; k enters through r only
    auto spec = ball_spec(Nonlinearity(PowerSum{{{1.0, 4.0}}}), 3, 2.0, 1.0, 0.5, 30.0);
    spec.k_override = 0.01;
    const auto a = certify(spec);
    spec.k_override = 0.012;
    const auto b = certify(spec);
    ASSERT_TRUE(a.interval && b.interval);
    EXPECT_TRUE(std::isfinite(a.interval->lambda2));
    EXPECT_GT(a.interval->lambda2, b.interval->lambda2);
    EXPECT_EQ(a.interval->lambda1, b.interval->lambda1);
    double last = 0.0;
    for (double h : {1.1, 2.0, 5.0, 50.0}) {
        const double l3 = lambda_interval(a, h).lambda3h;
        EXPECT_GT(l3, last);
        last = l3;
    }
}

TEST(LambdaInterval, FormulasAndGuards) {
    const auto iv = lambda_interval(100.0, 10.0, 4.0, 2.0, 3.0);
    EXPECT_DOUBLE_EQ(iv.lambda1, 100.0 / 8.0);
    EXPECT_DOUBLE_EQ(iv.lambda2, 2.0);
    EXPECT_DOUBLE_EQ(iv.lambda3h, 3.0 * 4.0 / (4.0 * 10.0 / 100.0 - 2.0));
    EXPECT_FALSE(iv.nonempty);
    const auto zero_s = lambda_interval(100.0, 10.0, 4.0, 0.0, 3.0);
    EXPECT_TRUE(std::isinf(zero_s.lambda2));
    EXPECT_DOUBLE_EQ(zero_s.lambda3h, 3.0 * 100.0 / 10.0);
    EXPECT_EQ(zero_s.overlap, Overlap::Overlapping);
    EXPECT_EQ(lambda_interval(100.0, 10.0, 4.0, 0.0, 1.0 - 1e-9).overlap, Overlap::Disjoint);
    EXPECT_THROW(lambda_interval(1.0, 1.0, 1.0, 1.0, 2.0), std::domain_error);
}

TEST(Certify, BoxDomainSeparable) {
    ProblemSpec s;
    s.dimension = 2;
    s.p = 2.0;
    s.domain = DomainSpec{Box{{0.0, 0.0}, {2.0, 1.0}}};
    s.nonlinearity = Nonlinearity(FlatThenPower{1.0, 2.0, 1.0}, SpatialPolynomial{{Monomial{1.0, {0, 0}}, Monomial{1.0, {1, 1}}}},
                                  GrowthMetadata{GrowthKind::H3, 1.5, SpatialPolynomial::constant(10.0, 2), 0.0});
    s.gamma = 1.0;
    s.delta = 5.0;
    s.h = 2.0;
    s.k_override = 0.5;
    const auto rep = certify(s);
    EXPECT_EQ(rep.variant, "separable");
    EXPECT_EQ(rep.tau, 0.5);
    EXPECT_EQ(rep.center, (std::vector<double>{1.0, 0.5}));
    EXPECT_EQ(rep.sup_level_integral, 0.0);
    EXPECT_EQ(rep.k_source, KSource::UserOverride);
}
