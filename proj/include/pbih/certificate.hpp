#ifndef PBIH_CERTIFICATE_HPP
#define PBIH_CERTIFICATE_HPP

/// \file certificate.hpp
/// Hypothesis checks and the certified lambda-intervals for the
/// three-solution theorems.
///
/// Inequalities (h1), (h2) and their variants are strict and evaluated
/// without a tolerance band; every margin already has the accumulated
/// quadrature error bound subtracted, so a certificate is never granted on
/// round-off. Growth hypotheses cannot be proven numerically: they are
/// validated by sampling, and flagged as such in the verdict.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "pbih/core.hpp"
#include "pbih/geometry.hpp"
#include "pbih/numerics.hpp"
#include "pbih/testfun.hpp"

namespace pbih::certificate {

using geometry::GeometryData;
using testfun::RadialTestFunction;

struct IntegralValue {
    double value = 0.0;
    double error = 0.0;
};

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

inline numerics::QuadOptions annulus_quad_options(double quad_tol) {
    return numerics::QuadOptions{1e-300, std::min(quad_tol, 1e-12), 20000};
}

/// Radii in (inner, outer) where the profile crosses a breakpoint of G.
inline std::vector<double> profile_kinks(const RadialTestFunction& tf, const std::vector<double>& breakpoints) {
    std::vector<double> kinks;
    for (double b : breakpoints) {
        if (!(b > 0.0 && b < tf.delta()))
            continue;
        auto shifted = [&](double s) { return tf.value(s) - b; };
        kinks.push_back(numerics::find_root(shifted, tf.inner(), tf.outer(), 1e-15 * tf.outer()));
    }
    return kinks;
}

} // namespace detail

/// Maximum of G over [-gamma, gamma]; never below G(0) = 0.
inline double max_primitive(const Nonlinearity& nl, double gamma) {
    const auto res = numerics::max_on_interval([&](double xi) { return nl.G(xi); }, -gamma, gamma);
    return std::max(res.max, 0.0);
}

/// \int_Omega max_{|xi| <= gamma} F(x, xi) dx. For a(x) g(t) the spatial
/// factor is split into a^+ and a^- since the maximiser depends on sign(a).
inline IntegralValue sup_level_integral(const ProblemSpec& spec, const GeometryData& geo, double gamma) {
    const auto& nl = spec.nonlinearity;
    const double max_g = max_primitive(nl, gamma);
    if (nl.autonomous())
        return {geo.meas * max_g, 0.0};
    const auto neg = numerics::max_on_interval([&](double xi) { return -nl.G(xi); }, -gamma, gamma);
    const double max_neg_g = std::max(neg.max, 0.0);
    const auto parts = geometry::polynomial_signed_parts(*nl.spatial(), spec.domain, spec.dimension);
    return {parts.positive * max_g + parts.negative * max_neg_g, parts.error * (max_g + max_neg_g)};
}

/// \int over inner < |x - x0| < outer of F(x, profile(|x - x0|)) dx, by
/// radial quadrature. A polynomial spatial factor is integrated over
/// spheres in closed form, leaving one radial integral per degree.
inline IntegralValue annulus_F_integral(const ProblemSpec& spec, const GeometryData& geo, const RadialTestFunction& tf) {
    const auto& nl = spec.nonlinearity;
    const int N = spec.dimension;
    const auto kinks = detail::profile_kinks(tf, nl.breakpoints());
    std::vector<double> moments;
    if (nl.autonomous())
        moments = {geometry::sphere_area(N)};
    else
        moments = geometry::spherical_moments(*nl.spatial(), geo.center);
    IntegralValue out;
    for (std::size_t m = 0; m < moments.size(); ++m) {
        if (moments[m] == 0.0)
            continue;
        const double power = static_cast<double>(m) + N - 1.0;
        auto integrand = [&](double s) { return nl.G(tf.value(s)) * std::pow(s, power); };
        const auto res =
            numerics::integrate(integrand, tf.inner(), tf.outer(), detail::annulus_quad_options(spec.quad_tol), kinks);
        out.value += moments[m] * res.value;
        out.error += std::fabs(moments[m]) * res.error_estimate;
    }
    return out;
}

/// \int_{B(x0, radius)} F(x, delta) dx, exact.
inline double inner_ball_F_integral(const ProblemSpec& spec, const GeometryData& geo, double radius, double delta) {
    const auto& nl = spec.nonlinearity;
    const double g_delta = nl.G(delta);
    if (g_delta == 0.0)
        return 0.0;
    if (nl.autonomous())
        return g_delta * geometry::ball_measure(spec.dimension, radius);
    return g_delta * geometry::annulus_polynomial_integral(*nl.spatial(), geo.center, 0.0, radius);
}

// ---------------------------------------------------------------------------
// Intervals

/// lambda1 = Phi/(Psi - S), lambda2 = r/S (+inf when S = 0),
/// lambda3h = h r / (r Psi/Phi - S). Needs Psi - S > 0.
inline IntervalPair lambda_interval(double phi, double psi, double r, double sup_level, double h) {
    if (!(psi - sup_level > 0.0))
        throw std::domain_error("lambda_interval: Psi(u) - sup-level integral must be positive");
    IntervalPair iv;
    iv.h = h;
    iv.lambda1 = phi / (psi - sup_level);
    iv.lambda2 = sup_level == 0.0 ? kInf : r / sup_level;
    iv.lambda3h = h * r / (r * psi / phi - sup_level);
    iv.nonempty = iv.lambda1 < iv.lambda2;
    iv.overlap = iv.lambda3h <= iv.lambda1 ? Overlap::Disjoint : Overlap::Overlapping;
    return iv;
}

inline IntervalPair lambda_interval(const CertificateReport& rep, double h) {
    return lambda_interval(rep.phi_u_delta, rep.psi_u_delta, rep.r, rep.sup_level_integral, h);
}

// ---------------------------------------------------------------------------
// Growth validation

namespace detail {

inline std::vector<double> growth_xi_grid() {
    std::vector<double> xi{0.0};
    for (int j = 0; j <= 180; ++j) {
        const double v = std::pow(10.0, -3.0 + j / 20.0);
        xi.push_back(v);
        xi.push_back(-v);
    }
    return xi;
}

/// Sample points for the spatial variable; a single dummy point when f is autonomous.
inline std::vector<std::vector<double>> growth_x_samples(const ProblemSpec& spec, const GeometryData& geo) {
    if (spec.nonlinearity.autonomous())
        return {geo.center};
    std::vector<std::vector<double>> xs{geo.center};
    for (auto& pt : geometry::domain_points(spec.domain, spec.dimension, 1))
        xs.push_back(std::move(pt.x));
    return xs;
}

} // namespace detail

/// F(x, xi) <= alpha(x) (1 + |xi|^s) with s < p, sampled. Margin: the
/// smallest sampled slack, or p - s when the exponent is inadmissible.
inline HypothesisVerdict check_bounded_growth(const ProblemSpec& spec, const GeometryData& geo) {
    const auto& nl = spec.nonlinearity;
    const auto& gm = nl.growth();
    HypothesisVerdict v;
    v.name = gm.kind == GrowthKind::H3 ? Hypothesis::H3 : Hypothesis::H3Prime;
    v.sampled = true;
    if (!(gm.s < spec.p)) {
        v.margin = spec.p - gm.s;
        v.detail = "declared s = " + detail::fmt(gm.s) + " is not below p";
        return v;
    }
    double worst = kInf;
    double worst_xi = 0.0;
    for (const auto& x : detail::growth_x_samples(spec, geo)) {
        const double bound_coef = gm.kind == GrowthKind::H3 ? gm.alpha(x) : gm.b;
        const double a = nl.autonomous() ? 1.0 : nl.spatial_factor(x);
        for (double xi : detail::growth_xi_grid()) {
            const double slack = bound_coef * (1.0 + pow_abs(xi, gm.s)) - a * nl.G(xi);
            if (slack < worst) {
                worst = slack;
                worst_xi = xi;
            }
        }
    }
    v.margin = worst;
    v.holds = worst >= 0.0;
    v.detail = std::string("validated (sampled) on |xi| <= 1e6; tightest at xi = ") + detail::fmt(worst_xi) +
               (v.holds ? "" : ": counterexample to the declared bound");
    return v;
}

/// lim_{|t|->inf} f(t)/|t|^{s-1} = 0 for some 1 <= s <= p, judged on the
/// tail |t| in [1e4, 1e6]: the ratio must decrease strictly. Margin: the
/// smaller of minus the log-log slope and minus the largest local increase.
inline HypothesisVerdict check_vanishing_ratio(const ProblemSpec& spec) {
    const auto& nl = spec.nonlinearity;
    const double s = nl.growth().s;
    HypothesisVerdict v;
    v.name = Hypothesis::H3Star;
    v.sampled = true;
    if (!(s >= 1.0 && s <= spec.p)) {
        v.margin = std::min(s - 1.0, spec.p - s);
        v.detail = "declared s = " + detail::fmt(s) + " outside [1, p]";
        return v;
    }
    double margin = kInf;
    bool all_zero = true;
    for (double side : {1.0, -1.0}) {
        std::vector<double> logt, logr;
        for (int j = 0; j <= 100; ++j) {
            const double t = std::pow(10.0, 4.0 + j / 50.0);
            const double ratio = std::fabs(nl.g(side * t)) / std::pow(t, s - 1.0);
            if (ratio == 0.0)
                continue;
            all_zero = false;
            logt.push_back(std::log(t));
            logr.push_back(std::log(ratio));
        }
        if (logt.empty())
            continue;
        if (logt.size() < 101) {
            // ratio vanishes on part of the tail but not all of it
            margin = std::min(margin, -1.0);
            continue;
        }
        const double n = static_cast<double>(logt.size());
        double mt = 0, mr = 0;
        for (std::size_t i = 0; i < logt.size(); ++i) {
            mt += logt[i] / n;
            mr += logr[i] / n;
        }
        double sxy = 0, sxx = 0, max_rise = -kInf;
        for (std::size_t i = 0; i < logt.size(); ++i) {
            sxy += (logt[i] - mt) * (logr[i] - mr);
            sxx += (logt[i] - mt) * (logt[i] - mt);
            if (i > 0)
                max_rise = std::max(max_rise, logr[i] - logr[i - 1]);
        }
        margin = std::min({margin, -sxy / sxx, -max_rise});
    }
    v.margin = all_zero ? kInf : margin;
    v.holds = v.margin > 0.0;
    v.detail = all_zero ? "validated (sampled): f vanishes on the sampled tail"
                        : std::string("validated (sampled) on |t| in [1e4, 1e6]: ratio ") +
                              (v.holds ? "decreases to zero" : "does not decrease");
    return v;
}

// ---------------------------------------------------------------------------
// Hypotheses

inline HypothesisVerdict strict_verdict(Hypothesis name, double lhs_minus_rhs, double error, std::string detail) {
    HypothesisVerdict v;
    v.name = name;
    v.error_bound = error;
    v.margin = lhs_minus_rhs - error;
    v.holds = v.margin > 0.0;
    v.detail = std::move(detail);
    return v;
}

/// Verdicts for every applicable hypothesis given a report whose constants
/// are filled in. Autonomous problems also get the pointwise variants.
inline std::vector<HypothesisVerdict> check_hypotheses(const ProblemSpec& spec, const GeometryData& geo,
                                                       const CertificateReport& c, double sup_err, double psi_err,
                                                       double psi_v_err) {
    const auto& nl = spec.nonlinearity;
    const double p = spec.p;
    std::vector<HypothesisVerdict> out;

    // delta > K^{1/p} gamma; relative sigma error e moves K^{1/p} by e/p
    const double k_root = std::pow(c.K, 1.0 / p);
    const double sig_rel = testfun::log_sigma(p, spec.dimension, geo.tau, spec.quad_tol).rel_error;
    out.push_back(strict_verdict(Hypothesis::H1, spec.delta - k_root * spec.gamma, k_root * spec.gamma * sig_rel / p,
                                 "delta = " + detail::fmt(spec.delta) + " vs K^{1/p} gamma = " +
                                     detail::fmt(k_root * spec.gamma)));

    out.push_back(strict_verdict(Hypothesis::H2, c.eta * c.psi_u_delta - c.sup_level_integral,
                                 sup_err + c.eta * psi_err,
                                 "sup-level integral " + detail::fmt(c.sup_level_integral) + " vs eta (R_F + inner) = " +
                                     detail::fmt(c.eta * c.psi_u_delta)));

    if (nl.autonomous()) {
        const double max_g = max_primitive(nl, spec.gamma);
        out.push_back(strict_verdict(Hypothesis::H2Prime, c.eta * c.psi_u_delta / geo.meas - max_g,
                                     c.eta * psi_err / geo.meas,
                                     "max F on [-gamma, gamma] = " + detail::fmt(max_g) + " vs eta (G_F + meas F(delta))/meas = " +
                                         detail::fmt(c.eta * c.psi_u_delta / geo.meas)));
    }

    if (c.radii) {
        const double kg_root = std::pow(c.K_general, 1.0 / p);
        out.push_back(strict_verdict(Hypothesis::H1Star, spec.delta - kg_root * spec.gamma, 0.0,
                                     "delta vs K(r1, r2)^{1/p} gamma = " + detail::fmt(kg_root * spec.gamma)));
        const double w = c.r / (c.r + c.phi_v_delta);
        out.push_back(strict_verdict(Hypothesis::H2Star, w * c.psi_v_delta - c.sup_level_integral, sup_err + w * psi_v_err,
                                     "sup-level integral vs r/(r + Phi(v)) (R_F(r1, r2) + inner) = " +
                                         detail::fmt(w * c.psi_v_delta)));
    }

    switch (nl.growth().kind) {
    case GrowthKind::H3:
    case GrowthKind::H3Prime: out.push_back(check_bounded_growth(spec, geo)); break;
    case GrowthKind::H3Star: out.push_back(check_vanishing_ratio(spec)); break;
    case GrowthKind::None: break;
    }

    // sufficient conditions for (h2)
    {
        HypothesisVerdict j1;
        j1.name = Hypothesis::J1;
        j1.sampled = true;
        double worst = kInf;
        const auto pts = nl.autonomous() ? std::vector<std::vector<double>>{geo.center}
                                         : [&] {
                                               std::vector<std::vector<double>> xs;
                                               for (auto& pt : geometry::ball_points(Ball{geo.center, geo.tau}, 4, 2)) {
                                                   const double l = testfun::distance(pt.x, geo.center);
                                                   if (l >= 0.5 * geo.tau)
                                                       xs.push_back(std::move(pt.x));
                                               }
                                               return xs;
                                           }();
        for (const auto& x : pts)
            for (int j = 0; j <= 256; ++j)
                worst = std::min(worst, nl.F(x, spec.delta * j / 256.0));
        j1.margin = worst;
        j1.holds = worst >= 0.0;
        j1.detail = "min F on annulus x [0, delta] (sampled, non-strict)";
        out.push_back(j1);
    }
    out.push_back(strict_verdict(Hypothesis::J2, c.eta * c.inner_integral - c.sup_level_integral, sup_err,
                                 "sup-level integral vs eta * inner-ball integral = " + detail::fmt(c.eta * c.inner_integral)));
    if (nl.autonomous()) {
        HypothesisVerdict j1p;
        j1p.name = Hypothesis::J1Prime;
        j1p.margin = c.annulus_integral + psi_err;
        j1p.error_bound = psi_err;
        j1p.holds = j1p.margin >= 0.0;
        j1p.detail = "G_F = " + detail::fmt(c.annulus_integral) + " (non-strict)";
        out.push_back(j1p);
        const double max_g = max_primitive(nl, spec.gamma);
        out.push_back(strict_verdict(Hypothesis::J2Prime,
                                     c.eta * c.meas_inner_ball / geo.meas * nl.G(spec.delta) - max_g, 0.0,
                                     "max F vs eta meas(B)/meas(Omega) F(delta) = " +
                                         detail::fmt(c.eta * c.meas_inner_ball / geo.meas * nl.G(spec.delta))));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline

/// Full pipeline: geometry and k, constants, hypothesis verdicts, intervals.
/// A failed hypothesis gives a report with granted = false, not an error.
inline CertificateReport certify(const ProblemSpec& spec) {
    validate(spec);
    const auto geo = geometry::resolve_geometry(spec);
    const int N = spec.dimension;
    const double p = spec.p;
    const auto& nl = spec.nonlinearity;

    CertificateReport rep;
    rep.dimension = N;
    rep.p = p;
    rep.gamma = spec.gamma;
    rep.delta = spec.delta;
    rep.k = geo.k;
    rep.k_source = geo.k_source;
    rep.tau = geo.tau;
    rep.center = geo.center;
    rep.meas = geo.meas;
    rep.meas_inner_ball = geometry::ball_measure(N, 0.5 * geo.tau);
    rep.autonomous = nl.autonomous();
    rep.variant = nl.autonomous() ? "autonomous" : "separable";

    const auto lsig = testfun::log_sigma(p, N, geo.tau, spec.quad_tol);
    rep.sigma = std::exp(lsig.log_value);
    rep.K = std::exp(testfun::log_K_const(p, N, geo.tau, geo.k, lsig.log_value));
    rep.eta = testfun::eta_from_log_sigma(spec.gamma, spec.delta, p, N, geo.tau, geo.k, lsig.log_value);
    rep.r = testfun::r_level(spec.gamma, p, geo.k);
    rep.phi_u_delta = std::exp(testfun::log_phi_u_delta(p, N, geo.tau, spec.delta, lsig.log_value));

    const auto sup = sup_level_integral(spec, geo, spec.gamma);
    rep.sup_level_integral = sup.value;
    const auto annulus = annulus_F_integral(spec, geo, RadialTestFunction::u_delta(geo.tau, spec.delta));
    rep.annulus_integral = annulus.value;
    rep.inner_integral = inner_ball_F_integral(spec, geo, 0.5 * geo.tau, spec.delta);
    rep.psi_u_delta = rep.annulus_integral + rep.inner_integral;
    rep.quadrature_error = sup.error + annulus.error;

    double psi_v_err = 0.0;
    if (spec.radii) {
        const auto [r1, r2] = *spec.radii;
        if (r2 > geo.tau * (1.0 + 1e-14))
            throw SpecError("annulus radius r2 exceeds the inradius: B(x0, r2) must lie in the domain");
        rep.radii = spec.radii;
        const auto lsg = testfun::log_sigma_general(p, N, r1, r2, spec.quad_tol);
        rep.sigma_general = std::exp(lsg.log_value);
        const double log_kg = testfun::log_K_general(p, N, r1, r2, geo.k, lsg.log_value);
        rep.K_general = std::exp(log_kg);
        rep.phi_v_delta = std::exp(testfun::log_phi_v_delta(p, spec.delta, geo.k, log_kg));
        const auto ann_v = annulus_F_integral(spec, geo, RadialTestFunction::v_delta(r1, r2, spec.delta));
        rep.psi_v_delta = ann_v.value + inner_ball_F_integral(spec, geo, r1, spec.delta);
        psi_v_err = ann_v.error;
        rep.quadrature_error += ann_v.error;
    }

    rep.verdicts = check_hypotheses(spec, geo, rep, sup.error, annulus.error, psi_v_err);

    const auto* h1 = rep.verdict(Hypothesis::H1);
    const auto* h2 = rep.verdict(Hypothesis::H2);
    bool growth_ok = false;
    for (auto g : {Hypothesis::H3, Hypothesis::H3Prime, Hypothesis::H3Star})
        if (const auto* v = rep.verdict(g))
            growth_ok = v->holds;

    if (h2->holds)
        rep.interval = lambda_interval(rep, spec.h);
    if (rep.radii) {
        const auto* h1s = rep.verdict(Hypothesis::H1Star);
        const auto* h2s = rep.verdict(Hypothesis::H2Star);
        if (h1s->holds && h2s->holds)
            rep.interval_general =
                lambda_interval(rep.phi_v_delta, rep.psi_v_delta, rep.r, rep.sup_level_integral, spec.h);
    }
    rep.granted = h1->holds && h2->holds && growth_ok && rep.interval && rep.interval->nonempty;

    // notes
    if (geo.k_source == KSource::TalentiBound)
        rep.notes.push_back("k is the rearrangement upper bound, evaluated exactly as displayed with N(N-2)pi in the "
                            "denominator; intervals are conservative (lambda2 and eta shrink as k grows)");
    else
        rep.notes.push_back("k supplied by the user");
    rep.notes.push_back("test-function Laplacian on the annulus uses the factor 32*delta");
    rep.notes.push_back(nl.autonomous() ? "autonomous nonlinearity: pointwise h2prime and j-prime variants reported"
                                        : "separable nonlinearity a(x) g(t) with polynomial a");
    if (rep.sup_level_integral == 0.0)
        rep.notes.push_back("sup-level integral vanishes: lambda2 = +inf and lambda3h = h * lambda1");
    rep.notes.push_back("growth verdicts are validated by sampling, not proven");
    if (nl.growth().kind == GrowthKind::None)
        rep.notes.push_back("no growth metadata declared: coercivity unchecked, certificate withheld");
    rep.notes.push_back("the second interval is only known to lie inside [0, lambda3h]");
    if (!h1->holds)
        rep.notes.push_back("h1 fails: increase delta");
    if (!h2->holds)
        rep.notes.push_back("h2 fails: no certified interval");
    return rep;
}

} // namespace pbih::certificate

#endif // PBIH_CERTIFICATE_HPP
