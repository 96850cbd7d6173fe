// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pbih/cli.hpp"

using namespace pbih;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;
using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

std::string cfg(const std::string& name) { return std::string(PBIH_SOURCE_DIR) + "/configs/" + name; }

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void run(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = budget_s <= 0.0 || dt < budget_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("%s criterion %d (%s): %s; %.3f s%s\n", pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), dt,
                in_time ? "" : " (over budget)");
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

ProblemSpec ball_spec(Nonlinearity nl, int N, double p, double R, double gamma, double delta, double h) {
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

ProblemSpec random_spec(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int N = 3 + static_cast<int>(rng() % 3);
    const double p = N / 2.0 + 0.2 + 2.0 * U(rng);
    const double s = std::min(p, 1.2);
    Nonlinearity nl(FlatThenPower{0.5 + 2.0 * U(rng), 1.5 + U(rng), 0.2 + U(rng)}, std::nullopt,
                    GrowthMetadata{GrowthKind::H3Star, s, {}, 1.0});
    auto spec = ball_spec(std::move(nl), N, p, 0.5 + U(rng), 0.2 + U(rng), 1.0 + 30.0 * U(rng), 1.0 + 5.0 * U(rng));
    validate(spec);
    return spec;
}

// lambda_1^* for the example: sigma = 83/1120 and a Boost quadrature of the annulus integral
double example36_lambda1_star(double delta) {
    auto F = [](double xi) { return xi < 2.0 ? 0.0 : 2.0 * std::pow(xi - 2.0, 1.5) / 3.0; };
    auto u = [&](double s) { return 16.0 * s * s * (1.0 - s) * (1.0 - s) * delta; };
    double a = 0.5, b = 1.0;
    for (int i = 0; i < 200; ++i)
        ((u(0.5 * (a + b)) > 2.0) ? a : b) = 0.5 * (a + b);
    const double GF = 4.0 * pi * GK::integrate([&](double s) { return F(u(s)) * s * s; }, 0.5, a, 15, 1e-14);
    const double inner = 4.0 * pi / 3.0 / 8.0 * F(delta);
    return 1024.0 * std::pow(pi, 1.5) * (83.0 / 1120.0) * delta * delta / ((std::sqrt(pi) / 2.0) * (GF + inner));
}

// |Lap u_delta|^p / p over the ball, from u'' + (N - 1) u'/l of the shoulder polynomial
double phi_u_delta_oracle(double p, int N, double tau, double delta) {
    const double c = 32.0 * delta / std::pow(tau, 4);
    auto lap = [&](double l) {
        const double d1 = c * l * (tau - l) * (tau - 2.0 * l);
        const double d2 = c * (tau * tau - 6.0 * tau * l + 6.0 * l * l);
        return d2 + (N - 1) * d1 / l;
    };
    // the Laplacian is c times 2(N+2) l^2 - 3(N+1) tau l + N tau^2; split at its roots
    const double A = 2.0 * (N + 2), B = -3.0 * (N + 1) * tau, C = N * tau * tau;
    const double disc = std::sqrt(B * B - 4.0 * A * C);
    std::vector<double> cuts{0.5 * tau};
    for (double r : {(-B - disc) / (2.0 * A), (-B + disc) / (2.0 * A)})
        if (r > 0.5 * tau && r < tau)
            cuts.push_back(r);
    cuts.push_back(tau);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        acc += GK::integrate([&](double l) { return std::pow(std::fabs(lap(l)), p) * std::pow(l, N - 1); }, cuts[i],
                             cuts[i + 1], 15, 1e-12);
    const double omega = 2.0 * std::pow(pi, N / 2.0) / std::tgamma(N / 2.0);
    return omega * acc / p;
}

Outcome criterion1() {
    const auto spec = config::parse_spec(config::read_file(cfg("example36.cfg")));
    const auto rep = certificate::certify(spec);
    const double star = example36_lambda1_star(spec.delta);
    bool ok = rep.granted && rep.sup_level_integral == 0.0 && rep.interval && std::isinf(rep.interval->lambda2) &&
              rel(rep.interval->lambda1, star) <= 1e-10;
    double worst = 0.0;
    for (double h : {1.5, 2.0, 10.0})
        worst = std::max(worst, rel(certificate::lambda_interval(rep, h).lambda3h, h * star));
    ok = ok && worst <= 1e-10;
    return {ok, fmt("max F = %g, lambda2 = inf, lambda1* = %.10g (oracle %.10g), max rel err lambda3h vs h lambda1* = %.2e",
                    rep.sup_level_integral, rep.interval ? rep.interval->lambda1 : NAN, star, worst)};
}

Outcome criterion2() {
    double worst = 0.0;
    for (double p : {2.0, 2.5, 3.0})
        for (int N : {3, 4, 5})
            for (double tau : {0.5, 1.0, 2.0})
                for (double delta : {1.0, 3.0})
                    worst = std::max(worst, rel(testfun::phi_u_delta(p, N, tau, delta), phi_u_delta_oracle(p, N, tau, delta)));
    return {worst <= 1e-8, fmt("54 sets, max rel err %.2e (tol 1e-8)", worst)};
}

Outcome criterion3() {
    const double e0 = rel(testfun::sigma(2.0, 3, 1.0), 83.0 / 1120.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const int N = 1 + static_cast<int>(rng() % 6);
        const double p = std::max(1.0, N / 2.0) + 0.05 + 3.0 * U(rng);
        const double tau = 0.1 + 4.0 * U(rng);
        worst = std::max(worst, rel(testfun::sigma(p, N, tau), std::pow(tau, 2.0 * p + N) * testfun::sigma(p, N, 1.0)));
    }
    return {e0 <= 1e-10 && worst <= 1e-10,
            fmt("sigma(2,3,1) rel err vs 83/1120 %.2e; scaling law max rel err %.2e over 20 sets", e0, worst)};
}

Outcome criterion4() {
    std::mt19937_64 rng(4);
    double worst_K = 0.0, worst_m = 0.0;
    for (int t = 0; t < 20; ++t) {
        auto spec = random_spec(rng);
        const double tau = std::get<Ball>(spec.domain.shape).radius;
        const double k = 0.05 + 0.5 * static_cast<double>(rng() % 1000) / 1000.0;
        worst_K = std::max(worst_K, rel(testfun::K_general(spec.p, spec.dimension, 0.5 * tau, tau, k),
                                        testfun::K_const(spec.p, spec.dimension, tau, k)));
        const auto base = certificate::certify(spec);
        spec.radii = AnnulusRadii{0.5 * tau, tau};
        const auto gen = certificate::certify(spec);
        worst_m = std::max(worst_m, rel(gen.verdict(Hypothesis::H2Star)->margin, base.verdict(Hypothesis::H2)->margin));
    }
    return {worst_K <= 1e-10 && worst_m <= 1e-10,
            fmt("20 sets: K_general vs K max rel err %.2e; h2* vs h2 margin max rel err %.2e", worst_K, worst_m)};
}

Outcome criterion5() {
    std::mt19937_64 rng(5);
    int n_h1 = 0, n_h2 = 0, bad = 0;
    double worst_eta = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto rep = certificate::certify(random_spec(rng));
        worst_eta = std::max(worst_eta, rel(rep.eta, rep.r / (rep.r + rep.phi_u_delta)));
        if (rep.verdict(Hypothesis::H1)->holds) {
            ++n_h1;
            bad += rep.phi_u_delta > rep.r ? 0 : 1;
        }
        if (rep.verdict(Hypothesis::H2)->holds) {
            ++n_h2;
            bad += (rep.interval && rep.interval->lambda1 < rep.interval->lambda2) ? 0 : 1;
        }
    }
    return {bad == 0 && worst_eta <= 1e-12 && n_h1 > 0 && n_h2 > 0,
            fmt("100 specs: h1 held %g times, h2 held %g times, violated implications %g, eta identity max rel err %.2e",
                n_h1, n_h2, bad, worst_eta)};
}

Outcome criterion6() {
    const double exact = 7.0 / 360.0;
    std::vector<double> err;
    for (int n : {50, 100, 200, 400}) {
        const solver::RadialGrid grid(3, 2.0, 1.0, n, Nonlinearity(PiecewisePolynomial{{}, {Poly1{{1.0}}}}));
        const auto rec = solver::picard_p2(grid, 1.0, solver::zero_init(grid), {1e-13, 200});
        if (!rec.converged)
            return {false, "picard did not converge at n = " + std::to_string(n)};
        err.push_back(std::fabs(rec.state.u[0] - exact));
    }
    bool ok = err.back() / exact <= 1e-3;
    std::string orders;
    for (std::size_t i = 0; i + 1 < err.size(); ++i) {
        const double q = std::log2(err[i] / err[i + 1]);
        ok = ok && std::fabs(q - 2.0) <= 0.2;
        orders += fmt("%.4f ", q);
    }
    return {ok, "observed orders " + orders + fmt("; rel err at n = 400: %.2e", err.back() / exact)};
}

Outcome criterion7() {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss;
    double worst = 0.0;
    for (double p : {2.0, 2.5, 3.0}) {
        const solver::RadialGrid grid(3, p, 1.0, 64, Nonlinearity(PowerSum{{{1.0, 3.0}, {0.5, 2.5}}}));
        for (int t = 0; t < 50; ++t) {
            const solver::Vec u = solver::random_smooth_init(grid, 1.0 + t % 3, rng);
            solver::Vec v = solver::random_smooth_init(grid, 1.0, rng);
            for (auto& x : v)
                x += grid.spacing() * grid.spacing() * gauss(rng);
            const double lambda = 0.5 + t % 4, eps = 1e-5;
            const double fd = (solver::energy(grid, solver::Vec(u + eps * v), lambda) -
                               solver::energy(grid, solver::Vec(u - eps * v), lambda)) /
                              (2.0 * eps);
            const double dd = solver::gradient(grid, u, lambda).dot(v);
            worst = std::max(worst, std::fabs(fd - dd) / std::fabs(dd));
        }
    }
    return {worst <= 1e-6, fmt("150 states (p = 2, 2.5, 3), step 1e-5: max rel err %.2e (tol 1e-6)", worst)};
}

Outcome criterion8() {
    const auto spec = config::parse_spec(config::read_file(cfg("example36.cfg")));
    const auto rep = certificate::certify(spec);
    const double lambda = 2.0 * rep.interval->lambda1;
    const auto grid = solver::RadialGrid::from_spec(spec, 200);
    const solver::DescentOptions opt{1e-8, spec.solver.max_iter};
    const auto triv = solver::minimize(grid, lambda, solver::zero_init(grid), opt);
    const auto minz = solver::minimize(grid, lambda, solver::udelta_init(grid, spec.delta), opt);
    const bool two = triv.converged && triv.residual == 0.0 && triv.state.max_abs == 0.0 && minz.converged &&
                     minz.state.energy < 0.0 && minz.residual <= 1e-8 && solver::distinct(minz, triv, 1e-4);
    std::string detail = fmt("lambda = %.6f; trivial residual %g; minimizer J = %.6g, relative residual %.2e, ", lambda,
                             triv.residual, minz.state.energy, minz.residual) +
                         fmt("|grad| %.2e, max|u| %.6g; ", minz.state.grad_norm, minz.state.max_abs);
    const auto mp = solver::mountain_pass(grid, lambda, solver::zero_init(grid), solver::unknowns(minz),
                                          {1e-6, 500, spec.solver.distinct_tol});
    bool third_ok;
    if (mp.converged) {
        const double low = mp.energy_history[0], peak = mp.energy_history[1];
        third_ok = mp.residual <= 1e-6 && mp.state.energy > low && mp.state.energy < peak;
        detail += fmt("mountain-pass candidate J = %.6g in (%.6g, %.6g), relative residual %.2e, ", mp.state.energy, low,
                      peak, mp.residual) +
                  fmt("|grad| %.2e, max|u| %.6g", mp.state.grad_norm, mp.state.max_abs);
    } else {
        third_ok = !mp.reason.empty();
        detail += "mountain-pass failure record: " + mp.reason;
    }
    return {two && third_ok, detail};
}

Outcome criterion9() {
    const auto dir = fs::current_path() / "acceptance_runs";
    fs::create_directories(dir);
    const auto p = [&](const char* n) { return (dir / n).string(); };
    std::ostringstream err;
    bool ok = true;
    std::string detail;
    for (const char* name : {"example36.cfg", "annulus.cfg", "separable_box.cfg", "zero.cfg"}) {
        cli::cmd_certify(cfg(name), p("c1.json"), {}, err);
        cli::cmd_certify(cfg(name), p("c2.json"), {}, err);
        const bool same = slurp(p("c1.json")) == slurp(p("c2.json")) && !slurp(p("c1.json")).empty();
        ok = ok && same;
        detail += std::string(name) + (same ? " certify identical; " : " certify differs; ");
    }
    const int b1 = cli::cmd_branch(cfg("example36.cfg"), "1000:6000:6", 4, 42, p("b1.csv"), 1, err);
    const int b2 = cli::cmd_branch(cfg("example36.cfg"), "1000:6000:6", 4, 42, p("b2.csv"), 0, err);
    const bool same = b1 == 0 && b2 == 0 && slurp(p("b1.csv")) == slurp(p("b2.csv"));
    ok = ok && same;
    detail += same ? "branch (seed 42, 1 thread vs all threads) identical" : "branch differs";
    return {ok, detail};
}

} // namespace

int main() {
    run(1, "example reproduction", 1.0, criterion1);
    run(2, "Phi(u_delta) closed form vs quadrature", 10.0, criterion2);
    run(3, "sigma oracle and scaling", 0.0, criterion3);
    run(4, "annulus reduction", 0.0, criterion4);
    run(5, "proof-step implications", 0.0, criterion5);
    run(6, "linear solver oracle", 5.0, criterion6);
    run(7, "gradient vs finite differences", 0.0, criterion7);
    run(8, "multiplicity at desk scale", 60.0, criterion8);
    run(9, "determinism", 0.0, criterion9);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
