#ifndef PBIH_SOLVER_HPP
#define PBIH_SOLVER_HPP

/// \file solver.hpp
/// Radial discretisation of J(u) = \int |Lap u|^p / p - lambda \int F(u) on a
/// ball, with descent, a p = 2 Picard iteration, a mountain-pass search and
/// lambda sweeps.
///
/// The Laplacian is a finite-volume operator on cells around r_i = i h:
/// fluxes omega rho^{N-1} (u_{i+1} - u_i)/h through the cell faces divided
/// by the cell volume. Only u(R) = 0 is imposed; Lap u(R) = 0 is natural.
/// The boundary cell [R - h/2, R] takes u'(R) from a one-sided second-order
/// difference. The operator reproduces Lap(R^2 - r^2) = -2N exactly.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "pbih/certificate.hpp"
#include "pbih/core.hpp"
#include "pbih/geometry.hpp"
#include "pbih/testfun.hpp"

namespace pbih::solver {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

class RadialGrid {
  public:
    RadialGrid(int N, double p, double R, int n, Nonlinearity nl)
      : N_(N)
      , p_(p)
      , R_(R)
      , n_(n)
      , h_(R / n)
      , nl_(std::move(nl)) {
        if (N < 1 || !(p > 1.0) || !(R > 0.0) || n < 8)
            throw std::invalid_argument("RadialGrid: need N >= 1, p > 1, R > 0, n >= 8");
        if (!nl_.autonomous())
            throw SpecError("solver supports autonomous nonlinearities only");
        build();
    }

    static RadialGrid from_spec(const ProblemSpec& spec, std::optional<int> n = std::nullopt) {
        const auto* ball = std::get_if<Ball>(&spec.domain.shape);
        if (!ball)
            throw SpecError("solver requires ball domain");
        return RadialGrid(spec.dimension, spec.p, ball->radius, n.value_or(spec.solver.n), spec.nonlinearity);
    }

    int dimension() const { return N_; }
    double p() const { return p_; }
    double radius() const { return R_; }
    int n() const { return n_; }
    double spacing() const { return h_; }
    const Nonlinearity& nonlinearity() const { return nl_; }
    double node(int i) const { return i * h_; }
    /// Cell volumes V_0..V_n.
    const Vec& volumes() const { return V_; }
    /// (n+1) x n operator: Laplacian at nodes 0..n of the unknowns u_0..u_{n-1} (u_n = 0).
    const SpMat& laplacian() const { return A_; }

    Vec apply(const Vec& u) const { return A_ * u; }

  private:
    void build() {
        const double omega = geometry::sphere_area(N_);
        const int n = n_;
        const double h = h_;
        V_.resize(n + 1);
        auto shell = [&](double lo, double hi) { return omega * (std::pow(hi, N_) - std::pow(lo, N_)) / N_; };
        V_[0] = shell(0.0, 0.5 * h);
        for (int i = 1; i < n; ++i)
            V_[i] = shell((i - 0.5) * h, (i + 0.5) * h);
        V_[n] = shell(R_ - 0.5 * h, R_);

        auto face = [&](double rho) { return omega * std::pow(rho, N_ - 1) / h; };
        std::vector<Eigen::Triplet<double>> t;
        auto add = [&](int row, int col, double v) {
            if (col < n)
                t.emplace_back(row, col, v);
        };
        {
            const double c = face(0.5 * h) / V_[0];
            add(0, 0, -c);
            add(0, 1, c);
        }
        for (int i = 1; i < n; ++i) {
            const double cp = face((i + 0.5) * h) / V_[i];
            const double cm = face((i - 0.5) * h) / V_[i];
            add(i, i - 1, cm);
            add(i, i, -(cp + cm));
            add(i, i + 1, cp);
        }
        {
            // outward flux from u'(R) ~ (3u_n - 4u_{n-1} + u_{n-2})/(2h), inward through R - h/2
            const double out = omega * std::pow(R_, N_ - 1) / (2.0 * h) / V_[n];
            const double in = face(R_ - 0.5 * h) / V_[n];
            add(n, n - 1, -4.0 * out + in);
            add(n, n - 2, out);
        }
        A_.resize(n + 1, n);
        A_.setFromTriplets(t.begin(), t.end());
        A_.makeCompressed();
    }

    int N_;
    double p_;
    double R_;
    int n_;
    double h_;
    Nonlinearity nl_;
    Vec V_;
    SpMat A_;
};

// ---------------------------------------------------------------------------
// Energy
//
// The discrete Hessian has condition number O(h^-4), so a state rounded to
// double already carries a gradient floor of eps/h^4 relative to its terms.
// Kernels therefore accept long double states and accumulate in long double;
// descent iterates are kept in long double and only reported in double.

using Ext = long double;
using ExtVec = Eigen::Matrix<Ext, Eigen::Dynamic, 1>;

namespace detail {

template <typename S>
std::vector<Ext> apply_ext(const RadialGrid& grid, const Eigen::Matrix<S, Eigen::Dynamic, 1>& u) {
    const SpMat& A = grid.laplacian();
    std::vector<Ext> z(static_cast<std::size_t>(A.rows()), 0.0L);
    for (Eigen::Index col = 0; col < A.outerSize(); ++col)
        for (SpMat::InnerIterator it(A, col); it; ++it)
            z[static_cast<std::size_t>(it.row())] += static_cast<Ext>(it.value()) * static_cast<Ext>(u[col]);
    return z;
}

inline Ext pow_abs_ext(Ext x, double p) {
    if (x == 0.0L)
        return 0.0L;
    return p == 2.0 ? x * x : std::pow(std::fabs(x), static_cast<Ext>(p));
}

} // namespace detail

template <typename S>
double phi_part(const RadialGrid& grid, const Eigen::Matrix<S, Eigen::Dynamic, 1>& u) {
    const auto z = detail::apply_ext(grid, u);
    const Vec& V = grid.volumes();
    Ext acc = 0.0L;
    for (std::size_t i = 0; i < z.size(); ++i)
        acc += V[static_cast<Eigen::Index>(i)] * detail::pow_abs_ext(z[i], grid.p());
    return static_cast<double>(acc / grid.p());
}

template <typename S>
double psi_part(const RadialGrid& grid, const Eigen::Matrix<S, Eigen::Dynamic, 1>& u) {
    const Vec& V = grid.volumes();
    Ext acc = 0.0L;
    for (Eigen::Index i = 0; i < u.size(); ++i)
        acc += V[i] * static_cast<Ext>(grid.nonlinearity().G(static_cast<double>(u[i])));
    return static_cast<double>(acc);
}

/// Sum V |Lu|^p / p - lambda sum V F(u).
template <typename S>
double energy(const RadialGrid& grid, const Eigen::Matrix<S, Eigen::Dynamic, 1>& u, double lambda) {
    return static_cast<double>(static_cast<Ext>(phi_part(grid, u)) - static_cast<Ext>(lambda) * psi_part(grid, u));
}

/// The gradient and its two parts A^T (V |Lu|^{p-2} Lu) and lambda V g(u).
struct GradientParts {
    Vec phi;
    Vec psi;
    Vec total; ///< phi - psi, formed before rounding to double

    /// |total| / (|phi| + |psi|); zero at an exact critical point.
    double relative() const {
        const double t = total.norm();
        return t == 0.0 ? 0.0 : t / (phi.norm() + psi.norm());
    }
};

template <typename S>
GradientParts gradient_parts(const RadialGrid& grid, const Eigen::Matrix<S, Eigen::Dynamic, 1>& u, double lambda) {
    const auto z = detail::apply_ext(grid, u);
    const Vec& V = grid.volumes();
    const double p = grid.p();
    std::vector<Ext> w(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        Ext mag = z[i];
        if (p != 2.0 && mag != 0.0L)
            mag = std::copysign(std::pow(std::fabs(mag), static_cast<Ext>(p - 1.0)), mag);
        w[i] = V[static_cast<Eigen::Index>(i)] * mag;
    }
    const SpMat& A = grid.laplacian();
    GradientParts out{Vec(u.size()), Vec(u.size()), Vec(u.size())};
    for (Eigen::Index col = 0; col < A.outerSize(); ++col) {
        Ext acc = 0.0L;
        for (SpMat::InnerIterator it(A, col); it; ++it)
            acc += static_cast<Ext>(it.value()) * w[static_cast<std::size_t>(it.row())];
        const Ext src = static_cast<Ext>(lambda) * V[col] * grid.nonlinearity().g(static_cast<double>(u[col]));
        out.phi[col] = static_cast<double>(acc);
        out.psi[col] = static_cast<double>(src);
        out.total[col] = static_cast<double>(acc - src);
    }
    return out;
}

/// Exact gradient of energy() with respect to u_0..u_{n-1}.
template <typename S>
Vec gradient(const RadialGrid& grid, const Eigen::Matrix<S, Eigen::Dynamic, 1>& u, double lambda) {
    return gradient_parts(grid, u, lambda).total;
}

/// Discrete ||u|| = (sum V |Lu|^p)^{1/p}.
template <typename S>
double discrete_norm(const RadialGrid& grid, const Eigen::Matrix<S, Eigen::Dynamic, 1>& u) {
    return std::pow(grid.p() * phi_part(grid, u), 1.0 / grid.p());
}

// ---------------------------------------------------------------------------
// Records

enum class Classification { Trivial, Minimizer, MountainPassCandidate, Other };

inline const char* to_string(Classification c) {
    switch (c) {
    case Classification::Trivial: return "trivial";
    case Classification::Minimizer: return "minimizer";
    case Classification::MountainPassCandidate: return "mountain_pass_candidate";
    case Classification::Other: return "other";
    }
    return "?";
}

struct RadialState {
    std::vector<double> r;
    std::vector<double> u; ///< n + 1 values, u.back() == 0
    double lambda = 0.0;
    double energy = 0.0;
    double grad_norm = 0.0; ///< absolute l2 norm of the gradient
    double norm = 0.0;
    double max_abs = 0.0;
};

/// residual is the relative gradient norm GradientParts::relative() for the
/// descent methods and the relative fixed-point change for picard_p2.
struct SolutionRecord {
    RadialState state;
    Classification classification = Classification::Other;
    double residual = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string method;
    std::string reason;                 ///< why a run failed; empty otherwise
    std::vector<double> energy_history; ///< accepted iterates (descent methods)

    /// Distinctness key: the max-norm of the solution.
    double key() const { return state.max_abs; }
};

inline Vec unknowns(const SolutionRecord& rec) {
    const auto& u = rec.state.u;
    return Eigen::Map<const Vec>(u.data(), static_cast<Eigen::Index>(u.size() - 1));
}

template <typename S>
RadialState make_state(const RadialGrid& grid, const Eigen::Matrix<S, Eigen::Dynamic, 1>& u, double lambda) {
    RadialState s;
    s.lambda = lambda;
    s.r.resize(static_cast<std::size_t>(grid.n() + 1));
    s.u.assign(static_cast<std::size_t>(grid.n() + 1), 0.0);
    for (int i = 0; i <= grid.n(); ++i)
        s.r[static_cast<std::size_t>(i)] = grid.node(i);
    s.r.back() = grid.radius();
    for (int i = 0; i < grid.n(); ++i) {
        s.u[static_cast<std::size_t>(i)] = static_cast<double>(u[i]);
        s.max_abs = std::max(s.max_abs, std::fabs(s.u[static_cast<std::size_t>(i)]));
    }
    s.energy = energy(grid, u, lambda);
    s.grad_norm = gradient(grid, u, lambda).norm();
    s.norm = discrete_norm(grid, u);
    return s;
}

/// True when the max-norm distance exceeds tol (1 + max norms).
inline bool distinct(const SolutionRecord& a, const SolutionRecord& b, double tol) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.state.u.size() && i < b.state.u.size(); ++i)
        d = std::max(d, std::fabs(a.state.u[i] - b.state.u[i]));
    return d > tol * (1.0 + std::max(a.state.max_abs, b.state.max_abs));
}

// ---------------------------------------------------------------------------
// Initial states

enum class InitKind { Zero, UDeltaProfile, File };

inline Vec zero_init(const RadialGrid& grid) { return Vec::Zero(grid.n()); }

/// u_delta sampled at the nodes, with tau = R.
inline Vec udelta_init(const RadialGrid& grid, double delta) {
    const auto tf = testfun::RadialTestFunction::u_delta(grid.radius(), delta);
    Vec u(grid.n());
    for (int i = 0; i < grid.n(); ++i)
        u[i] = tf.value(grid.node(i));
    return u;
}

/// Uniform in [0, 1) from the top 53 bits; fixed across standard libraries,
/// unlike std::uniform_real_distribution.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Smooth random profile sum_k c_k cos((k + 1/2) pi r / R), zero at r = R.
inline Vec random_smooth_init(const RadialGrid& grid, double amplitude, std::mt19937_64& rng) {
    constexpr int modes = 4;
    double c[modes];
    for (int k = 0; k < modes; ++k)
        c[k] = amplitude * (2.0 * unit_uniform(rng) - 1.0) / ((k + 1.0) * (k + 1.0));
    Vec u(grid.n());
    for (int i = 0; i < grid.n(); ++i) {
        double v = 0.0;
        for (int k = 0; k < modes; ++k)
            v += c[k] * std::cos((k + 0.5) * kPi * grid.node(i) / grid.radius());
        u[i] = v;
    }
    return u;
}

// ---------------------------------------------------------------------------
// Descent

struct DescentOptions {
    double tol = 1e-8;
    int max_iter = 5000;
};

namespace detail {

/// Weights (p-1)|z|^{p-2}, regularised where |z| is small relative to max|z|.
inline Vec curvature_weights(const RadialGrid& grid, const Vec& z) {
    const double p = grid.p();
    Vec D(z.size());
    if (p == 2.0)
        return D.setOnes();
    const double zmax = z.size() ? z.cwiseAbs().maxCoeff() : 0.0;
    const double eps = (p > 2.0 ? 1e-3 : 1e-8) * (1.0 + zmax);
    for (Eigen::Index i = 0; i < z.size(); ++i)
        D[i] = (p - 1.0) * std::pow(z[i] * z[i] + eps * eps, 0.5 * (p - 2.0));
    return D;
}

/// A^T diag(V D) A.
inline SpMat metric(const RadialGrid& grid, const Vec& u) {
    const Vec D = curvature_weights(grid, grid.apply(u));
    const Vec w = grid.volumes().cwiseProduct(D);
    const SpMat& A = grid.laplacian();
    return SpMat(A.transpose() * w.asDiagonal() * A);
}

inline constexpr double kSlopeCap = 1e8;

/// metric minus lambda diag(V g'(u)), with g' capped.
inline SpMat hessian(const RadialGrid& grid, const Vec& u, double lambda) {
    SpMat H = metric(grid, u);
    const Vec& V = grid.volumes();
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double gp = std::clamp(grid.nonlinearity().g_prime(u[i]), -kSlopeCap, kSlopeCap);
        if (gp != 0.0)
            H.coeffRef(i, i) -= lambda * V[i] * gp;
    }
    return H;
}

/// Solves H d = rhs when H factors as SPD; false otherwise.
inline bool spd_solve(const SpMat& H, const Vec& rhs, Vec& out) {
    Eigen::SimplicialLDLT<SpMat> ldlt(H);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
        return false;
    out = ldlt.solve(rhs);
    return ldlt.info() == Eigen::Success && out.allFinite();
}

template <typename S>
SolutionRecord finish(const RadialGrid& grid, const Eigen::Matrix<S, Eigen::Dynamic, 1>& u, double lambda,
                      Classification nontrivial, std::string method) {
    SolutionRecord rec;
    rec.state = make_state(grid, u, lambda);
    rec.method = std::move(method);
    rec.classification = rec.state.max_abs <= 1e-12 ? Classification::Trivial : nontrivial;
    return rec;
}

} // namespace detail

/// Armijo descent on J. Directions, in order of preference: Newton with the
/// capped Hessian when it is positive definite, the metric A^T V D A
/// (preconditioned gradient), then -g. Steps that change J only at round-off
/// level are accepted when they reduce |g|. Stops when the relative gradient
/// norm is at most opt.tol.
inline SolutionRecord minimize(const RadialGrid& grid, double lambda, const Vec& u0, const DescentOptions& opt = {}) {
    if (u0.size() != grid.n())
        throw std::invalid_argument("minimize: initial state has the wrong size");
    ExtVec u = u0.cast<Ext>();
    double J = energy(grid, u, lambda);
    std::vector<double> history{J};
    auto parts = gradient_parts(grid, u, lambda);
    double res = parts.relative();
    int it = 0;
    std::string reason;
    for (; it < opt.max_iter && res > opt.tol; ++it) {
        const Vec& g = parts.total;
        const double gn = g.norm();
        const Vec ud = u.cast<double>();
        Vec d;
        bool ok = detail::spd_solve(detail::hessian(grid, ud, lambda), -g, d) && g.dot(d) < 0.0;
        if (!ok)
            ok = detail::spd_solve(detail::metric(grid, ud), -g, d) && g.dot(d) < 0.0;
        if (!ok)
            d = -g;
        const double slope = g.dot(d);
        const ExtVec dext = d.cast<Ext>();
        double alpha = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt, alpha *= 0.5) {
            const ExtVec trial = u + static_cast<Ext>(alpha) * dext;
            const double Jt = energy(grid, trial, lambda);
            if (!std::isfinite(Jt))
                continue;
            if (Jt <= J + 1e-4 * alpha * slope) {
                u = trial;
                J = Jt;
                accepted = true;
                break;
            }
            if (Jt - J <= 1e-13 * (1.0 + std::fabs(J)) && gradient(grid, trial, lambda).norm() < gn) {
                u = trial;
                J = Jt;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            reason = "line search stalled";
            break;
        }
        history.push_back(J);
        parts = gradient_parts(grid, u, lambda);
        res = parts.relative();
    }
    auto rec = detail::finish(grid, u, lambda, Classification::Minimizer, "minimize");
    rec.iterations = it;
    rec.residual = res;
    rec.converged = res <= opt.tol;
    rec.energy_history = std::move(history);
    if (!rec.converged)
        rec.reason = reason.empty() ? "iteration cap reached" : reason;
    return rec;
}

// ---------------------------------------------------------------------------
// Picard, p = 2

/// u <- (1 - theta) u + theta L^{-1} L^{-1} (lambda g(u)), with L the
/// Dirichlet Laplacian on nodes 0..n-1. Residual: max|w - u| / max(|w|, |u|)
/// for the undamped image w of the returned u; iterations counts updates.
inline SolutionRecord picard_p2(const RadialGrid& grid, double lambda, Vec u, const DescentOptions& opt = {}) {
    if (grid.p() != 2.0)
        throw std::invalid_argument("picard_p2: requires p = 2");
    if (u.size() != grid.n())
        throw std::invalid_argument("picard_p2: initial state has the wrong size");
    const int n = grid.n();
    const SpMat L = grid.laplacian().topRows(n);
    Eigen::SparseLU<SpMat> lu;
    lu.compute(L);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("picard_p2: Dirichlet Laplacian is singular");
    double theta = 1.0;
    double prev = kInf;
    std::vector<double> residuals;
    int it = 0;
    double res = kInf;
    std::string reason;
    // each pass measures the fixed-point residual of the current u, then applies one update
    for (;;) {
        Vec s(n);
        for (int i = 0; i < n; ++i)
            s[i] = lambda * grid.nonlinearity().g(u[i]);
        const Vec w = lu.solve(lu.solve(s));
        const double scale = std::max(w.cwiseAbs().maxCoeff(), u.cwiseAbs().maxCoeff());
        res = scale == 0.0 ? 0.0 : (w - u).cwiseAbs().maxCoeff() / scale;
        residuals.push_back(res);
        if (!std::isfinite(res)) {
            reason = "divergence: non-finite iterate";
            break;
        }
        if (res <= opt.tol || it >= opt.max_iter)
            break;
        if (residuals.size() > 20 && res > 10.0 * residuals[residuals.size() - 21]) {
            reason = "divergence: residual grew tenfold over 20 iterations";
            break;
        }
        theta = res > prev ? std::max(0.5 * theta, 1e-3) : std::min(1.0, 1.25 * theta);
        prev = res;
        u = (1.0 - theta) * u + theta * w;
        ++it;
    }
    auto rec = detail::finish(grid, u, lambda, Classification::Minimizer, "picard_p2");
    rec.iterations = it;
    rec.residual = res;
    rec.converged = res <= opt.tol;
    if (!rec.converged)
        rec.reason = reason.empty() ? "iteration cap reached" : reason;
    return rec;
}

// ---------------------------------------------------------------------------
// Mountain pass

struct MountainPassOptions {
    double tol = 1e-8;
    int max_iter = 500;
    double distinct_tol = 1e-4;
};

namespace detail {

/// J sampled densely on the segment a -> b (log-spaced near both ends as
/// well as uniform), so a barrier confined to a tiny fraction of the segment
/// is still resolved.
struct SegmentScan {
    double peak = -kInf;
    double t_peak = 0.0;
};

inline SegmentScan scan_segment(const RadialGrid& grid, double lambda, const Vec& a, const Vec& b) {
    std::vector<double> ts;
    for (int j = 0; j <= 600; ++j) {
        const double t = std::pow(10.0, -6.0 + j / 100.0);
        ts.push_back(t);
        ts.push_back(1.0 - t);
    }
    for (int j = 1; j < 1000; ++j)
        ts.push_back(j / 1000.0);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    SegmentScan out;
    for (double t : ts) {
        if (!(t > 0.0 && t < 1.0))
            continue;
        const double J = energy(grid, Vec((1.0 - t) * a + t * b), lambda);
        if (J > out.peak) {
            out.peak = J;
            out.t_peak = t;
        }
    }
    return out;
}

} // namespace detail

/// Mountain-pass search between two low-energy states. The segment a -> b
/// is scanned for its highest point; from there, eigenvector following in
/// the metric M = A^T V D A drives the state to an index-one critical
/// point: with H v = mu M v, the step ascends along the lowest mode and
/// descends along the others, Newton-scaled by 1/|mu| inside a trust region.
/// Precondition violations throw; algorithmic failures (no convergence,
/// collapse onto an endpoint) give a record with a reason.
inline SolutionRecord mountain_pass(const RadialGrid& grid, double lambda, const Vec& a, const Vec& b,
                                    const MountainPassOptions& opt = {}) {
    if (a.size() != grid.n() || b.size() != grid.n())
        throw std::invalid_argument("mountain_pass: endpoint has the wrong size");
    if ((b - a).cwiseAbs().maxCoeff() == 0.0)
        throw std::invalid_argument("mountain_pass: endpoints coincide");
    const double low = std::max(energy(grid, a, lambda), energy(grid, b, lambda));
    const auto scan = detail::scan_segment(grid, lambda, a, b);
    if (!(scan.peak > low))
        throw std::invalid_argument("mountain_pass: no barrier between the endpoints (path maximum not above both)");

    ExtVec u = ((1.0 - scan.t_peak) * a + scan.t_peak * b).cast<Ext>();
    auto parts = gradient_parts(grid, u, lambda);
    // trust radius in the M-norm, starting at a tenth of |b - a|
    const Vec zab = grid.apply(Vec(b - a));
    double radius = 0.1 * std::sqrt((grid.volumes().array() * zab.array().square()).sum());
    int it = 0;
    for (; it < opt.max_iter && parts.relative() > opt.tol; ++it) {
        const Vec ud = u.cast<double>();
        const Eigen::MatrixXd H(detail::hessian(grid, ud, lambda));
        const Eigen::MatrixXd M(detail::metric(grid, ud));
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(H, M);
        if (eig.info() != Eigen::Success)
            break;
        const Eigen::VectorXd& mu = eig.eigenvalues(); // ascending
        const Eigen::MatrixXd& modes = eig.eigenvectors(); // M-orthonormal
        const Vec c = modes.transpose() * parts.total;
        const double floor = 1e-6 * std::max(1.0, mu.cwiseAbs().maxCoeff());
        Vec s(c.size());
        for (Eigen::Index i = 0; i < c.size(); ++i) {
            const double m = std::max(std::fabs(mu[i]), floor);
            s[i] = (i == 0 ? 1.0 : -1.0) * c[i] / m;
        }
        bool accepted = false;
        for (int shrink = 0; shrink < 40 && !accepted; ++shrink) {
            const double len = s.norm();
            const Vec step = modes * (len > radius ? Vec(s * (radius / len)) : s);
            const ExtVec trial = u + step.cast<Ext>();
            auto tp = gradient_parts(grid, trial, lambda);
            if (tp.total.allFinite() && tp.total.norm() < parts.total.norm()) {
                u = trial;
                parts = std::move(tp);
                accepted = true;
                if (len >= radius)
                    radius *= 2.0;
            } else {
                radius = 0.25 * std::min(radius, len);
            }
        }
        if (!accepted)
            break;
    }

    auto rec = detail::finish(grid, u, lambda, Classification::MountainPassCandidate, "mountain_pass");
    rec.iterations = it;
    rec.residual = parts.relative();
    SolutionRecord ea, eb;
    ea.state = make_state(grid, a, lambda);
    eb.state = make_state(grid, b, lambda);
    const double J = rec.state.energy;
    if (rec.residual > opt.tol)
        rec.reason = "no convergence to a critical point from the path maximum";
    else if (!distinct(rec, ea, opt.distinct_tol) || !distinct(rec, eb, opt.distinct_tol))
        rec.reason = "path collapse: candidate coincides with an endpoint";
    else if (rec.state.max_abs <= 1e-6)
        rec.reason = "path collapse: candidate is trivial";
    else if (!(J > low && J < scan.peak))
        rec.reason = "candidate energy not strictly between the endpoint level and the initial path maximum";
    rec.converged = rec.reason.empty();
    if (!rec.converged)
        rec.classification = Classification::Other;
    rec.energy_history = {low, scan.peak, J};
    return rec;
}

// ---------------------------------------------------------------------------
// Lambda sweep

struct BranchRow {
    double lambda = 0.0;
    bool in_lambda1 = false;
    bool below_lambda3h = false;
    std::vector<SolutionRecord> solutions; ///< distinct converged critical points
    int n_nonconverged = 0;
};

/// Per-start seed stream; std::seed_seq has a fixed algorithm, so the
/// initial states do not depend on the standard library.
inline std::mt19937_64 start_rng(std::uint64_t seed, std::size_t lambda_index, int start) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(lambda_index), static_cast<std::uint32_t>(start)};
    return std::mt19937_64(seq);
}

/// For each lambda: minimise from zero, from u_delta (tau = R) and from
/// multistart - 2 random smooth states; keep the distinct converged results.
/// Rows come back in lambda order whatever the thread scheduling.
inline std::vector<BranchRow> branch_sweep(const ProblemSpec& spec, const std::vector<double>& lambdas, int multistart,
                                           std::uint64_t seed, unsigned threads = 0) {
    if (multistart < 2)
        throw std::invalid_argument("branch_sweep: multistart must be at least 2");
    const auto grid = RadialGrid::from_spec(spec);
    const auto cert = certificate::certify(spec);
    const DescentOptions opt{spec.solver.tol, spec.solver.max_iter};

    std::vector<BranchRow> rows(lambdas.size());
    auto run = [&](std::size_t j) {
        BranchRow row;
        row.lambda = lambdas[j];
        if (cert.interval) {
            row.in_lambda1 = cert.interval->nonempty && row.lambda > cert.interval->lambda1 &&
                             row.lambda < cert.interval->lambda2;
            row.below_lambda3h = row.lambda <= cert.interval->lambda3h;
        }
        std::vector<Vec> starts{zero_init(grid), udelta_init(grid, spec.delta)};
        for (int s = 2; s < multistart; ++s) {
            auto rng = start_rng(seed, j, s);
            starts.push_back(random_smooth_init(grid, 2.0 * spec.delta, rng));
        }
        for (auto& u0 : starts) {
            auto rec = minimize(grid, row.lambda, u0, opt);
            if (!rec.converged) {
                ++row.n_nonconverged;
                continue;
            }
            bool fresh = true;
            for (const auto& seen : row.solutions)
                fresh = fresh && distinct(rec, seen, spec.solver.distinct_tol);
            if (fresh)
                row.solutions.push_back(std::move(rec));
        }
        std::stable_sort(row.solutions.begin(), row.solutions.end(),
                         [](const SolutionRecord& x, const SolutionRecord& y) { return x.state.energy < y.state.energy; });
        rows[j] = std::move(row);
    };

    unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, lambdas.size())));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t j; (j = next.fetch_add(1)) < lambdas.size();) {
                try {
                    run(j);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
    return rows;
}

} // namespace pbih::solver

#endif // PBIH_SOLVER_HPP
