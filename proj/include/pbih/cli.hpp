#ifndef PBIH_CLI_HPP
#define PBIH_CLI_HPP

/// \file cli.hpp
/// Commands behind the pbih executable, and the JSON/CSV writers.
///
/// Exit codes: 0 ok, 1 usage or config error, 2 certificate denied,
/// 3 solver non-convergence. Every number is written with 17 significant
/// digits; infinities become the strings "inf" / "-inf". Output files carry
/// no wall-clock data unless a timestamp is requested, so identical inputs
/// give identical bytes.

#include <nlohmann/json.hpp>

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pbih/certificate.hpp"
#include "pbih/config.hpp"
#include "pbih/core.hpp"
#include "pbih/geometry.hpp"
#include "pbih/numerics.hpp"
#include "pbih/solver.hpp"
#include "pbih/testfun.hpp"

namespace pbih::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kDenied = 2, kNotConverged = 3 };

// ---------------------------------------------------------------------------
// Writers

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Extended real: finite numbers stay numbers, infinities become strings.
inline json num(double v) {
    if (std::isnan(v))
        return nullptr;
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return v;
}

namespace detail {

inline void write_json(std::ostream& os, const json& j, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) {
            os << "{}";
            return;
        }
        os << "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first)
                os << ",\n";
            first = false;
            os << inner << json(it.key()).dump() << ": ";
            write_json(os, it.value(), indent + 1);
        }
        os << "\n" << pad << "}";
        return;
    }
    case json::value_t::array: {
        if (j.empty()) {
            os << "[]";
            return;
        }
        os << "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i)
                os << ",\n";
            os << inner;
            write_json(os, j[i], indent + 1);
        }
        os << "\n" << pad << "]";
        return;
    }
    case json::value_t::number_float: os << fmt17(j.get<double>()); return;
    default: os << j.dump(); return;
    }
}

} // namespace detail

/// Pretty JSON whose floating-point numbers use %.17g.
inline std::string dump(const json& j) {
    std::ostringstream os;
    detail::write_json(os, j, 0);
    os << "\n";
    return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

// ---------------------------------------------------------------------------
// Manifest

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

struct RunManifest {
    std::string command;
    std::string spec_digest;
    std::string version = kVersion;
    std::optional<std::string> timestamp;
    std::optional<std::uint64_t> seed;
};

inline std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline RunManifest make_manifest(const std::string& command, const std::string& config_text, bool timestamp,
                                 std::optional<std::uint64_t> seed = std::nullopt) {
    RunManifest m;
    m.command = command;
    m.spec_digest = fnv1a_hex(config_text);
    if (timestamp)
        m.timestamp = utc_now();
    m.seed = seed;
    return m;
}

inline json to_json(const RunManifest& m) {
    json j;
    j["command"] = m.command;
    j["spec_digest"] = m.spec_digest;
    j["version"] = m.version;
    j["timestamp"] = m.timestamp ? json(*m.timestamp) : json(nullptr);
    j["seed"] = m.seed ? json(*m.seed) : json(nullptr);
    return j;
}

// ---------------------------------------------------------------------------
// Report serialisation

inline json to_json(const HypothesisVerdict& v) {
    json j;
    j["name"] = to_string(v.name);
    j["holds"] = v.holds;
    j["margin"] = num(v.margin);
    j["error_bound"] = num(v.error_bound);
    j["sampled"] = v.sampled;
    j["detail"] = v.detail;
    return j;
}

inline json to_json(const IntervalPair& iv) {
    json j;
    j["lambda1"] = num(iv.lambda1);
    j["lambda2"] = num(iv.lambda2);
    j["lambda3h"] = num(iv.lambda3h);
    j["h"] = num(iv.h);
    j["nonempty"] = iv.nonempty;
    j["overlap"] = to_string(iv.overlap);
    return j;
}

inline json to_json(const CertificateReport& r) {
    json j;
    j["granted"] = r.granted;
    j["variant"] = r.variant;
    j["dimension"] = r.dimension;
    j["p"] = num(r.p);
    j["gamma"] = num(r.gamma);
    j["delta"] = num(r.delta);
    j["k"] = num(r.k);
    j["k_source"] = to_string(r.k_source);
    j["tau"] = num(r.tau);
    json center = json::array();
    for (double c : r.center)
        center.push_back(num(c));
    j["center"] = center;
    j["meas"] = num(r.meas);
    j["meas_inner_ball"] = num(r.meas_inner_ball);
    j["sigma"] = num(r.sigma);
    j["K"] = num(r.K);
    j["eta"] = num(r.eta);
    j["r"] = num(r.r);
    j["phi_u_delta"] = num(r.phi_u_delta);
    j["sup_level_integral"] = num(r.sup_level_integral);
    j["annulus_integral"] = num(r.annulus_integral);
    j["inner_integral"] = num(r.inner_integral);
    j["psi_u_delta"] = num(r.psi_u_delta);
    j["quadrature_error"] = num(r.quadrature_error);
    json verdicts = json::array();
    for (const auto& v : r.verdicts)
        verdicts.push_back(to_json(v));
    j["verdicts"] = verdicts;
    j["interval"] = r.interval ? to_json(*r.interval) : json(nullptr);
    if (r.radii) {
        json g;
        g["r1"] = num(r.radii->r1);
        g["r2"] = num(r.radii->r2);
        g["sigma"] = num(r.sigma_general);
        g["K"] = num(r.K_general);
        g["phi_v_delta"] = num(r.phi_v_delta);
        g["psi_v_delta"] = num(r.psi_v_delta);
        g["interval"] = r.interval_general ? to_json(*r.interval_general) : json(nullptr);
        j["general"] = g;
    } else {
        j["general"] = nullptr;
    }
    j["notes"] = r.notes;
    return j;
}

inline json to_json(const solver::SolutionRecord& rec, int n) {
    json j;
    j["lambda"] = num(rec.state.lambda);
    j["energy"] = num(rec.state.energy);
    j["residual"] = num(rec.residual);
    j["gradient_norm"] = num(rec.state.grad_norm);
    j["norm"] = num(rec.state.norm);
    j["max_abs"] = num(rec.state.max_abs);
    j["classification"] = solver::to_string(rec.classification);
    j["converged"] = rec.converged;
    j["method"] = rec.method;
    j["iterations"] = rec.iterations;
    j["n"] = n;
    j["reason"] = rec.reason.empty() ? json(nullptr) : json(rec.reason);
    return j;
}

inline std::string solution_csv(const solver::SolutionRecord& rec) {
    std::string out = "r,u\n";
    for (std::size_t i = 0; i < rec.state.u.size(); ++i)
        out += fmt17(rec.state.r[i]) + "," + fmt17(rec.state.u[i]) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Commands

struct CommonOptions {
    bool timestamp = false;
};

/// Runs body, mapping configuration errors to exit code 1 with a message.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const SpecError& e) {
        err << "error: " << e.what() << "\n";
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    return kUsage;
}

inline int cmd_certify(const std::string& config_path, const std::string& out_path, const CommonOptions& common = {},
                       std::ostream& err = std::cerr) {
    return guarded(err, [&] {
        const std::string text = config::read_file(config_path);
        const auto spec = config::parse_spec(text);
        const auto report = certificate::certify(spec);
        json j;
        j["manifest"] = to_json(make_manifest("certify", text, common.timestamp));
        j["report"] = to_json(report);
        write_text(out_path, dump(j));
        if (!report.granted)
            err << "certificate denied\n";
        return report.granted ? kOk : kDenied;
    });
}

/// init: "zero", "udelta" or "file:<csv with r,u>"; method: "minimize",
/// "picard" or "mountain_pass" (endpoints zero and the minimiser from u_delta).
inline int cmd_solve(const std::string& config_path, double lambda, const std::string& init, const std::string& prefix,
                     const std::string& method = "minimize", const CommonOptions& common = {},
                     std::ostream& err = std::cerr) {
    return guarded(err, [&] {
        const std::string text = config::read_file(config_path);
        const auto spec = config::parse_spec(text);
        if (!(lambda > 0.0))
            throw SpecError("lambda must be positive");
        const auto grid = solver::RadialGrid::from_spec(spec);
        solver::Vec u0;
        if (init == "zero") {
            u0 = solver::zero_init(grid);
        } else if (init == "udelta") {
            u0 = solver::udelta_init(grid, spec.delta);
        } else if (init.rfind("file:", 0) == 0) {
            const std::string csv = config::read_file(init.substr(5));
            std::istringstream in(csv);
            std::string line;
            std::getline(in, line);
            std::vector<double> values;
            while (std::getline(in, line)) {
                if (line.empty())
                    continue;
                const auto comma = line.find(',');
                if (comma == std::string::npos)
                    throw SpecError("init file: expected 'r,u' rows");
                values.push_back(config::detail::to_double(line.substr(comma + 1), "init file"));
            }
            if (values.size() != static_cast<std::size_t>(grid.n() + 1))
                throw SpecError("init file has " + std::to_string(values.size()) + " rows, grid needs " +
                                std::to_string(grid.n() + 1));
            u0 = Eigen::Map<const solver::Vec>(values.data(), grid.n());
        } else {
            throw SpecError("unknown init '" + init + "' (zero, udelta, file:<path>)");
        }
        const solver::DescentOptions opt{spec.solver.tol, spec.solver.max_iter};
        solver::SolutionRecord rec;
        if (method == "minimize") {
            rec = solver::minimize(grid, lambda, u0, opt);
        } else if (method == "picard") {
            if (spec.p != 2.0)
                throw SpecError("picard requires p = 2");
            rec = solver::picard_p2(grid, lambda, u0, opt);
        } else if (method == "mountain_pass") {
            const auto low = solver::minimize(grid, lambda, solver::udelta_init(grid, spec.delta), opt);
            if (!low.converged)
                throw std::runtime_error("mountain_pass: endpoint minimisation did not converge");
            rec = solver::mountain_pass(grid, lambda, solver::zero_init(grid), solver::unknowns(low),
                                        solver::MountainPassOptions{spec.solver.tol, 500, spec.solver.distinct_tol});
        } else {
            throw SpecError("unknown method '" + method + "' (minimize, picard, mountain_pass)");
        }
        json j;
        j["manifest"] = to_json(make_manifest("solve", text, common.timestamp));
        j["solution"] = to_json(rec, grid.n());
        write_text(prefix + ".csv", solution_csv(rec));
        write_text(prefix + ".json", dump(j));
        if (!rec.converged)
            err << "not converged: " << rec.reason << "\n";
        return rec.converged ? kOk : kNotConverged;
    });
}

/// "a:b:n" -> n equally spaced values from a to b (n = 1 gives a).
inline std::vector<double> parse_range(const std::string& range) {
    const auto parts = config::detail::split(range, ':');
    if (parts.size() != 3)
        throw SpecError("lambda range must be 'a:b:n', got '" + range + "'");
    const double a = config::detail::to_double(parts[0], "range start");
    const double b = config::detail::to_double(parts[1], "range end");
    const long long n = config::detail::to_integer(parts[2], "range count");
    if (n < 1)
        throw SpecError("range count must be >= 1");
    if (!(a > 0.0) || !(b > 0.0))
        throw SpecError("lambda values must be positive");
    if (n > 1 && !(b > a))
        throw SpecError("range end must exceed range start");
    std::vector<double> out;
    for (long long i = 0; i < n; ++i)
        out.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    return out;
}

inline std::string branch_csv(const std::vector<solver::BranchRow>& rows) {
    std::size_t width = 0;
    for (const auto& r : rows)
        width = std::max(width, r.solutions.size());
    std::string out = "lambda,in_lambda1,below_lambda3h,n_distinct,n_nonconverged";
    for (std::size_t k = 1; k <= width; ++k) {
        const std::string s = std::to_string(k);
        out += ",class" + s + ",energy" + s + ",norm" + s;
    }
    out += "\n";
    for (const auto& r : rows) {
        out += fmt17(r.lambda) + "," + (r.in_lambda1 ? "true" : "false") + "," + (r.below_lambda3h ? "true" : "false") +
               "," + std::to_string(r.solutions.size()) + "," + std::to_string(r.n_nonconverged);
        for (std::size_t k = 0; k < width; ++k) {
            if (k < r.solutions.size()) {
                const auto& s = r.solutions[k];
                out += std::string(",") + solver::to_string(s.classification) + "," + fmt17(s.state.energy) + "," +
                       fmt17(s.state.norm);
            } else {
                out += ",,,";
            }
        }
        out += "\n";
    }
    return out;
}

inline int cmd_branch(const std::string& config_path, const std::string& range, std::optional<int> multistart,
                      std::optional<std::uint64_t> seed, const std::string& out_path, unsigned threads = 0,
                      std::ostream& err = std::cerr) {
    return guarded(err, [&] {
        const std::string text = config::read_file(config_path);
        const auto spec = config::parse_spec(text);
        const auto lambdas = parse_range(range);
        const auto rows = solver::branch_sweep(spec, lambdas, multistart.value_or(spec.solver.multistart),
                                               seed.value_or(spec.solver.seed), threads);
        write_text(out_path, branch_csv(rows));
        return kOk;
    });
}

inline int cmd_testfun(const std::string& config_path, const std::string& prefix, const CommonOptions& common = {},
                       std::ostream& err = std::cerr) {
    return guarded(err, [&] {
        const std::string text = config::read_file(config_path);
        const auto spec = config::parse_spec(text);
        const auto geo = geometry::resolve_geometry(spec);
        const int N = spec.dimension;
        const double p = spec.p, tau = geo.tau, delta = spec.delta;
        const auto u = testfun::RadialTestFunction::u_delta(tau, delta);
        std::optional<testfun::RadialTestFunction> v;
        if (spec.radii) {
            if (spec.radii->r2 > tau * (1.0 + 1e-14))
                throw SpecError("annulus radius r2 exceeds the inradius");
            v = testfun::RadialTestFunction::v_delta(spec.radii->r1, spec.radii->r2, delta);
        }

        std::string csv = v ? "l,value,laplacian,v_value,v_laplacian\n" : "l,value,laplacian\n";
        constexpr int samples = 200;
        for (int i = 0; i <= samples; ++i) {
            const double l = tau * i / samples;
            csv += fmt17(l) + "," + fmt17(u.value(l)) + "," + fmt17(u.laplacian(l, N));
            if (v)
                csv += "," + fmt17(v->value(l)) + "," + fmt17(v->laplacian(l, N));
            csv += "\n";
        }

        // Phi(u_delta) from its definition, by radial quadrature
        const double omega = geometry::sphere_area(N);
        auto energy_density = [&](const testfun::RadialTestFunction& tf) {
            return [&tf, N, p](double s) { return pow_abs(tf.laplacian(s, N), p) * std::pow(s, N - 1); };
        };
        const auto quad = numerics::integrate(energy_density(u), u.inner(), u.outer(),
                                              testfun::sigma_quad_options(spec.quad_tol));
        const double phi_quad = omega * quad.value / p;

        const auto lsig = testfun::log_sigma(p, N, tau, spec.quad_tol);
        const double phi = std::exp(testfun::log_phi_u_delta(p, N, tau, delta, lsig.log_value));
        json j;
        j["manifest"] = to_json(make_manifest("testfun", text, common.timestamp));
        json t;
        t["tau"] = num(tau);
        t["delta"] = num(delta);
        t["k"] = num(geo.k);
        t["sigma"] = num(std::exp(lsig.log_value));
        t["K"] = num(std::exp(testfun::log_K_const(p, N, tau, geo.k, lsig.log_value)));
        t["eta"] = num(testfun::eta_from_log_sigma(spec.gamma, delta, p, N, tau, geo.k, lsig.log_value));
        t["phi_u_delta"] = num(phi);
        t["r"] = num(testfun::r_level(spec.gamma, p, geo.k));
        t["phi_quadrature"] = num(phi_quad);
        t["discrepancy"] = num(std::fabs(phi_quad - phi) / phi);
        if (v) {
            const auto quad_v = numerics::integrate(energy_density(*v), v->inner(), v->outer(),
                                                    testfun::sigma_quad_options(spec.quad_tol));
            const double phi_v = testfun::phi_v_delta(p, N, spec.radii->r1, spec.radii->r2, delta, geo.k, spec.quad_tol);
            const double phi_v_quad = omega * quad_v.value / p;
            t["sigma_general"] = num(testfun::sigma_general(p, N, spec.radii->r1, spec.radii->r2, spec.quad_tol));
            t["K_general"] = num(testfun::K_general(p, N, spec.radii->r1, spec.radii->r2, geo.k, spec.quad_tol));
            t["phi_v_delta"] = num(phi_v);
            t["phi_v_quadrature"] = num(phi_v_quad);
            t["discrepancy_v"] = num(std::fabs(phi_v_quad - phi_v) / phi_v);
        }
        j["testfun"] = t;
        write_text(prefix + ".csv", csv);
        write_text(prefix + ".json", dump(j));
        return kOk;
    });
}

} // namespace pbih::cli

#endif // PBIH_CLI_HPP
