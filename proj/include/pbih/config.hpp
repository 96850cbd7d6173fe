#ifndef PBIH_CONFIG_HPP
#define PBIH_CONFIG_HPP

/// \file config.hpp
/// parse_spec: INI-style configuration text to a validated ProblemSpec.
/// The grammar is documented in README.md. Lists use ',' or whitespace;
/// compound lists (polynomial pieces, monomials) are separated by '|'.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pbih/core.hpp"

namespace pbih::config {

namespace detail {

using boost::property_tree::ptree;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep))
        out.push_back(trim(item));
    return out;
}

/// Split on ',' and whitespace, dropping empty items.
inline std::vector<std::string> tokens(const std::string& s) {
    std::string t = s;
    std::replace(t.begin(), t.end(), ',', ' ');
    std::istringstream in(t);
    std::vector<std::string> out;
    for (std::string w; in >> w;)
        out.push_back(w);
    return out;
}

inline double to_double(const std::string& text, const std::string& what) {
    const std::string s = trim(text);
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+')
        ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || s.empty())
        throw SpecError(what + ": not a number: '" + s + "'");
    return v;
}

inline long long to_integer(const std::string& text, const std::string& what) {
    const std::string s = trim(text);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw SpecError(what + ": not an integer: '" + s + "'");
    return v;
}

inline std::vector<double> to_doubles(const std::string& s, const std::string& what) {
    std::vector<double> out;
    for (const auto& t : tokens(s))
        out.push_back(to_double(t, what));
    return out;
}

/// "c:e1,e2,...|c:e1,..." -> SpatialPolynomial
inline SpatialPolynomial to_polynomial(const std::string& s, const std::string& what) {
    SpatialPolynomial poly;
    for (const auto& term : split(s, '|')) {
        if (term.empty())
            continue;
        const auto colon = term.find(':');
        if (colon == std::string::npos)
            throw SpecError(what + ": monomial needs 'coef:exponents', got '" + term + "'");
        Monomial m;
        m.coef = to_double(term.substr(0, colon), what);
        for (const auto& e : tokens(term.substr(colon + 1)))
            m.exponents.push_back(static_cast<int>(to_integer(e, what)));
        poly.terms.push_back(std::move(m));
    }
    if (poly.terms.empty())
        throw SpecError(what + ": empty polynomial");
    return poly;
}

/// One section with key bookkeeping: every key must be consumed.
class Section {
  public:
    Section(const ptree* tree, std::string name)
      : tree_(tree)
      , name_(std::move(name)) {}

    bool present() const { return tree_ != nullptr; }

    std::optional<std::string> get(const std::string& key) {
        used_.insert(key);
        if (!tree_)
            return std::nullopt;
        if (auto v = tree_->get_optional<std::string>(key))
            return trim(*v);
        return std::nullopt;
    }

    std::string require(const std::string& key) {
        auto v = get(key);
        if (!v)
            throw SpecError("missing key '" + key + "' in [" + name_ + "]");
        return *v;
    }

    double number(const std::string& key) { return to_double(require(key), name_ + "." + key); }

    std::optional<double> maybe_number(const std::string& key) {
        auto v = get(key);
        return v ? std::optional<double>(to_double(*v, name_ + "." + key)) : std::nullopt;
    }

    void finish() const {
        if (!tree_)
            return;
        for (const auto& kv : *tree_)
            if (!used_.count(kv.first))
                throw SpecError("unknown key '" + kv.first + "' in [" + name_ + "]");
    }

    const std::string& name() const { return name_; }

  private:
    const ptree* tree_;
    std::string name_;
    std::set<std::string> used_;
};

inline Profile parse_profile(Section& sec, const std::string& kind) {
    if (kind == "example36")
        return Example36{};
    if (kind == "zero")
        return PowerSum{};
    if (kind == "power") {
        PowerSum ps;
        for (const auto& term : split(sec.require("terms"), ',')) {
            const auto colon = term.find(':');
            if (colon == std::string::npos)
                throw SpecError("nonlinearity.terms: expected 'c:q', got '" + term + "'");
            ps.terms.push_back(PowerTerm{to_double(term.substr(0, colon), "nonlinearity.terms"),
                                         to_double(term.substr(colon + 1), "nonlinearity.terms")});
        }
        return ps;
    }
    if (kind == "flat_power")
        return FlatThenPower{sec.number("threshold"), sec.number("exponent"), sec.number("scale")};
    if (kind == "piecewise") {
        PiecewisePolynomial pw;
        if (auto b = sec.get("breakpoints"))
            pw.breakpoints = to_doubles(*b, "nonlinearity.breakpoints");
        for (const auto& piece : split(sec.require("pieces"), '|'))
            pw.pieces.push_back(Poly1{to_doubles(piece, "nonlinearity.pieces")});
        return pw;
    }
    throw SpecError("unknown nonlinearity kind '" + kind + "'");
}

inline GrowthMetadata default_growth(const std::string& kind) {
    if (kind == "example36")
        return Nonlinearity::example36().growth();
    if (kind == "zero")
        return Nonlinearity::zero().growth();
    return {};
}

inline GrowthKind parse_growth_kind(const std::string& s) {
    if (s == "none")
        return GrowthKind::None;
    if (s == "h3")
        return GrowthKind::H3;
    if (s == "h3prime")
        return GrowthKind::H3Prime;
    if (s == "h3star")
        return GrowthKind::H3Star;
    throw SpecError("unknown growth kind '" + s + "' (none, h3, h3prime, h3star)");
}

inline Nonlinearity parse_nonlinearity(Section& sec, int dimension) {
    const std::string kind = sec.require("kind");
    Profile profile = parse_profile(sec, kind);
    std::optional<SpatialPolynomial> spatial;
    if (auto a = sec.get("spatial"))
        spatial = to_polynomial(*a, "nonlinearity.spatial");
    GrowthMetadata growth = default_growth(kind);
    if (auto g = sec.get("growth"))
        growth.kind = parse_growth_kind(*g);
    if (auto s = sec.maybe_number("s"))
        growth.s = *s;
    if (auto b = sec.maybe_number("b"))
        growth.b = *b;
    if (auto a = sec.get("alpha"))
        growth.alpha = to_polynomial(*a, "nonlinearity.alpha");
    if (growth.kind == GrowthKind::H3 && growth.alpha.terms.empty())
        throw SpecError("growth h3 needs an 'alpha' polynomial");
    if (growth.kind == GrowthKind::H3Prime && !(growth.b > 0.0))
        throw SpecError("growth h3prime needs b > 0");
    if (spatial)
        spatial->check(dimension);
    if (!growth.alpha.terms.empty())
        growth.alpha.check(dimension);
    return Nonlinearity(std::move(profile), std::move(spatial), std::move(growth));
}

inline DomainSpec parse_domain(Section& sec, int dimension) {
    const std::string shape = sec.require("shape");
    auto vec = [&](const std::string& key) {
        auto v = to_doubles(sec.require(key), sec.name() + "." + key);
        if (v.size() != static_cast<std::size_t>(dimension))
            throw SpecError(sec.name() + "." + key + " needs " + std::to_string(dimension) + " coordinates");
        return v;
    };
    if (shape == "ball") {
        Ball b;
        b.center = sec.get("center") ? vec("center") : std::vector<double>(static_cast<std::size_t>(dimension), 0.0);
        b.radius = sec.number("radius");
        return DomainSpec{b};
    }
    if (shape == "box")
        return DomainSpec{Box{vec("lower"), vec("upper")}};
    throw SpecError("unknown domain shape '" + shape + "' (ball, box)");
}

} // namespace detail

/// Parses and validates a configuration document. Throws SpecError.
inline ProblemSpec parse_spec(const std::string& text) {
    using detail::ptree;
    ptree root;
    try {
        std::istringstream in(text);
        boost::property_tree::ini_parser::read_ini(in, root);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw SpecError(std::string("config syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    const std::set<std::string> known{"problem", "domain", "nonlinearity", "solver"};
    for (const auto& kv : root) {
        if (!known.count(kv.first))
            throw SpecError("unknown section [" + kv.first + "]");
    }
    auto section = [&](const std::string& name, bool required) {
        const auto it = root.find(name);
        if (it == root.not_found()) {
            if (required)
                throw SpecError("missing section [" + name + "]");
            return detail::Section(nullptr, name);
        }
        return detail::Section(&it->second, name);
    };

    ProblemSpec spec;
    auto problem = section("problem", true);
    spec.dimension = static_cast<int>(detail::to_integer(problem.require("dimension"), "problem.dimension"));
    if (spec.dimension < 1)
        throw SpecError("dimension must be >= 1");
    spec.p = problem.number("p");
    if (!(spec.p > std::max(1.0, spec.dimension / 2.0)))
        throw SpecError("p must exceed max{1, N/2}");
    spec.gamma = problem.number("gamma");
    spec.delta = problem.number("delta");
    spec.h = problem.number("h");
    spec.k_override = problem.maybe_number("k");
    if (auto q = problem.maybe_number("quad_tol"))
        spec.quad_tol = *q;
    const auto r1 = problem.maybe_number("r1");
    const auto r2 = problem.maybe_number("r2");
    if (r1.has_value() != r2.has_value())
        throw SpecError("r1 and r2 must be given together");
    if (r1)
        spec.radii = AnnulusRadii{*r1, *r2};
    problem.finish();

    auto domain = section("domain", true);
    spec.domain = detail::parse_domain(domain, spec.dimension);
    domain.finish();

    auto nl = section("nonlinearity", true);
    spec.nonlinearity = detail::parse_nonlinearity(nl, spec.dimension);
    nl.finish();

    auto solver = section("solver", false);
    if (auto v = solver.get("n"))
        spec.solver.n = static_cast<int>(detail::to_integer(*v, "solver.n"));
    if (auto v = solver.maybe_number("tol"))
        spec.solver.tol = *v;
    if (auto v = solver.get("max_iter"))
        spec.solver.max_iter = static_cast<int>(detail::to_integer(*v, "solver.max_iter"));
    if (auto v = solver.get("seed"))
        spec.solver.seed = static_cast<std::uint64_t>(detail::to_integer(*v, "solver.seed"));
    if (auto v = solver.get("multistart"))
        spec.solver.multistart = static_cast<int>(detail::to_integer(*v, "solver.multistart"));
    if (auto v = solver.maybe_number("distinct_tol"))
        spec.solver.distinct_tol = *v;
    solver.finish();

    validate(spec);
    return spec;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw SpecError("cannot read config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline ProblemSpec parse_spec_file(const std::string& path) { return parse_spec(read_file(path)); }

} // namespace pbih::config

#endif // PBIH_CONFIG_HPP
