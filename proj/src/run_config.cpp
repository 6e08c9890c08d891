#include "ttiga/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace ttiga {

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line)
{
}

std::vector<Index> RunConfig::ell_for(Index num_params) const
{
    if (ell.size() == 1) return std::vector<Index>(static_cast<std::size_t>(num_params), ell[0]);
    return ell;
}

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys{"case",       "params",         "n",          "p",         "ell",
                                               "solver_eps", "op_eps",         "cross_tol",  "max_sweeps", "max_rank",
                                               "qtt_reciprocal", "qtt_solve",  "output",     "seed",      "reference",
                                               "sample_lattice", "sample_theta", "save_solution", "save_operator"};
    return keys;
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Parser {
    std::string source;
    int line = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(source, line, msg); }

    std::vector<std::string> items(const std::string& v) const
    {
        std::vector<std::string> out;
        std::stringstream ss(v);
        std::string tok;
        while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
        if (out.empty() || std::any_of(out.begin(), out.end(), [](const std::string& t) { return t.empty(); })) fail("empty list entry in '" + v + "'");
        return out;
    }

    long long integer(const std::string& v) const
    {
        long long x = 0;
        const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
        if (r.ec != std::errc() || r.ptr != v.data() + v.size()) fail("expected an integer, got '" + v + "'");
        return x;
    }

    double real(const std::string& v) const
    {
        try {
            std::size_t pos = 0;
            const double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::logic_error&) {
            fail("expected a number, got '" + v + "'");
        }
    }

    bool boolean(const std::string& v) const
    {
        if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
        if (v == "false" || v == "off" || v == "no" || v == "0") return false;
        fail("expected true or false, got '" + v + "'");
    }

    Index positive(const std::string& v) const
    {
        const long long x = integer(v);
        if (x <= 0) fail("expected a positive integer, got '" + v + "'");
        return static_cast<Index>(x);
    }

    template <class T, class F>
    std::array<T, 3> triple(const std::string& v, F conv) const
    {
        const auto it = items(v);
        if (it.size() != 1 && it.size() != 3) fail("expected one value or three comma-separated values, got '" + v + "'");
        std::array<T, 3> out;
        for (std::size_t k = 0; k < 3; ++k) out[k] = static_cast<T>(conv(it[it.size() == 1 ? 0 : k]));
        return out;
    }

    double tolerance(const std::string& v) const
    {
        const double x = real(v);
        if (!(x > 0.0 && x < 1.0)) fail("tolerance must lie in (0, 1), got '" + v + "'");
        return x;
    }
};

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source)
{
    RunConfig c;
    Parser ps{source};
    std::map<std::string, int> seen;
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        ++ps.line;
        const std::string s = trim(raw.substr(0, raw.find('#')));
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos) ps.fail("expected 'key = value'");
        const std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
        if (key.empty()) ps.fail("missing key before '='");
        const auto& keys = config_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) ps.fail("unknown key '" + key + "'");
        if (auto it = seen.find(key); it != seen.end()) ps.fail("key '" + key + "' already set on line " + std::to_string(it->second));
        seen[key] = ps.line;
        if (value.empty()) ps.fail("missing value for '" + key + "'");

        if (key == "case") {
            if (value != "tc1" && value != "tc2" && value != "tc3" && value != "tc4") ps.fail("unknown case '" + value + "' (tc1..tc4)");
            c.case_name = value;
        } else if (key == "params") {
            c.params = ps.positive(value);
        } else if (key == "n") {
            c.n = ps.triple<Index>(value, [&](const std::string& v) { return ps.positive(v); });
        } else if (key == "p") {
            c.p = ps.triple<int>(value, [&](const std::string& v) { return ps.positive(v); });
        } else if (key == "ell") {
            c.ell.clear();
            for (const auto& it : ps.items(value)) c.ell.push_back(ps.positive(it));
        } else if (key == "solver_eps") {
            c.solver_eps = ps.tolerance(value);
        } else if (key == "op_eps") {
            c.op_eps = ps.tolerance(value);
        } else if (key == "cross_tol") {
            c.cross_tol = ps.tolerance(value);
        } else if (key == "max_sweeps") {
            c.max_sweeps = static_cast<int>(ps.positive(value));
        } else if (key == "max_rank") {
            const long long r = ps.integer(value);
            if (r < 0) ps.fail("max_rank must be >= 0");
            c.max_rank = static_cast<Index>(r);
        } else if (key == "qtt_reciprocal") {
            c.qtt_reciprocal = ps.boolean(value);
        } else if (key == "qtt_solve") {
            c.qtt_solve = ps.boolean(value);
        } else if (key == "output") {
            c.output = value;
        } else if (key == "seed") {
            const long long s = ps.integer(value);
            if (s < 0) ps.fail("seed must be >= 0");
            c.seed = static_cast<std::uint64_t>(s);
        } else if (key == "reference") {
            if (value == "auto")
                c.reference = ReferenceKind::automatic;
            else if (value == "exact")
                c.reference = ReferenceKind::exact;
            else if (value == "dense")
                c.reference = ReferenceKind::dense;
            else if (value == "none")
                c.reference = ReferenceKind::none;
            else
                ps.fail("reference must be auto, exact, dense or none");
        } else if (key == "sample_lattice") {
            c.sample_lattice = ps.triple<Index>(value, [&](const std::string& v) { return ps.positive(v); });
        } else if (key == "sample_theta") {
            c.sample_theta.clear();
            if (value != "nominal")
                for (const auto& it : ps.items(value)) c.sample_theta.push_back(ps.real(it));
        } else if (key == "save_solution") {
            c.save_solution = ps.boolean(value);
        } else if (key == "save_operator") {
            c.save_operator = ps.boolean(value);
        }
    }

    // Cross-key checks point at the line of the later key involved.
    auto line_of = [&](const char* k) { return seen.count(k) ? seen[k] : ps.line; };
    if (c.case_name.empty()) throw ConfigError(source, ps.line, "missing required key 'case'");
    if (c.params != 0 && c.case_name != "tc2") throw ConfigError(source, line_of("params"), "'params' is only adjustable for tc2");
    const Index np = c.case_name == "tc1" ? 1 : c.case_name == "tc2" ? (c.params ? c.params : 2) : c.case_name == "tc3" ? 4 : 3;
    if (c.ell.size() != 1 && static_cast<Index>(c.ell.size()) != np)
        throw ConfigError(source, line_of("ell"),
                          "ell needs one value or " + std::to_string(np) + " values for " + c.case_name + ", got " + std::to_string(c.ell.size()));
    if (!c.sample_theta.empty() && static_cast<Index>(c.sample_theta.size()) != np)
        throw ConfigError(source, line_of("sample_theta"), "sample_theta needs " + std::to_string(np) + " values");
    for (int k = 0; k < 3; ++k)
        if (c.n[k] < c.p[k] + 1)
            throw ConfigError(source, line_of("n"), "n must exceed p on every axis (n=" + std::to_string(c.n[k]) + ", p=" + std::to_string(c.p[k]) + ")");
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw ConfigError(path, 0, "cannot read file");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path);
}

}  // namespace ttiga
