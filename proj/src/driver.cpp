#include "ttiga/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ttiga/dense_reference.hpp"
#include "ttiga/tt_io.hpp"

namespace ttiga {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double x)
{
    if (std::isnan(x)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", x);
    return buf;
}

std::string fixed3(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", x);
    return buf;
}

std::string seconds(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", x);
    return buf;
}

template <class T>
std::vector<Index> as_index(const std::array<T, 3>& a)
{
    return {static_cast<Index>(a[0]), static_cast<Index>(a[1]), static_cast<Index>(a[2])};
}

std::string join_ranks(const std::vector<Index>& r)
{
    std::string s;
    for (std::size_t k = 0; k < r.size(); ++k) s += (k ? " " : "") + std::to_string(r[k]);
    return s;
}

template <class T>
TensorSummary summarize(const std::string& name, const T& t)
{
    return {name, t.mean_rank(), t.max_rank(), t.storage(), t.ranks()};
}

std::ofstream open_out(const fs::path& p)
{
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
}

std::vector<double> nominal_or(const RunConfig& cfg, const CaseDefinition& def)
{
    return cfg.sample_theta.empty() ? def.nominal : cfg.sample_theta;
}

ErrorNorms dense_errors(const RunResult& r, std::uint64_t seed)
{
    const auto th = nominal_or(r.config, r.def);
    const reference::ReferenceSolution ref = reference::reference_solve(r.problem, th);
    ErrorNorms e;
    e.l2_rel = reference::mass_relative_error(reference::solution_slice(r.solution.field, th), ref.u, ref.mass);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int s = 0; s < 1000; ++s) {
        const Point3 y{unit(rng), unit(rng), unit(rng)};
        e.max_abs = std::max(e.max_abs, std::abs(r.solution.field.evaluate(y, th) - reference::eval_coefficients(r.problem.geometry.bases, ref.u, y)));
    }
    return e;
}

std::string status_of(const RunResult& r)
{
    if (r.solution.report.converged) return "ok";
    return "not_converged";
}

}  // namespace

std::string join_sizes(const std::vector<Index>& v)
{
    if (v.empty()) return "";
    if (std::all_of(v.begin(), v.end(), [&](Index x) { return x == v[0]; })) return std::to_string(v[0]);
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "x" : "") + std::to_string(v[k]);
    return s;
}

RunResult execute(const RunConfig& cfg)
{
    const auto t_start = Clock::now();
    RunResult r;
    r.config = cfg;
    r.def = make_case(cfg.case_name, cfg.params ? cfg.params : 2);
    const auto bases = make_case_bases(r.def, cfg.n, cfg.p);
    const ParamGrid grid = make_case_grid(r.def, cfg.ell_for(static_cast<Index>(r.def.box.size())));

    BVPOptions o;
    o.solver.eps = cfg.solver_eps;
    o.solver.max_sweeps = cfg.max_sweeps;
    o.solver.max_rank = cfg.max_rank;
    o.assembly.op_eps = cfg.op_eps;
    o.assembly.cross_tol = cfg.cross_tol;
    o.assembly.geometry.qtt_reciprocal = cfg.qtt_reciprocal;
    o.qtt_solve = cfg.qtt_solve;

    ReferenceKind kind = cfg.reference;
    if (kind == ReferenceKind::automatic) kind = r.def.exact ? ReferenceKind::exact : ReferenceKind::dense;
    if (kind == ReferenceKind::exact && !r.def.exact) throw std::invalid_argument(cfg.case_name + " has no analytic solution; use reference = dense");

    auto t0 = Clock::now();
    r.problem = make_problem(r.def, bases, grid, o.assembly.geometry);
    r.fit_seconds = seconds_since(t0);
    r.solution = solve_bvp(r.problem, o);

    if (kind == ReferenceKind::exact) {
        ErrorOptions eo;
        eo.seed = cfg.seed;
        r.errors = error_norms(r.solution.field, r.problem.geometry, r.def.exact, eo);
        r.reference = "exact";
    } else if (kind == ReferenceKind::dense) {
        r.errors = dense_errors(r, cfg.seed);
        r.reference = "dense";
    } else {
        r.errors = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
        r.reference = "none";
    }

    for (int s = 0; s < 3; ++s) r.tensors.push_back(summarize("geometry_x" + std::to_string(s + 1), r.problem.geometry.control[s]));
    r.tensors.push_back(summarize("mass", r.solution.mass));
    r.tensors.push_back(summarize("stiffness", r.solution.stiffness));
    r.tensors.push_back(summarize("operator", r.solution.system.op));
    r.tensors.push_back(summarize("solution", r.solution.field.u));
    r.total_seconds = seconds_since(t_start);
    return r;
}

void write_artifacts(const RunResult& r)
{
    const fs::path dir(r.config.output);
    fs::create_directories(dir);
    const std::string n = join_sizes(as_index(r.config.n)), p = join_sizes(as_index(r.config.p)),
                      ell = join_sizes(r.problem.geometry.grid.shape());
    {
        auto f = open_out(dir / "errors.csv");
        f << "n,p,ell,L2_rel_error,max_error\n" << n << ',' << p << ',' << ell << ',' << num(r.errors.l2_rel) << ',' << num(r.errors.max_abs) << '\n';
    }
    {
        auto f = open_out(dir / "ranks.csv");
        f << "n,p,ell,tensor,mean_rank,max_rank,storage,ranks\n";
        for (const auto& t : r.tensors)
            f << n << ',' << p << ',' << ell << ',' << t.name << ',' << fixed3(t.mean_rank) << ',' << t.max_rank << ',' << t.storage << ','
              << join_ranks(t.ranks) << '\n';
    }
    {
        const auto& s = r.solution;
        auto f = open_out(dir / "timings.csv");
        f << "n,p,ell,geometry_s,assembly_s,solve_s,total_s,sweeps,residual,converged\n"
          << n << ',' << p << ',' << ell << ',' << seconds(r.fit_seconds + s.timings.geometry) << ',' << seconds(s.timings.assembly) << ','
          << seconds(s.timings.solve) << ',' << seconds(r.total_seconds) << ',' << s.report.sweeps << ',' << num(s.report.residual) << ','
          << (s.report.converged ? 1 : 0) << '\n';
    }
    {
        auto f = open_out(dir / "samples.xyz");
        const auto th = nominal_or(r.config, r.def);
        const auto& lat = r.config.sample_lattice;
        auto coord = [](Index i, Index m) { return m == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(m - 1); };
        char buf[128];
        for (Index a = 0; a < lat[0]; ++a)
            for (Index b = 0; b < lat[1]; ++b)
                for (Index c = 0; c < lat[2]; ++c) {
                    const Point3 y{coord(a, lat[0]), coord(b, lat[1]), coord(c, lat[2])};
                    const Point3 x = r.problem.geometry.evaluate(y, th);
                    std::snprintf(buf, sizeof buf, "%.10e %.10e %.10e %.10e\n", x[0], x[1], x[2], r.solution.field.evaluate(y, th));
                    f << buf;
                }
    }
    open_out(dir / "solve.log") << r.solution.report.to_log();
    open_out(dir / "status.txt") << status_of(r) << '\n';
    if (r.config.save_solution) save_solution((dir / "solution").string(), r.solution.field);
    if (r.config.save_operator)
        save_operator((dir / "operator").string(), r.solution.system, r.problem.geometry.bases, r.problem.geometry.grid, r.problem.faces);
}

int run_command(const std::string& config_path, std::ostream& out, std::ostream& err)
{
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    RunResult r;
    try {
        r = execute(cfg);
    } catch (const std::invalid_argument& e) {
        err << "error: " << config_path << ": " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        // Nothing numeric to report; leave a flag so stale artifacts are not mistaken for results.
        std::error_code ec;
        fs::create_directories(cfg.output, ec);
        std::ofstream(fs::path(cfg.output) / "status.txt") << "failed: " << e.what() << '\n';
        err << "error: solve failed: " << e.what() << '\n';
        return exit_solver;
    }
    write_artifacts(r);
    out << cfg.case_name << ": L2_rel_error " << num(r.errors.l2_rel) << " max_error " << num(r.errors.max_abs) << " (" << r.reference
        << ")  solution ranks " << join_ranks(r.solution.field.u.ranks()) << "  sweeps " << r.solution.report.sweeps << "  residual "
        << num(r.solution.report.residual) << "\nartifacts in " << cfg.output << '\n';
    if (!r.solution.report.converged) {
        err << "error: solver did not converge: " << r.solution.report.message << '\n';
        return exit_solver;
    }
    return exit_ok;
}

int sweep_command(const std::string& config_path, const std::string& axis, const std::vector<std::string>& values, std::ostream& out,
                  std::ostream& err)
{
    RunConfig base;
    try {
        base = load_config(config_path);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    if (axis != "n" && axis != "p" && axis != "ell" && axis != "params") {
        err << "error: --axis must be one of n, p, ell, params\n";
        return exit_usage;
    }
    if (axis == "params" && base.case_name != "tc2") {
        err << "error: the params axis only applies to tc2\n";
        return exit_usage;
    }
    std::vector<Index> vals;
    for (const auto& v : values) {
        if (v.empty()) continue;
        try {
            std::size_t pos = 0;
            const long long x = std::stoll(v, &pos);
            if (pos != v.size() || x <= 0) throw std::invalid_argument(v);
            vals.push_back(static_cast<Index>(x));
        } catch (const std::logic_error&) {
            err << "error: sweep value '" << v << "' is not a positive integer\n";
            return exit_usage;
        }
    }
    if (vals.empty()) {
        err << "error: empty sweep list\n";
        return exit_usage;
    }

    const fs::path dir(base.output);
    fs::create_directories(dir);
    auto csv = open_out(dir / "sweep.csv");
    csv << "axis,value,n,p,ell,params,L2_rel_error,max_error,reference,solution_mean_rank,solution_max_rank,operator_storage,"
           "solution_storage,assembly_s,solve_s,sweeps,residual,status\n";
    int code = exit_ok;
    for (Index v : vals) {
        RunConfig cfg = base;
        if (axis == "n") cfg.n = {v, v, v};
        if (axis == "p") cfg.p = {static_cast<int>(v), static_cast<int>(v), static_cast<int>(v)};
        if (axis == "ell") cfg.ell = {v};
        if (axis == "params") {
            cfg.params = v;
            if (cfg.ell.size() != 1) cfg.ell = {cfg.ell[0]};
            if (!cfg.sample_theta.empty()) cfg.sample_theta.assign(static_cast<std::size_t>(v), 0.0);
        }
        cfg.output = (dir / (axis + "_" + std::to_string(v))).string();
        const std::string n = join_sizes(as_index(cfg.n)), p = join_sizes(as_index(cfg.p));
        try {
            const RunResult r = execute(cfg);
            write_artifacts(r);
            const auto& rep = r.solution.report;
            csv << axis << ',' << v << ',' << n << ',' << p << ',' << join_sizes(r.problem.geometry.grid.shape()) << ',' << r.def.box.size() << ','
                << num(r.errors.l2_rel) << ',' << num(r.errors.max_abs) << ',' << r.reference << ',' << fixed3(r.solution.field.u.mean_rank()) << ','
                << r.solution.field.u.max_rank() << ',' << r.solution.system.op.storage() << ',' << r.solution.field.u.storage() << ','
                << seconds(r.solution.timings.assembly) << ',' << seconds(r.solution.timings.solve) << ',' << rep.sweeps << ','
                << num(rep.residual) << ',' << status_of(r) << '\n';
            out << axis << '=' << v << ": L2_rel_error " << num(r.errors.l2_rel) << " max_error " << num(r.errors.max_abs) << '\n';
            if (!rep.converged) code = exit_solver;
        } catch (const std::invalid_argument& e) {
            err << "error: " << axis << '=' << v << ": " << e.what() << '\n';
            csv << axis << ',' << v << ',' << n << ',' << p << ",,,nan,nan,,,,,,,,,,invalid\n";
            code = exit_usage;
        } catch (const std::exception& e) {
            err << "error: " << axis << '=' << v << ": solve failed: " << e.what() << '\n';
            csv << axis << ',' << v << ',' << n << ',' << p << ",,,nan,nan,,,,,,,,,,failed\n";
            if (code == exit_ok) code = exit_solver;
        }
        csv.flush();
    }
    out << "sweep table in " << (dir / "sweep.csv").string() << '\n';
    return code;
}

int info_command(const std::string& path, std::ostream& out, std::ostream& err)
{
    try {
        out << describe(load_tt(path));
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_failure;
    }
    fs::path side(path);
    side.replace_extension(".json");
    if (fs::exists(side)) {
        try {
            std::ifstream f(side);
            const auto j = nlohmann::json::parse(f);
            out << "sidecar: " << side.string() << " (" << j.value("kind", std::string("unknown")) << ")\n";
            if (j.contains("bases"))
                for (std::size_t k = 0; k < j["bases"].size(); ++k)
                    out << "  basis y" << k + 1 << ": degree " << j["bases"][k]["degree"].get<int>() << ", "
                        << j["bases"][k]["knots"].size() - j["bases"][k]["degree"].get<std::size_t>() - 1 << " functions\n";
            if (j.contains("parameters"))
                for (std::size_t k = 0; k < j["parameters"].size(); ++k) {
                    const auto& pj = j["parameters"][k];
                    out << "  theta" << k + 1 << ": [" << pj["lo"].get<double>() << ", " << pj["hi"].get<double>() << "], "
                        << pj["nodes"].get<Index>() << " nodes\n";
                }
        } catch (const std::exception& e) {
            err << "warning: unreadable sidecar " << side.string() << ": " << e.what() << '\n';
        }
    }
    return exit_ok;
}

}  // namespace ttiga
