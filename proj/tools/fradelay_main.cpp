// fradelay: delay Caputo fractional systems -- kernels, stability region,
// solvers, and linearized-stability constants. Subcommands emit CSV/JSON
// artifacts; exit codes are part of the contract (see README).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "fradelay/analysis.hpp"
#include "fradelay/errors.hpp"
#include "fradelay/log.hpp"
#include "fradelay/mlfunc.hpp"
#include "fradelay/region.hpp"
#include "fradelay/solver.hpp"

using json = nlohmann::ordered_json;
using namespace fradelay;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitStableEmpirical = 1;
constexpr int kExitValidation = 2;
constexpr int kExitOutside = 3;
constexpr int kExitNoConvergence = 4;
constexpr int kExitOverflow = 5;
constexpr int kExitInconclusive = 6;

struct CliError : std::runtime_error {
    CliError(std::string msg, int code) : std::runtime_error(std::move(msg)), exit_code(code) {}
    int exit_code;
};

json load_input(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw CliError("cannot open input file: " + path, kExitValidation);
    json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw CliError(std::string("input is not valid JSON: ") + e.what(), kExitValidation);
    }
    return j;
}

cplx parse_complex(const json& v, const char* field) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    throw CliError(std::string("field '") + field + "' must be a real or [re, im]",
                   kExitValidation);
}

double need_number(const json& j, const char* field) {
    if (!j.contains(field) || !j[field].is_number())
        throw CliError(std::string("missing or non-numeric field '") + field + "'",
                       kExitValidation);
    return j[field].get<double>();
}

linops::Matrix parse_matrix(const json& v, const char* field) {
    if (!v.is_array() || v.empty())
        throw CliError(std::string("field '") + field + "' must be a nonempty matrix",
                       kExitValidation);
    const int d = static_cast<int>(v.size());
    linops::Matrix m(d, d);
    for (int i = 0; i < d; ++i) {
        if (!v[i].is_array() || static_cast<int>(v[i].size()) != d)
            throw CliError(std::string("field '") + field + "' must be square", kExitValidation);
        for (int j = 0; j < d; ++j) m(i, j) = parse_complex(v[i][j], field);
    }
    return m;
}

HistoryFunction parse_history(const json& j, int dim, double tau) {
    if (!j.is_object() || !j.contains("kind"))
        throw CliError("field 'phi' must be {kind, payload}", kExitValidation);
    const std::string kind = j["kind"].get<std::string>();
    const json& payload = j.contains("payload") ? j["payload"] : json{};
    if (kind == "constant") {
        std::vector<cplx> v;
        if (!payload.is_array() || static_cast<int>(payload.size()) != dim)
            throw CliError("phi.payload must hold d values for kind 'constant'",
                           kExitValidation);
        for (const auto& e : payload) v.push_back(parse_complex(e, "phi.payload"));
        return HistoryFunction::constant(std::move(v), tau);
    }
    if (kind == "polynomial") {
        std::vector<std::vector<cplx>> rows;
        if (!payload.is_array() || static_cast<int>(payload.size()) != dim)
            throw CliError("phi.payload must hold d coefficient rows", kExitValidation);
        for (const auto& row : payload) {
            std::vector<cplx> r;
            for (const auto& e : row) r.push_back(parse_complex(e, "phi.payload"));
            rows.push_back(std::move(r));
        }
        return HistoryFunction::polynomial(std::move(rows), tau);
    }
    if (kind == "sampled") {
        if (!payload.contains("grid") || !payload.contains("values"))
            throw CliError("phi.payload needs 'grid' and 'values' for kind 'sampled'",
                           kExitValidation);
        std::vector<double> grid;
        for (const auto& e : payload["grid"]) grid.push_back(e.get<double>());
        std::vector<std::vector<cplx>> samples;
        for (const auto& row : payload["values"]) {
            std::vector<cplx> r;
            for (const auto& e : row) r.push_back(parse_complex(e, "phi.values"));
            samples.push_back(std::move(r));
        }
        return HistoryFunction::sampled(std::move(grid), std::move(samples), tau);
    }
    throw CliError("phi.kind must be constant|polynomial|sampled", kExitValidation);
}

solver::DelaySystemSpec parse_system(const json& j) {
    solver::DelaySystemSpec s;
    s.alpha = need_number(j, "alpha");
    s.tau = need_number(j, "tau");
    if (!j.contains("A")) throw CliError("missing field 'A'", kExitValidation);
    s.A = parse_matrix(j["A"], "A");
    const int d = s.dim();
    if (j.contains("g")) {
        const auto& g = j["g"];
        if (!g.is_object() || !g.contains("kind"))
            throw CliError("field 'g' must be {kind, params}", kExitValidation);
        std::vector<double> params;
        if (g.contains("params"))
            for (const auto& e : g["params"]) params.push_back(e.get<double>());
        s.g = NonlinearitySpec::make(g["kind"].get<std::string>(), d, std::move(params));
    } else {
        s.g = NonlinearitySpec::make("zero", d, {});
    }
    if (!j.contains("phi")) throw CliError("missing field 'phi'", kExitValidation);
    s.phi = parse_history(j["phi"], d, s.tau);
    s.T = need_number(j, "T");
    s.h_step = need_number(j, "h_step");
    if (j.contains("gamma")) s.gamma = j["gamma"].get<double>();
    if (j.contains("jordan")) {
        const auto& jo = j["jordan"];
        linops::JordanStructure js;
        if (!jo.contains("blocks") || !jo.contains("T"))
            throw CliError("jordan needs 'blocks' and 'T'", kExitValidation);
        for (const auto& b : jo["blocks"]) {
            linops::JordanBlock blk;
            blk.lambda = parse_complex(b.at("lambda"), "jordan.lambda");
            blk.size = b.value("size", 1);
            blk.eta = b.value("eta", 0);
            js.blocks.push_back(blk);
        }
        js.transform = parse_matrix(jo["T"], "jordan.T");
        s.jordan = std::move(js);
    }
    return s;
}

std::FILE* open_out(const std::string& path) {
    if (path.empty() || path == "-") return stdout;
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw CliError("cannot open output file: " + path, kExitValidation);
    return f;
}

void close_out(std::FILE* f) {
    if (f && f != stdout) std::fclose(f);
}

void write_json(const json& j, const std::string& path) {
    std::FILE* f = open_out(path);
    const std::string s = j.dump(2);
    std::fwrite(s.data(), 1, s.size(), f);
    std::fputc('\n', f);
    close_out(f);
}

json complex_json(cplx v) { return json::array({v.real(), v.imag()}); }

// ------------------------------------------------------------ subcommands

int cmd_ml_eval(const std::string& input, const std::string& output, double step_override,
                double horizon_override) {
    json j = load_input(input);
    ml::MLParams p{need_number(j, "alpha"), need_number(j, "beta"),
                   parse_complex(j.at("lambda"), "lambda"), need_number(j, "tau")};
    std::vector<double> ts;
    if (j.contains("grid") && j["grid"].is_array()) {
        for (const auto& e : j["grid"]) ts.push_back(e.get<double>());
    } else {
        double t0 = 0.0, t1 = 2.0, st = 0.1;
        if (j.contains("grid") && j["grid"].is_object()) {
            t0 = j["grid"].value("t0", 0.0);
            t1 = j["grid"].value("t1", 2.0);
            st = j["grid"].value("step", 0.1);
        }
        if (horizon_override > 0.0) t1 = horizon_override;
        if (step_override > 0.0) st = step_override;
        if (!(st > 0.0) || t1 < t0) throw CliError("invalid grid", kExitValidation);
        for (double t = t0; t <= t1 + 1e-12 * std::max(1.0, t1); t += st) ts.push_back(t);
    }
    for (double t : ts)
        if (t < 0.0)
            throw CliError("grid contains negative t (field 'grid')", kExitValidation);

    ml::EvalPolicy pol;
    std::FILE* f = open_out(output);
    std::fprintf(f, "t,re,im,abs\n");
    try {
        for (double t : ts) {
            const cplx v = ml::ml_eval(p, t, pol);
            std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", t, v.real(), v.imag(), std::abs(v));
        }
    } catch (...) {
        close_out(f);
        throw;
    }
    close_out(f);
    return kExitOk;
}

int cmd_ml_integral(const std::string& input, const std::string& output, double step,
                    double horizon) {
    json j = load_input(input);
    ml::MLParams p{need_number(j, "alpha"), need_number(j, "beta"),
                   parse_complex(j.at("lambda"), "lambda"), need_number(j, "tau")};
    const double T = horizon > 0.0 ? horizon : j.value("t_upper", 10.0);
    const double q = step > 0.0 ? step : j.value("quad_step", 0.02);
    ml::AbsIntegralTable tab = ml::ml_abs_integral_table(p, T, q);
    std::FILE* f = open_out(output);
    std::fprintf(f, "t,integral\n");
    for (std::size_t i = 0; i < tab.t.size(); ++i)
        std::fprintf(f, "%.17g,%.17g\n", tab.t[i], tab.cum[i]);
    close_out(f);
    return kExitOk;
}

int cmd_region_check(const std::string& input, const std::string& output) {
    json j = load_input(input);
    region::RegionParams p{need_number(j, "alpha"), need_number(j, "tau")};
    std::vector<cplx> lams;
    if (j.contains("lambdas")) {
        for (const auto& e : j["lambdas"]) lams.push_back(parse_complex(e, "lambdas"));
    } else if (j.contains("A")) {
        linops::Matrix A = parse_matrix(j["A"], "A");
        auto js = linops::eigendecompose(A);
        for (const auto& b : js.blocks) lams.push_back(b.lambda);
    } else {
        throw CliError("need 'lambdas' or 'A'", kExitValidation);
    }
    json out;
    out["alpha"] = p.alpha;
    out["tau"] = p.tau;
    out["verdicts"] = json::array();
    bool all_member = true;
    for (const auto& l : lams) {
        const auto v = region::in_region(l, p);
        all_member = all_member && v.member;
        out["verdicts"].push_back(json{{"lambda", complex_json(l)},
                                       {"member", v.member},
                                       {"arg_ok", v.arg_ok},
                                       {"margin_to_boundary", v.margin_to_boundary}});
    }
    out["all_member"] = all_member;
    write_json(out, output);
    return all_member ? kExitOk : kExitOutside;
}

int cmd_region_boundary(const std::string& input, const std::string& output) {
    json j = load_input(input);
    region::RegionParams p{need_number(j, "alpha"), need_number(j, "tau")};
    const int n = j.value("n", 256);
    auto samples = region::boundary_samples(p, n);
    std::FILE* f = open_out(output);
    std::fprintf(f, "theta,radius,re,im\n");
    for (const auto& s : samples)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", s.theta, s.radius, s.point.real(),
                     s.point.imag());
    close_out(f);
    return kExitOk;
}

int cmd_char_roots(const std::string& input, const std::string& output) {
    json j = load_input(input);
    region::RegionParams p{need_number(j, "alpha"), need_number(j, "tau")};
    const cplx lam = parse_complex(j.at("lambda"), "lambda");
    int count;
    region::RootCountWindow w{};
    if (j.contains("window")) {
        const auto& jw = j["window"];
        w.re_min = need_number(jw, "re_min");
        w.re_max = need_number(jw, "re_max");
        w.im_min = need_number(jw, "im_min");
        w.im_max = need_number(jw, "im_max");
        w.margin = jw.value("margin", 1e-6);
        count = region::count_roots(lam, p, w);
    } else {
        w = region::default_window(lam, p);
        count = region::count_rhp_roots(lam, p);
    }
    json out;
    out["lambda"] = complex_json(lam);
    out["count"] = count;
    out["window"] = json{{"re_min", w.re_min},
                         {"re_max", w.re_max},
                         {"im_min", w.im_min},
                         {"im_max", w.im_max},
                         {"margin", w.margin}};
    write_json(out, output);
    return kExitOk;
}

void write_trajectory_csv(const solver::Trajectory& tr, const std::string& path) {
    std::FILE* f = open_out(path);
    std::fprintf(f, "t");
    for (int c = 1; c <= tr.dim; ++c) std::fprintf(f, ",re_x%d,im_x%d", c, c);
    std::fputc('\n', f);
    for (int i = 0; i < tr.points(); ++i) {
        std::fprintf(f, "%.17g", tr.time_at(i));
        auto row = tr.row(i);
        for (int c = 0; c < tr.dim; ++c)
            std::fprintf(f, ",%.17g,%.17g", row[c].real(), row[c].imag());
        std::fputc('\n', f);
    }
    close_out(f);
}

int cmd_simulate(const std::string& input, const std::string& output,
                 const std::string& solver_name, double tol, double step, double horizon,
                 double gamma) {
    json j = load_input(input);
    solver::DelaySystemSpec spec = parse_system(j);
    if (step > 0.0) spec.h_step = step;
    if (horizon > 0.0) spec.T = horizon;
    if (gamma > 0.0) spec.gamma = gamma;

    try {
        if (solver_name == "direct") {
            write_trajectory_csv(solver::solve_direct(spec), output);
        } else if (solver_name == "picard") {
            auto [tr, rep] = solver::solve_picard(spec, tol > 0 ? tol : 1e-10);
            write_trajectory_csv(tr, output);
        } else if (solver_name == "both") {
            solver::Trajectory td = solver::solve_direct(spec);
            auto [tp, rep] = solver::solve_picard(spec, tol > 0 ? tol : 1e-10);
            double dev = 0.0;
            for (std::size_t i = 0; i < td.values.size(); ++i)
                dev = std::max(dev, std::abs(td.values[i] - tp.values[i]));
            write_trajectory_csv(td, output);
            json summary;
            summary["max_deviation"] = dev;
            summary["picard_iterations"] = rep.iterations;
            summary["picard_final_delta"] = rep.final_delta;
            std::cout << summary.dump(2) << "\n";
        } else {
            throw CliError("--solver must be picard|direct|both", kExitValidation);
        }
    } catch (const solver::TrajectoryOverflow& e) {
        log::error(e.what());
        if (!output.empty()) write_trajectory_csv(e.partial, output);
        return kExitOverflow;
    } catch (const OverflowError& e) {
        log::error(e.what());
        return kExitOverflow;
    } catch (const NoConvergenceError& e) {
        log::error(e.what());
        return kExitNoConvergence;
    }
    return kExitOk;
}

json report_to_json(const analysis::StabilityReport& rep) {
    json out;
    out["verdict"] = rep.empirical.verdict;
    out["eigenvalues"] = json::array();
    for (const auto& l : rep.eigenvalues) out["eigenvalues"].push_back(complex_json(l));
    out["region_verdicts"] = json::array();
    for (const auto& v : rep.region_verdicts)
        out["region_verdicts"].push_back(json{{"member", v.member},
                                              {"arg_ok", v.arg_ok},
                                              {"margin_to_boundary", v.margin_to_boundary}});
    out["root_count_total"] = rep.root_count_total;
    if (rep.constants) {
        out["constants"] = json{{"C_alpha_lambda", rep.constants->C_alpha_lambda},
                                {"eps", rep.constants->eps},
                                {"q", rep.constants->q},
                                {"delta", rep.constants->delta}};
    } else {
        out["constants"] = nullptr;
    }
    out["empirical"] = json{{"sup_norm", rep.empirical.sup_norm},
                            {"final_norm", rep.empirical.final_norm},
                            {"scale", rep.empirical.scale},
                            {"decay_slope", rep.empirical.decay_slope},
                            {"decayed", rep.empirical.decayed},
                            {"grew", rep.empirical.grew},
                            {"within_eps", rep.empirical.within_eps}};
    out["seed"] = rep.seed;
    out["n_histories"] = rep.n_histories;
    out["horizon"] = rep.horizon;
    out["h_used"] = rep.h_used;
    out["certified_mode"] = rep.certified_mode;
    out["note"] = rep.note;
    return out;
}

int cmd_verify(const std::string& input, const std::string& output, long long seed,
               double gamma) {
    if (seed < 0) throw CliError("--seed is mandatory for verify", kExitValidation);
    json j = load_input(input);
    solver::DelaySystemSpec spec = parse_system(j);
    if (gamma > 0.0) spec.gamma = gamma;
    analysis::VerifyOptions opt;
    opt.seed = static_cast<std::uint64_t>(seed);
    if (j.contains("n_histories")) opt.n_histories = j["n_histories"].get<int>();
    if (j.contains("scale")) opt.scale = j["scale"].get<double>();
    if (j.contains("horizon")) opt.horizon = j["horizon"].get<double>();

    analysis::StabilityReport rep = analysis::verify_stability(spec, opt);
    write_json(report_to_json(rep), output);
    const std::string& v = rep.empirical.verdict;
    if (v == "stable_certified") return kExitOk;
    if (v == "stable_empirical") return kExitStableEmpirical;
    if (v == "unstable_empirical") return kExitOutside;
    return kExitInconclusive;
}

int cmd_constants(const std::string& input, const std::string& output, double gamma) {
    json j = load_input(input);
    solver::DelaySystemSpec spec = parse_system(j);
    if (gamma > 0.0) spec.gamma = gamma;
    try {
        analysis::StabilityConstants c = analysis::compute_constants(spec);
        json out{{"C_alpha_lambda", c.C_alpha_lambda}, {"eps", c.eps}, {"q", c.q},
                 {"delta", c.delta}};
        write_json(out, output);
    } catch (const RegionError& e) {
        log::error(e.what());
        return kExitOutside;
    } catch (const NoContractionError& e) {
        log::error(e.what());
        return kExitInconclusive;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"delay Caputo fractional systems: kernels, stability region, solvers"};
    app.require_subcommand(1);

    std::string input, output;
    std::string solver_name = "direct";
    double tol = -1.0, step = -1.0, horizon = -1.0, gamma = -1.0;
    long long seed = -1;

    auto add_common = [&](CLI::App* c, bool needs_input = true) {
        if (needs_input) c->add_option("--input", input, "input JSON path")->required();
        c->add_option("--output", output, "output path (default stdout)");
        c->add_option("--tol", tol, "tolerance override");
        c->add_option("--step", step, "grid/quadrature step override");
        c->add_option("--horizon", horizon, "horizon override");
        c->add_option("--seed", seed, "RNG seed");
        c->add_option("--gamma", gamma, "nilpotent rescaling gamma");
    };

    CLI::App* c_mleval = app.add_subcommand("ml-eval", "evaluate the delayed ML function on a grid");
    add_common(c_mleval);
    CLI::App* c_mlint = app.add_subcommand("ml-integral", "cumulative integral of |E|");
    add_common(c_mlint);
    CLI::App* c_region = app.add_subcommand("region-check", "stability-region membership");
    add_common(c_region);
    CLI::App* c_bound = app.add_subcommand("region-boundary", "sample the region boundary");
    add_common(c_bound);
    CLI::App* c_roots = app.add_subcommand("char-roots", "count characteristic roots in a window");
    add_common(c_roots);
    CLI::App* c_sim = app.add_subcommand("simulate", "solve the delay IVP");
    add_common(c_sim);
    c_sim->add_option("--solver", solver_name, "picard|direct|both");
    CLI::App* c_verify = app.add_subcommand("verify", "random-history stability experiment");
    add_common(c_verify);
    CLI::App* c_const = app.add_subcommand("constants", "linearized-stability constants");
    add_common(c_const);

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_mleval->parsed()) return cmd_ml_eval(input, output, step, horizon);
        if (c_mlint->parsed()) return cmd_ml_integral(input, output, step, horizon);
        if (c_region->parsed()) return cmd_region_check(input, output);
        if (c_bound->parsed()) return cmd_region_boundary(input, output);
        if (c_roots->parsed()) return cmd_char_roots(input, output);
        if (c_sim->parsed())
            return cmd_simulate(input, output, solver_name, tol, step, horizon, gamma);
        if (c_verify->parsed()) return cmd_verify(input, output, seed, gamma);
        if (c_const->parsed()) return cmd_constants(input, output, gamma);
    } catch (const CliError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: malformed input: %s\n", e.what());
        return kExitValidation;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const OverflowError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitOverflow;
    } catch (const NoConvergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNoConvergence;
    } catch (const NoContractionError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInconclusive;
    } catch (const RegionError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitOutside;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
    return kExitValidation;
}
