#ifndef GWLAB_PIPELINE_HPP
#define GWLAB_PIPELINE_HPP

// Orchestration: mean field -> oracle -> screening -> one-shot -> GW0 runs,
// followed by the enabled invariant suites. Produces a summary and the
// artifact set; nothing here touches the file system.

#include "checks.hpp"
#include "io.hpp"

#include <json.hpp>

namespace gwlab {

using json = nlohmann::ordered_json;

enum class Stage { mean_field = 0, oracle = 1, rpa = 2, g0w0 = 3, gw0 = 4 };

inline Stage parse_stage(const std::string& s) {
    if (s == "mean-field") return Stage::mean_field;
    if (s == "oracle") return Stage::oracle;
    if (s == "rpa") return Stage::rpa;
    if (s == "g0w0") return Stage::g0w0;
    if (s == "gw0" || s == "all" || s == "check") return Stage::gw0;
    throw input_error("unknown stage '" + s + "'");
}

struct PipelineOptions {
    Stage stage = Stage::gw0;
    bool validate = false;
};

// module errors re-raised with their stage
struct stage_error : error {
    std::string stage, module;
    stage_error(std::string s, std::string m, const std::string& what)
        : error("stage '" + s + "' (" + m + "): " + what), stage(std::move(s)), module(std::move(m)) {}
};

struct SolverRun {
    SolverReport report;
    std::string error; // set when the run aborted
};

struct RunSummary {
    std::string model_hash;
    std::uint64_t seed = 0;
    std::string stage;
    bool validate = false;
    RVec eps;
    double mu0 = 0.0, gap = 0.0;
    std::optional<double> e_n, e_minus, e_plus, oracle_mu;
    std::optional<LambdaStar> lambda_star;
    std::vector<CheckResult> checks;
    std::vector<Diagnostic> diagnostics;
    std::vector<SolverRun> solver_runs;

    bool all_passed() const {
        return std::none_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.status == "fail"; });
    }
    std::size_t count(const std::string& status) const {
        return static_cast<std::size_t>(
            std::count_if(checks.begin(), checks.end(), [&](const CheckResult& c) { return c.status == status; }));
    }
};

struct PipelineResult {
    RunSummary summary;
    ArtifactSet artifacts;
};

namespace detail {

// JSON cannot carry inf or nan; such values are written as strings
inline json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

template <class F>
auto in_stage(const char* stage, const char* module, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const stage_error&) {
        throw;
    } catch (const std::exception& e) {
        throw stage_error(stage, module, e.what());
    }
}

inline std::string model_block(const ModelSpec& m) {
    RunConfig c;
    c.model = m;
    std::string s = render_config(c);
    return s.substr(0, s.find("\n\n"));
}

} // namespace detail

inline json summary_json(const RunSummary& s) {
    json j;
    j["model_hash"] = s.model_hash;
    j["seed"] = s.seed;
    j["stage"] = s.stage;
    j["validate"] = s.validate;
    json en;
    en["eps"] = json::array();
    for (Eigen::Index i = 0; i < s.eps.size(); ++i) en["eps"].push_back(s.eps(i));
    en["mu0"] = s.mu0;
    en["mean_field_gap"] = s.gap;
    if (s.e_n) {
        en["E_N"] = *s.e_n;
        en["E_N_minus_1"] = *s.e_minus;
        en["E_N_plus_1"] = *s.e_plus;
        en["window"] = {*s.e_n - *s.e_minus, *s.e_plus - *s.e_n};
        en["oracle_mu"] = *s.oracle_mu;
        en["quasiparticle_gap"] = (*s.e_plus - *s.e_n) - (*s.e_n - *s.e_minus);
    }
    j["energies"] = en;
    if (s.lambda_star) {
        const LambdaStar& l = *s.lambda_star;
        j["lambda_star"] = {{"value", l.value}, {"s_norm", l.s_norm}, {"g0_l2", l.g0_l2}, {"g0_sup", l.g0_sup},
                            {"kx_norm", l.kx_norm}, {"d", l.d}, {"M", l.big_m}, {"C_M", l.c_m},
                            {"r", l.r}, {"lambda_M", l.lambda_m}};
    }
    j["checks"] = json::array();
    for (const auto& c : s.checks) {
        json e{{"name", c.name}, {"status", c.status}};
        if (c.status != "skipped") {
            e["value"] = detail::num(c.value);
            e["relation"] = c.relation;
            e["tolerance"] = detail::num(c.tolerance);
        }
        e["pass"] = c.status == "pass";
        if (!c.note.empty()) e["note"] = c.note;
        j["checks"].push_back(e);
    }
    j["diagnostics"] = json::array();
    for (const auto& d : s.diagnostics) {
        json e{{"name", d.name}, {"value", detail::num(d.value)}};
        if (!d.note.empty()) e["note"] = d.note;
        j["diagnostics"].push_back(e);
    }
    j["solver_runs"] = json::array();
    for (const auto& r : s.solver_runs) {
        const SolverReport& p = r.report;
        json e{{"lambda", p.lambda}, {"converged", p.converged}, {"iterations", p.iterates.size()}};
        e["residuals"] = json::array();
        for (double v : p.iterates) e["residuals"].push_back(detail::num(v));
        e["contraction"] = p.contraction;
        e["mixing_used"] = p.mixing_used;
        e["lambda_star_estimate"] = detail::num(p.lambda_star_estimate);
        e["fixed_point_residual"] = detail::num(p.fixed_point_residual);
        e["dyson_roundtrip"] = detail::num(p.dyson_roundtrip);
        e["conjugation_residual"] = detail::num(p.conj_residual);
        e["distance_from_g0"] = detail::num(p.distance_from_g0);
        e["warnings"] = p.warnings;
        if (!r.error.empty()) e["error"] = r.error;
        j["solver_runs"].push_back(e);
    }
    j["totals"] = {{"pass", s.count("pass")}, {"fail", s.count("fail")}, {"skipped", s.count("skipped")}};
    j["all_passed"] = s.all_passed();
    return j;
}

inline PipelineResult run_pipeline(const RunConfig& cfg, const PipelineOptions& opt = {}) {
    validate(cfg);
    PipelineResult out;
    RunSummary& sum = out.summary;
    ArtifactSet& art = out.artifacts;
    const auto& names = std::vector<std::string>{"mean-field", "oracle", "rpa", "g0w0", "gw0"};
    sum.stage = names[static_cast<int>(opt.stage)];
    sum.seed = cfg.checks.seed;
    sum.validate = opt.validate;
    sum.model_hash = sha256_hex(detail::model_block(cfg.model));
    Rng rng(cfg.checks.seed);
    auto take = [&](const SuiteOutput& s) {
        sum.checks.insert(sum.checks.end(), s.checks.begin(), s.checks.end());
        sum.diagnostics.insert(sum.diagnostics.end(), s.diagnostics.begin(), s.diagnostics.end());
    };
    auto reached = [&](Stage s) { return static_cast<int>(opt.stage) >= static_cast<int>(s); };

    art["config.ini"] = render_config(cfg);

    // mean field
    LatticeModel model = detail::in_stage("mean-field", "model-builder", [&] { return build_lattice(cfg.model); });
    MeanFieldState mf = detail::in_stage("mean-field", "model-builder", [&] { return solve_mean_field(model, cfg.model.n_elec); });
    sum.eps = mf.eps;
    sum.mu0 = mf.mu0;
    sum.gap = mf.gap;
    art["h1.mat"] = matrix_text(model.h1, "h1");
    art["gamma0.mat"] = matrix_text(mf.gamma0, "gamma0");
    art["coulomb.mat"] = matrix_text(model.coulomb, "V");
    if (cfg.suite("mean-field")) take(mean_field_checks(model, mf));

    // exact oracle
    if (reached(Stage::oracle)) {
        if (cfg.oracle.enabled) {
            ExactOracle o = detail::in_stage("oracle", "fock-oracle", [&] {
                return build_oracle(model, cfg.oracle_n(), cfg.oracle.basis_cap);
            });
            sum.e_n = o.ground.energy;
            sum.e_minus = o.e_minus0;
            sum.e_plus = o.e_plus0;
            sum.oracle_mu = o.window.mu;
            art["oracle_gamma.mat"] = matrix_text(o.ground.gamma, "gamma");
            if (cfg.suite("oracle")) take(detail::in_stage("oracle", "fock-oracle", [&] { return oracle_checks(model, o, rng); }));
        } else if (cfg.suite("oracle")) {
            for (const auto& n : oracle_check_names()) sum.checks.push_back(check_skipped(n, "oracle disabled"));
        }
    }
    if (!reached(Stage::rpa)) return out;

    if (cfg.suite("kernel")) take(kernel_checks(rng));
    if (cfg.suite("hilbert")) take(detail::in_stage("rpa", "fourier-hilbert", [&] { return hilbert_checks(); }));

    GridPtr grid = make_grid(cfg.grid.k, cfg.grid.scale.value_or(mf.gap));
    ScreeningSet scr = detail::in_stage("rpa", "rpa-screening", [&] { return build_screening(mf, model.coulomb_sqrt, grid); });
    {
        MatrixTrack p;
        p.grid = grid;
        p.values = scr.p0;
        art["p0.track"] = track_text(p);
        art["w0c.track"] = track_text(scr.w0c_track());
    }
    if (cfg.suite("rpa")) take(detail::in_stage("rpa", "rpa-screening", [&] { return rpa_checks(model, mf, scr, opt.validate); }));
    if (!reached(Stage::g0w0)) return out;

    RMat kx = exchange_kernel(mf.gamma0, model.coulomb);
    art["kx.mat"] = matrix_text(kx, "K_x");
    OneShot os = detail::in_stage("g0w0", "self-energy", [&] { return one_shot_g0w0(model.h1, mf, kx, scr); });
    art["g0.track"] = track_text(g0_track(grid, model.h1, mf.mu0));
    art["sigma_c_g0w0.track"] = track_text(os.sigma.sigma_c);
    art["g_g0w0.track"] = track_text(os.g);
    if (cfg.suite("self-energy"))
        take(detail::in_stage("g0w0", "self-energy", [&] { return self_energy_checks(model, mf, kx, scr, os, opt.validate, rng); }));
    if (!reached(Stage::gw0)) return out;

    if (cfg.solver.enabled || cfg.suite("solver")) {
        LambdaStar ls = detail::in_stage("gw0", "gw0-solver", [&] { return lambda_star_estimate(mf, kx, scr); });
        sum.lambda_star = ls;
        if (cfg.solver.enabled) {
            for (std::size_t i = 0; i < cfg.solver.lambdas.size(); ++i) {
                SolverConfig sc;
                sc.lambda = cfg.solver.lambdas[i];
                sc.tol = cfg.solver.tol;
                sc.max_iter = cfg.solver.max_iter;
                sc.mixing = cfg.solver.mixing;
                SolverRun run;
                try {
                    SolverResult r = picard_solve(model.h1, mf, kx, scr, sc, std::nullopt, ls.value);
                    run.report = r.report;
                    art[cat("g_gw0_", i, ".track")] = track_text(r.g);
                    art[cat("sigma_c_gw0_", i, ".track")] = track_text(r.sigma.sigma_c);
                    take(solver_run_checks(r.report, sc.tol));
                } catch (const divergence_error& e) {
                    run.report.lambda = sc.lambda;
                    run.error = e.what();
                    sum.checks.push_back(check_le(cat("solver[lambda=", sc.lambda, "].converged"),
                                                  std::numeric_limits<double>::infinity(), sc.tol, e.what()));
                } catch (const std::exception& e) {
                    throw stage_error("gw0", "gw0-solver", e.what());
                }
                sum.solver_runs.push_back(std::move(run));
            }
        }
        if (cfg.suite("solver"))
            take(detail::in_stage("gw0", "gw0-solver", [&] {
                return solver_property_checks(solver_properties(model, mf, kx, scr, cfg.solver.tol, ls));
            }));
    }
    return out;
}

// summary.json is added last so the manifest covers it too
inline std::string finalize_artifacts(PipelineResult& r) {
    std::string text = summary_json(r.summary).dump(2) + "\n";
    r.artifacts["summary.json"] = text;
    return text;
}

} // namespace gwlab

#endif
