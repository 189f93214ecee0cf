// Acceptance run on the reference chain: one line per criterion, exit status
// nonzero if any criterion fails.

#include <gwlab/checks.hpp>

#include <chrono>
#include <cstdio>
#include <map>

using namespace gwlab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Criterion {
    int id;
    std::string title;
    std::vector<CheckResult> parts;
};

CheckResult pick(const SuiteOutput& s, const std::string& name) {
    for (const auto& c : s.checks)
        if (c.name == name) return c;
    return {name, 0.0, 0.0, "<=", "fail", "check missing"};
}

CheckResult runtime(const std::string& what, double secs, double limit) {
    return check_le("runtime." + what, secs, limit, "seconds");
}

int report(const Criterion& c) {
    bool ok = std::all_of(c.parts.begin(), c.parts.end(), [](const CheckResult& r) { return r.passed(); });
    std::printf("criterion %d: %s  %s\n", c.id, ok ? "PASS" : "FAIL", c.title.c_str());
    for (const auto& r : c.parts)
        std::printf("    %-4s %-36s %.6g %s %.3g%s%s\n", r.passed() ? "ok" : "bad", r.name.c_str(), r.value, r.relation.c_str(),
                    r.tolerance, r.note.empty() ? "" : "  ", r.note.c_str());
    return ok ? 0 : 1;
}

} // namespace

int main() {
    const auto t_all = Clock::now();
    ModelSpec spec;
    spec.dim = 1;
    spec.sites_per_axis = 8;
    spec.spacing = 1.0;
    spec.v_ext = "well";
    spec.well_depth = 2.0;
    spec.well_width = 1.0;
    spec.eps_reg = 1.0;
    spec.h1 = "hartree";
    spec.n_elec = 2;
    Rng rng(7);
    std::vector<Criterion> out;

    auto t = Clock::now();
    LatticeModel model = build_lattice(spec);
    MeanFieldState mf = solve_mean_field(model, spec.n_elec);
    SuiteOutput mfc = mean_field_checks(model, mf);
    double t_mf = seconds_since(t);
    out.push_back({1, "mean-field structure",
                   {pick(mfc, "mf.idempotency"), pick(mfc, "mf.trace"), pick(mfc, "mf.gap"), runtime("mean_field", t_mf, 1.0)}});

    t = Clock::now();
    ExactOracle o = build_oracle(model, spec.n_elec);
    SuiteOutput oc = oracle_checks(model, o, rng);
    double t_or = seconds_since(t);
    out.push_back({2, "oracle operator identities",
                   {pick(oc, "oracle.a_plus"), pick(oc, "oracle.a_minus"), pick(oc, "oracle.a_sum"),
                    pick(oc, "oracle.b_orthogonality"), runtime("oracle", t_or, 10.0)}});
    out.push_back({3, "non-interacting limit", {pick(oc, "oracle.noninteracting")}});
    out.push_back({4, "Green's function sum rule", {pick(oc, "oracle.green_sumrule")}});
    out.push_back({5, "spectral sum rule", {pick(oc, "oracle.spectral_total"), pick(oc, "oracle.spectral_hole")}});
    out.push_back({6, "Galitskii-Migdal energy", {pick(oc, "oracle.galitskii_migdal"), pick(oc, "oracle.energy_decomposition")}});
    out.push_back({7, "Johnson sum rule", {pick(oc, "oracle.johnson_slope"), pick(oc, "oracle.johnson_limit")}});

    SuiteOutput kc = kernel_checks(rng);
    out.push_back({8, "kernel product positivity and adjoint", {pick(kc, "kernel.positivity"), pick(kc, "kernel.adjoint")}});

    GridPtr grid = make_grid(128, mf.gap);
    ScreeningSet scr = build_screening(mf, model.coulomb_sqrt, grid);
    t = Clock::now();
    SuiteOutput rc = rpa_checks(model, mf, scr, true);
    double t_rpa = seconds_since(t);
    out.push_back({9, "contour deformation of P0",
                   {pick(rc, "rpa.contour_k256"), pick(rc, "rpa.contour_k128"), pick(rc, "rpa.contour_refinement"),
                    pick(rc, "rpa.hole_hole"), runtime("contour", t_rpa, 60.0)}});
    out.push_back({10, "screening structure",
                   {pick(rc, "rpa.p0_nsd"), pick(rc, "rpa.sandwich"), pick(rc, "rpa.evenness"), pick(rc, "rpa.p0_decay"),
                    pick(rc, "rpa.w0c_decay")}});

    SuiteOutput hc = hilbert_checks();
    out.push_back({11, "Plemelj and Hilbert machinery",
                   {pick(hc, "hilbert.lorentzian_pair"), pick(hc, "hilbert.involution"),
                    pick(hc, "hilbert.anticausal_discrimination")}});

    RMat kx = exchange_kernel(mf.gamma0, model.coulomb);
    LambdaStar ls = lambda_star_estimate(mf, kx, scr);
    SuiteOutput sc = solver_property_checks(solver_properties(model, mf, kx, scr, 1e-8, ls));
    OneShot os = one_shot_g0w0(model.h1, mf, kx, scr);
    SuiteOutput sec = self_energy_checks(model, mf, kx, scr, os, true, rng);
    double t_total = seconds_since(t_all);
    out.push_back({12, "GW0 solver",
                   {pick(sc, "solver.lambda0_iterations"), pick(sc, "solver.lambda0_residual"), pick(sc, "solver.contraction"),
                    pick(sc, "solver.alpha_scaling"), pick(sc, "solver.restart"), pick(sc, "solver.dyson_roundtrip"),
                    runtime("full_suite", t_total, 300.0)}});
    out.push_back({13, "G0W0 one-shot",
                   {pick(sec, "se.exchange_block"), pick(sec, "se.conjugation"), pick(sec, "se.refinement")}});

    int failed = 0;
    for (const auto& c : out) failed += report(c);
    std::printf("%d of %zu criteria passed (%.1f s)\n", static_cast<int>(out.size()) - failed, out.size(), t_total);
    return failed ? 1 : 0;
}
