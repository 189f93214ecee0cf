// gwlab command line driver

#include <gwlab/pipeline.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw gwlab::io_error("cannot read config " + path);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

void print_table(const gwlab::RunSummary& s) {
    for (const auto& c : s.checks) {
        std::printf("%-8s %-44s", c.status.c_str(), c.name.c_str());
        if (c.status != "skipped") std::printf(" %.6g %s %.3g", c.value, c.relation.c_str(), c.tolerance);
        if (!c.note.empty()) std::printf("  (%s)", c.note.c_str());
        std::printf("\n");
    }
    std::printf("%zu passed, %zu failed, %zu skipped\n", s.count("pass"), s.count("fail"), s.count("skipped"));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"lattice GW toolkit: mean field, exact oracle, RPA screening and GW0 iterations"};
    app.require_subcommand(1, 1);

    std::string config, out;
    int threads = 0;
    std::optional<std::uint64_t> seed;
    bool validate = false, quiet = false;

    for (const char* name : {"mean-field", "oracle", "rpa", "g0w0", "gw0", "check", "all"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (overrides [output] dir)");
        sub->add_option("--threads", threads, "worker threads, 0 = hardware concurrency")->check(CLI::NonNegativeNumber);
        sub->add_option("--seed", seed, "seed for the randomized checks");
        sub->add_flag("--validate", validate, "enable the expensive cross-checks");
        sub->add_flag("-q,--quiet", quiet, "suppress the check table");
    }
    CLI11_PARSE(app, argc, argv);
    const std::string cmd = app.get_subcommands().front()->get_name();

    try {
        gwlab::RunConfig cfg = gwlab::parse_config(slurp(config));
        if (!out.empty()) cfg.output_dir = out;
        if (seed) cfg.checks.seed = *seed;
        if (threads > 0) gwlab::set_threads(threads);

        gwlab::PipelineOptions opt;
        opt.stage = gwlab::parse_stage(cmd);
        opt.validate = validate || cmd == "check";
        if (cmd == "check") cfg.checks.suites = gwlab::suite_names();

        auto t0 = std::chrono::steady_clock::now();
        gwlab::PipelineResult r = gwlab::run_pipeline(cfg, opt);
        gwlab::finalize_artifacts(r);
        gwlab::export_tracks(r.artifacts, cfg.output_dir);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const auto& s = r.summary;
        std::printf("model %s  N=%d  gap=%.6g  mu0=%.6g\n", s.model_hash.substr(0, 12).c_str(), cfg.model.n_elec, s.gap, s.mu0);
        if (s.e_n) std::printf("E_N=%.12g  window=(%.6g, %.6g)\n", *s.e_n, *s.e_n - *s.e_minus, *s.e_plus - *s.e_n);
        for (const auto& run : s.solver_runs)
            std::printf("lambda=%g  iterations=%zu  converged=%s  alpha=%.3g%s\n", run.report.lambda, run.report.iterates.size(),
                        run.report.converged ? "yes" : "no", run.report.contraction,
                        run.error.empty() ? "" : ("  error: " + run.error).c_str());
        if (!quiet) print_table(s);
        std::printf("artifacts in %s (%.1f s)\n", cfg.output_dir.c_str(), secs);
        return s.all_passed() ? 0 : 1;
    } catch (const gwlab::error& e) {
        std::fprintf(stderr, "gwlab %s: %s\n", cmd.c_str(), e.what());
        return 2;
    }
}
