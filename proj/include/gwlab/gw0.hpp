#ifndef GWLAB_GW0_HPP
#define GWLAB_GW0_HPP

// The resolvent map g_lambda, Picard iteration for the GW0_lambda system, the
// one-shot G0W0 evaluation and the associated diagnostics.

#include "core.hpp"
#include "frequency.hpp"
#include "screening.hpp"
#include "self_energy.hpp"

#include <limits>
#include <optional>

namespace gwlab {

// Nodewise S(omega_j) continued off the grid: Floater-Hormann interpolation in
// the Gauss-Legendre variable x on the `window` nodes around the target, nearest
// node beyond the grid. A global rational interpolant on these nodes lets the
// clustered end nodes dominate the barycentric sums, so it is kept local.
struct AxisInterpolant {
    GridPtr grid;
    std::vector<CMat> values;
    int window = 8;
    std::vector<FloaterHormann> local; // one per window start

    AxisInterpolant(GridPtr g, std::vector<CMat> v, int order = 5, int win = 8)
        : grid(std::move(g)), values(std::move(v)), window(std::min<int>(win, static_cast<int>(grid->size()))) {
        const auto& xs = grid->xs;
        for (std::size_t s = 0; s + window <= xs.size(); ++s)
            local.emplace_back(std::vector<double>(xs.begin() + s, xs.begin() + s + window), order);
    }

    CMat operator()(double omega) const {
        const auto& xs = grid->xs;
        double x = grid->to_x(omega);
        if (x <= xs.front()) return values.front();
        if (x >= xs.back()) return values.back();
        std::ptrdiff_t pos = std::lower_bound(xs.begin(), xs.end(), x) - xs.begin();
        std::ptrdiff_t start = std::clamp<std::ptrdiff_t>(pos - window / 2, 0, static_cast<std::ptrdiff_t>(xs.size()) - window);
        return local[start].eval(x, values.begin() + start);
    }
};

inline CMat invert_checked(const CMat& a, double omega, double lambda) {
    Eigen::PartialPivLU<CMat> lu(a);
    double rc = lu.rcond();
    if (!(rc > 1e-12))
        throw singular_error(cat("near-singular resolvent at omega=", omega, " lambda=", lambda, " (rcond ", rc, ")"));
    return lu.inverse();
}

// G_j = [mu0 + i omega_j - h1 - S_j]^{-1}; the evaluator uses the interpolated S.
inline MatrixTrack green_from_self_energy(GridPtr grid, const RMat& h1, double mu0, const std::vector<CMat>& s,
                                         double lambda = 0.0) {
    const std::size_t k = grid->size();
    const Eigen::Index m = h1.rows();
    CMat h = h1.cast<cplx>();
    MatrixTrack g;
    g.grid = grid;
    g.axis_offset = mu0;
    g.values.resize(k);
    parallel_for(k, [&](std::size_t j) {
        CMat a = cplx(mu0, grid->nodes[j]) * CMat::Identity(m, m) - h - s[j];
        g.values[j] = invert_checked(a, grid->nodes[j], lambda);
    });
    auto interp = std::make_shared<AxisInterpolant>(grid, s);
    g.eval = [interp, h, lambda](cplx z) {
        const Eigen::Index n = h.rows();
        CMat a = z * CMat::Identity(n, n) - h - (*interp)(z.imag());
        return invert_checked(a, z.imag(), lambda);
    };
    return g;
}

// (mu0 + i omega - h1) - G^{-1}, nodewise
inline MatrixTrack dyson_inverse_diagnostic(const MatrixTrack& g, const RMat& h1, double mu0) {
    check_track(g);
    const std::size_t k = g.grid->size();
    const Eigen::Index m = h1.rows();
    MatrixTrack s;
    s.grid = g.grid;
    s.axis_offset = mu0;
    s.values.resize(k);
    parallel_for(k, [&](std::size_t j) {
        CMat z = cplx(mu0, g.grid->nodes[j]) * CMat::Identity(m, m) - h1.cast<cplx>();
        s.values[j] = z - invert_checked(g.values[j], g.grid->nodes[j], 0.0);
    });
    return s;
}

// A track given only by nodal values gets its evaluator through the Dyson
// inverse of those values.
inline MatrixTrack green_from_values(GridPtr grid, const RMat& h1, double mu0, std::vector<CMat> values) {
    MatrixTrack tmp;
    tmp.grid = grid;
    tmp.axis_offset = mu0;
    tmp.values = std::move(values);
    MatrixTrack s = dyson_inverse_diagnostic(tmp, h1, mu0);
    MatrixTrack g = green_from_self_energy(grid, h1, mu0, s.values);
    g.values = std::move(tmp.values);
    return g;
}

inline MatrixTrack g0_track(GridPtr grid, const RMat& h1, double mu0) {
    const Eigen::Index m = h1.rows();
    return green_from_self_energy(grid, h1, mu0, std::vector<CMat>(grid->size(), CMat::Zero(m, m)));
}

inline MatrixTrack g_lambda(const SelfEnergySet& sigma, const RMat& h1, double mu0, double lambda) {
    GridPtr grid = sigma.sigma_c.grid;
    std::vector<CMat> s(grid->size());
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = lambda * sigma_node(sigma, j);
    return green_from_self_energy(grid, h1, mu0, s, lambda);
}

// ---- lambda_* estimate --------------------------------------------------------

struct LambdaStar {
    double s_norm = 0.0;   // operator norm of the linear part, L2 -> sup
    double g0_l2 = 0.0;
    double g0_sup = 0.0;
    double kx_norm = 0.0;
    double s_g0_sup = 0.0; // sup norm of s[G0]
    double d = 0.0;
    double big_m = 0.0;
    double c_m = 0.0;
    double r = 0.0;
    double lambda_m = 0.0;
    double value = 0.0;
};

// Probe family for the norm of G -> Sigma_c: rank-one tracks u u^T / (z - mu0 - a)
// built from frontier orbitals, plus G0 and its particle and hole parts.
inline double s_norm_estimate(const MeanFieldState& mf, const ScreeningSet& scr) {
    GridPtr grid = scr.grid;
    const int n = mf.n_elec;
    std::vector<RVec> us;
    us.push_back(mf.phi.col(n - 1));
    us.push_back(mf.phi.col(n));
    us.push_back((mf.phi.col(n - 1) + mf.phi.col(n)) / std::sqrt(2.0));
    if (n >= 2) us.push_back(mf.phi.col(n - 2));
    const double g = mf.gap;
    std::vector<double> shifts{-2.0 * g, -0.5 * g, 0.5 * g, 2.0 * g};
    std::vector<Evaluator> probes;
    for (const auto& u : us)
        for (double a : shifts) {
            CMat p = (u * u.transpose()).cast<cplx>();
            double mu0 = mf.mu0;
            probes.push_back([p, mu0, a](cplx z) -> CMat { return p / (z - mu0 - a); });
        }
    probes.push_back(g0_evaluator(mf, Part::full));
    probes.push_back(g0_evaluator(mf, Part::particle));
    probes.push_back(g0_evaluator(mf, Part::hole));
    MatrixTrack w = scr.w0c_track();
    double best = 0.0;
    for (const auto& e : probes) {
        MatrixTrack p = sample_track(grid, mf.mu0, e);
        double nrm = l2_norm(p);
        if (nrm == 0.0) continue;
        best = std::max(best, sup_norm(sigma_c(p, w)) / nrm);
    }
    return best;
}

inline LambdaStar lambda_star_estimate(const MeanFieldState& mf, const RMat& kx, const ScreeningSet& scr) {
    LambdaStar ls;
    MatrixTrack g0 = sample_track(scr.grid, mf.mu0, g0_evaluator(mf));
    ls.s_norm = s_norm_estimate(mf, scr);
    ls.g0_l2 = l2_norm(g0);
    ls.g0_sup = sup_norm(g0);
    ls.kx_norm = norm2(kx);
    SelfEnergySet s0 = s_map(g0, kx, scr);
    for (std::size_t j = 0; j < scr.grid->size(); ++j) ls.s_g0_sup = std::max(ls.s_g0_sup, norm2(sigma_node(s0, j)));
    ls.d = 0.5 * mf.gap;
    ls.big_m = ls.kx_norm + 1.5 * ls.s_norm * ls.g0_l2;
    ls.lambda_m = ls.d / (2.0 * ls.big_m);
    ls.c_m = 2.0 * (1.0 / ls.d + ls.g0_l2);
    ls.r = (ls.big_m - ls.kx_norm) / ls.s_norm - ls.g0_l2;
    const double c2 = ls.c_m * ls.c_m;
    ls.value = std::min({ls.lambda_m, 1.0 / (c2 * (ls.s_norm * ls.r + ls.s_g0_sup)), 0.99 / (c2 * ls.s_norm)});
    return ls;
}

// ---- Picard iteration ----------------------------------------------------------

struct SolverConfig {
    double lambda = 0.0;
    double tol = 1e-8;
    int max_iter = 200;
    double mixing = 1.0;

    void validate() const {
        if (!(tol > 0.0)) throw input_error("solver tol must be positive");
        if (lambda < 0.0) throw input_error("lambda must be non-negative");
        if (!(mixing > 0.0 && mixing <= 1.0)) throw input_error("mixing must lie in (0, 1]");
        if (max_iter < 1) throw input_error("max_iter must be positive");
    }
};

struct SolverReport {
    double lambda = 0.0;
    std::vector<double> iterates;
    double contraction = 0.0;
    bool converged = false;
    double lambda_star_estimate = std::numeric_limits<double>::quiet_NaN();
    double mixing_used = 1.0;
    double fixed_point_residual = 0.0;
    double dyson_roundtrip = 0.0;
    double conj_residual = 0.0;
    double distance_from_g0 = 0.0;
    std::vector<std::string> warnings;
};

// geometric ratio from the last (at most five) residuals above the floor
inline double fit_contraction(const std::vector<double>& r, double floor) {
    std::vector<double> ys;
    for (double v : r)
        if (v > floor) ys.push_back(std::log(v));
    if (ys.size() > 5) ys.erase(ys.begin(), ys.end() - 5);
    if (ys.size() < 2) return 0.0;
    const double n = static_cast<double>(ys.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        double x = static_cast<double>(i);
        sx += x;
        sy += ys[i];
        sxx += x * x;
        sxy += x * ys[i];
    }
    return std::exp((n * sxy - sx * sy) / (n * sxx - sx * sx));
}

struct SolverResult {
    MatrixTrack g;
    SelfEnergySet sigma;
    SolverReport report;
};

inline SolverResult picard_solve(const RMat& h1, const MeanFieldState& mf, const RMat& kx, const ScreeningSet& scr,
                                 const SolverConfig& cfg, const std::optional<MatrixTrack>& start = std::nullopt,
                                 std::optional<double> lambda_star = std::nullopt) {
    cfg.validate();
    GridPtr grid = scr.grid;
    SolverResult res;
    SolverReport& rep = res.report;
    rep.lambda = cfg.lambda;
    rep.mixing_used = cfg.mixing;
    if (lambda_star) {
        rep.lambda_star_estimate = *lambda_star;
        if (cfg.lambda > *lambda_star)
            rep.warnings.push_back(cat("lambda=", cfg.lambda, " exceeds the estimated contraction bound ", *lambda_star));
    }
    MatrixTrack g0 = g0_track(grid, h1, mf.mu0);
    MatrixTrack g = start ? *start : g0;
    const double floor = 1e-14 * std::max(l2_norm(g0), 1.0);
    double mixing = cfg.mixing;
    int growth = 0;
    for (int it = 0; it < cfg.max_iter; ++it) {
        SelfEnergySet sig = s_map(g, kx, scr);
        MatrixTrack gn = g_lambda(sig, h1, mf.mu0, cfg.lambda);
        if (mixing < 1.0) {
            std::vector<CMat> mixed(grid->size());
            for (std::size_t j = 0; j < mixed.size(); ++j) mixed[j] = (1.0 - mixing) * g.values[j] + mixing * gn.values[j];
            gn = green_from_values(grid, h1, mf.mu0, std::move(mixed));
        }
        double r = l2_norm(track_diff(gn, g));
        if (!std::isfinite(r)) throw divergence_error(cat("non-finite residual at lambda=", cfg.lambda, " mixing=", mixing));
        rep.iterates.push_back(r);
        g = std::move(gn);
        if (r < cfg.tol) {
            rep.converged = true;
            break;
        }
        const std::size_t k = rep.iterates.size();
        growth = (k >= 2 && rep.iterates[k - 1] > rep.iterates[k - 2]) ? growth + 1 : 0;
        if (growth >= 3) {
            if (mixing == 1.0) {
                mixing = 0.5;
                growth = 0;
                rep.mixing_used = mixing;
                rep.warnings.push_back(cat("residual grew for 3 iterations at iteration ", k, "; mixing reduced to 0.5"));
            } else {
                throw divergence_error(cat("residual grew for 3 consecutive iterations at lambda=", cfg.lambda,
                                           " mixing=", mixing));
            }
        }
    }
    rep.contraction = fit_contraction(rep.iterates, floor);
    // one full re-evaluation of both equations at the accepted point
    res.sigma = s_map(g, kx, scr);
    MatrixTrack check = g_lambda(res.sigma, h1, mf.mu0, cfg.lambda);
    rep.fixed_point_residual = l2_norm(track_diff(check, g));
    rep.conj_residual = res.sigma.conj_residual;
    MatrixTrack back = dyson_inverse_diagnostic(check, h1, mf.mu0);
    for (std::size_t j = 0; j < grid->size(); ++j)
        rep.dyson_roundtrip = std::max(rep.dyson_roundtrip, max_abs(back.values[j] - cfg.lambda * sigma_node(res.sigma, j)));
    rep.distance_from_g0 = l2_norm(track_diff(g, g0));
    res.g = std::move(g);
    if (!rep.converged) rep.warnings.push_back(cat("no convergence within ", cfg.max_iter, " iterations"));
    return res;
}

struct OneShot {
    SelfEnergySet sigma;
    MatrixTrack g;
};

inline OneShot one_shot_g0w0(const RMat& h1, const MeanFieldState& mf, const RMat& kx, const ScreeningSet& scr) {
    OneShot o;
    o.sigma = s_map(g0_track(scr.grid, h1, mf.mu0), kx, scr);
    o.g = g_lambda(o.sigma, h1, mf.mu0, 1.0);
    return o;
}

// Analyticity proxy: the frequency-independent part of the one-shot
// self-energy at mu0 defines a Hermitian quasiparticle Hamiltonian; the
// particle part of its resolvent, broadened by eta, is checked against the
// first Plemelj formula on a uniform real-axis window.
struct AnalyticityProxy {
    double residual = 0.0;
    RVec qp_energies;
};

inline AnalyticityProxy analyticity_proxy(const OneShot& os, const RMat& h1, double mu0, const RVec& f, double eta = 0.5,
                                          std::size_t samples = 1u << 14) {
    AxisInterpolant s(os.sigma.sigma_c.grid, os.sigma.sigma_c.values);
    CMat s0 = os.sigma.kx.cast<cplx>() + s(0.0);
    RMat hq = h1 + (0.5 * (s0 + s0.adjoint())).real();
    Eigen::SelfAdjointEigenSolver<RMat> es(hq);
    AnalyticityProxy out;
    out.qp_energies = es.eigenvalues();
    RVec c = es.eigenvectors().transpose() * f.normalized();
    std::vector<double> omega = uniform_window(200.0 * eta, samples);
    std::vector<cplx> vals(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        cplx acc = 0.0;
        for (Eigen::Index k = 0; k < c.size(); ++k)
            if (out.qp_energies(k) > mu0) acc += c(k) * c(k) / (cplx(mu0 + omega[i], eta) - out.qp_energies(k));
        vals[i] = acc;
    }
    out.residual = plemelj_residual(omega, vals);
    return out;
}

} // namespace gwlab

#endif
