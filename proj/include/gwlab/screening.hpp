#ifndef GWLAB_SCREENING_HPP
#define GWLAB_SCREENING_HPP

// Independent-particle polarizability, RPA response and screened interaction
// on the imaginary axis.

#include "core.hpp"
#include "fock.hpp"
#include "frequency.hpp"
#include "kernel.hpp"
#include "model.hpp"

namespace gwlab {

enum class Part { full, particle, hole };

// (z - h1)^{-1} from the mean-field eigenpairs, optionally restricted to the
// particle (k > N) or hole (k <= N) orbitals
inline CMat g0_resolvent(const MeanFieldState& mf, cplx z, Part part = Part::full) {
    const Eigen::Index m = mf.eps.size();
    CVec d = CVec::Zero(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        bool hole = k < mf.n_elec;
        if ((part == Part::particle && hole) || (part == Part::hole && !hole)) continue;
        cplx den = z - mf.eps(k);
        if (std::abs(den) < 1e-12) throw pole_error(cat("z=", z, " on the orbital energy ", mf.eps(k)));
        d(k) = 1.0 / den;
    }
    CMat phi = mf.phi.cast<cplx>();
    return phi * d.asDiagonal() * phi.transpose();
}

inline Evaluator g0_evaluator(const MeanFieldState& mf, Part part = Part::full) {
    return [mf, part](cplx z) { return g0_resolvent(mf, z, part); };
}

// Particle-hole pair data: u_{ka} = phi_k * phi_a (site products) and
// Delta_{ka} = eps_a - eps_k for k <= N < a.
struct PairBasis {
    RMat prod;  // M x npairs
    RVec delta; // npairs
};

inline PairBasis pair_basis(const MeanFieldState& mf) {
    const int m = static_cast<int>(mf.eps.size()), n = mf.n_elec;
    PairBasis pb;
    pb.prod.resize(m, n * (m - n));
    pb.delta.resize(n * (m - n));
    int c = 0;
    for (int k = 0; k < n; ++k)
        for (int a = n; a < m; ++a, ++c) {
            pb.prod.col(c) = mf.phi.col(k).cwiseProduct(mf.phi.col(a));
            pb.delta(c) = mf.eps(a) - mf.eps(k);
        }
    return pb;
}

// -2 sum_k phi_k (1-gamma)(h-eps_k)/((h-eps_k)^2 - z^2)(1-gamma) phi_k in
// site-value coordinates; z = i omega gives the imaginary-axis form
inline CMat p0_values(const PairBasis& pb, cplx z) {
    CVec f(pb.delta.size());
    for (Eigen::Index c = 0; c < f.size(); ++c) {
        cplx den = pb.delta(c) * pb.delta(c) - z * z;
        if (std::abs(den) < 1e-12) throw pole_error(cat("z=", z, " on a particle-hole excitation"));
        f(c) = -2.0 * pb.delta(c) / den;
    }
    CMat u = pb.prod.cast<cplx>();
    return u * f.asDiagonal() * u.transpose();
}

inline CMat p0_sym_at(const PairBasis& pb, const RMat& vsqrt, cplx z) {
    CMat vs = vsqrt.cast<cplx>();
    return vs * p0_values(pb, z) * vs;
}

inline CMat p0_explicit(const MeanFieldState& mf, const RMat& vsqrt, double omega) {
    return p0_sym_at(pair_basis(mf), vsqrt, cplx(0.0, omega));
}

// (1/2pi) int V^{1/2} [G0(mu0 + i(omega + w')) odot G0(mu0 + i w')] V^{1/2} dw'
// on the quadrature grid; `part` restricts both factors.
//
// The integrand peaks near w' = 0 and near w' = -omega. It is split with the
// partition of unity chi = l0 / (l0 + l1), l0 = 1/(w'^2 + s^2),
// l1 = 1/((w' + omega)^2 + s^2), and each piece is integrated on the grid
// centred on its own peak. s defaults to half the gap.
inline CMat p0_convolution(const MeanFieldState& mf, const RMat& vsqrt, const FreqGrid& grid, double omega,
                           Part part = Part::full, double s = -1.0) {
    const Eigen::Index m = mf.eps.size();
    if (s <= 0.0) s = 0.5 * mf.gap;
    auto integrand = [&](double x) -> CMat {
        CMat a = g0_resolvent(mf, cplx(mf.mu0, omega + x), part);
        CMat b = g0_resolvent(mf, cplx(mf.mu0, x), part);
        return odot_op(a, b, 1.0);
    };
    auto chi = [&](double x) {
        double l0 = 1.0 / (x * x + s * s), l1 = 1.0 / ((x + omega) * (x + omega) + s * s);
        return l0 / (l0 + l1);
    };
    CMat acc = CMat::Zero(m, m);
    for (std::size_t l = 0; l < grid.size(); ++l) {
        double x = grid.nodes[l], y = x - omega;
        acc += grid.weights[l] * chi(x) * integrand(x);
        acc += grid.weights[l] * (1.0 - chi(y)) * integrand(y);
    }
    CMat vs = vsqrt.cast<cplx>();
    return vs * acc * vs / (2.0 * pi);
}

// chi0 = (1 - P0)^{-1} - 1 through the Hermitian eigendecomposition of P0
inline CMat chi0_of_p0(const CMat& p0, double* cond = nullptr) {
    CMat h = 0.5 * (p0 + p0.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    const RVec& ev = es.eigenvalues();
    if (ev.size() > 0 && ev.maxCoeff() > 1e-8)
        throw domain_error(cat("polarizability has positive eigenvalue ", ev.maxCoeff()));
    if (cond && ev.size() > 0) *cond = (1.0 - ev.minCoeff()) / (1.0 - ev.maxCoeff());
    RVec f = (1.0 / (1.0 - ev.array()) - 1.0).matrix();
    return es.eigenvectors() * f.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

inline CMat w0c_of_chi0(const CMat& chi0, const RMat& vsqrt) {
    if (chi0.rows() != vsqrt.rows()) throw shape_error("chi0 and V^{1/2} differ in size");
    CMat vs = vsqrt.cast<cplx>();
    return vs * chi0 * vs;
}

// W0c at an arbitrary complex frequency (general non-Hermitian solve)
inline CMat w0c_at(const PairBasis& pb, const RMat& vsqrt, cplx z) {
    CMat p = p0_sym_at(pb, vsqrt, z);
    const Eigen::Index m = p.rows();
    CMat id = CMat::Identity(m, m);
    CMat chi = (id - p).partialPivLu().solve(id) - id;
    return w0c_of_chi0(chi, vsqrt);
}

inline Evaluator w0c_evaluator(const MeanFieldState& mf, const RMat& vsqrt) {
    PairBasis pb = pair_basis(mf);
    return [pb, vsqrt](cplx z) { return w0c_at(pb, vsqrt, z); };
}

struct ScreeningSet {
    GridPtr grid;
    std::vector<CMat> p0, chi0, w0c;
    std::vector<double> cond; // condition number of 1 - P0 per node
    Evaluator w0c_eval;

    MatrixTrack w0c_track() const {
        MatrixTrack t;
        t.grid = grid;
        t.values = w0c;
        t.axis_offset = 0.0;
        t.eval = w0c_eval;
        return t;
    }
};

inline ScreeningSet build_screening(const MeanFieldState& mf, const RMat& vsqrt, GridPtr grid) {
    ScreeningSet s;
    s.grid = grid;
    const std::size_t k = grid->size();
    s.p0.resize(k);
    s.chi0.resize(k);
    s.w0c.resize(k);
    s.cond.resize(k);
    PairBasis pb = pair_basis(mf);
    parallel_for(k, [&](std::size_t j) {
        s.p0[j] = p0_sym_at(pb, vsqrt, cplx(0.0, grid->nodes[j]));
        s.chi0[j] = chi0_of_p0(s.p0[j], &s.cond[j]);
        s.w0c[j] = w0c_of_chi0(s.chi0[j], vsqrt);
    });
    s.w0c_eval = w0c_evaluator(mf, vsqrt);
    return s;
}

// Sum rule of the polarizability: omega^2 <f, -P(i omega) g> against the weak
// form of -div(rho0 grad).
inline SumRuleTable sumrule_p0(const MeanFieldState& mf, const LatticeModel& model, const std::vector<double>& omegas,
                               const RVec& f, const RVec& g) {
    PairBasis pb = pair_basis(mf);
    SumRuleTable t;
    t.omegas = omegas;
    t.limit = 2.0 * pb.prod * pb.delta.asDiagonal() * pb.prod.transpose();
    t.weak = bond_weak_form(model.h1, mf.gamma0);
    t.limit_rel = max_abs(t.limit - t.weak) / std::max(max_abs(t.weak), 1e-300);
    RMat site = centered_weak_form(model, mf.rho0);
    t.site_form_rel = max_abs(t.limit - site) / std::max(max_abs(t.limit), 1e-300);
    const double rhs = f.dot(t.weak * g);
    for (double w : omegas) {
        double lhs = -w * w * f.dot(p0_values(pb, cplx(0.0, w)).real() * g);
        t.residuals.push_back(std::abs(lhs - rhs));
    }
    t.slope = loglog_slope(t.omegas, t.residuals);
    return t;
}

} // namespace gwlab

#endif
