#ifndef GWLAB_MODEL_HPP
#define GWLAB_MODEL_HPP

// Lattice discretization of the one-body problem.
//
// Storage convention: every one-body operator is stored as its matrix in the
// orthonormal site basis e_i = delta_i / sqrt(w), w = h^dim. The kernel of an
// operator O is O / w. The Coulomb matrix V is the exception: it stores kernel
// values 1/|r_i - r_j| because that is what the exchange and screening
// formulas consume.

#include "core.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace gwlab {

struct ModelSpec {
    int dim = 1;
    int sites_per_axis = 8;
    double spacing = 1.0;
    std::string v_ext = "none"; // none | well | two-center
    double well_depth = 2.0;
    double well_width = 1.0;
    double separation = 2.0;
    double eps_reg = 1.0;
    double coulomb_scale = 1.0;
    std::string h1 = "bare"; // bare | hartree
    std::vector<double> hartree_density; // empty: self-consistent
    int n_elec = 1;

    bool operator==(const ModelSpec&) const = default;
};

struct LatticeModel {
    int dim = 1;
    int sites_per_axis = 0;
    double spacing = 1.0;
    std::vector<std::array<double, 3>> sites;
    RVec v_ext;
    RMat coulomb;      // kernel values V_ij
    RMat coulomb_sqrt; // symmetric V^{1/2}
    RMat h0;           // -1/2 Laplacian + v_ext
    RMat h1;           // mean-field one-body operator
    RVec v_hartree;    // zero for the bare variant

    int m() const { return static_cast<int>(sites.size()); }
    double weight() const { return std::pow(spacing, dim); }
};

struct MeanFieldState {
    RVec eps;
    RMat phi;
    int n_elec = 0;
    RMat gamma0;
    RVec rho0;
    double mu0 = 0.0;
    double gap = 0.0;
};

inline constexpr double gap_tol = 1e-8;

namespace detail {

inline std::array<double, 3> site_position(int idx, int dim, int n, double h) {
    std::array<double, 3> r{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) {
        r[a] = h * (idx % n);
        idx /= n;
    }
    return r;
}

inline double dist2(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return s;
}

} // namespace detail

// Index of the site obtained by reflecting every axis through the box centre.
inline int mirror_site(const LatticeModel& m, int i) {
    int n = m.sites_per_axis, out = 0, stride = 1;
    for (int a = 0; a < m.dim; ++a) {
        int c = i % n;
        i /= n;
        out += (n - 1 - c) * stride;
        stride *= n;
    }
    return out;
}

inline RMat laplacian_stencil(int dim, int n, double h) {
    int m = 1;
    for (int a = 0; a < dim; ++a) m *= n;
    RMat t = RMat::Zero(m, m);
    const double inv = 1.0 / (h * h);
    for (int i = 0; i < m; ++i) {
        t(i, i) = dim * inv;
        int stride = 1;
        for (int a = 0; a < dim; ++a) {
            int c = (i / stride) % n;
            if (c + 1 < n) {
                t(i, i + stride) = -0.5 * inv;
                t(i + stride, i) = -0.5 * inv;
            }
            stride *= n;
        }
    }
    return t;
}

inline RVec hartree_potential(const LatticeModel& model, const RVec& rho) {
    if (rho.size() != model.m()) throw shape_error("density length does not match the lattice");
    for (Eigen::Index i = 0; i < rho.size(); ++i)
        if (rho(i) < -1e-12) throw input_error(cat("negative density ", rho(i), " at site ", i));
    return model.coulomb * rho * model.weight();
}

inline MeanFieldState solve_mean_field(const RMat& h1, int n_elec, double w = 1.0) {
    const int m = static_cast<int>(h1.rows());
    if (n_elec < 1 || n_elec >= m) throw input_error(cat("need 1 <= N < M, got N=", n_elec, " M=", m));
    if (max_abs(h1 - h1.transpose()) > 1e-12) throw input_error("h1 is not symmetric");
    Eigen::SelfAdjointEigenSolver<RMat> es(h1);
    MeanFieldState mf;
    mf.eps = es.eigenvalues();
    mf.phi = es.eigenvectors();
    mf.n_elec = n_elec;
    mf.gap = mf.eps(n_elec) - mf.eps(n_elec - 1);
    if (mf.gap <= gap_tol)
        throw degeneracy_error(cat("degenerate Fermi level: gap ", mf.gap, " <= ", gap_tol));
    mf.mu0 = 0.5 * (mf.eps(n_elec - 1) + mf.eps(n_elec));
    auto occ = mf.phi.leftCols(n_elec);
    mf.gamma0 = occ * occ.transpose();
    mf.rho0 = mf.gamma0.diagonal() / w;
    return mf;
}

inline MeanFieldState solve_mean_field(const LatticeModel& model, int n_elec) {
    return solve_mean_field(model.h1, n_elec, model.weight());
}

inline LatticeModel build_lattice(const ModelSpec& s) {
    if (s.dim < 1 || s.dim > 3) throw input_error(cat("dim must be 1, 2 or 3, got ", s.dim));
    if (!(s.spacing > 0.0)) throw input_error("spacing must be positive");
    if (!(s.eps_reg > 0.0)) throw input_error("eps_reg must be positive");
    if (s.coulomb_scale < 0.0) throw input_error("coulomb_scale must be non-negative");
    LatticeModel lm;
    lm.dim = s.dim;
    lm.sites_per_axis = s.sites_per_axis;
    lm.spacing = s.spacing;
    int m = 1;
    for (int a = 0; a < s.dim; ++a) m *= s.sites_per_axis;
    if (m < 2) throw input_error("need at least two sites");
    if (m > 64) throw input_error("at most 64 sites are supported");
    for (int i = 0; i < m; ++i) lm.sites.push_back(detail::site_position(i, s.dim, s.sites_per_axis, s.spacing));

    std::array<double, 3> centre{0.0, 0.0, 0.0};
    for (int a = 0; a < s.dim; ++a) centre[a] = 0.5 * s.spacing * (s.sites_per_axis - 1);
    lm.v_ext = RVec::Zero(m);
    auto well = [&](const std::array<double, 3>& c, const std::array<double, 3>& r) {
        return -s.well_depth / std::sqrt(detail::dist2(r, c) + s.well_width * s.well_width);
    };
    if (s.v_ext == "well") {
        for (int i = 0; i < m; ++i) lm.v_ext(i) = well(centre, lm.sites[i]);
    } else if (s.v_ext == "two-center") {
        auto a = centre, b = centre;
        a[0] -= 0.5 * s.separation;
        b[0] += 0.5 * s.separation;
        for (int i = 0; i < m; ++i) lm.v_ext(i) = 0.5 * (well(a, lm.sites[i]) + well(b, lm.sites[i]));
    } else if (s.v_ext != "none") {
        throw input_error("unknown v_ext shape '" + s.v_ext + "'");
    }

    lm.coulomb.resize(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            lm.coulomb(i, j) =
                s.coulomb_scale / std::sqrt(detail::dist2(lm.sites[i], lm.sites[j]) + s.eps_reg * s.eps_reg);
    if (s.coulomb_scale > 0.0) {
        lm.coulomb_sqrt = spd_sqrt(lm.coulomb);
    } else {
        lm.coulomb_sqrt = RMat::Zero(m, m);
    }

    lm.h0 = laplacian_stencil(s.dim, s.sites_per_axis, s.spacing);
    lm.h0.diagonal() += lm.v_ext;
    lm.h1 = lm.h0;
    lm.v_hartree = RVec::Zero(m);

    if (s.h1 == "hartree") {
        if (!s.hartree_density.empty()) {
            RVec rho = Eigen::Map<const RVec>(s.hartree_density.data(), s.hartree_density.size());
            lm.v_hartree = hartree_potential(lm, rho);
        } else {
            // self-consistent Hartree with linear mixing 0.5
            RVec vh = RVec::Zero(m);
            bool done = false;
            for (int it = 0; it < 500 && !done; ++it) {
                RMat h = lm.h0;
                h.diagonal() += vh;
                MeanFieldState mf = solve_mean_field(h, s.n_elec, lm.weight());
                RVec target = hartree_potential(lm, mf.rho0.cwiseMax(0.0));
                done = (target - vh).cwiseAbs().maxCoeff() < 1e-10;
                vh = 0.5 * vh + 0.5 * target;
            }
            if (!done) throw construction_error("self-consistent Hartree loop did not converge in 500 iterations");
            lm.v_hartree = vh;
        }
        lm.h1.diagonal() += lm.v_hartree;
    } else if (s.h1 != "bare") {
        throw input_error("unknown h1 variant '" + s.h1 + "'");
    }
    return lm;
}

} // namespace gwlab

#endif
