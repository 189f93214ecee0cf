#ifndef GWLAB_SELF_ENERGY_HPP
#define GWLAB_SELF_ENERGY_HPP

#include "core.hpp"
#include "frequency.hpp"
#include "kernel.hpp"
#include "screening.hpp"

namespace gwlab {

// (K_x)_ij = -gamma_ij V_ij
inline RMat exchange_kernel(const RMat& gamma0, const RMat& coulomb) {
    if (gamma0.rows() != coulomb.rows() || gamma0.cols() != coulomb.cols()) throw shape_error("gamma0 and V differ in size");
    if (max_abs(gamma0 - gamma0.transpose()) > 1e-12) throw input_error("gamma0 is not symmetric");
    return -gamma0.cwiseProduct(coulomb);
}

struct SelfEnergySet {
    RMat kx;
    MatrixTrack sigma_c;
    double conj_residual = 0.0; // before symmetrization
};

// max_j |S(-omega_j) - S(omega_j)^*| on a symmetric grid
inline double conjugation_residual(const MatrixTrack& t) {
    const std::size_t k = t.values.size();
    double r = 0.0;
    for (std::size_t j = 0; j < k; ++j) r = std::max(r, max_abs(t.values[k - 1 - j] - t.values[j].adjoint()));
    return r;
}

// -(1/2pi) sum_l w_l G(mu0 + i(omega_j + omega_l)) odot W0c(i omega_l)
inline MatrixTrack sigma_c(const MatrixTrack& g, const MatrixTrack& w) {
    check_track(w);
    if (g.grid != w.grid) throw shape_error("sigma_c: grid mismatch");
    MatrixTrack s = convolve_tracks(g, w, [](const CMat& a, const CMat& b) -> CMat { return -odot_op(a, b, 1.0); });
    check_track(s);
    return s;
}

inline SelfEnergySet s_map(const MatrixTrack& g, const RMat& kx, const ScreeningSet& scr) {
    SelfEnergySet out;
    out.kx = kx;
    out.sigma_c = sigma_c(g, scr.w0c_track());
    out.conj_residual = conjugation_residual(out.sigma_c);
    // enforce the symmetry exactly after measuring it
    auto& v = out.sigma_c.values;
    const std::size_t k = v.size();
    for (std::size_t j = 0; j < k / 2; ++j) {
        CMat a = 0.5 * (v[j] + v[k - 1 - j].adjoint());
        v[j] = a;
        v[k - 1 - j] = a.adjoint();
    }
    return out;
}

// total self-energy at node j
inline CMat sigma_node(const SelfEnergySet& s, std::size_t j) { return s.kx.cast<cplx>() + s.sigma_c.values[j]; }

} // namespace gwlab

#endif
