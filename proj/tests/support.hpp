#ifndef GWLAB_TEST_SUPPORT_HPP
#define GWLAB_TEST_SUPPORT_HPP

#include <gwlab/checks.hpp>

#include <gtest/gtest.h>

namespace gwtest {

using namespace gwlab;

// 1D chain, 8 sites, soft Coulomb, self-consistent Hartree h1, N = 2
inline ModelSpec reference_spec() {
    ModelSpec s;
    s.dim = 1;
    s.sites_per_axis = 8;
    s.spacing = 1.0;
    s.v_ext = "well";
    s.well_depth = 2.0;
    s.well_width = 1.0;
    s.eps_reg = 1.0;
    s.h1 = "hartree";
    s.n_elec = 2;
    return s;
}

inline ModelSpec chain_spec(int sites, int n, const std::string& h1 = "bare") {
    ModelSpec s = reference_spec();
    s.sites_per_axis = sites;
    s.n_elec = n;
    s.h1 = h1;
    return s;
}

struct Reference {
    LatticeModel model;
    MeanFieldState mf;
    GridPtr grid;
    ScreeningSet scr;
    RMat kx;

    static const Reference& get() {
        static const Reference r = [] {
            Reference x;
            x.model = build_lattice(reference_spec());
            x.mf = solve_mean_field(x.model, 2);
            x.grid = make_grid(128, x.mf.gap);
            x.scr = build_screening(x.mf, x.model.coulomb_sqrt, x.grid);
            x.kx = exchange_kernel(x.mf.gamma0, x.model.coulomb);
            return x;
        }();
        return r;
    }
};

inline const ExactOracle& reference_oracle() {
    static const ExactOracle o = build_oracle(Reference::get().model, 2);
    return o;
}

inline const OneShot& reference_one_shot() {
    static const OneShot os = [] {
        const Reference& r = Reference::get();
        return one_shot_g0w0(r.model.h1, r.mf, r.kx, r.scr);
    }();
    return os;
}

inline const LambdaStar& reference_lambda_star() {
    static const LambdaStar ls = [] {
        const Reference& r = Reference::get();
        return lambda_star_estimate(r.mf, r.kx, r.scr);
    }();
    return ls;
}

inline RMat random_symmetric(Rng& rng, int n) {
    std::normal_distribution<double> nd;
    RMat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = nd(rng);
    return 0.5 * (a + a.transpose());
}

inline CMat random_nsd(Rng& rng, int n) { return -random_psd(rng, n); }

} // namespace gwtest

#endif
