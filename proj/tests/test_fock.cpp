#include "support.hpp"

#include <bit>

using namespace gwtest;

namespace {

RMat chain_h(int m, double t = 1.0) {
    RMat h = RMat::Zero(m, m);
    for (int i = 0; i + 1 < m; ++i) h(i, i + 1) = h(i + 1, i) = -t;
    for (int i = 0; i < m; ++i) h(i, i) = 0.1 * i; // lifts mirror degeneracies
    return h;
}

const LatticeModel& six_sites() {
    static const LatticeModel m = build_lattice(chain_spec(6, 2));
    return m;
}

ExactOracle free_oracle(const RMat& h, int n) {
    const Eigen::Index m = h.rows();
    return build_oracle(h, RMat::Zero(m, m), RMat::Zero(m, m), 1.0, n);
}

} // namespace

TEST(Sector, OrderedWordsWithFixedPopcount) {
    for (int m : {1, 4, 7, 10})
        for (int n = 0; n <= m; ++n) {
            FockSector s = make_sector(m, n);
            ASSERT_EQ(s.basis.size(), binomial(m, n));
            for (std::size_t i = 0; i < s.basis.size(); ++i) {
                EXPECT_EQ(std::popcount(s.basis[i]), n);
                EXPECT_LT(s.basis[i], word_t(1) << m);
                if (i) EXPECT_LT(s.basis[i - 1], s.basis[i]);
                EXPECT_EQ(s.index(s.basis[i]), static_cast<Eigen::Index>(i));
            }
        }
    EXPECT_EQ(make_sector(5, 7).dim(), 0);
}

TEST(Sector, BasisCap) {
    EXPECT_THROW(make_sector(20, 10, 1000), size_error);
    EXPECT_NO_THROW(make_sector(20, 2, 1000));
    EXPECT_THROW(make_sector(65, 1), size_error);
}

TEST(SectorHamiltonian, OneParticleSectorIsOneBodyMatrix) {
    RMat h(2, 2);
    h << 0.3, -0.7, -0.7, 0.3;
    RMat v(2, 2);
    v << 0, 2, 2, 0;
    SectorHamiltonian s = build_sector(h, v, 1);
    EXPECT_LT(max_abs(RMat(RMat(s.h_mat) - h)), 1e-15);
}

TEST(SectorHamiltonian, FullShellTwoSites) {
    RMat h(2, 2);
    h << 0.3, -0.7, -0.7, 1.1;
    RMat v(2, 2);
    v << 0, 0.45, 0.45, 0;
    SectorHamiltonian s = build_sector(h, v, 2);
    ASSERT_EQ(s.sector.dim(), 1);
    EXPECT_NEAR(RMat(s.h_mat)(0, 0), 0.3 + 1.1 + 0.45, 1e-15);
    GroundStateData g = ground_state(s);
    EXPECT_LT(max_abs(RMat(g.gamma - RMat::Identity(2, 2))), 1e-14);
}

TEST(SectorHamiltonian, FreeFermionsFillLowestLevels) {
    RMat h = chain_h(4);
    RVec eps = sym_eigenvalues(h);
    SectorHamiltonian s = build_sector(h, RMat::Zero(4, 4), 2);
    EXPECT_EQ(s.sector.dim(), 6);
    RMat dense(s.h_mat);
    EXPECT_LT(max_abs(RMat(dense - dense.transpose())), 1e-14);
    EXPECT_NEAR(sym_eigenvalues(dense)(0), eps(0) + eps(1), 1e-12);
    // three particles on four sites
    EXPECT_NEAR(ground_state(build_sector(h, RMat::Zero(4, 4), 3)).energy, eps(0) + eps(1) + eps(2), 1e-12);
}

TEST(SectorHamiltonian, AllFreeEnergiesAreOrbitalSums) {
    // every eigenvalue of the N=2 sector is eps_a + eps_b with a < b
    RMat h = chain_h(5);
    RVec eps = sym_eigenvalues(h);
    std::vector<double> pair;
    for (int a = 0; a < 5; ++a)
        for (int b = a + 1; b < 5; ++b) pair.push_back(eps(a) + eps(b));
    std::sort(pair.begin(), pair.end());
    RVec e = sym_eigenvalues(RMat(build_sector(h, RMat::Zero(5, 5), 2).h_mat));
    for (std::size_t i = 0; i < pair.size(); ++i) EXPECT_NEAR(e(i), pair[i], 1e-12);
}

TEST(GroundState, FreeDensityMatrixIsMeanFieldProjector) {
    RMat h = chain_h(6);
    GroundStateData g = ground_state(build_sector(h, RMat::Zero(6, 6), 2));
    MeanFieldState mf = solve_mean_field(h, 2);
    EXPECT_LT(max_abs(RMat(g.gamma - mf.gamma0)), 1e-10);
}

TEST(GroundState, InteractingInvariants) {
    const LatticeModel& m = six_sites();
    GroundStateData g = ground_state(build_sector(m, 2), m.weight());
    RVec ev = sym_eigenvalues(g.gamma);
    EXPECT_GE(ev.minCoeff(), -1e-12);
    EXPECT_LE(ev.maxCoeff(), 1.0 + 1e-12);
    EXPECT_NEAR(g.gamma.trace(), 2.0, 1e-10);
    EXPECT_NEAR(g.rho2.sum() * m.weight() * m.weight(), 1.0, 1e-10);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) EXPECT_LE(g.gamma(i, j) * g.gamma(i, j), g.gamma(i, i) * g.gamma(j, j) + 1e-14);
    EXPECT_GT(g.degeneracy_gap, degeneracy_tol);
    EXPECT_NEAR(g.vector.norm(), 1.0, 1e-12);
}

TEST(GroundState, DegenerateGroundStateRejected) {
    RMat h = RMat::Zero(4, 4);
    h.diagonal() << 0.0, 0.0, 1.0, 2.0;
    EXPECT_THROW(ground_state(build_sector(h, RMat::Zero(4, 4), 1)), degeneracy_error);
    EXPECT_THROW(free_oracle(h, 1), degeneracy_error);
}

TEST(Oracle, ConvexityViolationRejected) {
    RMat v = RMat::Constant(4, 4, -5.0);
    v.diagonal().setZero();
    try {
        build_oracle(chain_h(4), v, RMat::Zero(4, 4), 1.0, 2);
        FAIL() << "expected a convexity error";
    } catch (const domain_error& e) {
        EXPECT_NE(std::string(e.what()).find("convexity"), std::string::npos);
    }
}

TEST(Fermions, AnticommutationOnSectorMatrices) {
    const int m = 5, n = 2;
    FockSector sn = make_sector(m, n), sp = make_sector(m, n + 1), sm = make_sector(m, n - 1);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            RMat ac = RMat(annihilation_matrix(sp, sn, i) * creation_matrix(sn, sp, j)) +
                      RMat(creation_matrix(sm, sn, j) * annihilation_matrix(sn, sm, i));
            RMat expect = (i == j ? 1.0 : 0.0) * RMat::Identity(sn.dim(), sn.dim());
            EXPECT_LT(max_abs(RMat(ac - expect)), 1e-15) << i << "," << j;
        }
    // creation operators anticommute among themselves
    FockSector spp = make_sector(m, n + 2);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            RMat cc = RMat(creation_matrix(sp, spp, i) * creation_matrix(sn, sp, j)) +
                      RMat(creation_matrix(sp, spp, j) * creation_matrix(sn, sp, i));
            EXPECT_LT(max_abs(cc), 1e-15);
        }
}

TEST(Fermions, SignConvention) {
    // a^+_0 a^+_1 |0> = |11> with sign +1; a^+_1 a^+_0 |0> = -|11>
    word_t w = 0;
    double s = 1.0;
    ASSERT_TRUE(fermion::create(w, 1, s));
    ASSERT_TRUE(fermion::create(w, 0, s));
    EXPECT_EQ(w, word_t(3));
    EXPECT_EQ(s, 1.0);
    w = 0;
    s = 1.0;
    fermion::create(w, 0, s);
    fermion::create(w, 1, s);
    EXPECT_EQ(s, -1.0);
    EXPECT_FALSE(fermion::create(w, 1, s));
    EXPECT_FALSE(fermion::annihilate(w = 0, 2, s));
}

TEST(AddRemove, Identities) {
    const ExactOracle& o = reference_oracle();
    const Eigen::Index m = o.h0.rows();
    RMat pp = o.maps.a_plus_star.transpose() * o.maps.a_plus_star;
    RMat hh = o.maps.a_minus.transpose() * o.maps.a_minus;
    EXPECT_LT(max_abs(RMat(pp - (RMat::Identity(m, m) - o.ground.gamma))), 1e-10);
    EXPECT_LT(max_abs(RMat(hh - o.ground.gamma)), 1e-10);
    EXPECT_LT(max_abs(RMat(pp + hh - RMat::Identity(m, m))), 1e-10);
}

TEST(AddRemove, FullShellHasNoAddition) {
    RMat h = chain_h(3);
    GroundStateData g = ground_state(build_sector(h, RMat::Zero(3, 3), 3));
    ApmMaps a = build_apm(g, make_sector(3, 3), make_sector(3, 2), make_sector(3, 4));
    EXPECT_EQ(a.a_plus_star.rows(), 0);
    EXPECT_LT(max_abs(RMat(a.a_minus.transpose() * a.a_minus - RMat::Identity(3, 3))), 1e-12);
}

TEST(AddRemove, AdditionNormIsOneWhenGammaIsAProjector) {
    ExactOracle o = free_oracle(chain_h(6), 2);
    EXPECT_NEAR(norm2(o.maps.a_plus_star), 1.0, 1e-8);
}

TEST(AddRemove, AdditionNormMatchesSmallestOccupation) {
    const ExactOracle& o = reference_oracle();
    double nrm = norm2(o.maps.a_plus_star);
    EXPECT_NEAR(nrm * nrm, 1.0 - sym_eigenvalues(o.ground.gamma).minCoeff(), 1e-10);
    EXPECT_LE(nrm, 1.0 + 1e-12);
}

TEST(Green, NonInteractingResolvent) {
    RMat h = chain_h(6);
    ExactOracle o = free_oracle(h, 3);
    for (cplx z : {cplx(o.window.mu, 0.3), cplx(-1.0, 2.0), cplx(0.7, -0.01)}) {
        CMat r = (z * CMat::Identity(6, 6) - h.cast<cplx>()).inverse();
        EXPECT_LT(max_abs(CMat(exact_green(o, z) - r)), 1e-8);
    }
}

TEST(Green, SymmetryAndSigns) {
    const ExactOracle& o = reference_oracle();
    const double mu = o.window.mu;
    Rng rng(4);
    for (double w : {0.01, 0.2, 1.5, 30.0}) {
        CMat up = exact_green(o, cplx(mu, w)), dn = exact_green(o, cplx(mu, -w));
        EXPECT_LT(max_abs(RMat(up.real() - dn.real())), 1e-10);
        RVec f = random_vector(rng, o.h0.rows());
        double imp = f.dot(exact_green(o, cplx(mu, w), GreenPart::particle).imag() * f);
        double imm = f.dot(exact_green(o, cplx(mu, -w), GreenPart::particle).imag() * f);
        EXPECT_NEAR(imp, -imm, 1e-12);
        EXPECT_LE(max_eig(RMat(exact_green(o, cplx(mu, w), GreenPart::particle).real())), 1e-12);
        EXPECT_GE(min_eig(RMat(exact_green(o, cplx(mu, w), GreenPart::hole).real())), -1e-12);
    }
}

TEST(Green, ParticleSumRule) {
    const ExactOracle& o = reference_oracle();
    GridPtr g = make_grid(256, o.window.e_plus - o.window.e_minus);
    Rng rng(8);
    EXPECT_LT(green_sumrule_error(o, *g, rng), 1e-4);
}

TEST(Green, SparseSolveMatchesDense) {
    const ExactOracle& o = reference_oracle();
    for (cplx z : {cplx(o.window.mu, 0.1), cplx(o.window.mu, 3.0), cplx(-2.0, 0.5)})
        EXPECT_LT(max_abs(CMat(exact_green(o, z, GreenPart::full, true) - exact_green(o, z))), 1e-8);
}

TEST(Green, SpectralRepresentationAgrees) {
    const ExactOracle& o = reference_oracle();
    cplx z(o.window.mu, 0.4);
    CMat viaRep = laplace_eval(particle_rep(o), z) + laplace_eval(hole_rep(o), z);
    EXPECT_LT(max_abs(CMat(viaRep - exact_green(o, z))), 1e-12);
}

TEST(Green, PoleRejected) {
    const ExactOracle& o = reference_oracle();
    EXPECT_THROW(exact_green(o, cplx(o.window.e_plus, 0.0)), pole_error);
}

TEST(Lanczos, MatchesDenseLowestPair) {
    const ExactOracle& o = reference_oracle();
    LowSpectrum l = lanczos_lowest(o.h_n.h_mat, 2);
    RVec e = sym_eigenvalues(RMat(o.h_n.h_mat));
    EXPECT_NEAR(l.values(0), e(0), 1e-10);
    EXPECT_NEAR(l.values(1), e(1), 1e-9);
    EXPECT_NEAR(std::abs(l.vectors.col(0).dot(o.ground.vector)), 1.0, 1e-9);
}

TEST(Spectral, TotalsAndMonotonicity) {
    const ExactOracle& o = reference_oracle();
    const Eigen::Index m = o.h0.rows();
    SpectralMeasures all = spectral_measure(o, {{-1e300, 1e300}});
    EXPECT_LT(max_abs(RMat(all.particle[0] + all.hole[0] - RMat::Identity(m, m))), 1e-10);
    EXPECT_LT(max_abs(RMat(all.hole[0] - o.ground.gamma)), 1e-10);
    const double mu = o.window.mu;
    SpectralMeasures split = spectral_measure(o, {{-1e300, mu}, {mu, 1e300}});
    EXPECT_LT(max_abs(RMat(split.particle[0])), 1e-14); // no particle weight below mu
    EXPECT_LT(max_abs(RMat(split.hole[1])), 1e-14);
    SpectralMeasures nested = spectral_measure(o, {{mu, mu + 1.0}});
    SpectralMeasures wider = spectral_measure(o, {{mu, mu + 3.0}});
    EXPECT_GE(min_eig(RMat(wider.particle[0] - nested.particle[0])), -1e-12);
    EXPECT_GE(min_eig(RMat(nested.particle[0])), -1e-12);
    EXPECT_LE(max_eig(RMat(nested.particle[0])), 1.0 + 1e-12);
    EXPECT_THROW(spectral_measure(o, {{0.0, 2.0}, {1.0, 3.0}}), input_error);
}

TEST(Energies, GalitskiiMigdalAndDecomposition) {
    ExactOracle o = build_oracle(six_sites(), 2);
    EXPECT_LT(rel(galitskii_migdal(o), o.ground.energy), 1e-8);
    EXPECT_LT(rel(energy_decomposition(o), o.ground.energy), 1e-8);
}

TEST(Energies, FreeGalitskiiMigdalIsOrbitalSum) {
    RMat h = chain_h(6);
    RVec eps = sym_eigenvalues(h);
    ExactOracle o = free_oracle(h, 3);
    EXPECT_NEAR(galitskii_migdal(o), eps(0) + eps(1) + eps(2), 1e-10);
    EXPECT_NEAR(o.ground.energy, eps(0) + eps(1) + eps(2), 1e-10);
    EXPECT_THROW(galitskii_migdal(free_oracle(h, 1)), input_error);
}

TEST(Energies, GmLimitIsFinite) {
    const ExactOracle& o = reference_oracle();
    double d = gm_limit_diagnostic(o, 1e3);
    EXPECT_TRUE(std::isfinite(d));
    EXPECT_LT(d, 1e-2);
}

TEST(Chi, FluctuationOrthogonalToGround) {
    const ExactOracle& o = reference_oracle();
    EXPECT_LT(max_abs(RMat(o.ground.vector.transpose() * o.bmat)), 1e-12);
}

TEST(Chi, EvenNegativeAndIntegral) {
    const ExactOracle& o = reference_oracle();
    const Eigen::Index m = o.h0.rows();
    for (double w : {0.05, 1.0, 20.0}) {
        CMat a = exact_chi_sym(o, cplx(0.0, w));
        EXPECT_LT(max_abs(CMat(a - exact_chi_sym(o, cplx(0.0, -w)))), 1e-12);
        EXPECT_LT(max_abs(CMat(a - a.adjoint())), 1e-12);
        EXPECT_LE(max_eig(a), 1e-10);
    }
    GridPtr g = make_grid(256, o.window.e_plus - o.window.e_minus);
    NeutralExcitations ne = neutral_excitations(o);
    Rng rng(12);
    RVec f = random_vector(rng, m);
    double q = 0.0;
    for (std::size_t j = 0; j < g->size(); ++j) q += g->weights[j] * f.dot(exact_chi_sym(o, cplx(0.0, g->nodes[j])).real() * f);
    EXPECT_LT(rel(q, -2.0 * pi * (ne.x * o.coulomb_sqrt * f).squaredNorm()), 1e-4);
}

TEST(Johnson, ConstantProbeGivesZero) {
    const ExactOracle& o = reference_oracle();
    NeutralExcitations ne = neutral_excitations(o);
    RVec one = RVec::Ones(o.h0.rows());
    EXPECT_LT((ne.x * one).norm(), 1e-12);
    EXPECT_LT((bond_weak_form(o.h0, o.ground.gamma) * one).norm(), 1e-12);
    for (double w : {1.0, 100.0}) EXPECT_LT(std::abs(w * w * one.dot(neg_chi_values(ne, w) * one)), 1e-10);
}

TEST(Johnson, DecayAndLimit) {
    const Reference& r = Reference::get();
    SumRuleTable t = johnson_sum_rule(reference_oracle(), r.model, sum_rule_omegas(r.mf.gap), smooth_profile(r.model, 0),
                                      smooth_profile(r.model, 1));
    EXPECT_LT(std::abs(t.slope + 2.0) / 2.0, 0.2) << t.slope;
    EXPECT_LT(t.limit_rel, 1e-6);
    for (std::size_t i = 1; i < t.residuals.size(); ++i) EXPECT_LT(t.residuals[i], t.residuals[i - 1]);
}

TEST(Johnson, BondFormIsTheDoubleCommutator) {
    // independent check on a free chain: 2 B^T (H - E) B against the bond form
    RMat h = chain_h(5);
    ExactOracle o = free_oracle(h, 2);
    RMat hs = RMat(o.h_n.h_mat);
    hs.diagonal().array() -= o.ground.energy;
    RMat lim = 2.0 * o.bmat.transpose() * hs * o.bmat;
    EXPECT_LT(max_abs(RMat(lim - bond_weak_form(h, o.ground.gamma))), 1e-10);
}
