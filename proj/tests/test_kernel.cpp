#include "support.hpp"

using namespace gwtest;

namespace {
Kernel<cplx> ck(const CMat& m, double w = 1.0) { return {m, w}; }
Kernel<double> rk(const RMat& m, double w = 1.0) { return {m, w}; }
} // namespace

TEST(Odot, TwoByTwoExample) {
    RMat a(2, 2), b(2, 2), c(2, 2);
    a << 1, 2, 3, 4;
    b << 5, 6, 7, 8;
    c << 5, 14, 18, 32;
    EXPECT_EQ(odot(rk(a), rk(b)).mat, c);
}

TEST(Odot, IdentityPicksDiagonal) {
    Rng rng(1);
    CMat b = random_complex(rng, 5);
    CMat c = odot(ck(CMat::Identity(5, 5)), ck(b)).mat;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) EXPECT_EQ(c(i, j), i == j ? b(i, i) : cplx(0.0));
}

TEST(Odot, PsdPairIsPsd) {
    Rng rng(2);
    for (int t = 0; t < 20; ++t) {
        CMat a = random_psd(rng, 4), b = random_psd(rng, 4);
        CMat c = odot(ck(a), ck(b)).mat;
        EXPECT_LT(max_abs(CMat(c - c.adjoint())), 1e-14);
        EXPECT_GE(min_eig(c), -1e-12);
    }
}

TEST(Odot, RandomPositivitySweep) {
    Rng rng(20);
    std::uniform_int_distribution<int> sz(2, 16);
    for (int t = 0; t < 100; ++t) {
        const int n = sz(rng);
        CMat a = random_psd(rng, n), b = random_psd(rng, n);
        double scale = std::max(1.0, norm2(a) * norm2(b));
        EXPECT_GE(min_eig(odot(ck(a), ck(b)).mat) / scale, -1e-12);
    }
}

TEST(OdotTilde, CoincidesBitExact) {
    Rng rng(3);
    for (int t = 0; t < 10; ++t) {
        CMat a = random_complex(rng, 4), b = random_complex(rng, 4);
        EXPECT_EQ(odot_tilde(ck(a), ck(b)).mat, odot(ck(a), ck(b)).mat);
    }
    CMat zero = CMat::Zero(4, 4);
    EXPECT_EQ(odot_tilde(ck(zero), ck(random_complex(rng, 4))).mat, zero);
}

TEST(Adjoint, RandomComplexPairs) {
    Rng rng(4);
    for (int t = 0; t < 50; ++t) EXPECT_LT(adjoint_identity_check(ck(random_complex(rng, 4)), ck(random_complex(rng, 4))), 1e-14);
}

TEST(Adjoint, HermitianAndRealSymmetricInputs) {
    Rng rng(5);
    CMat x = random_complex(rng, 6), y = random_complex(rng, 6);
    CMat c = odot(ck(CMat(x + x.adjoint())), ck(CMat(y + y.adjoint()))).mat;
    EXPECT_LT(max_abs(CMat(c - c.adjoint())), 1e-14);
    RMat s = odot(rk(random_symmetric(rng, 6)), rk(random_symmetric(rng, 6))).mat;
    EXPECT_EQ(s, s.transpose());
}

TEST(Odot, Bilinear) {
    Rng rng(6);
    CMat a1 = random_complex(rng, 5), a2 = random_complex(rng, 5), b = random_complex(rng, 5);
    cplx s(0.7, -1.3);
    CMat lhs = odot(ck(CMat(s * a1 + a2)), ck(b)).mat;
    CMat rhs = s * odot(ck(a1), ck(b)).mat + odot(ck(a2), ck(b)).mat;
    EXPECT_LT(max_abs(CMat(lhs - rhs)), 1e-13);
    lhs = odot(ck(b), ck(CMat(s * a1 + a2))).mat;
    rhs = s * odot(ck(b), ck(a1)).mat + odot(ck(b), ck(a2)).mat;
    EXPECT_LT(max_abs(CMat(lhs - rhs)), 1e-13);
}

TEST(Odot, CommutesWithTransposition) {
    Rng rng(7);
    CMat a = random_complex(rng, 5), b = random_complex(rng, 5);
    EXPECT_EQ(CMat(odot(ck(a), ck(b)).mat.transpose()), odot(ck(CMat(a.transpose())), ck(CMat(b.transpose()))).mat);
}

TEST(Odot, DiagonalTracePairing) {
    Rng rng(8);
    CMat a = random_complex(rng, 7), b = random_complex(rng, 7);
    cplx expect = a.diagonal().cwiseProduct(b.diagonal()).sum();
    EXPECT_LT(std::abs(odot(ck(a), ck(b)).mat.trace() - expect), 1e-13);
}

TEST(Odot, QuadraticFormMatchesOperatorTrace) {
    // <f|A odot B|g> against Tr(A g B conj f) built from operator matrices
    Rng rng(9);
    const double w = 0.5;
    const int n = 6;
    Kernel<cplx> a = ck(random_complex(rng, n), w), b = ck(random_complex(rng, n), w);
    CVec f = random_complex(rng, n).col(0), g = random_complex(rng, n).col(1);
    cplx form = kernel_form(odot(a, b), f, g);
    EXPECT_LT(std::abs(form - trace_pairing(a, b, f, g)), 1e-12 * std::abs(form));
    CMat op = a.to_operator() * g.asDiagonal() * b.to_operator() * f.conjugate().asDiagonal();
    EXPECT_LT(std::abs(form - op.trace()), 1e-12 * std::abs(form));
}

TEST(Odot, OperatorFormMatchesKernelForm) {
    Rng rng(10);
    const double w = 0.25;
    CMat a = random_complex(rng, 4), b = random_complex(rng, 4);
    CMat viaKernel = odot(Kernel<cplx>::from_operator(a, w), Kernel<cplx>::from_operator(b, w)).to_operator();
    EXPECT_LT(max_abs(CMat(viaKernel - odot_op(a, b, w))), 1e-12);
}

TEST(Odot, MismatchRejected) {
    EXPECT_THROW(odot(ck(CMat::Zero(2, 2)), ck(CMat::Zero(3, 3))), shape_error);
    EXPECT_THROW(odot(ck(CMat::Zero(2, 2), 1.0), ck(CMat::Zero(2, 2), 0.5)), shape_error);
    EXPECT_THROW(odot(ck(CMat::Zero(2, 3)), ck(CMat::Zero(2, 3))), shape_error);
}

TEST(Odot, SchurNormBound) {
    Rng rng(11);
    for (int t = 0; t < 30; ++t) {
        CMat a = random_complex(rng, 8), b = random_psd(rng, 8);
        double cb = b.diagonal().real().maxCoeff();
        EXPECT_LE(norm2(odot(ck(a), ck(b)).mat), cb * norm2(a) * (1.0 + 1e-12));
    }
}
