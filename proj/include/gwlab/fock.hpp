#ifndef GWLAB_FOCK_HPP
#define GWLAB_FOCK_HPP

// Exact diagonalization in fixed particle-number sectors of spinless fermions
// on the lattice, and the exact one-body Green's function, polarizability and
// sum rules built from it.

#include "core.hpp"
#include "frequency.hpp"
#include "model.hpp"

#include <Eigen/Sparse>

#include <bit>
#include <cstdint>
#include <limits>
#include <optional>

namespace gwlab {

using word_t = std::uint64_t;
using SpMat = Eigen::SparseMatrix<double>;

inline constexpr std::size_t default_basis_cap = 2000000;
inline constexpr Eigen::Index dense_cap = 4000;
inline constexpr double degeneracy_tol = 1e-9;

inline std::size_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::size_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
    return r;
}

struct FockSector {
    int m_sites = 0;
    int n_particles = 0;
    std::vector<word_t> basis;

    Eigen::Index dim() const { return static_cast<Eigen::Index>(basis.size()); }

    // position of a word, or -1
    Eigen::Index index(word_t w) const {
        auto it = std::lower_bound(basis.begin(), basis.end(), w);
        if (it == basis.end() || *it != w) return -1;
        return static_cast<Eigen::Index>(it - basis.begin());
    }
};

inline FockSector make_sector(int m, int n, std::size_t cap = default_basis_cap) {
    if (m < 1 || m > 64) throw size_error(cat("site count ", m, " outside [1, 64]"));
    FockSector s;
    s.m_sites = m;
    s.n_particles = n;
    if (n < 0 || n > m) return s;
    std::size_t d = binomial(m, n);
    if (d > cap) throw size_error(cat("sector C(", m, ",", n, ") = ", d, " exceeds basis cap ", cap));
    s.basis.reserve(d);
    if (n == 0) {
        s.basis.push_back(0);
        return s;
    }
    // Gosper's hack walks the n-subsets in ascending numeric order
    word_t w = (n == 64) ? ~word_t(0) : ((word_t(1) << n) - 1);
    for (std::size_t c = 0; c < d; ++c) {
        s.basis.push_back(w);
        if (c + 1 == d) break;
        word_t lo = w & (~w + 1);
        word_t r = w + lo;
        w = (((r ^ w) >> 2) / lo) | r;
    }
    return s;
}

namespace fermion {

// (-1)^(number of occupied sites below i)
inline double sign_below(word_t w, int i) {
    word_t mask = (i == 0) ? 0 : ((word_t(1) << i) - 1);
    return (std::popcount(w & mask) & 1) ? -1.0 : 1.0;
}

inline bool occupied(word_t w, int i) { return (w >> i) & 1u; }

// a_i |w>, returns false when the result vanishes
inline bool annihilate(word_t& w, int i, double& sign) {
    if (!occupied(w, i)) return false;
    sign *= sign_below(w, i);
    w ^= word_t(1) << i;
    return true;
}

inline bool create(word_t& w, int i, double& sign) {
    if (occupied(w, i)) return false;
    sign *= sign_below(w, i);
    w |= word_t(1) << i;
    return true;
}

} // namespace fermion

struct SectorHamiltonian {
    FockSector sector;
    SpMat h_mat;
};

// H = sum_ij h_ij a_i^+ a_j + 1/2 sum_{i != j} V_ij n_i n_j
inline SectorHamiltonian build_sector(const RMat& h, const RMat& v, int n, std::size_t cap = default_basis_cap) {
    const int m = static_cast<int>(h.rows());
    SectorHamiltonian out;
    out.sector = make_sector(m, n, cap);
    const auto& basis = out.sector.basis;
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index col = 0; col < out.sector.dim(); ++col) {
        const word_t w = basis[col];
        double diag = 0.0;
        for (int i = 0; i < m; ++i) {
            if (!fermion::occupied(w, i)) continue;
            diag += h(i, i);
            for (int j = i + 1; j < m; ++j)
                if (fermion::occupied(w, j)) diag += v(i, j);
        }
        trip.emplace_back(col, col, diag);
        for (int j = 0; j < m; ++j) {
            if (!fermion::occupied(w, j)) continue;
            for (int i = 0; i < m; ++i) {
                if (i == j || h(i, j) == 0.0) continue;
                word_t w2 = w;
                double s = 1.0;
                if (!fermion::annihilate(w2, j, s) || !fermion::create(w2, i, s)) continue;
                trip.emplace_back(out.sector.index(w2), col, s * h(i, j));
            }
        }
    }
    out.h_mat.resize(out.sector.dim(), out.sector.dim());
    out.h_mat.setFromTriplets(trip.begin(), trip.end());
    return out;
}

inline SectorHamiltonian build_sector(const LatticeModel& model, int n, std::size_t cap = default_basis_cap) {
    return build_sector(model.h0, model.coulomb, n, cap);
}

// ---- one-body operators between sectors ---------------------------------

// matrix of a_site^+ from sector `from` into sector `to`
inline SpMat creation_matrix(const FockSector& from, const FockSector& to, int site) {
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index c = 0; c < from.dim(); ++c) {
        word_t w = from.basis[c];
        double s = 1.0;
        if (fermion::create(w, site, s)) trip.emplace_back(to.index(w), c, s);
    }
    SpMat a(to.dim(), from.dim());
    a.setFromTriplets(trip.begin(), trip.end());
    return a;
}

inline SpMat annihilation_matrix(const FockSector& from, const FockSector& to, int site) {
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index c = 0; c < from.dim(); ++c) {
        word_t w = from.basis[c];
        double s = 1.0;
        if (fermion::annihilate(w, site, s)) trip.emplace_back(to.index(w), c, s);
    }
    SpMat a(to.dim(), from.dim());
    a.setFromTriplets(trip.begin(), trip.end());
    return a;
}

// ---- eigensolvers --------------------------------------------------------

struct LowSpectrum {
    RVec values;  // ascending
    RMat vectors; // columns
};

// Lanczos with full reorthogonalization for the lowest `nev` eigenpairs.
inline LowSpectrum lanczos_lowest(const SpMat& h, int nev, double tol = 1e-10, int max_steps = 600) {
    const Eigen::Index n = h.rows();
    const int kmax = static_cast<int>(std::min<Eigen::Index>(n, max_steps));
    RMat q(n, kmax);
    std::vector<double> alpha, beta;
    RVec v = RVec::Ones(n) + RVec::LinSpaced(n, 0.0, 1.0) * 1e-3; // deterministic start
    v.normalize();
    LowSpectrum out;
    for (int k = 0; k < kmax; ++k) {
        q.col(k) = v;
        RVec r = h * v;
        double a = v.dot(r);
        alpha.push_back(a);
        r -= q.leftCols(k + 1) * (q.leftCols(k + 1).transpose() * r);
        r -= q.leftCols(k + 1) * (q.leftCols(k + 1).transpose() * r);
        double b = r.norm();
        const int m = k + 1;
        if (m >= nev && (m % 10 == 0 || b < 1e-14 || m == kmax)) {
            RMat t = RMat::Zero(m, m);
            for (int i = 0; i < m; ++i) {
                t(i, i) = alpha[i];
                if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
            }
            Eigen::SelfAdjointEigenSolver<RMat> es(t);
            bool conv = true;
            for (int e = 0; e < nev; ++e)
                if (b * std::abs(es.eigenvectors()(m - 1, e)) > tol) conv = false;
            if (conv || b < 1e-14 || m == kmax) {
                out.values = es.eigenvalues().head(nev);
                out.vectors = q.leftCols(m) * es.eigenvectors().leftCols(nev);
                if (!conv && b >= 1e-14) throw error("Lanczos did not converge");
                return out;
            }
        }
        beta.push_back(b);
        v = r / b;
    }
    throw error("Lanczos did not converge");
}

inline LowSpectrum lowest_states(const SectorHamiltonian& h, int nev) {
    const Eigen::Index d = h.sector.dim();
    if (d <= dense_cap) {
        Eigen::SelfAdjointEigenSolver<RMat> es(RMat(h.h_mat));
        int k = static_cast<int>(std::min<Eigen::Index>(nev, d));
        return {es.eigenvalues().head(k), es.eigenvectors().leftCols(k)};
    }
    return lanczos_lowest(h.h_mat, nev);
}

// ---- ground state ----------------------------------------------------------

struct GroundStateData {
    int m_sites = 0;
    int n = 0;
    double weight = 1.0;
    double energy = 0.0;
    RVec vector;
    double degeneracy_gap = std::numeric_limits<double>::infinity();
    RMat gamma; // operator form, gamma_ij = <a_j^+ a_i>
    RVec rho;   // gamma_ii / w
    RMat rho2;  // kernel, 1/2 <n_i n_j> / w^2 for i != j
};

inline GroundStateData ground_state(const SectorHamiltonian& h, double w = 1.0) {
    const FockSector& sec = h.sector;
    if (sec.dim() < 1) throw input_error("empty sector");
    LowSpectrum low = lowest_states(h, 2);
    GroundStateData g;
    g.m_sites = sec.m_sites;
    g.n = sec.n_particles;
    g.weight = w;
    g.energy = low.values(0);
    g.vector = low.vectors.col(0);
    if (g.vector.sum() < 0) g.vector = -g.vector; // fix the global sign
    if (low.values.size() > 1) g.degeneracy_gap = low.values(1) - low.values(0);
    if (g.degeneracy_gap <= degeneracy_tol)
        throw degeneracy_error(cat("degenerate ground state in the N=", g.n, " sector: gap ", g.degeneracy_gap));

    const int m = sec.m_sites;
    g.gamma = RMat::Zero(m, m);
    g.rho2 = RMat::Zero(m, m);
    for (Eigen::Index c = 0; c < sec.dim(); ++c) {
        const word_t wd = sec.basis[c];
        const double pc = g.vector(c);
        if (pc == 0.0) continue;
        for (int i = 0; i < m; ++i) {
            if (!fermion::occupied(wd, i)) continue;
            g.gamma(i, i) += pc * pc;
            for (int j = 0; j < m; ++j) {
                if (j == i) continue;
                if (fermion::occupied(wd, j)) {
                    g.rho2(i, j) += 0.5 * pc * pc;
                    continue;
                }
                // <a_j^+ a_i> picks up the amplitude of a_j^+ a_i |wd>
                word_t w2 = wd;
                double s = 1.0;
                fermion::annihilate(w2, i, s);
                fermion::create(w2, j, s);
                g.gamma(i, j) += s * g.vector(sec.index(w2)) * pc;
            }
        }
    }
    g.gamma = 0.5 * (g.gamma + g.gamma.transpose()).eval();
    g.rho = g.gamma.diagonal() / w;
    g.rho2 /= (w * w);
    return g;
}

// ---- addition / removal maps -----------------------------------------------

struct ApmMaps {
    RMat a_plus_star; // columns a^+(e_i) Psi, dim(N+1) x M
    RMat a_minus;     // columns a(e_i) Psi,   dim(N-1) x M
};

inline RVec apply(const SpMat& op, const RVec& v) { return op * v; }

inline ApmMaps build_apm(const GroundStateData& g, const FockSector& sec_n, const FockSector& sec_minus,
                         const FockSector& sec_plus) {
    if (sec_n.m_sites != g.m_sites || sec_minus.m_sites != g.m_sites || sec_plus.m_sites != g.m_sites)
        throw shape_error("sector site counts disagree with the ground state");
    const int m = g.m_sites;
    ApmMaps a;
    a.a_plus_star = RMat::Zero(sec_plus.dim(), m);
    a.a_minus = RMat::Zero(sec_minus.dim(), m);
    for (int i = 0; i < m; ++i) {
        if (sec_plus.dim() > 0) a.a_plus_star.col(i) = creation_matrix(sec_n, sec_plus, i) * g.vector;
        if (sec_minus.dim() > 0) a.a_minus.col(i) = annihilation_matrix(sec_n, sec_minus, i) * g.vector;
    }
    return a;
}

struct ExcitationWindow {
    double e_minus = 0.0;
    double e_plus = 0.0;
    double mu = 0.0;
};

// Full-spectrum data of a sector (dense), used for spectral measures and
// closed-form resolvents.
struct SectorSpectrum {
    RVec values;
    RMat vectors;
};

inline SectorSpectrum full_spectrum(const SectorHamiltonian& h) {
    if (h.sector.dim() > dense_cap)
        throw size_error(cat("sector dimension ", h.sector.dim(), " too large for a dense eigensolve"));
    if (h.sector.dim() == 0) return {RVec(0), RMat(0, 0)};
    Eigen::SelfAdjointEigenSolver<RMat> es(RMat(h.h_mat));
    return {es.eigenvalues(), es.eigenvectors()};
}

// Everything the exact side needs for an N-electron model.
struct ExactOracle {
    int n = 0;
    double weight = 1.0;
    RMat h0;
    RMat coulomb;
    RMat coulomb_sqrt;
    SectorHamiltonian h_minus, h_n, h_plus;
    GroundStateData ground;
    double e_minus0 = 0.0; // E_{N-1}^0
    double e_plus0 = 0.0;  // E_{N+1}^0
    ExcitationWindow window;
    ApmMaps maps;
    bool dense = true;
    SectorSpectrum spec_minus, spec_n, spec_plus;
    RMat bmat; // columns (n_s - <n_s>) Psi projected off Psi
};

inline RMat fluctuation_map(const GroundStateData& g, const FockSector& sec) {
    const int m = g.m_sites;
    RMat b(sec.dim(), m);
    for (int s = 0; s < m; ++s) {
        const double mean = g.gamma(s, s);
        for (Eigen::Index c = 0; c < sec.dim(); ++c)
            b(c, s) = ((fermion::occupied(sec.basis[c], s) ? 1.0 : 0.0) - mean) * g.vector(c);
    }
    // numerical safeguard: remove any residual component along Psi
    RVec ov = b.transpose() * g.vector;
    b -= g.vector * ov.transpose();
    return b;
}

inline ExactOracle build_oracle(const RMat& h0, const RMat& v, const RMat& vsqrt, double w, int n,
                                std::size_t cap = default_basis_cap) {
    const int m = static_cast<int>(h0.rows());
    if (n < 1 || n >= m) throw input_error(cat("oracle needs 1 <= N < M, got N=", n));
    ExactOracle o;
    o.n = n;
    o.weight = w;
    o.h0 = h0;
    o.coulomb = v;
    o.coulomb_sqrt = vsqrt;
    o.h_n = build_sector(h0, v, n, cap);
    o.h_minus = build_sector(h0, v, n - 1, cap);
    o.h_plus = build_sector(h0, v, n + 1, cap);
    o.ground = ground_state(o.h_n, w);
    o.e_minus0 = lowest_states(o.h_minus, 1).values(0);
    o.e_plus0 = lowest_states(o.h_plus, 1).values(0);
    o.window.e_minus = o.ground.energy - o.e_minus0;
    o.window.e_plus = o.e_plus0 - o.ground.energy;
    if (!(o.window.e_minus < o.window.e_plus))
        throw domain_error(cat("convexity of the ground-state energies fails: E_N-E_{N-1}=", o.window.e_minus,
                               " >= E_{N+1}-E_N=", o.window.e_plus));
    o.window.mu = 0.5 * (o.window.e_minus + o.window.e_plus);
    o.maps = build_apm(o.ground, o.h_n.sector, o.h_minus.sector, o.h_plus.sector);
    o.bmat = fluctuation_map(o.ground, o.h_n.sector);
    o.dense = std::max({o.h_minus.sector.dim(), o.h_n.sector.dim(), o.h_plus.sector.dim()}) <= dense_cap;
    if (o.dense) {
        o.spec_minus = full_spectrum(o.h_minus);
        o.spec_n = full_spectrum(o.h_n);
        o.spec_plus = full_spectrum(o.h_plus);
    }
    return o;
}

inline ExactOracle build_oracle(const LatticeModel& model, int n, std::size_t cap = default_basis_cap) {
    return build_oracle(model.h0, model.coulomb, model.coulomb_sqrt, model.weight(), n, cap);
}

// ---- exact Green's function -------------------------------------------------

// Particle part as a causal spectral representation: poles E_{N+1,k} - E_N.
inline SpectralRep particle_rep(const ExactOracle& o) {
    if (!o.dense) throw size_error("spectral representation needs dense sectors");
    SpectralRep r;
    r.side = Side::causal;
    RMat proj = o.spec_plus.vectors.transpose() * o.maps.a_plus_star; // rows: <k| a^+(e_i) Psi>
    for (Eigen::Index k = 0; k < proj.rows(); ++k) {
        r.poles.push_back(o.spec_plus.values(k) - o.ground.energy);
        RVec c = proj.row(k).transpose();
        r.weight_mats.push_back((c * c.transpose()).cast<cplx>());
    }
    return r;
}

// Hole part: poles E_N - E_{N-1,k}.
inline SpectralRep hole_rep(const ExactOracle& o) {
    if (!o.dense) throw size_error("spectral representation needs dense sectors");
    SpectralRep r;
    r.side = Side::anti_causal;
    RMat proj = o.spec_minus.vectors.transpose() * o.maps.a_minus;
    for (Eigen::Index k = 0; k < proj.rows(); ++k) {
        r.poles.push_back(o.ground.energy - o.spec_minus.values(k));
        RVec c = proj.row(k).transpose();
        r.weight_mats.push_back((c * c.transpose()).cast<cplx>());
    }
    return r;
}

// shifted solve: a^T (shift + s H)^{-1} a
inline CMat shifted_form(const SpMat& h, cplx shift, double s, const RMat& a) {
    using CSp = Eigen::SparseMatrix<cplx>;
    CSp k = (s * h).cast<cplx>();
    CSp id(h.rows(), h.cols());
    id.setIdentity();
    k += shift * id;
    Eigen::SparseLU<CSp> lu;
    lu.compute(k);
    if (lu.info() != Eigen::Success) throw pole_error("shifted factorization failed");
    CMat x = lu.solve(a.cast<cplx>());
    double res = max_abs(CMat(k * x - a.cast<cplx>()));
    if (!(res < 1e-9 * std::max(1.0, max_abs(a)))) throw pole_error(cat("shifted solve residual ", res));
    return a.transpose().cast<cplx>() * x;
}

enum class GreenPart { full, particle, hole };

// G(z) = A+ (z - (H_{N+1} - E))^{-1} A+* + A-* (z - (E - H_{N-1}))^{-1} A-
inline CMat exact_green(const ExactOracle& o, cplx z, GreenPart part = GreenPart::full, bool force_sparse = false) {
    const int m = static_cast<int>(o.h0.rows());
    CMat g = CMat::Zero(m, m);
    const double e = o.ground.energy;
    if (o.dense && !force_sparse) {
        if (part != GreenPart::hole && o.spec_plus.values.size() > 0) {
            RMat p = o.spec_plus.vectors.transpose() * o.maps.a_plus_star;
            CVec d(p.rows());
            for (Eigen::Index k = 0; k < p.rows(); ++k) {
                cplx den = z - (o.spec_plus.values(k) - e);
                if (std::abs(den) < 1e-12) throw pole_error(cat("z=", z, " on a particle excitation"));
                d(k) = 1.0 / den;
            }
            g += p.transpose().cast<cplx>() * d.asDiagonal() * p.cast<cplx>();
        }
        if (part != GreenPart::particle && o.spec_minus.values.size() > 0) {
            RMat p = o.spec_minus.vectors.transpose() * o.maps.a_minus;
            CVec d(p.rows());
            for (Eigen::Index k = 0; k < p.rows(); ++k) {
                cplx den = z - (e - o.spec_minus.values(k));
                if (std::abs(den) < 1e-12) throw pole_error(cat("z=", z, " on a hole excitation"));
                d(k) = 1.0 / den;
            }
            g += p.transpose().cast<cplx>() * d.asDiagonal() * p.cast<cplx>();
        }
        return g;
    }
    if (part != GreenPart::hole && o.h_plus.sector.dim() > 0)
        g += shifted_form(o.h_plus.h_mat, z + e, -1.0, o.maps.a_plus_star);
    if (part != GreenPart::particle && o.h_minus.sector.dim() > 0)
        g += shifted_form(o.h_minus.h_mat, z - e, 1.0, o.maps.a_minus);
    return g;
}

// ---- spectral measures -------------------------------------------------------

struct Bin {
    double lo, hi; // [lo, hi)
};

struct SpectralMeasures {
    std::vector<RMat> particle;
    std::vector<RMat> hole;
};

inline SpectralMeasures spectral_measure(const ExactOracle& o, const std::vector<Bin>& bins) {
    for (std::size_t a = 0; a < bins.size(); ++a)
        for (std::size_t b = a + 1; b < bins.size(); ++b)
            if (bins[a].lo < bins[b].hi && bins[b].lo < bins[a].hi) throw input_error("bins overlap");
    if (!o.dense) throw size_error("spectral measures need dense sectors");
    const int m = static_cast<int>(o.h0.rows());
    SpectralMeasures out;
    RMat pp = o.spec_plus.vectors.transpose() * o.maps.a_plus_star;
    RMat ph = o.spec_minus.vectors.transpose() * o.maps.a_minus;
    for (const Bin& b : bins) {
        RMat ap = RMat::Zero(m, m), ah = RMat::Zero(m, m);
        for (Eigen::Index k = 0; k < pp.rows(); ++k) {
            double lam = o.spec_plus.values(k) - o.ground.energy;
            if (lam >= b.lo && lam < b.hi) ap += pp.row(k).transpose() * pp.row(k);
        }
        for (Eigen::Index k = 0; k < ph.rows(); ++k) {
            double lam = o.ground.energy - o.spec_minus.values(k);
            if (lam >= b.lo && lam < b.hi) ah += ph.row(k).transpose() * ph.row(k);
        }
        out.particle.push_back(ap);
        out.hole.push_back(ah);
    }
    return out;
}

// ---- polarizability -------------------------------------------------------------

struct NeutralExcitations {
    RVec delta; // E_n - E_0 for n >= 1
    RMat x;     // row n: <n| B, in site-value coordinates
};

inline NeutralExcitations neutral_excitations(const ExactOracle& o) {
    if (!o.dense) throw size_error("neutral excitations need a dense N sector");
    const Eigen::Index d = o.spec_n.values.size();
    NeutralExcitations ne;
    ne.delta = o.spec_n.values.tail(d - 1).array() - o.ground.energy;
    ne.x = o.spec_n.vectors.rightCols(d - 1).transpose() * o.bmat;
    return ne;
}

// chi_sym(z) = -V^{1/2} B^T [2(H-E)/((H-E)^2 - z^2)] B V^{1/2}
inline CMat exact_chi_sym(const ExactOracle& o, cplx z) {
    NeutralExcitations ne = neutral_excitations(o);
    CVec f(ne.delta.size());
    for (Eigen::Index n = 0; n < f.size(); ++n) {
        cplx den = ne.delta(n) * ne.delta(n) - z * z;
        if (std::abs(den) < 1e-12) throw pole_error(cat("z=", z, " on a neutral excitation"));
        f(n) = 2.0 * ne.delta(n) / den;
    }
    CMat xv = (ne.x * o.coulomb_sqrt).cast<cplx>();
    return -(xv.transpose() * f.asDiagonal() * xv);
}

// ---- energies ---------------------------------------------------------------

inline double galitskii_migdal(const ExactOracle& o) {
    if (o.n < 2) throw input_error("Galitskii-Migdal needs N >= 2");
    const RMat& am = o.maps.a_minus;
    RMat hm = RMat(o.h_minus.h_mat);
    hm.diagonal().array() -= o.ground.energy;
    RMat t = -(am.transpose() * hm * am) + o.h0 * (am.transpose() * am);
    return 0.5 * t.trace();
}

inline double energy_decomposition(const ExactOracle& o) {
    const double w = o.weight;
    return (o.h0 * o.ground.gamma).trace() + (o.coulomb.cwiseProduct(o.ground.rho2)).sum() * w * w;
}

// omega^2 tr Re G_h(mu + i omega) against tr A-*(H_{N-1} + mu - E)A-; returns
// the relative difference at the given omega
inline double gm_limit_diagnostic(const ExactOracle& o, double omega) {
    const RMat& am = o.maps.a_minus;
    RMat hm = RMat(o.h_minus.h_mat);
    hm.diagonal().array() += o.window.mu - o.ground.energy;
    double lim = (am.transpose() * hm * am).trace();
    double val = omega * omega * exact_green(o, cplx(o.window.mu, omega), GreenPart::hole).trace().real();
    return std::abs(val - lim) / std::max(std::abs(lim), 1e-300);
}

// ---- lattice weak forms of -div(rho grad) ----------------------------------------

// Bond form: sum over bonds 2(-h_ij) gamma_ij (f_i - f_j)(g_i - g_j). This is
// the exact lattice double commutator <[F,[H,G]]>.
inline RMat bond_weak_form(const RMat& h, const RMat& gamma) {
    const Eigen::Index m = h.rows();
    RMat d = RMat::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j) {
            if (h(i, j) == 0.0) continue;
            double c = 2.0 * (-h(i, j)) * gamma(i, j);
            d(i, i) += c;
            d(j, j) += c;
            d(i, j) -= c;
            d(j, i) -= c;
        }
    return d;
}

// Site form: sum_i rho_i (grad f . grad g)_i h^dim with centered differences
// and one-sided stencils at the boundary.
inline RMat centered_weak_form(const LatticeModel& model, const RVec& rho) {
    const int m = model.m(), n = model.sites_per_axis;
    const double h = model.spacing;
    RMat d = RMat::Zero(m, m);
    int stride = 1;
    for (int a = 0; a < model.dim; ++a) {
        RMat grad = RMat::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            int c = (i / stride) % n;
            if (c == 0) {
                grad(i, i + stride) += 1.0 / h;
                grad(i, i) -= 1.0 / h;
            } else if (c == n - 1) {
                grad(i, i) += 1.0 / h;
                grad(i, i - stride) -= 1.0 / h;
            } else {
                grad(i, i + stride) += 0.5 / h;
                grad(i, i - stride) -= 0.5 / h;
            }
        }
        d += grad.transpose() * (rho * model.weight()).asDiagonal() * grad;
        stride *= n;
    }
    return d;
}

struct SumRuleTable {
    std::vector<double> omegas;
    std::vector<double> residuals;
    double slope = 0.0;
    RMat limit;          // omega -> infinity limit in site-value coordinates
    RMat weak;           // bond weak form
    double limit_rel = 0.0;
    double site_form_rel = 0.0; // centered-difference form, diagnostic
};

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// -chi(i omega) in site-value coordinates (the unsymmetrized response)
inline RMat neg_chi_values(const NeutralExcitations& ne, double omega) {
    RVec f = (2.0 * ne.delta.array() / (ne.delta.array().square() + omega * omega)).matrix();
    return ne.x.transpose() * f.asDiagonal() * ne.x;
}

inline SumRuleTable johnson_sum_rule(const ExactOracle& o, const LatticeModel& model, const std::vector<double>& omegas,
                                     const RVec& f, const RVec& g) {
    NeutralExcitations ne = neutral_excitations(o);
    SumRuleTable t;
    t.omegas = omegas;
    t.weak = bond_weak_form(o.h0, o.ground.gamma);
    RMat hs = RMat(o.h_n.h_mat);
    hs.diagonal().array() -= o.ground.energy;
    t.limit = 2.0 * o.bmat.transpose() * hs * o.bmat;
    t.limit_rel = max_abs(t.limit - t.weak) / std::max(max_abs(t.weak), 1e-300);
    RMat site = centered_weak_form(model, o.ground.rho);
    t.site_form_rel = max_abs(t.limit - site) / std::max(max_abs(t.limit), 1e-300);
    const double rhs = f.dot(t.weak * g);
    for (double w : omegas) {
        double lhs = w * w * f.dot(neg_chi_values(ne, w) * g);
        t.residuals.push_back(std::abs(lhs - rhs));
    }
    t.slope = loglog_slope(t.omegas, t.residuals);
    return t;
}

} // namespace gwlab

#endif
