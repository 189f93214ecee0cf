#ifndef GWLAB_CORE_HPP
#define GWLAB_CORE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <exception>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace gwlab {

using cplx = std::complex<double>;
using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

// Error hierarchy. The category prefix makes CLI messages self-describing.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct input_error : error {
    explicit input_error(const std::string& m) : error("input error: " + m) {}
};
struct construction_error : error {
    explicit construction_error(const std::string& m) : error("construction error: " + m) {}
};
struct size_error : error {
    explicit size_error(const std::string& m) : error("size error: " + m) {}
};
struct shape_error : error {
    explicit shape_error(const std::string& m) : error("shape error: " + m) {}
};
struct pole_error : error {
    explicit pole_error(const std::string& m) : error("pole proximity: " + m) {}
};
struct degeneracy_error : error {
    explicit degeneracy_error(const std::string& m) : error(m) {}
};
struct domain_error : error {
    explicit domain_error(const std::string& m) : error("domain error: " + m) {}
};
struct singular_error : error {
    explicit singular_error(const std::string& m) : error("singularity: " + m) {}
};
struct divergence_error : error {
    explicit divergence_error(const std::string& m) : error("divergence: " + m) {}
};
struct io_error : error {
    explicit io_error(const std::string& m) : error("i/o error: " + m) {}
};
struct parse_error : error {
    explicit parse_error(const std::string& m) : error(m) {}
};

template <class... T>
std::string cat(const T&... t) {
    std::ostringstream ss;
    ss.precision(17);
    (ss << ... << t);
    return ss.str();
}

// ---- small dense helpers -------------------------------------------------

template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline RVec sym_eigenvalues(const RMat& a) {
    Eigen::SelfAdjointEigenSolver<RMat> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

inline RVec herm_eigenvalues(const CMat& a) {
    CMat h = 0.5 * (a + a.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

inline double min_eig(const CMat& a) { return herm_eigenvalues(a).minCoeff(); }
inline double max_eig(const CMat& a) { return herm_eigenvalues(a).maxCoeff(); }
inline double min_eig(const RMat& a) { return sym_eigenvalues(0.5 * (a + a.transpose())).minCoeff(); }
inline double max_eig(const RMat& a) { return sym_eigenvalues(0.5 * (a + a.transpose())).maxCoeff(); }

// spectral norm
inline double norm2(const CMat& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<CMat> svd(a);
    return svd.singularValues()(0);
}
inline double norm2(const RMat& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<RMat> svd(a);
    return svd.singularValues()(0);
}

// symmetric square root of an SPD matrix; throws if an eigenvalue is below floor
inline RMat spd_sqrt(const RMat& a, double floor = 1e-12) {
    Eigen::SelfAdjointEigenSolver<RMat> es(a);
    const RVec& ev = es.eigenvalues();
    for (Eigen::Index k = 0; k < ev.size(); ++k)
        if (ev(k) <= floor)
            throw construction_error(cat("matrix is not positive definite, eigenvalue ", ev(k)));
    RMat u = es.eigenvectors();
    return u * ev.cwiseSqrt().asDiagonal() * u.transpose();
}

// ---- threading ------------------------------------------------------------

inline int& thread_count() {
    static int n = 1;
    return n;
}

inline void set_threads(int n) { thread_count() = std::max(1, n); }

// Static chunking over [0, n). Each index writes its own slot, so results do
// not depend on the thread count.
template <class F>
void parallel_for(std::size_t n, F&& f) {
    const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(nt);
    pool.reserve(nt);
    for (std::size_t t = 0; t < nt; ++t)
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += nt) f(i);
            } catch (...) {
                errs[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

} // namespace gwlab

#endif
