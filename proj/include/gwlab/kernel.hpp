#ifndef GWLAB_KERNEL_HPP
#define GWLAB_KERNEL_HPP

// Kernel products on lattice kernels: C(r, r') = A(r, r') B(r', r).

#include "core.hpp"

namespace gwlab {

template <class Scalar = cplx>
struct Kernel {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Mat mat;
    double weight = 1.0; // h^dim, the composition measure

    static Kernel from_operator(const Mat& op, double w) { return {op / w, w}; }
    Mat to_operator() const { return mat * weight; }
};

namespace detail {
template <class S>
void check_pair(const Kernel<S>& a, const Kernel<S>& b) {
    if (a.mat.rows() != b.mat.rows() || a.mat.cols() != b.mat.cols() || a.mat.rows() != a.mat.cols())
        throw shape_error("kernel product of mismatched shapes");
    if (a.weight != b.weight) throw shape_error("kernel product of kernels with different weights");
}
} // namespace detail

template <class S>
Kernel<S> odot(const Kernel<S>& a, const Kernel<S>& b) {
    detail::check_pair(a, b);
    return {a.mat.cwiseProduct(b.mat.transpose()), a.weight};
}

// Coincides with odot on a finite lattice; kept as a separate name.
template <class S>
Kernel<S> odot_tilde(const Kernel<S>& a, const Kernel<S>& b) {
    return odot(a, b);
}

template <class S>
Kernel<S> adjoint(const Kernel<S>& a) {
    return {a.mat.adjoint(), a.weight};
}

template <class S>
double adjoint_identity_check(const Kernel<S>& a, const Kernel<S>& b) {
    return max_abs(odot(a, b).mat.adjoint() - odot(adjoint(a), adjoint(b)).mat);
}

// Same product expressed on operator matrices in the orthonormal site basis:
// (A o B^T) / w.
template <class DA, class DB>
auto odot_op(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b, double w) {
    return (a.cwiseProduct(b.transpose()) / w).eval();
}

// <f|C|g> with traces and compositions weighted by w; for C = A odot B this
// equals Tr(A g B conj(f)) with g, f acting as multiplication kernels.
template <class S>
S kernel_form(const Kernel<S>& c, const Eigen::Matrix<S, Eigen::Dynamic, 1>& f, const Eigen::Matrix<S, Eigen::Dynamic, 1>& g) {
    return c.weight * c.weight * (f.adjoint() * c.mat * g)(0, 0);
}

template <class S>
S trace_pairing(const Kernel<S>& a, const Kernel<S>& b, const Eigen::Matrix<S, Eigen::Dynamic, 1>& f, const Eigen::Matrix<S, Eigen::Dynamic, 1>& g) {
    // multiplication by g has kernel diag(g)/w, so Tr(A g B conj(f)) = w^2 sum_ij A_ij g_j B_ji conj(f_i)
    const double w = a.weight;
    S s = 0;
    for (Eigen::Index i = 0; i < a.mat.rows(); ++i)
        for (Eigen::Index j = 0; j < a.mat.cols(); ++j) s += a.mat(i, j) * g(j) * b.mat(j, i) * Eigen::numext::conj(f(i));
    return w * w * s;
}

} // namespace gwlab

#endif
