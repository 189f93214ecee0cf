#ifndef GWLAB_FREQUENCY_HPP
#define GWLAB_FREQUENCY_HPP

// Imaginary-axis quadrature, matrix-valued frequency tracks, Laplace
// evaluation of spectral representations and the discrete Hilbert transform.

#include "core.hpp"

#include <fftw3.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <type_traits>
#include <vector>

namespace gwlab {

using std::numbers::pi;

struct FreqGrid {
    std::vector<double> nodes;   // omega_j, ascending, symmetric
    std::vector<double> weights; // positive
    std::vector<double> xs;      // Gauss-Legendre abscissae behind the nodes
    double scale = 1.0;          // L

    std::size_t size() const { return nodes.size(); }

    // inverse of omega = L x / (1 - x^2) on (-1, 1)
    double to_x(double omega) const { return 2.0 * omega / (scale + std::sqrt(scale * scale + 4.0 * omega * omega)); }
};

using GridPtr = std::shared_ptr<const FreqGrid>;

inline GridPtr make_grid(int k, double scale) {
    if (k < 8 || k % 2 != 0) throw input_error(cat("grid size must be even and >= 8, got ", k));
    if (!(scale > 0.0)) throw input_error("grid scale must be positive");
    auto g = std::make_shared<FreqGrid>();
    g->scale = scale;
    gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(k));
    std::vector<std::pair<double, double>> xw(k);
    for (int i = 0; i < k; ++i) gsl_integration_glfixed_point(-1.0, 1.0, i, &xw[i].first, &xw[i].second, t);
    gsl_integration_glfixed_table_free(t);
    std::sort(xw.begin(), xw.end());
    // enforce exact antisymmetry of the abscissae
    for (int i = 0; i < k / 2; ++i) {
        double x = 0.5 * (xw[k - 1 - i].first - xw[i].first);
        double w = 0.5 * (xw[k - 1 - i].second + xw[i].second);
        xw[i] = {-x, w};
        xw[k - 1 - i] = {x, w};
    }
    for (auto [x, w] : xw) {
        double d = 1.0 - x * x;
        g->xs.push_back(x);
        g->nodes.push_back(scale * x / d);
        g->weights.push_back(w * scale * (1.0 + x * x) / (d * d));
    }
    return g;
}

// ---- tracks --------------------------------------------------------------

using Evaluator = std::function<CMat(cplx)>;

// Samples F(nu + i omega_j) on a grid, optionally with an off-grid evaluator
// taking the full complex argument z.
struct MatrixTrack {
    GridPtr grid;
    std::vector<CMat> values;
    double axis_offset = 0.0;
    Evaluator eval;

    Eigen::Index dim() const { return values.empty() ? 0 : values.front().rows(); }

    CMat at(cplx z) const {
        if (!eval) throw input_error("track has no off-grid evaluator");
        return eval(z);
    }
};

inline MatrixTrack sample_track(GridPtr grid, double offset, Evaluator f) {
    MatrixTrack t;
    t.grid = grid;
    t.axis_offset = offset;
    t.values.resize(grid->size());
    parallel_for(grid->size(), [&](std::size_t j) { t.values[j] = f(cplx(offset, grid->nodes[j])); });
    t.eval = std::move(f);
    return t;
}

inline void check_track(const MatrixTrack& t) {
    if (!t.grid || t.values.size() != t.grid->size()) throw shape_error("track does not match its grid");
    for (const auto& v : t.values) {
        if (v.rows() != t.dim() || v.cols() != t.dim()) throw shape_error("non-uniform track dimensions");
        if (!v.allFinite()) throw domain_error("non-finite track entry");
    }
}

// sqrt(sum_j w_j |A_j|_F^2)
inline double l2_norm(const MatrixTrack& t) {
    double s = 0.0;
    for (std::size_t j = 0; j < t.values.size(); ++j) s += t.grid->weights[j] * t.values[j].squaredNorm();
    return std::sqrt(s);
}

inline double sup_norm(const MatrixTrack& t) {
    double s = 0.0;
    for (const auto& v : t.values) s = std::max(s, norm2(v));
    return s;
}

inline MatrixTrack track_diff(const MatrixTrack& a, const MatrixTrack& b) {
    if (a.grid != b.grid || a.values.size() != b.values.size()) throw shape_error("grid mismatch");
    MatrixTrack d;
    d.grid = a.grid;
    d.axis_offset = a.axis_offset;
    for (std::size_t j = 0; j < a.values.size(); ++j) d.values.push_back(a.values[j] - b.values[j]);
    return d;
}

using Combiner = std::function<CMat(const CMat&, const CMat&)>;

// out_j = (1/2pi) sum_l w_l comb(A(nu_A + i(omega_j + omega_l)), B(nu_B + i omega_l))
// The result samples the axis nu_A - nu_B.
inline MatrixTrack convolve_tracks(const MatrixTrack& a, const MatrixTrack& b, const Combiner& comb) {
    if (!a.grid || a.grid != b.grid) throw shape_error("convolve_tracks: grid mismatch");
    if (!a.eval) throw input_error("convolve_tracks: left track needs an off-grid evaluator");
    const FreqGrid& g = *a.grid;
    const std::size_t k = g.size();
    MatrixTrack out;
    out.grid = a.grid;
    out.axis_offset = a.axis_offset - b.axis_offset;
    out.values.resize(k);
    parallel_for(k, [&](std::size_t j) {
        CMat acc;
        for (std::size_t l = 0; l < k; ++l) {
            CMat term = comb(a.eval(cplx(a.axis_offset, g.nodes[j] + g.nodes[l])), b.values[l]);
            if (l == 0)
                acc = g.weights[l] * term;
            else
                acc += g.weights[l] * term;
        }
        out.values[j] = acc / (2.0 * pi);
    });
    return out;
}

// ---- spectral representations -------------------------------------------

enum class Side { causal, anti_causal };

struct SpectralRep {
    std::vector<double> poles;
    std::vector<CMat> weight_mats;
    Side side = Side::causal;
};

inline CMat laplace_eval(const SpectralRep& rep, cplx z) {
    if (rep.poles.empty()) throw input_error("empty spectral representation");
    CMat out = CMat::Zero(rep.weight_mats.front().rows(), rep.weight_mats.front().cols());
    for (std::size_t n = 0; n < rep.poles.size(); ++n) {
        cplx d = z - rep.poles[n];
        if (std::abs(d) < 1e-12) throw pole_error(cat("z=", z, " within 1e-12 of pole ", rep.poles[n]));
        out += rep.weight_mats[n] / d;
    }
    return out;
}

// ---- barycentric rational interpolation (Floater-Hormann) ----------------

class FloaterHormann {
public:
    FloaterHormann() = default;
    FloaterHormann(std::vector<double> x, int d) : x_(std::move(x)) {
        const int n = static_cast<int>(x_.size()) - 1;
        d = std::min(d, n);
        w_.assign(n + 1, 0.0);
        for (int k = 0; k <= n; ++k) {
            double s = 0.0;
            for (int i = std::max(0, k - d); i <= std::min(k, n - d); ++i) {
                double p = 1.0;
                for (int j = i; j <= i + d; ++j)
                    if (j != k) p /= std::abs(x_[k] - x_[j]);
                s += p;
            }
            w_[k] = ((k - d) % 2 == 0 ? 1.0 : -1.0) * s;
        }
    }

    // values must be aligned with the nodes
    template <class T>
    T operator()(double x, const std::vector<T>& values) const {
        double den = 0.0;
        T num = values.front() * 0.0;
        for (std::size_t k = 0; k < x_.size(); ++k) {
            double dx = x - x_[k];
            if (dx == 0.0) return values[k];
            double c = w_[k] / dx;
            num += c * values[k];
            den += c;
        }
        return num / den;
    }

    // values given by an iterator aligned with the first node
    template <class It>
    auto eval(double x, It values) const -> std::decay_t<decltype(*values)> {
        using T = std::decay_t<decltype(*values)>;
        double den = 0.0;
        T num = values[0] * 0.0;
        for (std::size_t k = 0; k < x_.size(); ++k) {
            double dx = x - x_[k];
            if (dx == 0.0) return values[k];
            double c = w_[k] / dx;
            num += c * values[k];
            den += c;
        }
        return num / den;
    }

    const std::vector<double>& nodes() const { return x_; }

private:
    std::vector<double> x_;
    std::vector<double> w_;
};

// ---- Hilbert transform ----------------------------------------------------

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// (1/pi) p.v. int f(w') / (w - w') dw' for samples on a uniform grid. The
// window is zero-padded to pad * n points (rounded up to a power of two) and
// the transform is applied as multiplication by -i sgn(t) in the conjugate
// domain.
inline std::vector<cplx> hilbert_transform(const std::vector<cplx>& f, int pad = 8) {
    const std::size_t n = f.size();
    if (n == 0) return {};
    std::size_t len = 1;
    while (len < n * static_cast<std::size_t>(std::max(pad, 1))) len <<= 1;
    const std::size_t off = (len - n) / 2;
    fftw_complex* buf = fftw_alloc_complex(len);
    fftw_plan fwd, bwd;
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fwd = fftw_plan_dft_1d(static_cast<int>(len), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_1d(static_cast<int>(len), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    for (std::size_t i = 0; i < len; ++i) buf[i][0] = buf[i][1] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        buf[off + i][0] = f[i].real();
        buf[off + i][1] = f[i].imag();
    }
    fftw_execute(fwd);
    for (std::size_t k = 0; k < len; ++k) {
        double sgn = (k == 0 || k == len / 2) ? 0.0 : (k < len / 2 ? 1.0 : -1.0);
        // multiply by -i sgn
        double re = buf[k][0], im = buf[k][1];
        buf[k][0] = sgn * im;
        buf[k][1] = -sgn * re;
    }
    fftw_execute(bwd);
    std::vector<cplx> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = cplx(buf[off + i][0], buf[off + i][1]) / static_cast<double>(len);
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
    fftw_free(buf);
    return out;
}

inline void require_uniform(const std::vector<double>& omega) {
    if (omega.size() < 2) return;
    double h = omega[1] - omega[0];
    for (std::size_t i = 1; i < omega.size(); ++i)
        if (std::abs(omega[i] - omega[i - 1] - h) > 1e-9 * std::max(1.0, std::abs(h)))
            throw input_error("Hilbert transform requires a uniform grid");
}

inline std::vector<cplx> hilbert_transform(const std::vector<double>& omega, const std::vector<cplx>& f, int pad = 8) {
    require_uniform(omega);
    if (omega.size() != f.size()) throw shape_error("sample count does not match grid");
    return hilbert_transform(f, pad);
}

inline std::vector<double> uniform_window(double half_width, std::size_t n) {
    std::vector<double> w(n);
    double h = 2.0 * half_width / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = -half_width + h * static_cast<double>(i);
    return w;
}

// max |Re f + H(Im f)| over the window; zero for boundary values of causal functions
inline double plemelj_residual(const std::vector<double>& omega, const std::vector<cplx>& f) {
    require_uniform(omega);
    std::vector<cplx> im(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) im[i] = f[i].imag();
    auto h = hilbert_transform(im);
    double r = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) r = std::max(r, std::abs(f[i].real() + h[i].real()));
    return r;
}

} // namespace gwlab

#endif
