// Quadrature for hyperelliptic differentials N(lambda) dlambda / (lambda sqrt R).
//
// Three rules cover every integral in the periods module:
//   - adaptive Gauss-Legendre panels along polylines, with sqrt(R) tracked by
//     analytic continuation (general a-cycle contours),
//   - Gauss-Chebyshev on gap ovals, which absorbs the square-root endpoint
//     singularities exactly,
//   - a sqrt-substitution panel for arc legs that terminate at a branch point.

#ifndef SG_QUADRATURE_HPP
#define SG_QUADRATURE_HPP

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "sg/curve.hpp"
#include "sg/polynomial.hpp"

namespace sg {

struct QuadratureControl {
    double rel_tol = 1e-10;
    int base_nodes = 16;   // panels compare base vs 2x base
    int max_panels = 6000;
};

namespace detail {

inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.resize(static_cast<std::size_t>(n));
    w.resize(static_cast<std::size_t>(n));
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[static_cast<std::size_t>(i)] = -z;
        x[static_cast<std::size_t>(n - 1 - i)] = z;
        w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[static_cast<std::size_t>(n - 1 - i)] = w[static_cast<std::size_t>(i)];
    }
}

// evaluates k integrand values at (lambda, mu)
using VectorIntegrand = std::function<void(cplx lam, cplx mu, std::span<cplx> out)>;

struct PanelEval {
    std::vector<cplx> value;
    cplx mu_end;
};

inline PanelEval panel_gl(const SpectralCurve& curve, std::size_t k, const VectorIntegrand& f,
                          cplx z0, cplx z1, cplx mu0, int n) {
    std::vector<double> xs, ws;
    gauss_legendre(n, xs, ws);
    PanelEval out;
    out.value.assign(k, cplx(0.0));
    std::vector<cplx> buf(k);
    cplx at = z0, mu = mu0;
    const cplx d = z1 - z0;
    for (int i = 0; i < n; ++i) {
        const cplx z = z0 + 0.5 * (xs[static_cast<std::size_t>(i)] + 1.0) * d;
        const cplx hop[2] = {at, z};
        mu = continue_mu(curve, hop, mu);
        at = z;
        f(z, mu, buf);
        for (std::size_t j = 0; j < k; ++j)
            out.value[j] += 0.5 * ws[static_cast<std::size_t>(i)] * buf[j] * d;
    }
    const cplx hop[2] = {at, z1};
    out.mu_end = continue_mu(curve, hop, mu);
    return out;
}

inline double vec_norm(std::span<const cplx> v) {
    double s = 0.0;
    for (const cplx& z : v) s = std::max(s, std::abs(z));
    return s;
}

struct AdaptiveState {
    int panels = 0;
};

inline PanelEval integrate_segment_adaptive(const SpectralCurve& curve, std::size_t k,
                                            const VectorIntegrand& f, cplx z0, cplx z1, cplx mu0,
                                            double abs_tol, const QuadratureControl& ctl,
                                            AdaptiveState& st, int depth = 0) {
    if (++st.panels > ctl.max_panels)
        throw QuadratureStall("panel budget exhausted before reaching tolerance");
    const PanelEval coarse = panel_gl(curve, k, f, z0, z1, mu0, ctl.base_nodes);
    PanelEval fine = panel_gl(curve, k, f, z0, z1, mu0, 2 * ctl.base_nodes);
    double err = 0.0;
    for (std::size_t j = 0; j < k; ++j) err = std::max(err, std::abs(fine.value[j] - coarse.value[j]));
    if (err <= abs_tol || depth >= 28) {
        if (depth >= 28 && err > abs_tol)
            throw QuadratureStall("panel bisection depth exhausted");
        return fine;
    }
    const cplx mid = z0 + 0.5 * (z1 - z0);
    const PanelEval left =
        integrate_segment_adaptive(curve, k, f, z0, mid, mu0, 0.5 * abs_tol, ctl, st, depth + 1);
    PanelEval right = integrate_segment_adaptive(curve, k, f, mid, z1, left.mu_end, 0.5 * abs_tol,
                                                 ctl, st, depth + 1);
    for (std::size_t j = 0; j < k; ++j) right.value[j] += left.value[j];
    return right;
}

struct PathEval {
    std::vector<cplx> value;
    cplx mu_end;
};

// Adaptive integration along a polyline. The absolute tolerance is derived
// from a non-adaptive first pass so that near-cancelling contours are still
// resolved relative to the mass they move around.
inline PathEval integrate_polyline(const SpectralCurve& curve, std::size_t k,
                                   const VectorIntegrand& f, std::span<const cplx> path, cplx mu0,
                                   const QuadratureControl& ctl) {
    PathEval out;
    out.value.assign(k, cplx(0.0));
    out.mu_end = mu0;
    if (path.size() < 2) return out;

    double mass = 0.0;
    {
        cplx mu = mu0;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            const PanelEval est = panel_gl(curve, k, f, path[i], path[i + 1], mu, 24);
            mass += vec_norm(est.value);
            mu = est.mu_end;
        }
    }
    const double abs_tol = ctl.rel_tol * std::max(mass, 1e-300);

    AdaptiveState st;
    cplx mu = mu0;
    const double total_len = [&] {
        double L = 0.0;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) L += std::abs(path[i + 1] - path[i]);
        return L;
    }();
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const double frac = std::abs(path[i + 1] - path[i]) / total_len;
        const PanelEval seg = integrate_segment_adaptive(curve, k, f, path[i], path[i + 1], mu,
                                                         abs_tol * std::max(frac, 0.05), ctl, st);
        for (std::size_t j = 0; j < k; ++j) out.value[j] += seg.value[j];
        mu = seg.mu_end;
    }
    out.mu_end = mu;
    return out;
}

// integral from v to the branch point E of N / (lambda mu) dlambda, where
// mu(v) = mu_v fixes the sheet; substitution lambda = E + (v - E) s^2 removes
// the endpoint singularity.
inline std::vector<cplx> sqrt_endpoint_panel(const SpectralCurve& curve, std::size_t k,
                                             const std::function<void(cplx, std::span<cplx>)>& numer,
                                             cplx E, cplx v, cplx mu_v, int n = 64) {
    // deflated product Rt = R / (lambda - E)
    auto Rt = [&](cplx lam) {
        cplx p = lam;
        for (const cplx& e : curve.branch_points())
            if (std::abs(e - E) > 1e-14 * curve.scale()) p *= lam - e;
        return p;
    };
    const cplx vmE = v - E;
    // h(s) = sqrt((v-E) Rt(lambda(s))), continued from h(1) = mu_v
    std::vector<double> xs, ws;
    gauss_legendre(n, xs, ws);
    std::vector<cplx> acc(k, cplx(0.0));
    std::vector<cplx> buf(k);
    cplx h_prev = mu_v;  // value at s = 1
    double s_prev = 1.0;
    // march from s=1 down through the nodes (descending order)
    for (int i = n - 1; i >= 0; --i) {
        const double s = 0.5 * (xs[static_cast<std::size_t>(i)] + 1.0);
        // refine continuation between s_prev and s in a few substeps
        const int sub = 4;
        cplx h = h_prev;
        for (int q = 1; q <= sub; ++q) {
            const double sq = s_prev + (s - s_prev) * q / sub;
            const cplx hv = std::sqrt(vmE * Rt(E + vmE * sq * sq));
            h = (std::abs(hv - h) <= std::abs(hv + h)) ? hv : -hv;
        }
        h_prev = h;
        s_prev = s;
        const cplx lam = E + vmE * s * s;
        numer(lam, buf);
        for (std::size_t j = 0; j < k; ++j)
            acc[j] += 0.5 * ws[static_cast<std::size_t>(i)] * buf[j] / (lam * h);
    }
    for (std::size_t j = 0; j < k; ++j) acc[j] *= -2.0 * vmE;
    return acc;
}

}  // namespace detail

}  // namespace sg

#endif
