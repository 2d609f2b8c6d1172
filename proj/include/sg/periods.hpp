// Cycle system, quasimomentum differential, and the topological charge density.
//
// a-cycles: for k <= m a nested rectangle on sheet G_+ crossing the real axis
// once inside gap k and once on the positive axis; for j > m the covering of
// an arc joining the conjugate pair E_{2j-1}, E_{2j} through an ordered
// crossing kappa_j on the positive axis. b-cycles (k <= m) are the ovals over
// the gaps, oriented by increasing lambda on G_+; their periods reduce to
// 2 * eps_k * (gap integral), where eps_k is the G_+ branch sign on the gap.
//
// dp = N(lambda) dlambda / (lambda sqrt R) with numerator degree g+1. The
// double-pole normalization pins a_{g+1} = 1/8 and a_0 = sqrt(prod E_j)/8;
// the remaining coefficients solve the zero-a-period linear system.
//
// n_bar = sum_{k<=m} (-1)^{k-1} s_k U^k. The paper's statement carries an
// extra 1/2 that contradicts its own lemma chain; the winding oracle in the
// dynamics module confirms the normalization used here.

#ifndef SG_PERIODS_HPP
#define SG_PERIODS_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <vector>

#include "sg/admissibility.hpp"
#include "sg/curve.hpp"
#include "sg/quadrature.hpp"

namespace sg {

struct CycleBasis {
    // closed polylines for k = 1..m, starting on the positive axis (sheet G_+)
    std::vector<std::vector<cplx>> rect_a;
    // per complex pair j = m+1..g: open polylines from (kappa_j, 0) to the
    // branch points E_{2j-1} (upper) and E_{2j} (lower)
    std::vector<std::vector<cplx>> arc_upper;
    std::vector<std::vector<cplx>> arc_lower;
    std::vector<double> kappa;     // ordered crossing points, size g-m
    std::vector<double> gap_sign;  // eps_k = sign of sqrt(R) on gap k on G_+, size m
    double clearance = 0.0;
};

namespace detail {

inline void require_clear(const SpectralCurve& curve, const std::vector<cplx>& pts,
                          double clearance, const cplx* exempt_branch = nullptr) {
    std::vector<cplx> branch = curve.branch_points();
    branch.emplace_back(0.0, 0.0);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        for (const cplx& e : branch) {
            if (exempt_branch && std::abs(e - *exempt_branch) < 1e-14) continue;
            if (segment_point_distance(pts[i], pts[i + 1], e) < clearance)
                throw GeometryFailure("cycle path comes within clearance of a branch point");
        }
    }
}

}  // namespace detail

inline CycleBasis cycle_paths(const SpectralCurve& curve) {
    const int g = curve.genus();
    const int m = curve.negative_pairs();
    const double s = curve.scale();
    const auto& E = curve.branch_points();

    CycleBasis basis;
    basis.clearance = 1e-3 * s;

    double b_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 2 * static_cast<std::size_t>(m); j < E.size(); j += 2)
        b_min = std::min(b_min, E[j].imag());
    const bool has_complex = g > m;

    // nested rectangles: heights below every complex branch point, widths
    // increasing with k so the contours do not intersect each other
    const double h_top = has_complex ? 0.4 * b_min : 0.5 * s;
    if (h_top < basis.clearance)
        throw GeometryFailure("complex branch points too close to the real axis for routing");
    for (int k = 1; k <= m; ++k) {
        const auto [lo, hi] = curve.gap(k);
        const double xk = 0.5 * (lo + hi);
        if (0.5 * (hi - lo) < basis.clearance)
            throw GeometryFailure("gap too narrow for an a-cycle crossing");
        const double h = h_top * (0.45 + 0.55 * k / std::max(m, 1));
        const double xp = s * (0.55 + 0.25 * k / std::max(m, 1));
        const std::vector<cplx> rect = {{xp, 0.0}, {xp, h},   {xk, h},  {xk, 0.0},
                                        {xk, -h},  {xp, -h},  {xp, 0.0}};
        detail::require_clear(curve, rect, basis.clearance);
        basis.rect_a.push_back(rect);
        basis.gap_sign.push_back(mu_on_plus_sheet(curve, {xk, 0.0}).real() > 0.0 ? 1.0 : -1.0);
    }

    // arcs for complex pairs, ordered by (Re, Im); suffix-min heights keep each
    // horizontal run below the cuts it passes under
    double y_prev = 0.0;
    for (int j = m; j < g; ++j) {
        const cplx Eu = E[2 * static_cast<std::size_t>(j)];
        double suffix_min = Eu.imag();
        for (int l = j + 1; l < g; ++l)
            suffix_min = std::min(suffix_min, E[2 * static_cast<std::size_t>(l)].imag());
        const double y_low = std::max(has_complex && m > 0 ? 1.3 * h_top : 2.0 * basis.clearance,
                                      y_prev * 1.08);
        const double y = std::max(y_low, 0.5 * suffix_min);
        if (y > 0.85 * suffix_min)
            throw GeometryFailure("cannot schedule arc heights between the vertical cuts");
        y_prev = y;
        const double kappa = s * (1.15 + 0.15 * (j - m + 1));
        basis.kappa.push_back(kappa);

        const std::vector<cplx> up = {{kappa, 0.0}, {kappa, y}, {Eu.real(), y}, Eu};
        const std::vector<cplx> dn = {{kappa, 0.0}, {kappa, -y}, {Eu.real(), -y}, std::conj(Eu)};
        detail::require_clear(curve, up, basis.clearance, &Eu);
        const cplx El = std::conj(Eu);
        detail::require_clear(curve, dn, basis.clearance, &El);
        basis.arc_upper.push_back(up);
        basis.arc_lower.push_back(dn);
    }
    return basis;
}

// Signed crossings of a closed polyline with the real interval (lo, hi):
// descending crossings count +1 (the G_+ lift against the b-oval orientation).
// The polyline must be closed (front == back) and may touch the axis only at
// isolated vertices.
inline int intersection_with_gap(const std::vector<cplx>& poly, double lo, double hi) {
    const std::size_t N = poly.size() - 1;  // distinct vertices
    auto im = [&](std::size_t i) { return poly[i % N].imag(); };
    int count = 0;
    for (std::size_t i = 0; i < N; ++i) {
        const cplx p = poly[i % N], q = poly[(i + 1) % N];
        if (p.imag() > 0.0 && q.imag() < 0.0) {
            const double x = p.real() + (q.real() - p.real()) * p.imag() / (p.imag() - q.imag());
            if (x > lo && x < hi) ++count;
        } else if (p.imag() < 0.0 && q.imag() > 0.0) {
            const double x = p.real() + (q.real() - p.real()) * (-p.imag()) / (q.imag() - p.imag());
            if (x > lo && x < hi) --count;
        } else if (q.imag() == 0.0 && p.imag() != 0.0 && q.real() > lo && q.real() < hi) {
            // crossing exactly at a vertex: find the departure side
            std::size_t j = i + 2;
            while (j < i + 2 + N && im(j) == 0.0) ++j;
            const double after = im(j);
            if (p.imag() > 0.0 && after < 0.0) ++count;
            if (p.imag() < 0.0 && after > 0.0) --count;
        }
    }
    return count;
}

struct QuasimomentumDifferential {
    std::vector<double> numerator;  // a_0 .. a_{g+1}
    double max_a_residual = 0.0;    // re-integrated with an independent rule
    double max_imag_coeff = 0.0;

    cplx eval_numerator(cplx lam) const {
        cplx v = 0.0;
        for (auto it = numerator.rbegin(); it != numerator.rend(); ++it) v = v * lam + *it;
        return v;
    }
};

namespace detail {

// all monomial periods lambda^j dlambda/(lambda sqrt R), j = 0..degmax, over
// one a-cycle of the basis
inline std::vector<cplx> a_cycle_monomials(const SpectralCurve& curve, const CycleBasis& basis,
                                           int cycle_index, int degmax,
                                           const QuadratureControl& ctl) {
    const std::size_t k = static_cast<std::size_t>(degmax) + 1;
    const VectorIntegrand f = [&](cplx lam, cplx mu, std::span<cplx> out) {
        cplx p = 1.0 / (lam * mu);
        for (std::size_t j = 0; j < k; ++j) {
            out[j] = p;
            p *= lam;
        }
    };
    const int m = curve.negative_pairs();
    if (cycle_index < m) {
        const auto& rect = basis.rect_a[static_cast<std::size_t>(cycle_index)];
        const cplx mu0 = std::sqrt(curve.eval_R(rect[0]));  // positive axis, G_+
        PathEval ev = integrate_polyline(curve, k, f, rect, mu0, ctl);
        if (std::abs(ev.mu_end - mu0) > 1e-6 * std::abs(mu0))
            throw LostBranch("a-cycle contour did not close on the surface");
        return ev.value;
    }
    const std::size_t aj = static_cast<std::size_t>(cycle_index - m);
    auto leg = [&](const std::vector<cplx>& arc) {
        const cplx mu0 = std::sqrt(curve.eval_R(arc[0]));
        const std::span<const cplx> head(arc.data(), arc.size() - 1);
        PathEval ev = integrate_polyline(curve, k, f, head, mu0, ctl);
        const auto numer = [&](cplx lam, std::span<cplx> out) {
            cplx p = 1.0;
            for (std::size_t j = 0; j < k; ++j) {
                out[j] = p;
                p *= lam;
            }
        };
        const std::vector<cplx> tail = sqrt_endpoint_panel(curve, k, numer, arc.back(),
                                                           arc[arc.size() - 2], ev.mu_end);
        for (std::size_t j = 0; j < k; ++j) ev.value[j] += tail[j];
        return ev.value;
    };
    std::vector<cplx> up = leg(basis.arc_upper[aj]);
    const std::vector<cplx> dn = leg(basis.arc_lower[aj]);
    for (std::size_t j = 0; j < k; ++j) up[j] = 2.0 * (dn[j] - up[j]);
    return up;
}

// -lambda * prod_{j not in pair k} (lambda - E_j): positive on gap k, real form
inline double gap_deflated_product(const SpectralCurve& curve, int k, double lam) {
    const auto& E = curve.branch_points();
    const int m = curve.negative_pairs();
    double p = -lam;
    for (int j = 0; j < 2 * m; ++j) {
        if (j == 2 * k - 2 || j == 2 * k - 1) continue;
        p *= lam - E[static_cast<std::size_t>(j)].real();
    }
    for (std::size_t j = 2 * static_cast<std::size_t>(m); j < E.size(); j += 2) {
        const double a = E[j].real(), b = E[j].imag();
        p *= (lam - a) * (lam - a) + b * b;
    }
    return p;
}

}  // namespace detail

// oint_{b_k} N dlambda/(lambda sqrt R) via the gap reduction with
// Gauss-Chebyshev nodes; exact for the sqrt endpoint behavior.
inline double b_period_gap(const SpectralCurve& curve, const std::vector<double>& numerator,
                           int k, double eps_k, double rel_tol = 1e-12) {
    const auto [lo, hi] = curve.gap(k);
    const double c = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
    auto eval_N = [&](double lam) {
        double v = 0.0;
        for (auto it = numerator.rbegin(); it != numerator.rend(); ++it) v = v * lam + *it;
        return v;
    };
    double prev = 0.0;
    for (int n = 32; n <= 4096; n *= 2) {
        double acc = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double lam = c + r * std::cos((2.0 * i - 1.0) * M_PI / (2.0 * n));
            const double q = detail::gap_deflated_product(curve, k, lam);
            acc += eval_N(lam) / (lam * std::sqrt(q));
        }
        acc *= M_PI / n;
        if (n > 32 && std::abs(acc - prev) <= rel_tol * std::abs(acc) + 1e-300)
            return 2.0 * eps_k * acc;
        prev = acc;
    }
    throw QuadratureStall("gap quadrature did not converge under node doubling");
}

inline QuasimomentumDifferential normalize_dp(const SpectralCurve& curve, const CycleBasis& basis,
                                              const QuadratureControl& ctl = {}) {
    const int g = curve.genus();
    const double a0 = curve.sqrt_branch_product() / 8.0;
    const double atop = 1.0 / 8.0;

    Eigen::MatrixXcd M(g, g);
    Eigen::VectorXcd rhs(g);
    std::vector<std::vector<cplx>> mono(static_cast<std::size_t>(g));
    for (int kk = 0; kk < g; ++kk) {
        mono[static_cast<std::size_t>(kk)] =
            detail::a_cycle_monomials(curve, basis, kk, g + 1, ctl);
        const auto& row = mono[static_cast<std::size_t>(kk)];
        for (int j = 1; j <= g; ++j) M(kk, j - 1) = row[static_cast<std::size_t>(j)];
        rhs(kk) = -(atop * row[static_cast<std::size_t>(g + 1)] + a0 * row[0]);
    }

    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double cond = svd.singularValues()(0) / svd.singularValues()(g - 1);
    if (!(cond < 1e12)) throw SingularPeriodMatrix("a-period matrix condition number " +
                                                   std::to_string(cond));
    const Eigen::VectorXcd sol = svd.solve(rhs);

    QuasimomentumDifferential dp;
    dp.numerator.resize(static_cast<std::size_t>(g) + 2);
    dp.numerator[0] = a0;
    dp.numerator[static_cast<std::size_t>(g) + 1] = atop;
    for (int j = 1; j <= g; ++j) {
        dp.numerator[static_cast<std::size_t>(j)] = sol(j - 1).real();
        dp.max_imag_coeff = std::max(dp.max_imag_coeff, std::abs(sol(j - 1).imag()));
    }

    // residual a-periods, re-integrated with a different node count so the
    // check is independent of the quadrature that built the system
    QuadratureControl ctl2 = ctl;
    ctl2.base_nodes = ctl.base_nodes + 8;
    for (int kk = 0; kk < g; ++kk) {
        const auto row = detail::a_cycle_monomials(curve, basis, kk, g + 1, ctl2);
        cplx acc = 0.0;
        for (std::size_t j = 0; j < dp.numerator.size(); ++j) acc += dp.numerator[j] * row[j];
        dp.max_a_residual = std::max(dp.max_a_residual, std::abs(acc));
    }
    return dp;
}

struct ChargeResult {
    std::vector<double> U;  // U^k for k = 1..m (b-periods of dp, real)
    double n_bar = 0.0;
    TopologicalType type;
    double max_a_residual = 0.0;
    double max_im_U = 0.0;
};

inline ChargeResult charge_density(const SpectralCurve& curve, const TopologicalType& type,
                                   const QuadratureControl& ctl = {}) {
    const int m = curve.negative_pairs();
    if (static_cast<int>(type.s.size()) != m)
        throw ValidationError("topological type length does not match the curve's m");
    ChargeResult out;
    out.type = type;
    if (m == 0) return out;  // empty sum: n_bar = 0 exactly

    const CycleBasis basis = cycle_paths(curve);
    const QuasimomentumDifferential dp = normalize_dp(curve, basis, ctl);
    out.max_a_residual = dp.max_a_residual;
    out.max_im_U = dp.max_imag_coeff;  // the gap reduction itself is exactly real
    for (int k = 1; k <= m; ++k) {
        const double oint =
            b_period_gap(curve, dp.numerator, k, basis.gap_sign[static_cast<std::size_t>(k - 1)]);
        out.U.push_back(-oint / (2.0 * M_PI));
    }
    for (int k = 1; k <= m; ++k)
        out.n_bar += ((k % 2 == 1) ? 1.0 : -1.0) * type.s[static_cast<std::size_t>(k - 1)] *
                     out.U[static_cast<std::size_t>(k - 1)];
    return out;
}

// generic closed-contour period for tests and diagnostics
inline cplx period_integral(const SpectralCurve& curve, const std::vector<double>& numerator,
                            const std::vector<cplx>& contour, cplx mu_start,
                            const QuadratureControl& ctl = {}) {
    const detail::VectorIntegrand f = [&](cplx lam, cplx mu, std::span<cplx> out) {
        cplx v = 0.0;
        for (auto it = numerator.rbegin(); it != numerator.rend(); ++it) v = v * lam + *it;
        out[0] = v / (lam * mu);
    };
    const detail::PathEval ev = detail::integrate_polyline(curve, 1, f, contour, mu_start, ctl);
    return ev.value[0];
}

}  // namespace sg

#endif
