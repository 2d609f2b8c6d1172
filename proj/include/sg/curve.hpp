// Real hyperelliptic spectral curves mu^2 = R(lambda), R = lambda * prod(lambda - E_j).
//
// Reality layout after validation: E_1..E_2m real, strictly negative, strictly
// decreasing; the remaining entries come in conjugate pairs (E_{2k-1}, E_{2k})
// with Im E_{2k-1} > 0, ordered by (Re, Im). R is always evaluated as a
// product of linear factors; the expanded coefficient form cancels badly near
// branch points at higher genus.

#ifndef SG_CURVE_HPP
#define SG_CURVE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "sg/errors.hpp"

namespace sg {

using cplx = std::complex<double>;

inline constexpr double kCurvePointTol = 1e-10;  // relative on-curve residual

struct CurvePoint {
    cplx lambda;
    cplx mu;
};

enum class Involution { Sigma, Tau };

inline CurvePoint apply_involution(const CurvePoint& p, Involution which) {
    if (which == Involution::Sigma) return {p.lambda, -p.mu};
    return {std::conj(p.lambda), std::conj(p.mu)};
}

class SpectralCurve {
public:
    // Validates the reality constraints and canonicalizes the ordering.
    // E lists E_1..E_2g; the branch point E_0 = 0 is implicit.
    static SpectralCurve validate(std::vector<cplx> E) {
        if (E.empty() || E.size() % 2 != 0)
            throw UnpairedComplexPoint("branch point list must have even length 2g >= 2");
        const double scale = max_abs(E);
        const double imag_tol = 1e-12 * scale;

        std::vector<double> reals;
        std::vector<cplx> uppers;
        std::vector<cplx> lowers;
        for (const cplx& e : E) {
            if (!std::isfinite(e.real()) || !std::isfinite(e.imag()))
                throw DegenerateBranchPoints("non-finite branch point");
            if (std::abs(e.imag()) <= imag_tol) {
                if (e.real() >= -imag_tol)
                    throw NonRealNegativeViolation("real branch point " + to_string(e) +
                                                   " is not strictly negative");
                reals.push_back(e.real());
            } else if (e.imag() > 0.0) {
                uppers.push_back(e);
            } else {
                lowers.push_back(e);
            }
        }
        if (reals.size() % 2 != 0)
            throw UnpairedComplexPoint("odd number of real branch points besides E_0 = 0");
        if (uppers.size() != lowers.size())
            throw UnpairedComplexPoint("complex branch points do not split into conjugate pairs");

        std::sort(reals.begin(), reals.end(), std::greater<double>());
        auto by_re_im = [](const cplx& a, const cplx& b) {
            if (a.real() != b.real()) return a.real() < b.real();
            return a.imag() < b.imag();
        };
        std::sort(uppers.begin(), uppers.end(), by_re_im);
        std::sort(lowers.begin(), lowers.end(), by_re_im);

        std::vector<cplx> canon;
        canon.reserve(E.size());
        for (double r : reals) canon.emplace_back(r, 0.0);
        const double pair_tol = 1e-9 * scale;
        for (std::size_t i = 0; i < uppers.size(); ++i) {
            const cplx want = std::conj(uppers[i]);
            std::size_t best = lowers.size();
            double bd = pair_tol;
            for (std::size_t j = 0; j < lowers.size(); ++j) {
                const double d = std::abs(lowers[j] - want);
                if (d <= bd) {
                    bd = d;
                    best = j;
                }
            }
            if (best == lowers.size())
                throw UnpairedComplexPoint("no conjugate partner for " + to_string(uppers[i]));
            lowers.erase(lowers.begin() + static_cast<std::ptrdiff_t>(best));
            canon.push_back(uppers[i]);
            canon.push_back(std::conj(uppers[i]));  // exact pairing
        }

        // pairwise distinctness, including against E_0 = 0
        std::vector<cplx> all = canon;
        all.emplace_back(0.0, 0.0);
        for (std::size_t i = 0; i < all.size(); ++i)
            for (std::size_t j = i + 1; j < all.size(); ++j)
                if (std::abs(all[i] - all[j]) <= 1e-12 * scale)
                    throw DegenerateBranchPoints(to_string(all[i]) + " and " + to_string(all[j]) +
                                                 " are closer than the 1e-12 separation gate");

        return SpectralCurve(std::move(canon), static_cast<int>(reals.size() / 2));
    }

    int genus() const { return genus_; }
    int negative_pairs() const { return m_; }
    const std::vector<cplx>& branch_points() const { return E_; }
    double scale() const { return scale_; }

    // canonical positive sqrt of prod_{j>=1} E_j (the product is real > 0)
    double sqrt_branch_product() const { return sqrt_prod_; }
    double branch_product() const { return sqrt_prod_ * sqrt_prod_; }

    cplx eval_R(cplx lambda) const {
        cplx p = lambda;
        for (const cplx& e : E_) p *= lambda - e;
        return p;
    }

    cplx eval_R_deriv(cplx lambda) const {
        // product rule over the 2g+1 linear factors (E_0 = 0 included)
        cplx sum = 0.0;
        for (std::size_t skip = 0; skip <= E_.size(); ++skip) {
            cplx p = 1.0;
            if (skip != 0) p *= lambda;  // the (lambda - 0) factor unless it is skipped
            for (std::size_t j = 0; j < E_.size(); ++j)
                if (j + 1 != skip) p *= lambda - E_[j];
            sum += p;
        }
        return sum;
    }

    bool on_curve(const CurvePoint& p) const {
        const cplx r = eval_R(p.lambda);
        return std::abs(p.mu * p.mu - r) <= kCurvePointTol * (1.0 + std::abs(r));
    }

    // gap k = 1..m, the segment [E_2k, E_{2k-1}] on the negative axis
    std::pair<double, double> gap(int k) const {
        return {E_[2 * k - 1].real(), E_[2 * k - 2].real()};
    }

    // distance to the closed bands [E_1,0], [E_3,E_2], ..., (-inf, E_2m]
    double band_distance(cplx lambda) const {
        double d = segment_distance(lambda, E_[0].real(), 0.0);
        for (int k = 1; k < m_; ++k)
            d = std::min(d, segment_distance(lambda, E_[2 * k].real(), E_[2 * k - 1].real()));
        if (m_ > 0) {
            // half line (-inf, E_2m]
            const double right = E_[2 * m_ - 1].real();
            if (lambda.real() <= right)
                d = std::min(d, std::abs(lambda.imag()));
            else
                d = std::min(d, std::abs(lambda - cplx(right, 0.0)));
        }
        return d;
    }

private:
    SpectralCurve(std::vector<cplx> E, int m)
        : E_(std::move(E)), genus_(static_cast<int>(E_.size()) / 2), m_(m), scale_(max_abs(E_)) {
        double prod = 1.0;
        for (const cplx& e : E_) prod *= std::abs(e);  // |prod E_j| = prod E_j here
        sqrt_prod_ = std::sqrt(prod);
    }

    static double max_abs(const std::vector<cplx>& v) {
        double s = 0.0;
        for (const cplx& e : v) s = std::max(s, std::abs(e));
        return s > 0.0 ? s : 1.0;
    }

    static double segment_distance(cplx z, double a, double b) {
        if (a > b) std::swap(a, b);
        const double x = std::clamp(z.real(), a, b);
        return std::abs(z - cplx(x, 0.0));
    }

    static std::string to_string(const cplx& z) {
        return "(" + std::to_string(z.real()) + (z.imag() < 0 ? "" : "+") +
               std::to_string(z.imag()) + "i)";
    }

    std::vector<cplx> E_;
    int genus_;
    int m_;
    double scale_;
    double sqrt_prod_;
};

namespace detail {

inline double segment_point_distance(cplx a, cplx b, cplx p) {
    const cplx d = b - a;
    const double len2 = std::norm(d);
    if (len2 == 0.0) return std::abs(p - a);
    double t = ((p - a).real() * d.real() + (p - a).imag() * d.imag()) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(p - (a + t * d));
}

// One continuation step from (from, mu_from) to `to`, bisecting until the
// argument of R rotates by less than pi/2 per sub-step.
inline cplx continue_sqrt_segment(const SpectralCurve& curve, cplx from, cplx mu_from, cplx to,
                                  int depth = 0) {
    const cplx r_to = curve.eval_R(to);
    const cplx r_from = curve.eval_R(from);
    const bool safe = std::abs(std::arg(r_to / r_from)) < 1.5707963267948966 &&
                      std::abs(r_to) > 0.0 && std::abs(r_from) > 0.0;
    if (!safe) {
        if (depth > 48) throw LostBranch("argument subdivision did not converge");
        const cplx mid = from + 0.5 * (to - from);
        const cplx mu_mid = continue_sqrt_segment(curve, from, mu_from, mid, depth + 1);
        return continue_sqrt_segment(curve, mid, mu_mid, to, depth + 1);
    }
    const cplx s = std::sqrt(r_to);
    const double dp = std::abs(s - mu_from);
    const double dm = std::abs(-s - mu_from);
    if (std::abs(dp - dm) <= 1e-12 * (dp + dm))
        throw LostBranch("square-root candidates equidistant at lambda=" +
                         std::to_string(to.real()) + "+" + std::to_string(to.imag()) + "i");
    return dp < dm ? s : -s;
}

}  // namespace detail

// Analytic continuation of mu = sqrt(R) along a polyline in the lambda plane.
// (path[0], mu_start) must satisfy the curve-point invariant; the path must
// keep clear of branch points.
//
// Marching steps are capped by the distance to the nearest branch point so
// the argument of R rotates by less than pi/2 per step; an endpoint-only
// check would alias a full 2*pi winding to zero on long segments.
inline cplx continue_mu(const SpectralCurve& curve, std::span<const cplx> path, cplx mu_start) {
    if (path.empty()) return mu_start;
    if (!curve.on_curve({path[0], mu_start}))
        throw LostBranch("mu_start does not satisfy mu^2 = R(path[0])");
    const double guard = 1e-8 * curve.scale();
    std::vector<cplx> branch = curve.branch_points();
    branch.emplace_back(0.0, 0.0);
    auto min_dist = [&](cplx z) {
        double d = std::numeric_limits<double>::infinity();
        for (const cplx& e : branch) d = std::min(d, std::abs(z - e));
        return d;
    };
    // pi/2 / (number of linear factors), with margin
    const double step_factor = 1.2 / static_cast<double>(branch.size());

    cplx mu = mu_start;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        for (const cplx& e : branch)
            if (detail::segment_point_distance(path[i], path[i + 1], e) < guard)
                throw PathThroughBranchPoint("path segment passes within guard distance of " +
                                             std::to_string(e.real()));
        cplx at = path[i];
        const cplx end = path[i + 1];
        while (std::abs(end - at) > 0.0) {
            const double cap = step_factor * min_dist(at);
            const double remaining = std::abs(end - at);
            const cplx next = (remaining <= cap) ? end : at + (end - at) * (cap / remaining);
            mu = detail::continue_sqrt_segment(curve, at, mu, next);
            at = next;
        }
    }
    return mu;
}

inline cplx continue_mu(const SpectralCurve& curve, std::initializer_list<cplx> path,
                        cplx mu_start) {
    return continue_mu(curve, std::span<const cplx>(path.begin(), path.size()), mu_start);
}

namespace detail {

// distance from segment [a,b] to the vertical cut ray {(x0, y): sign(y0)*y >= |y0|}
inline double segment_ray_distance(cplx a, cplx b, double x0, double y0) {
    double d = std::numeric_limits<double>::infinity();
    const int n = 64;
    for (int i = 0; i <= n; ++i) {
        const cplx p = a + (b - a) * (static_cast<double>(i) / n);
        const double dy = (y0 > 0.0) ? std::max(0.0, y0 - p.imag()) : std::max(0.0, p.imag() - y0);
        d = std::min(d, std::hypot(p.real() - x0, dy));
    }
    return d;
}

}  // namespace detail

// mu on sheet G_+ at a point reached from the positive real axis along a
// corridor below the complex-pair cuts. G_+ is the sheet with mu > 0 on the
// positive axis, relative to the cut system of the periods module (bands on
// the real axis plus vertical rays from complex branch points).
inline cplx mu_on_plus_sheet(const SpectralCurve& curve, cplx lambda) {
    const double s = curve.scale();
    const cplx ref(1.5 * s, 0.0);
    const cplx mu_ref = std::sqrt(curve.eval_R(ref));  // R > 0 on the positive axis
    if (std::abs(lambda - ref) < 1e-14 * s) return mu_ref;

    const auto& E = curve.branch_points();
    const int m = curve.negative_pairs();
    double b_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 2 * static_cast<std::size_t>(m); j < E.size(); j += 2)
        b_min = std::min(b_min, E[j].imag());
    const double h0 = std::isfinite(b_min) ? 0.45 * b_min : 1.25 * s;

    const double side = (lambda.imag() < 0.0) ? -1.0 : 1.0;
    std::vector<cplx> path = {ref, ref + cplx(0.0, side * h0), cplx(lambda.real(), side * h0),
                              lambda};
    // the corridor must clear every cut; points outside its reach are not supported
    const double guard = 1e-6 * s;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        for (std::size_t j = 2 * static_cast<std::size_t>(m); j < E.size(); ++j)
            if (detail::segment_ray_distance(path[i], path[i + 1], E[j].real(), E[j].imag()) <
                guard)
                throw GeometryFailure("corridor to lambda crosses a complex-pair cut");
        if (i + 2 < path.size()) {  // all but the final descent stay off the bands
            if (std::min(curve.band_distance(path[i]), curve.band_distance(path[i + 1])) < guard &&
                std::abs(path[i].imag()) < guard)
                throw GeometryFailure("corridor to lambda touches a band cut");
        }
    }
    if (curve.band_distance(lambda) < 1e-9 * s)
        throw GeometryFailure("target lambda lies on a band cut");
    return continue_mu(curve, path, mu_ref);
}

}  // namespace sg

#endif
