// Admissibility of real polynomials P_{g-1} (equivalently of the differential
// Omega = (1 - lambda P / sqrt(R)) dlambda / (2 lambda)), classification of
// the 2^m topological types, and the polynomial <-> divisor correspondence.
//
// The working object is S(lambda) = lambda^2 P^2 - R and its deflation
// T = S / lambda (S always has a simple root at 0 since R'(0) > 0). P is
// admissible iff T <= 0 on the whole real axis, iff every real root of T has
// even multiplicity; the sign of P on the interior of gap k is the type s_k.

#ifndef SG_ADMISSIBILITY_HPP
#define SG_ADMISSIBILITY_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sg/curve.hpp"
#include "sg/polynomial.hpp"

namespace sg {

struct TopologicalType {
    std::vector<int> s;  // s_k = +1/-1, k = 1..m

    std::string word() const {
        std::string w;
        for (int v : s) w += (v > 0 ? '+' : '-');
        return w;
    }
    static TopologicalType from_word(const std::string& w, int m) {
        if (static_cast<int>(w.size()) != m)
            throw ValidationError("type word length " + std::to_string(w.size()) +
                                  " does not match m = " + std::to_string(m));
        TopologicalType t;
        for (char c : w) {
            if (c == '+')
                t.s.push_back(+1);
            else if (c == '-')
                t.s.push_back(-1);
            else
                throw ValidationError("type word may contain only '+' and '-'");
        }
        return t;
    }
    bool operator==(const TopologicalType& o) const { return s == o.s; }
};

struct Divisor {
    std::vector<CurvePoint> points;  // g points, order not semantic
};

struct AdmissibilityVerdict {
    bool admissible = false;
    bool boundary = false;  // admissible with a real tangency of S
    TopologicalType type;
    std::string violation;
    std::optional<double> violating_root;  // a real root of odd multiplicity, when found
};

namespace detail {

// prod_{j>=1} (lambda - E_j) in exact real arithmetic (real roots and
// conjugate-pair quadratics)
inline double branch_product_real(const SpectralCurve& curve, double lam) {
    const auto& E = curve.branch_points();
    const int m = curve.negative_pairs();
    double p = 1.0;
    for (int j = 0; j < 2 * m; ++j) p *= lam - E[static_cast<std::size_t>(j)].real();
    for (std::size_t j = 2 * static_cast<std::size_t>(m); j < E.size(); j += 2) {
        const double a = E[j].real(), b = E[j].imag();
        p *= (lam - a) * (lam - a) + b * b;
    }
    return p;
}

// real coefficients of prod_{j>=1} (lambda - E_j), low order first
inline std::vector<double> branch_product_coeffs(const SpectralCurve& curve) {
    const auto& E = curve.branch_points();
    const int m = curve.negative_pairs();
    std::vector<double> p = {1.0};
    auto mul = [&p](const std::vector<double>& f) {
        std::vector<double> r(p.size() + f.size() - 1, 0.0);
        for (std::size_t i = 0; i < p.size(); ++i)
            for (std::size_t j = 0; j < f.size(); ++j) r[i + j] += p[i] * f[j];
        p = std::move(r);
    };
    for (int j = 0; j < 2 * m; ++j) mul({-E[static_cast<std::size_t>(j)].real(), 1.0});
    for (std::size_t j = 2 * static_cast<std::size_t>(m); j < E.size(); j += 2) {
        const double a = E[j].real(), b = E[j].imag();
        mul({a * a + b * b, -2.0 * a, 1.0});
    }
    return p;
}

// T(lambda) = lambda P(lambda)^2 - prod(lambda - E_j); degree exactly 2g
inline std::vector<double> admissibility_poly(const SpectralCurve& curve,
                                              const RealPolynomial& P) {
    std::vector<double> T = branch_product_coeffs(curve);
    for (double& c : T) c = -c;
    if (!P.coeffs.empty()) {
        std::vector<double> sq(2 * P.coeffs.size() - 1, 0.0);
        for (std::size_t i = 0; i < P.coeffs.size(); ++i)
            for (std::size_t j = 0; j < P.coeffs.size(); ++j) sq[i + j] += P.coeffs[i] * P.coeffs[j];
        for (std::size_t i = 0; i < sq.size(); ++i) {
            if (i + 1 >= T.size()) throw ValidationError("polynomial degree exceeds g-1");
            T[i + 1] += sq[i];
        }
    }
    return T;
}

inline double eval_coeffs(const std::vector<double>& c, double x) {
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
    return v;
}

inline std::vector<double> deriv_coeffs(const std::vector<double>& c) {
    std::vector<double> d;
    for (std::size_t i = 1; i < c.size(); ++i) d.push_back(c[i] * double(i));
    return d;
}

struct RealCluster {
    double center;
    int size;
    double spread;
};

struct RootSplit {
    std::vector<RealCluster> real_clusters;
    std::vector<cplx> upper;  // Im > tol
    std::vector<cplx> lower;  // Im < -tol
};

inline RootSplit split_roots(const std::vector<cplx>& roots, double tol) {
    RootSplit out;
    std::vector<double> reals;
    for (const cplx& r : roots) {
        if (std::abs(r.imag()) <= tol)
            reals.push_back(r.real());
        else if (r.imag() > 0.0)
            out.upper.push_back(r);
        else
            out.lower.push_back(r);
    }
    std::sort(reals.begin(), reals.end());
    std::size_t i = 0;
    while (i < reals.size()) {
        std::size_t j = i + 1;
        while (j < reals.size() && reals[j] - reals[j - 1] <= tol) ++j;
        RealCluster c;
        c.size = static_cast<int>(j - i);
        c.center = 0.0;
        for (std::size_t k = i; k < j; ++k) c.center += reals[k];
        c.center /= c.size;
        c.spread = reals[j - 1] - reals[i];
        out.real_clusters.push_back(c);
        i = j;
    }
    return out;
}

// sign of P on the interior of gap k, taken at the sample of largest |P|
inline int gap_sign(const SpectralCurve& curve, const RealPolynomial& P, int k) {
    const auto [lo, hi] = curve.gap(k);
    double best = 0.0;
    for (double t : {0.3, 0.5, 0.7}) {
        const double v = P.eval(lo + t * (hi - lo));
        if (std::abs(v) > std::abs(best)) best = v;
    }
    return best >= 0.0 ? +1 : -1;
}

}  // namespace detail

inline AdmissibilityVerdict admissibility_check(const SpectralCurve& curve,
                                                const RealPolynomial& P) {
    AdmissibilityVerdict v;
    const std::vector<double> T = detail::admissibility_poly(curve, P);
    const std::vector<cplx> roots = detail::polynomial_roots(T, curve.scale());
    const double tol = 1e-7 * std::max(1.0, curve.scale());
    const detail::RootSplit split = detail::split_roots(roots, tol);

    const std::vector<double> T1 = detail::deriv_coeffs(T);
    const std::vector<double> T2 = detail::deriv_coeffs(T1);
    for (const auto& c : split.real_clusters) {
        if (c.size % 2 != 0) {
            v.admissible = false;
            v.violation = "real root of odd multiplicity near lambda = " + std::to_string(c.center);
            v.violating_root = c.center;
            return v;
        }
        v.boundary = true;
        if (c.size == 2) {
            // derivative confirmation of the double root: T' small relative to T''
            const double t1 = detail::eval_coeffs(T1, c.center);
            const double t2 = detail::eval_coeffs(T2, c.center);
            if (std::abs(t1) > std::abs(t2) * (c.spread + tol) + tol) {
                // cluster looks like two separated simple roots after all
                v.admissible = false;
                v.violation = "real root cluster near lambda = " + std::to_string(c.center) +
                              " fails the derivative multiplicity check";
                v.violating_root = c.center;
                return v;
            }
        }
    }

    // sign propagation sample: S < 0 at one positive lambda, i.e. T < 0 there
    const double sample = 2.0 * curve.scale() + 1.0;
    if (detail::eval_coeffs(T, sample) >= 0.0) {
        v.admissible = false;
        v.violation = "S is nonnegative at the positive-axis sample point";
        v.violating_root = sample;
        return v;
    }

    v.admissible = true;
    for (int k = 1; k <= curve.negative_pairs(); ++k)
        v.type.s.push_back(detail::gap_sign(curve, P, k));
    return v;
}

enum class PairSelector { PositiveImag, NegativeImag };

// Divisor of Eq. mu = lambda P(lambda) on the curve: picks one point from each
// of the g root pairs of S. Real even-multiplicity roots are tau-fixed points.
inline Divisor divisor_from_polynomial(const SpectralCurve& curve, const RealPolynomial& P,
                                       const std::vector<PairSelector>& per_pair) {
    const AdmissibilityVerdict verdict = admissibility_check(curve, P);
    if (!verdict.admissible) throw NotAdmissible(verdict.violation);

    std::vector<double> T = detail::admissibility_poly(curve, P);
    const std::vector<cplx> roots = detail::polynomial_roots(T, curve.scale());
    const double tol = 1e-7 * std::max(1.0, curve.scale());
    detail::RootSplit split = detail::split_roots(roots, tol);

    if (split.upper.size() != split.lower.size())
        throw PairingAmbiguity("complex roots do not split evenly across the real axis");

    Divisor D;
    const std::vector<double> T1 = detail::deriv_coeffs(T);
    const std::vector<double> T2 = detail::deriv_coeffs(T1);
    for (const auto& c : split.real_clusters) {
        if (c.size % 2 != 0) throw PairingAmbiguity("odd real cluster after admissibility passed");
        // refine the tangency point on T' (Newton), then place the tau-fixed point
        double x = c.center;
        for (int it = 0; it < 3; ++it) {
            const double d2 = detail::eval_coeffs(T2, x);
            if (d2 == 0.0) break;
            x -= detail::eval_coeffs(T1, x) / d2;
        }
        for (int r = 0; r < c.size / 2; ++r) D.points.push_back({cplx(x, 0.0), cplx(x * P.eval(x), 0.0)});
    }

    auto by_re_im = [](const cplx& a, const cplx& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    };
    std::sort(split.upper.begin(), split.upper.end(), by_re_im);
    std::vector<cplx> lower = split.lower;
    std::size_t pair_index = 0;
    for (const cplx& u : split.upper) {
        // conjugate partner
        std::size_t best = lower.size();
        double bd = 1e-5 * std::max(1.0, curve.scale());
        for (std::size_t j = 0; j < lower.size(); ++j) {
            const double d = std::abs(std::conj(lower[j]) - u);
            if (d < bd) {
                bd = d;
                best = j;
            }
        }
        if (best == lower.size())
            throw PairingAmbiguity("no conjugate partner for root " + std::to_string(u.real()));
        const cplx l = lower[best];
        lower.erase(lower.begin() + static_cast<std::ptrdiff_t>(best));
        const PairSelector sel =
            pair_index < per_pair.size() ? per_pair[pair_index] : PairSelector::PositiveImag;
        const cplx pick = (sel == PairSelector::PositiveImag) ? u : l;
        D.points.push_back({pick, pick * P.eval(pick)});
        ++pair_index;
    }

    for (const CurvePoint& p : D.points) {
        if (std::abs(p.lambda) <= 1e-9 * curve.scale())
            throw NotAdmissible("divisor point at lambda = 0");
        if (p.lambda.imag() == 0.0 && curve.band_distance(p.lambda) <= 0.0)
            throw NotAdmissible("divisor point inside a forbidden band");
    }
    return D;
}

inline Divisor divisor_from_polynomial(const SpectralCurve& curve, const RealPolynomial& P,
                                       PairSelector selector = PairSelector::PositiveImag) {
    const std::vector<PairSelector> all(static_cast<std::size_t>(curve.genus()), selector);
    return divisor_from_polynomial(curve, P, all);
}

// Unique interpolant of degree <= g-1 through (lambda_k, mu_k / lambda_k).
// Returns the real-part polynomial and the discarded imaginary residual.
inline std::pair<RealPolynomial, double> polynomial_from_divisor(const SpectralCurve& curve,
                                                                 const Divisor& D) {
    const std::size_t g = D.points.size();
    std::vector<cplx> xs, ys;
    for (const CurvePoint& p : D.points) {
        xs.push_back(p.lambda);
        ys.push_back(p.mu / p.lambda);
    }
    for (std::size_t i = 0; i < g; ++i)
        for (std::size_t j = i + 1; j < g; ++j)
            if (std::abs(xs[i] - xs[j]) <= 1e-9 * curve.scale())
                throw CoincidentProjections("divisor projections coincide near lambda = " +
                                            std::to_string(xs[i].real()));
    const std::vector<cplx> c = detail::interpolate_coeffs(xs, ys);
    RealPolynomial P;
    double residual = 0.0;
    for (const cplx& ci : c) {
        P.coeffs.push_back(ci.real());
        residual = std::max(residual, std::abs(ci.imag()));
    }
    return {P, residual};
}

struct ComponentWitness {
    TopologicalType type;
    RealPolynomial witness;
    bool boundary = false;
};

namespace detail {

struct WitnessObjective {
    const SpectralCurve* curve;
    std::vector<double> grid;     // real sample points for the hinge penalty
    std::vector<double> weights;  // normalization per sample
    std::vector<double> gap_mid;  // k = 1..m
    std::vector<double> gap_height;
    std::vector<int> signs;

    double operator()(const RealPolynomial& P) const {
        double pen = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double lam = grid[i];
            const double pv = P.eval(lam);
            const double t = lam * pv * pv - branch_product_real(*curve, lam);
            if (t > 0.0) {
                const double r = t / weights[i];
                pen += r * r;
            }
        }
        for (std::size_t k = 0; k < gap_mid.size(); ++k) {
            const double want = 0.2 * gap_height[k];
            const double have = signs[k] * P.eval(gap_mid[k]);
            if (have < want) {
                const double r = (want - have) / gap_height[k];
                pen += 10.0 * r * r;
            }
        }
        return pen;
    }
};

inline WitnessObjective make_witness_objective(const SpectralCurve& curve,
                                               const TopologicalType& type) {
    WitnessObjective obj;
    obj.curve = &curve;
    const double s = curve.scale();
    const int m = curve.negative_pairs();
    for (int k = 1; k <= m; ++k) {
        const auto [lo, hi] = curve.gap(k);
        double h = 0.0;
        for (int i = 1; i <= 33; ++i) {
            const double lam = lo + (hi - lo) * i / 34.0;
            const double R = lam * branch_product_real(curve, lam);
            if (R > 0.0) h = std::max(h, std::sqrt(R) / std::abs(lam));
            obj.grid.push_back(lam);
        }
        obj.gap_mid.push_back(0.5 * (lo + hi));
        obj.gap_height.push_back(h > 0.0 ? h : 1.0);
        obj.signs.push_back(type.s[static_cast<std::size_t>(k - 1)]);
    }
    for (int i = 0; i < 48; ++i)  // positive axis, log-spaced
        obj.grid.push_back(s * 1e-3 * std::pow(6.0e3, i / 47.0));
    for (int i = 1; i <= 24; ++i)  // negative axis out to 3 scale
        obj.grid.push_back(-3.0 * s * i / 24.0);
    obj.weights.reserve(obj.grid.size());
    for (double lam : obj.grid)
        obj.weights.push_back(1.0 + std::abs(branch_product_real(curve, lam)));
    return obj;
}

inline std::optional<RealPolynomial> witness_descent(const SpectralCurve& curve,
                                                     const TopologicalType& type,
                                                     WitnessObjective& obj, RealPolynomial P,
                                                     bool* boundary_flag) {
    const std::size_t g = static_cast<std::size_t>(curve.genus());
    P.coeffs.resize(g, 0.0);
    std::vector<double> step(g);
    for (std::size_t j = 0; j < g; ++j) step[j] = 0.25 * (1.0 + std::abs(P.coeffs[j]));

    double phi = obj(P);
    for (int sweep = 0; sweep < 200; ++sweep) {
        if (phi == 0.0) {
            const AdmissibilityVerdict v = admissibility_check(curve, P);
            if (v.admissible && v.type == type) {
                *boundary_flag = v.boundary;
                if (!v.boundary || sweep > 60) return P;
                // tangency: keep polishing with the tangency point penalized
                if (v.violating_root) {
                    obj.grid.push_back(*v.violating_root);
                    obj.weights.push_back(1.0 +
                                          std::abs(branch_product_real(curve, *v.violating_root)));
                }
            } else if (!v.admissible && v.violating_root) {
                // grid missed a violation; add it and keep descending
                obj.grid.push_back(*v.violating_root);
                obj.weights.push_back(1.0 +
                                      std::abs(branch_product_real(curve, *v.violating_root)));
                phi = obj(P);
                if (phi == 0.0) {
                    // exact check disagrees with a zero penalty; nudge the scale
                    for (double& c : P.coeffs) c *= 0.995;
                    phi = obj(P);
                }
            }
        }
        for (std::size_t j = 0; j < g; ++j) {
            RealPolynomial Q = P;
            Q.coeffs[j] = P.coeffs[j] + step[j];
            const double up = obj(Q);
            Q.coeffs[j] = P.coeffs[j] - step[j];
            const double dn = obj(Q);
            if (up < phi && up <= dn) {
                P.coeffs[j] += step[j];
                phi = up;
                step[j] *= 1.6;
            } else if (dn < phi) {
                P.coeffs[j] -= step[j];
                phi = dn;
                step[j] *= 1.6;
            } else {
                step[j] *= 0.45;
            }
        }
    }
    if (phi == 0.0) {
        const AdmissibilityVerdict v = admissibility_check(curve, P);
        if (v.admissible && v.type == type) {
            *boundary_flag = v.boundary;
            return P;
        }
    }
    return std::nullopt;
}

}  // namespace detail

// One admissible witness polynomial per topological type (Lemma: each of the
// 2^m components is nonempty). Deterministic given the curve.
inline std::vector<ComponentWitness> enumerate_components(const SpectralCurve& curve) {
    const int m = curve.negative_pairs();
    const int g = curve.genus();
    const double s = curve.scale();
    std::vector<ComponentWitness> out(static_cast<std::size_t>(1) << m);

    for (std::size_t mask = 0; mask < out.size(); ++mask) {
        TopologicalType type;
        for (int k = 0; k < m; ++k) type.s.push_back((mask >> k) & 1 ? -1 : +1);

        detail::WitnessObjective obj = detail::make_witness_objective(curve, type);

        // initial guess: interpolate gap targets plus positive-axis anchors
        std::vector<cplx> xs, ys;
        for (int k = 0; k < m; ++k) {
            xs.emplace_back(obj.gap_mid[static_cast<std::size_t>(k)], 0.0);
            ys.emplace_back(type.s[static_cast<std::size_t>(k)] *
                                (1.2 * obj.gap_height[static_cast<std::size_t>(k)] + 0.02 * s),
                            0.0);
        }
        double anchor_value = 0.0;
        if (m == 0) {
            double fmin = std::numeric_limits<double>::infinity();
            for (double lam : obj.grid)
                if (lam > 0.0) {
                    const double R = lam * detail::branch_product_real(curve, lam);
                    fmin = std::min(fmin, std::sqrt(std::max(R, 0.0)) / lam);
                }
            anchor_value = 0.3 * fmin;
        }
        for (int i = 0; i < g - m; ++i) {
            xs.emplace_back(s * (0.4 + 0.45 * (i + 1) / (g - m + 1)), 0.0);
            ys.emplace_back(anchor_value, 0.0);
        }
        RealPolynomial P0;
        for (const cplx& c : detail::interpolate_coeffs(xs, ys)) P0.coeffs.push_back(c.real());

        bool boundary = false;
        std::optional<RealPolynomial> w = detail::witness_descent(curve, type, obj, P0, &boundary);
        if (!w)
            throw WitnessSearchFailed("no witness found for type '" + type.word() +
                                      "' within the step budget");
        out[mask] = {type, *w, boundary};
    }
    return out;
}

}  // namespace sg

#endif
