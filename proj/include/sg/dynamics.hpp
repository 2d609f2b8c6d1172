// Divisor dynamics: Dubrovin-type equations in the light-cone and laboratory
// directions, adaptive evolution with per-step re-projection onto the curve,
// potential reconstruction, winding-density estimation, and the PDE residual
// oracle for u_tt - u_xx + sin u = 0.
//
// Velocity fields (signs pinned by the PDE and winding oracles; see the
// charge normalization note in periods.hpp):
//   d_xi  lambda_k = -2 i mu_k / prod_{j != k} (lambda_k - lambda_j)
//   d_eta lambda_k = +2 i mu_k prod_j(-lambda_j)
//                    / (lambda_k sqrt(prod E) prod_{j != k} (lambda_k - lambda_j))
//   d_x = (d_xi + d_eta) / 4,   d_t = (d_xi - d_eta) / 4
// mu rides along via mu' = R'(lambda) lambda' / (2 mu) and is re-projected
// onto mu^2 = R(lambda) after every accepted step.

#ifndef SG_DYNAMICS_HPP
#define SG_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "sg/admissibility.hpp"
#include "sg/curve.hpp"
#include "sg/parallel.hpp"

namespace sg {

enum class FlowDirection { Xi, Eta, X, T };

struct DivisorState {
    std::vector<CurvePoint> points;
    double x = 0.0;
    double t = 0.0;
};

struct TrajectorySample {
    double s = 0.0;  // arc parameter along the chosen direction
    DivisorState state;
    cplx unimodular;   // e^{iu}
    double phase = 0.0;  // unwrapped u
};

struct DivisorTrajectory {
    FlowDirection direction = FlowDirection::X;
    std::vector<TrajectorySample> samples;
};

// e^{iu} = prod_j (-lambda_j) / sqrt(prod E_j)
inline cplx potential(const SpectralCurve& curve, const std::vector<CurvePoint>& points) {
    cplx p = 1.0;
    for (const CurvePoint& q : points) p *= -q.lambda;
    return p / curve.sqrt_branch_product();
}

inline cplx potential(const SpectralCurve& curve, const Divisor& D) {
    return potential(curve, D.points);
}

namespace detail {

struct FlowCoeffs {
    cplx xi;   // multiplies the xi velocity
    cplx eta;  // multiplies the eta velocity
};

inline FlowCoeffs flow_coeffs(FlowDirection d) {
    switch (d) {
        case FlowDirection::Xi: return {1.0, 0.0};
        case FlowDirection::Eta: return {0.0, 1.0};
        case FlowDirection::X: return {0.25, 0.25};
        case FlowDirection::T: return {0.25, -0.25};
    }
    return {0.0, 0.0};
}

}  // namespace detail

inline std::vector<cplx> dubrovin_rhs(const SpectralCurve& curve,
                                      const std::vector<CurvePoint>& points, FlowDirection dir) {
    const std::size_t g = points.size();
    const double s = curve.scale();
    cplx prod_neg = 1.0;
    for (const CurvePoint& p : points) {
        if (std::abs(p.lambda) < 1e-9 * s || std::abs(p.lambda) > 1e12 * s)
            throw SingularApproach("divisor projection approaches 0 or infinity");
        prod_neg *= -p.lambda;
    }
    const double sq = curve.sqrt_branch_product();
    const auto [cxi, ceta] = detail::flow_coeffs(dir);

    std::vector<cplx> v(g);
    for (std::size_t k = 0; k < g; ++k) {
        cplx denom = 1.0;
        for (std::size_t j = 0; j < g; ++j) {
            if (j == k) continue;
            const cplx d = points[k].lambda - points[j].lambda;
            if (std::abs(d) < 1e-9 * s)
                throw NearCollision("divisor projections closer than 1e-9 of scale");
            denom *= d;
        }
        const cplx vxi = cplx(0.0, -2.0) * points[k].mu / denom;
        const cplx veta =
            cplx(0.0, 2.0) * points[k].mu * prod_neg / (points[k].lambda * sq * denom);
        v[k] = cxi * vxi + ceta * veta;
    }
    return v;
}

inline std::vector<cplx> dubrovin_rhs(const SpectralCurve& curve, const DivisorState& state,
                                      FlowDirection dir) {
    return dubrovin_rhs(curve, state.points, dir);
}

namespace detail {

struct FlowVec {
    std::vector<cplx> lam, mu;
};

inline FlowVec flow_rhs(const SpectralCurve& curve, const FlowVec& y, FlowDirection dir) {
    std::vector<CurvePoint> pts(y.lam.size());
    for (std::size_t k = 0; k < y.lam.size(); ++k) pts[k] = {y.lam[k], y.mu[k]};
    FlowVec f;
    f.lam = dubrovin_rhs(curve, pts, dir);
    f.mu.resize(f.lam.size());
    for (std::size_t k = 0; k < f.lam.size(); ++k)
        f.mu[k] = curve.eval_R_deriv(y.lam[k]) * f.lam[k] / (2.0 * y.mu[k]);
    return f;
}

inline FlowVec axpy(const FlowVec& y, double h, const std::vector<const FlowVec*>& ks,
                    const std::vector<double>& cs) {
    FlowVec r = y;
    for (std::size_t q = 0; q < ks.size(); ++q) {
        for (std::size_t k = 0; k < y.lam.size(); ++k) {
            r.lam[k] += h * cs[q] * ks[q]->lam[k];
            r.mu[k] += h * cs[q] * ks[q]->mu[k];
        }
    }
    return r;
}

// velocity of one member of a colliding pair, multiplied by (z - partner):
// finite and smooth through the collision as a function of z at fixed pair sum
struct PairField {
    const SpectralCurve* curve;
    FlowDirection dir;
    const std::vector<cplx>* other_lam;  // the non-colliding projections
    cplx pair_sum;                       // lambda_a + lambda_b, held fixed
    cplx mu_ref;                         // common branch of the pair

    cplx mu_at(cplx z) const {
        const cplx r = std::sqrt(curve->eval_R(z));
        return (std::abs(r - mu_ref) <= std::abs(r + mu_ref)) ? r : -r;
    }
    // G(z) = v(z) * (z - (pair_sum - z))
    cplx operator()(cplx z) const {
        const cplx w = pair_sum - z;
        cplx denom = 1.0;
        cplx prod_neg = (-z) * (-w);
        for (const cplx& l : *other_lam) {
            denom *= z - l;
            prod_neg *= -l;
        }
        const cplx mu = mu_at(z);
        const auto [cxi, ceta] = flow_coeffs(dir);
        const cplx vxi = cplx(0.0, -2.0) * mu / denom;
        const cplx veta = cplx(0.0, 2.0) * mu * prod_neg / (z * curve->sqrt_branch_product() * denom);
        return cxi * vxi + ceta * veta;
    }
};

}  // namespace detail

// Adaptive Dormand-Prince 5(4) evolution with mu re-projection, phase-step
// control, and elementary-symmetric handling of near-collisions.
inline DivisorTrajectory evolve(const SpectralCurve& curve, const Divisor& D0, FlowDirection dir,
                                double length, double tol, double sample_spacing = 0.25) {
    const std::size_t g = D0.points.size();
    const double s = curve.scale();
    const double collision_window = 1e-6 * s;

    detail::FlowVec y;
    for (const CurvePoint& p : D0.points) {
        y.lam.push_back(p.lambda);
        y.mu.push_back(p.mu);
    }

    DivisorTrajectory traj;
    traj.direction = dir;
    double phase = std::arg(potential(curve, D0));
    double at = 0.0;
    const double sgn = (length >= 0.0) ? 1.0 : -1.0;
    const double total = std::abs(length);

    auto push_sample = [&](double pos) {
        TrajectorySample smp;
        smp.s = sgn * pos;
        smp.state.points.resize(g);
        for (std::size_t k = 0; k < g; ++k) smp.state.points[k] = {y.lam[k], y.mu[k]};
        switch (dir) {
            case FlowDirection::X: smp.state.x = sgn * pos; break;
            case FlowDirection::T: smp.state.t = sgn * pos; break;
            case FlowDirection::Xi:
                smp.state.x = 2.0 * sgn * pos;
                smp.state.t = 2.0 * sgn * pos;
                break;
            case FlowDirection::Eta:
                smp.state.x = 2.0 * sgn * pos;
                smp.state.t = -2.0 * sgn * pos;
                break;
        }
        smp.unimodular = potential(curve, smp.state.points);
        smp.phase = phase;
        traj.samples.push_back(std::move(smp));
    };
    push_sample(0.0);

    if (total == 0.0) return traj;
    if (sample_spacing <= 0.0) sample_spacing = std::max(total, 1e-12);

    double h = std::min(0.01, sample_spacing);
    long steps = 0;
    const long max_steps = 80'000'000L;

    auto rhs = [&](const detail::FlowVec& v) { return detail::flow_rhs(curve, v, dir); };

    double next_sample = std::min(sample_spacing, total);
    while (at < total) {
        if (++steps > max_steps) throw StepFailure("step budget exhausted");
        const double target = std::min(next_sample, total);
        h = std::min(h, target - at);

        // near-collision: advance the closest pair in elementary symmetric
        // coordinates with a midpoint step
        double min_d = 1e300;
        std::size_t ia = 0, ib = 1;
        for (std::size_t i = 0; i < g; ++i)
            for (std::size_t j = i + 1; j < g; ++j) {
                const double d = std::abs(y.lam[i] - y.lam[j]);
                if (d < min_d) {
                    min_d = d;
                    ia = i;
                    ib = j;
                }
            }
        if (g >= 2 && min_d < collision_window) {
            if (std::abs(y.mu[ia] + y.mu[ib]) < std::abs(y.mu[ia] - y.mu[ib]))
                throw StepFailure("opposite-sheet collision: the potential would be singular");
            std::vector<cplx> others;
            for (std::size_t j = 0; j < g; ++j)
                if (j != ia && j != ib) others.push_back(y.lam[j]);
            detail::PairField F{&curve, dir, &others, y.lam[ia] + y.lam[ib],
                                0.5 * (y.mu[ia] + y.mu[ib])};
            const double delta = 1e-4 * s;
            auto sym_rhs = [&](cplx u1, cplx /*u2*/) {
                const cplx mid = 0.5 * u1;
                const cplx dF = (F(mid + delta) - F(mid - delta)) / (2.0 * delta);
                const cplx dzF =
                    ((mid + delta) * F(mid + delta) - (mid - delta) * F(mid - delta)) /
                    (2.0 * delta);
                const cplx du1 = dF;
                const cplx du2 = u1 * dF - dzF;
                return std::pair<cplx, cplx>(du1, du2);
            };
            cplx u1 = y.lam[ia] + y.lam[ib], u2 = y.lam[ia] * y.lam[ib];
            const double hc = sgn * std::min(h, 1e-3);
            auto [k1a, k1b] = sym_rhs(u1, u2);
            auto [k2a, k2b] = sym_rhs(u1 + 0.5 * hc * k1a, u2 + 0.5 * hc * k1b);
            u1 += hc * k2a;
            u2 += hc * k2b;
            // recover the pair and re-project, matching by continuity
            const cplx disc = std::sqrt(u1 * u1 - 4.0 * u2);
            cplx za = 0.5 * (u1 + disc), zb = 0.5 * (u1 - disc);
            if (std::abs(za - y.lam[ia]) + std::abs(zb - y.lam[ib]) >
                std::abs(za - y.lam[ib]) + std::abs(zb - y.lam[ia]))
                std::swap(za, zb);
            y.lam[ia] = za;
            y.lam[ib] = zb;
            for (std::size_t q : {ia, ib}) {
                const cplx r = std::sqrt(curve.eval_R(y.lam[q]));
                y.mu[q] = (std::abs(r - y.mu[q]) <= std::abs(r + y.mu[q])) ? r : -r;
            }
            at += std::abs(hc);
            // phase bookkeeping across the tiny step
            std::vector<CurvePoint> pts(g);
            for (std::size_t k = 0; k < g; ++k) pts[k] = {y.lam[k], y.mu[k]};
            const double ph_new = std::arg(potential(curve, pts));
            double dph = ph_new - std::remainder(phase, 2.0 * M_PI);
            dph = std::remainder(dph, 2.0 * M_PI);
            phase += dph;
            if (at >= next_sample - 1e-14) {
                push_sample(at);
                next_sample += sample_spacing;
            }
            continue;
        }

        // Dormand-Prince 5(4)
        const detail::FlowVec k1 = rhs(y);
        const double hh = sgn * h;
        const detail::FlowVec k2 = rhs(detail::axpy(y, hh, {&k1}, {1.0 / 5}));
        const detail::FlowVec k3 = rhs(detail::axpy(y, hh, {&k1, &k2}, {3.0 / 40, 9.0 / 40}));
        const detail::FlowVec k4 =
            rhs(detail::axpy(y, hh, {&k1, &k2, &k3}, {44.0 / 45, -56.0 / 15, 32.0 / 9}));
        const detail::FlowVec k5 = rhs(detail::axpy(
            y, hh, {&k1, &k2, &k3, &k4},
            {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729}));
        const detail::FlowVec k6 = rhs(detail::axpy(
            y, hh, {&k1, &k2, &k3, &k4, &k5},
            {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656}));
        detail::FlowVec y5 = detail::axpy(
            y, hh, {&k1, &k3, &k4, &k5, &k6},
            {35.0 / 384, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84});
        const detail::FlowVec k7 = rhs(y5);
        const detail::FlowVec y4 = detail::axpy(
            y, hh, {&k1, &k3, &k4, &k5, &k6, &k7},
            {5179.0 / 57600, 7571.0 / 16695, 393.0 / 640, -92097.0 / 339200, 187.0 / 2100,
             1.0 / 40});

        double err = 0.0;
        for (std::size_t k = 0; k < g; ++k) {
            err = std::max(err, std::abs(y5.lam[k] - y4.lam[k]) /
                                    (tol + tol * std::abs(y5.lam[k])));
            err = std::max(err,
                           std::abs(y5.mu[k] - y4.mu[k]) / (tol + tol * std::abs(y5.mu[k])));
        }

        bool accept = err <= 1.0;
        double ph_new = phase;
        if (accept) {
            std::vector<CurvePoint> pts(g);
            for (std::size_t k = 0; k < g; ++k) pts[k] = {y5.lam[k], y5.mu[k]};
            const cplx p_old = potential(curve, [&] {
                std::vector<CurvePoint> o(g);
                for (std::size_t k = 0; k < g; ++k) o[k] = {y.lam[k], y.mu[k]};
                return o;
            }());
            const cplx p_new = potential(curve, pts);
            const double dph = std::arg(p_new / p_old);
            if (std::abs(dph) >= M_PI_2)
                accept = false;  // phase step too large for unambiguous unwrapping
            else
                ph_new = phase + dph;
            // re-projection sanity: the integrated mu must still identify its sheet
            if (accept) {
                for (std::size_t k = 0; k < g; ++k) {
                    const cplx r = std::sqrt(curve.eval_R(y5.lam[k]));
                    const double dplus = std::abs(r - y5.mu[k]);
                    const double dminus = std::abs(r + y5.mu[k]);
                    if (std::min(dplus, dminus) > 0.25 * std::abs(r) + tol) {
                        accept = false;
                        break;
                    }
                    y5.mu[k] = (dplus <= dminus) ? r : -r;
                }
            }
        }

        if (accept) {
            y = std::move(y5);
            at += h;
            phase = ph_new;
            if (at >= next_sample - 1e-12) {
                push_sample(at);
                next_sample += sample_spacing;
            }
            const double grow = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
            h = std::min(h * std::clamp(grow, 0.2, 5.0), sample_spacing);
        } else {
            h *= 0.5;
            if (h < 1e-14 * std::max(1.0, total))
                throw StepFailure("step size underflow at s = " + std::to_string(at));
        }
    }
    return traj;
}

inline DivisorTrajectory evolve(const SpectralCurve& curve, const DivisorState& state,
                                FlowDirection dir, double length, double tol,
                                double sample_spacing = 0.25) {
    Divisor D{state.points};
    DivisorTrajectory traj = evolve(curve, D, dir, length, tol, sample_spacing);
    for (TrajectorySample& smp : traj.samples) {
        smp.state.x += state.x;
        smp.state.t += state.t;
    }
    return traj;
}

struct WindingEstimate {
    double density = 0.0;     // least-squares drift of u/(2 pi)
    double endpoint = 0.0;    // raw [u(T)-u(0)]/(2 pi T)
    double error_band = 0.0;  // max tail deviation from the fitted drift / (2 pi T)
};

// Density of topological charge from the x-flow: n_bar = lim [u(x+T)-u(x)]/(2 pi T).
inline WindingEstimate winding_density(const SpectralCurve& curve, const Divisor& D0, double T,
                                       double tol = 1e-10, double sample_spacing = 0.25) {
    const DivisorTrajectory traj =
        evolve(curve, D0, FlowDirection::X, T, tol, sample_spacing);
    const std::size_t n = traj.samples.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& smp : traj.samples) {
        sx += smp.s;
        sy += smp.phase;
        sxx += smp.s * smp.s;
        sxy += smp.s * smp.phase;
    }
    const double nn = static_cast<double>(n);
    const double denom = nn * sxx - sx * sx;
    const double slope = (denom != 0.0) ? (nn * sxy - sx * sy) / denom : 0.0;
    const double intercept = (sy - slope * sx) / nn;

    WindingEstimate est;
    est.density = slope / (2.0 * M_PI);
    est.endpoint =
        (traj.samples.back().phase - traj.samples.front().phase) / (2.0 * M_PI * T);
    double dev = 0.0;
    for (std::size_t i = n / 2; i < n; ++i)
        dev = std::max(dev, std::abs(traj.samples[i].phase -
                                     (intercept + slope * traj.samples[i].s)));
    est.error_band = dev / (2.0 * M_PI * T) + 10.0 * tol;
    return est;
}

// max |u_tt - u_xx + sin u| over interior grid points, central differences
inline double sg_residual_operator(const std::vector<std::vector<double>>& u, double hx,
                                   double ht) {
    const std::size_t nx = u.size();
    const std::size_t nt = nx ? u[0].size() : 0;
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < nx; ++i)
        for (std::size_t j = 1; j + 1 < nt; ++j) {
            const double utt = (u[i][j + 1] - 2.0 * u[i][j] + u[i][j - 1]) / (ht * ht);
            const double uxx = (u[i + 1][j] - 2.0 * u[i][j] + u[i - 1][j]) / (hx * hx);
            worst = std::max(worst, std::abs(utt - uxx + std::sin(u[i][j])));
        }
    return worst;
}

// Reconstructs u on an (nx x nt) grid by evolving the divisor (x-row at t=0,
// then a t-column from every row state) and returns the worst residual of
// u_tt - u_xx + sin u. O(h^2) when the Dubrovin field is correct.
inline double pde_residual(const SpectralCurve& curve, const Divisor& D0, int nx, int nt,
                           double hx, double ht, double tol = 1e-10) {
    const DivisorTrajectory row =
        evolve(curve, D0, FlowDirection::X, (nx - 1) * hx, tol, hx);
    if (static_cast<int>(row.samples.size()) != nx)
        throw StepFailure("x-row sampling mismatch in pde_residual");

    std::vector<std::vector<double>> u(static_cast<std::size_t>(nx),
                                       std::vector<double>(static_cast<std::size_t>(nt), 0.0));
    parallel_for(static_cast<std::size_t>(nx), [&](std::size_t i) {
        const Divisor Di{row.samples[i].state.points};
        const DivisorTrajectory col = evolve(curve, Di, FlowDirection::T, (nt - 1) * ht, tol, ht);
        for (int j = 0; j < nt; ++j)
            u[i][static_cast<std::size_t>(j)] =
                row.samples[i].phase + (col.samples[static_cast<std::size_t>(j)].phase -
                                        col.samples[0].phase);
    });
    return sg_residual_operator(u, hx, ht);
}

}  // namespace sg

#endif
