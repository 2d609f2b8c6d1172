// Averages of symmetric functionals of the divisor over a real component:
// long-orbit ergodic averaging (windowed), the genus-1 cycle-integral route,
// logarithmic derivatives of the wave function, and the higher Hamiltonian
// densities as local expansion coefficients.

#ifndef SG_AVERAGING_HPP
#define SG_AVERAGING_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sg/admissibility.hpp"
#include "sg/curve.hpp"
#include "sg/dynamics.hpp"

namespace sg {

// Psi_d / Psi evaluated at an explicit curve point (lambda, mu): the sheet is
// the caller's choice. Q^xi interpolates (lambda_k, mu_k), Q^eta interpolates
// (lambda_k, mu_k/lambda_k); the eta term carries the sign fix described in
// dynamics.hpp so that Res_{gamma_k} (Psi_d/Psi) = -d_d lambda_k.
inline cplx log_derivative(const SpectralCurve& curve, const std::vector<CurvePoint>& D,
                           CurvePoint at, FlowDirection dir) {
    const double s = curve.scale();
    if (std::abs(at.lambda) < 1e-12 * s)
        throw ValidationError("log_derivative is singular at lambda = 0");
    std::vector<cplx> xs, yxi, yeta;
    cplx denom = 1.0, prod_neg = 1.0;
    for (const CurvePoint& p : D) {
        if (std::abs(at.lambda - p.lambda) < 1e-10 * s)
            throw CoincidentProjections("evaluation point collides with a divisor projection");
        xs.push_back(p.lambda);
        yxi.push_back(p.mu);
        yeta.push_back(p.mu / p.lambda);
        denom *= at.lambda - p.lambda;
        prod_neg *= -p.lambda;
    }
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = i + 1; j < xs.size(); ++j)
            if (std::abs(xs[i] - xs[j]) <= 1e-9 * s)
                throw CoincidentProjections("divisor projections coincide");
    auto interp_eval = [&](const std::vector<cplx>& ys, cplx z) {
        if (ys.empty()) return cplx(0.0);
        const std::vector<cplx> cs = detail::interpolate_coeffs(xs, ys);
        cplx v = 0.0;
        for (auto it = cs.rbegin(); it != cs.rend(); ++it) v = v * z + *it;
        return v;
    };
    const cplx Qxi = interp_eval(yxi, at.lambda);
    const cplx Qeta = interp_eval(yeta, at.lambda);

    const cplx Gxi = cplx(0, 1) * (at.mu + Qxi) / denom;
    const cplx Geta = cplx(0, -1) * (at.mu + at.lambda * Qeta) * prod_neg /
                      (at.lambda * denom * curve.sqrt_branch_product());
    const auto [cxi, ceta] = detail::flow_coeffs(dir);
    return cxi * Gxi + ceta * Geta;
}

inline cplx log_derivative(const SpectralCurve& curve, const Divisor& D, cplx lambda,
                           FlowDirection dir) {
    return log_derivative(curve, D.points, {lambda, mu_on_plus_sheet(curve, lambda)}, dir);
}

// Expansion coefficients of Psi_x/Psi in the local parameters at infinity
// (1/sqrt(lambda)) and at zero (sqrt(lambda)), index n = -1..order; odd n are
// the higher Hamiltonian densities.
struct LocalExpansions {
    std::vector<cplx> at_infinity;  // coefficient of (1/sqrt lambda)^n, n = -1..order
    std::vector<cplx> at_zero;      // coefficient of (sqrt lambda)^n,  n = -1..order

    cplx infinity_coeff(int n) const { return at_infinity[static_cast<std::size_t>(n + 1)]; }
    cplx zero_coeff(int n) const { return at_zero[static_cast<std::size_t>(n + 1)]; }
};

namespace detail {

// Fourier fit of Psi_x/Psi on the w-circle |w| = rho (lambda = w^2; one turn
// in w covers the lambda-circle twice, once per sheet).
inline std::vector<cplx> circle_fit(const SpectralCurve& curve, const std::vector<CurvePoint>& D,
                                    double rho, int order, int samples) {
    std::vector<cplx> g(static_cast<std::size_t>(samples));
    cplx lam_prev(rho * rho, 0.0);
    cplx mu = std::sqrt(curve.eval_R(lam_prev));  // start on the positive axis
    for (int i = 0; i < samples; ++i) {
        const double th = 2.0 * M_PI * i / samples;
        const cplx w = rho * cplx(std::cos(th), std::sin(th));
        const cplx lam = w * w;
        if (i > 0) {
            const cplx hop[2] = {lam_prev, lam};
            mu = continue_mu(curve, hop, mu);
            lam_prev = lam;
        }
        g[static_cast<std::size_t>(i)] = log_derivative(curve, D, {lam, mu}, FlowDirection::X);
    }
    // closure: one more hop must return to -mu after a full lambda double-turn
    std::vector<cplx> coeffs;
    for (int n = -order; n <= order; ++n) {
        cplx acc = 0.0;
        for (int i = 0; i < samples; ++i) {
            const double th = 2.0 * M_PI * i / samples;
            acc += g[static_cast<std::size_t>(i)] * cplx(std::cos(n * th), -std::sin(n * th));
        }
        coeffs.push_back(acc / (static_cast<double>(samples) * std::pow(rho, n)));
    }
    return coeffs;  // index n + order: coefficient of w^n
}

}  // namespace detail

inline LocalExpansions hamiltonian_density_coeffs(const SpectralCurve& curve,
                                                  const std::vector<CurvePoint>& D, int order,
                                                  int samples = 512) {
    if (order > 8) throw ValidationError("expansion order capped at 8");
    double lam_max = curve.scale(), lam_min = curve.scale();
    for (const CurvePoint& p : D) {
        lam_max = std::max(lam_max, std::abs(p.lambda));
        lam_min = std::min(lam_min, std::abs(p.lambda));
    }
    for (const cplx& e : curve.branch_points()) lam_min = std::min(lam_min, std::abs(e));
    if (lam_min <= 0.0 || !std::isfinite(lam_max))
        throw FitIllConditioned("no annulus separates the divisor from 0 and infinity");

    const double rho_inf = std::sqrt(3.0 * lam_max);
    const double rho_zero = std::sqrt(0.3 * lam_min);

    const std::vector<cplx> cinf = detail::circle_fit(curve, D, rho_inf, order + 2, samples);
    const std::vector<cplx> czero = detail::circle_fit(curve, D, rho_zero, order + 2, samples);

    LocalExpansions out;
    const int off = order + 2;
    for (int n = -1; n <= order; ++n) {
        out.at_infinity.push_back(cinf[static_cast<std::size_t>(off - n)]);  // w^{-n}
        out.at_zero.push_back(czero[static_cast<std::size_t>(off + n)]);     // w^{+n}
    }
    return out;
}

inline LocalExpansions hamiltonian_density_coeffs(const SpectralCurve& curve, const Divisor& D,
                                                  int order, int samples = 512) {
    return hamiltonian_density_coeffs(curve, D.points, order, samples);
}

struct SymmetricFunctional {
    std::string name;
    bool sigma_symmetric = false;
    std::function<cplx(const SpectralCurve&, const std::vector<CurvePoint>&)> eval;
};

// Built-in registry: `one`, `ux`, `sym-demo`, `asym-demo`, `ham1`, `ham3`.
inline std::vector<SymmetricFunctional> functional_registry() {
    std::vector<SymmetricFunctional> reg;
    reg.push_back({"one", true,
                   [](const SpectralCurve&, const std::vector<CurvePoint>&) { return cplx(1.0); }});
    reg.push_back({"ux", false,
                   [](const SpectralCurve& c, const std::vector<CurvePoint>& pts) {
                       const auto v = dubrovin_rhs(c, pts, FlowDirection::X);
                       cplx acc = 0.0;
                       for (std::size_t k = 0; k < pts.size(); ++k) acc += v[k] / pts[k].lambda;
                       return cplx(0, -1) * acc;
                   }});
    reg.push_back({"sym-demo", true,
                   [](const SpectralCurve&, const std::vector<CurvePoint>& pts) {
                       cplx acc = 0.0;
                       for (const auto& p : pts) acc += p.lambda + 1.0 / p.lambda;
                       return acc;
                   }});
    reg.push_back({"asym-demo", false,
                   [](const SpectralCurve&, const std::vector<CurvePoint>& pts) {
                       cplx acc = 0.0;
                       for (const auto& p : pts) acc += p.mu / p.lambda;
                       return acc;
                   }});
    for (int n : {1, 3}) {
        reg.push_back({"ham" + std::to_string(n), true,
                       [n](const SpectralCurve& c, const std::vector<CurvePoint>& pts) {
                           return hamiltonian_density_coeffs(c, pts, n, 256).infinity_coeff(n);
                       }});
    }
    return reg;
}

inline const SymmetricFunctional& find_functional(const std::vector<SymmetricFunctional>& reg,
                                                  const std::string& name) {
    for (const auto& f : reg)
        if (f.name == name) return f;
    throw ValidationError("unknown functional '" + name + "'");
}

struct AverageResult {
    double value = 0.0;
    double error_band = 0.0;
};

// Ergodic average along the x-flow. A Hann window suppresses the
// partial-period endpoint bias from O(P/T) to O((P/T)^2); the band compares
// against the half-horizon and unwindowed estimates.
inline AverageResult orbit_average(const SpectralCurve& curve, const Divisor& D0,
                                   const SymmetricFunctional& f, double T, double tol = 1e-10,
                                   double sample_spacing = 0.1) {
    const DivisorTrajectory traj = evolve(curve, D0, FlowDirection::X, T, tol, sample_spacing);
    const std::size_t n = traj.samples.size();
    std::vector<cplx> vals(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = f.eval(curve, traj.samples[i].state.points);

    auto windowed = [&](std::size_t lo, std::size_t hi) {
        const double span = traj.samples[hi - 1].s - traj.samples[lo].s;
        cplx acc = 0.0;
        double wsum = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double x = (traj.samples[i].s - traj.samples[lo].s) / span;
            const double w = 0.5 * (1.0 - std::cos(2.0 * M_PI * x));
            acc += w * vals[i];
            wsum += w;
        }
        return acc / wsum;
    };
    const cplx full = windowed(0, n);
    const cplx half = windowed(0, n / 2);
    cplx plain = 0.0;
    for (const cplx& v : vals) plain += v;
    plain /= static_cast<double>(n);

    AverageResult out;
    out.value = full.real();
    out.error_band = std::abs(full - half) + 0.5 * std::abs(full - plain) +
                     std::abs(full.imag()) + 10.0 * tol;
    return out;
}

namespace detail {

// first return of the genus-1 x-flow to its initial point
inline double find_period_g1(const SpectralCurve& curve, const Divisor& D0, double tol) {
    const double budget = 2000.0;
    const double coarse = 0.02;
    const DivisorTrajectory traj = evolve(curve, D0, FlowDirection::X, budget, tol, coarse);
    const cplx l0 = D0.points[0].lambda, m0 = D0.points[0].mu;
    double dmax = 0.0;
    for (const auto& smp : traj.samples)
        dmax = std::max(dmax, std::abs(smp.state.points[0].lambda - l0));
    auto dist = [&](const TrajectorySample& s) {
        return std::abs(s.state.points[0].lambda - l0) + std::abs(s.state.points[0].mu - m0);
    };
    bool away = false;
    for (std::size_t i = 1; i + 1 < traj.samples.size(); ++i) {
        const double d = dist(traj.samples[i]);
        if (d > 0.5 * dmax) away = true;
        if (away && d < 0.2 * dmax && d <= dist(traj.samples[i - 1]) &&
            d <= dist(traj.samples[i + 1])) {
            // quadratic refinement of the return time around sample i
            double s_lo = traj.samples[i - 1].s, s_hi = traj.samples[i + 1].s;
            const Divisor seed{traj.samples[i - 1].state.points};
            for (int it = 0; it < 40; ++it) {
                const double s1 = s_lo + (s_hi - s_lo) / 3.0;
                const double s2 = s_hi - (s_hi - s_lo) / 3.0;
                auto eval_at = [&](double s) {
                    const auto t2 = evolve(curve, seed, FlowDirection::X,
                                           s - traj.samples[i - 1].s, tol,
                                           std::max(s - traj.samples[i - 1].s, 1e-12));
                    return dist(t2.samples.back());
                };
                if (eval_at(s1) < eval_at(s2))
                    s_hi = s2;
                else
                    s_lo = s1;
                if (s_hi - s_lo < 1e-10) break;
            }
            return 0.5 * (s_lo + s_hi);
        }
    }
    throw NumericError("genus-1 orbit did not return within the period budget");
}

}  // namespace detail

// Cycle-integral average at genus 1: oint W_f / oint W_1 over the closed
// lambda-locus traced by one period of the component's x-flow. C is resolved
// by normalizing the average of 1 to 1.
inline AverageResult cycle_average_g1(const SpectralCurve& curve, const TopologicalType& type,
                                      const SymmetricFunctional& f, double tol = 1e-10) {
    if (curve.genus() != 1) throw NotGenusOne("cycle averaging is implemented for genus 1 only");
    const auto comps = enumerate_components(curve);
    const ComponentWitness* match = nullptr;
    for (const auto& cw : comps)
        if (cw.type == type) match = &cw;
    if (!match) throw ValidationError("no component with type '" + type.word() + "'");
    const Divisor D0 = divisor_from_polynomial(curve, match->witness);

    const double period = detail::find_period_g1(curve, D0, tol);
    const DivisorTrajectory traj = evolve(curve, D0, FlowDirection::X, period, tol, 0.002);

    // trapezoid of f(lambda) dlambda/mu = f * (dlambda/dx)/mu dx over one period
    cplx num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
        auto term = [&](const TrajectorySample& smp) {
            const auto v = dubrovin_rhs(curve, smp.state.points, FlowDirection::X);
            const cplx dldx_over_mu = v[0] / smp.state.points[0].mu;
            return std::pair<cplx, cplx>(f.eval(curve, smp.state.points) * dldx_over_mu,
                                         dldx_over_mu);
        };
        const auto [fa, wa] = term(traj.samples[i]);
        const auto [fb, wb] = term(traj.samples[i + 1]);
        const double h = traj.samples[i + 1].s - traj.samples[i].s;
        num += 0.5 * h * (fa + fb);
        den += 0.5 * h * (wa + wb);
    }
    if (std::abs(den) < 1e-12) throw NumericError("degenerate normalization cycle");
    const cplx val = num / den;
    return {val.real(), std::abs(val.imag()) + 100.0 * tol};
}

}  // namespace sg

#endif
