#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "sg/dynamics.hpp"
#include "sg/periods.hpp"

using sg::cplx;
using sg::Divisor;
using sg::RealPolynomial;
using sg::SpectralCurve;
using Catch::Approx;

namespace {

SpectralCurve fixture_g1() { return SpectralCurve::validate({{-1, 0}, {-4, 0}}); }
SpectralCurve fixture_g1_complex() { return SpectralCurve::validate({{1, 1}, {1, -1}}); }
SpectralCurve fixture_g2() {
    return SpectralCurve::validate({{-1, 0}, {-2, 0}, {-3, 0}, {-4, 0}});
}

Divisor seed_divisor(const SpectralCurve& c, std::vector<double> coeffs) {
    return sg::divisor_from_polynomial(c, RealPolynomial(std::move(coeffs)));
}

}  // namespace

TEST_CASE("dubrovin_rhs fixture values and symmetries") {
    const auto c = fixture_g1();
    const cplx lam(-0.5, 0.5 * std::sqrt(15.0));
    const std::vector<sg::CurvePoint> pts = {{lam, 2.0 * lam}};

    // g = 1: empty product, d_xi lambda = -2 i mu
    const auto vxi = sg::dubrovin_rhs(c, pts, sg::FlowDirection::Xi);
    REQUIRE(std::abs(vxi[0] - cplx(0, -2) * pts[0].mu) < 1e-14);

    // sigma on all points negates every velocity
    const std::vector<sg::CurvePoint> spts = {{lam, -2.0 * lam}};
    for (auto dir : {sg::FlowDirection::Xi, sg::FlowDirection::Eta, sg::FlowDirection::X,
                     sg::FlowDirection::T}) {
        const auto v = sg::dubrovin_rhs(c, pts, dir);
        const auto sv = sg::dubrovin_rhs(c, spts, dir);
        REQUIRE(std::abs(sv[0] + v[0]) < 1e-13);
    }

    // tau equivariance: v(tau D) = -conj(v(D))  (flow reversal + conjugation)
    const auto c2 = fixture_g2();
    const Divisor d2 = seed_divisor(c2, {2.0});
    std::vector<sg::CurvePoint> tpts;
    for (const auto& p : d2.points) tpts.push_back(sg::apply_involution(p, sg::Involution::Tau));
    for (auto dir : {sg::FlowDirection::Xi, sg::FlowDirection::Eta, sg::FlowDirection::X}) {
        const auto v = sg::dubrovin_rhs(c2, d2.points, dir);
        const auto tv = sg::dubrovin_rhs(c2, tpts, dir);
        for (std::size_t k = 0; k < v.size(); ++k)
            REQUIRE(std::abs(tv[k] + std::conj(v[k])) < 1e-12);
    }

    // near-coincident projections are rejected
    std::vector<sg::CurvePoint> collide = {{lam, 2.0 * lam}, {lam + cplx(1e-12, 0), 2.0 * lam}};
    REQUIRE_THROWS_AS(sg::dubrovin_rhs(fixture_g2(), collide, sg::FlowDirection::X),
                      sg::NearCollision);
}

TEST_CASE("potential values") {
    const auto c = fixture_g1();
    const cplx lam(-0.5, 0.5 * std::sqrt(15.0));
    const cplx p = sg::potential(c, {{lam, 2.0 * lam}});
    REQUIRE(std::abs(p - cplx(0.25, -0.25 * std::sqrt(15.0))) < 1e-12);  // (1 - i sqrt15)/4
    REQUIRE(std::abs(std::abs(p) - 1.0) < 1e-12);

    const std::vector<sg::CurvePoint> fixed = {{{2.0, 0.0}, {6.0, 0.0}}};
    const cplx p3 = sg::potential(c, fixed);
    REQUIRE(p3.real() == Approx(-1.0).margin(1e-12));  // u = pi mod 2 pi

    // tau conjugates the potential
    const auto c2 = fixture_g2();
    const Divisor d = seed_divisor(c2, {2.0});
    std::vector<sg::CurvePoint> tpts;
    for (const auto& q : d.points) tpts.push_back(sg::apply_involution(q, sg::Involution::Tau));
    REQUIRE(std::abs(sg::potential(c2, tpts) - std::conj(sg::potential(c2, d.points))) < 1e-12);
}

TEST_CASE("evolve: identity, reversibility, flow invariants") {
    const auto c = fixture_g1();
    const Divisor d0 = seed_divisor(c, {2.0});

    const auto idtraj = sg::evolve(c, d0, sg::FlowDirection::X, 0.0, 1e-10);
    REQUIRE(idtraj.samples.size() == 1);
    REQUIRE(idtraj.samples[0].state.points[0].lambda == d0.points[0].lambda);

    // forward then backward returns to the start
    const auto fwd = sg::evolve(c, d0, sg::FlowDirection::X, 7.0, 1e-10);
    const Divisor mid{fwd.samples.back().state.points};
    const auto back = sg::evolve(c, mid, sg::FlowDirection::X, -7.0, 1e-10);
    REQUIRE(std::abs(back.samples.back().state.points[0].lambda - d0.points[0].lambda) < 1e-6);
    REQUIRE(std::abs(back.samples.back().state.points[0].mu - d0.points[0].mu) < 1e-6);

    // along the flow: admissibility with the same type, band clearance,
    // unimodular potential
    const auto traj = sg::evolve(c, d0, sg::FlowDirection::X, 50.0, 1e-10, 0.5);
    const auto want = sg::admissibility_check(c, RealPolynomial({2.0})).type;
    for (const auto& smp : traj.samples) {
        REQUIRE(std::abs(std::abs(smp.unimodular) - 1.0) <= 1e-8);
        for (const auto& p : smp.state.points) {
            REQUIRE(c.band_distance(p.lambda) > 0.0);
            REQUIRE(c.on_curve(p));
        }
        auto [P, res] = sg::polynomial_from_divisor(c, Divisor{smp.state.points});
        REQUIRE(res < 1e-7);
        const auto v = sg::admissibility_check(c, P);
        REQUIRE(v.admissible);
        REQUIRE(v.type == want);
    }
}

TEST_CASE("evolve preserves admissibility at genus 2") {
    const auto c = fixture_g2();
    const Divisor d0 = seed_divisor(c, {2.0});
    const auto traj = sg::evolve(c, d0, sg::FlowDirection::X, 50.0, 1e-10, 0.5);
    const auto want = sg::admissibility_check(c, RealPolynomial({2.0})).type;
    for (const auto& smp : traj.samples) {
        REQUIRE(std::abs(std::abs(smp.unimodular) - 1.0) <= 1e-8);
        for (const auto& p : smp.state.points) REQUIRE(c.band_distance(p.lambda) > 0.0);
        auto [P, res] = sg::polynomial_from_divisor(c, Divisor{smp.state.points});
        const auto v = sg::admissibility_check(c, P);
        REQUIRE(v.admissible);
        REQUIRE(v.type == want);
        // mu-sign rule whenever a projection dips into a gap
        for (const auto& p : smp.state.points) {
            if (std::abs(p.lambda.imag()) < 1e-10) {
                for (int k = 1; k <= c.negative_pairs(); ++k) {
                    const auto [lo, hi] = c.gap(k);
                    if (p.lambda.real() > lo && p.lambda.real() < hi)
                        REQUIRE(p.mu.real() * v.type.s[static_cast<std::size_t>(k - 1)] < 0.0);
                }
            }
        }
    }
}

TEST_CASE("winding density matches the period formula (headline oracle)") {
    const auto c = fixture_g1();
    const auto formula = sg::charge_density(c, sg::TopologicalType{{+1}});

    const Divisor dplus = seed_divisor(c, {2.0});
    const auto wplus = sg::winding_density(c, dplus, 400.0, 1e-10);
    REQUIRE(std::abs(wplus.density - formula.n_bar) < 5e-4);

    const Divisor dminus = seed_divisor(c, {-2.0});
    const auto wminus = sg::winding_density(c, dminus, 400.0, 1e-10);
    REQUIRE(std::abs(wminus.density + formula.n_bar) < 5e-4);

    // another divisor of the same component gives the same density
    const Divisor dplus2 = seed_divisor(c, {2.5});
    const auto wplus2 = sg::winding_density(c, dplus2, 400.0, 1e-10);
    REQUIRE(std::abs(wplus2.density - wplus.density) <=
            wplus.error_band + wplus2.error_band + 1e-6);
}

TEST_CASE("winding density vanishes on zero-charge curves") {
    const auto c = fixture_g1_complex();
    const auto comps = sg::enumerate_components(c);
    const Divisor d0 = sg::divisor_from_polynomial(c, comps[0].witness);
    const auto w = sg::winding_density(c, d0, 300.0, 1e-10);
    REQUIRE(std::abs(w.density) <= w.error_band);
}

TEST_CASE("residual operator is exact on constant solutions") {
    std::vector<std::vector<double>> u(8, std::vector<double>(8, 0.0));
    REQUIRE(sg::sg_residual_operator(u, 0.01, 0.01) == 0.0);
    for (auto& row : u) std::fill(row.begin(), row.end(), M_PI);
    REQUIRE(sg::sg_residual_operator(u, 0.01, 0.01) < 1e-12);
}

TEST_CASE("pde residual is small and second order on E=(-1,-4)") {
    const auto c = fixture_g1();
    const Divisor d0 = seed_divisor(c, {2.0});
    const double r1 = sg::pde_residual(c, d0, 60, 60, 0.02, 0.02);
    REQUIRE(r1 < 4e-3);
    const double r2 = sg::pde_residual(c, d0, 120, 120, 0.01, 0.01);
    REQUIRE(r2 < 1.2e-3);
    REQUIRE(r1 / r2 > 3.0);  // ~4x expected at second order
}

TEST_CASE("symmetric pair field reproduces direct velocities away from collision") {
    // The divided-difference form used through collisions must agree with the
    // raw Dubrovin velocities at moderate separation.
    const auto c = fixture_g2();
    const Divisor d = seed_divisor(c, {2.0});
    const cplx la = d.points[0].lambda, lb = d.points[1].lambda;
    std::vector<cplx> others;  // empty at g=2 beyond the pair
    sg::detail::PairField Fa{&c, sg::FlowDirection::X, &others, la + lb, d.points[0].mu};
    sg::detail::PairField Fb{&c, sg::FlowDirection::X, &others, la + lb, d.points[1].mu};
    const auto v = sg::dubrovin_rhs(c, d.points, sg::FlowDirection::X);
    REQUIRE(std::abs(Fa(la) / (la - lb) - v[0]) < 1e-10);
    REQUIRE(std::abs(Fb(lb) / (lb - la) - v[1]) < 1e-10);
}
