#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "sg/curve.hpp"

using sg::cplx;
using sg::SpectralCurve;
using Catch::Approx;

namespace {

SpectralCurve fixture_g1() { return SpectralCurve::validate({{-1, 0}, {-4, 0}}); }
SpectralCurve fixture_g1_complex() { return SpectralCurve::validate({{1, 1}, {1, -1}}); }
SpectralCurve fixture_g2() {
    return SpectralCurve::validate({{-1, 0}, {-2, 0}, {-3, 0}, {-4, 0}});
}
SpectralCurve fixture_g2_mixed() {
    return SpectralCurve::validate({{-1, 0}, {-4, 0}, {0.5, 1}, {0.5, -1}});
}

std::vector<cplx> polygon(cplx center, double rx, double ry, int n = 128) {
    std::vector<cplx> pts;
    for (int i = 0; i <= n; ++i) {
        const double th = 2.0 * M_PI * i / n;
        pts.push_back(center + cplx(rx * std::cos(th), ry * std::sin(th)));
    }
    return pts;
}

}  // namespace

TEST_CASE("validate_curve accepts and canonicalizes valid data") {
    auto c1 = fixture_g1();
    REQUIRE(c1.genus() == 1);
    REQUIRE(c1.negative_pairs() == 1);
    REQUIRE(c1.branch_points()[0] == cplx(-1, 0));
    REQUIRE(c1.branch_points()[1] == cplx(-4, 0));
    REQUIRE(c1.sqrt_branch_product() == Approx(2.0));

    auto c2 = fixture_g1_complex();
    REQUIRE(c2.genus() == 1);
    REQUIRE(c2.negative_pairs() == 0);
    REQUIRE(c2.branch_points()[0].imag() > 0.0);
    REQUIRE(c2.branch_points()[1] == std::conj(c2.branch_points()[0]));

    // input order does not matter
    auto c3 = SpectralCurve::validate({{-4, 0}, {1, -1}, {-1, 0}, {1, 1}});
    REQUIRE(c3.negative_pairs() == 1);
    REQUIRE(c3.branch_points()[0] == cplx(-1, 0));
    REQUIRE(c3.branch_points()[2].imag() > 0.0);
}

TEST_CASE("validate_curve rejects invalid data") {
    REQUIRE_THROWS_AS(SpectralCurve::validate({{-1, 0}, {-2, 0}, {-3, 0}, {4, 0}}),
                      sg::NonRealNegativeViolation);
    REQUIRE_THROWS_AS(SpectralCurve::validate({{-1, 0}, {0, 0}}), sg::NonRealNegativeViolation);
    REQUIRE_THROWS_AS(SpectralCurve::validate({{1, 1}, {1, -1.5}}), sg::UnpairedComplexPoint);
    REQUIRE_THROWS_AS(SpectralCurve::validate({{-1, 0}, {1, 1}}), sg::UnpairedComplexPoint);
    REQUIRE_THROWS_AS(SpectralCurve::validate({{-1, 0}, {-1, 0}}), sg::DegenerateBranchPoints);
    REQUIRE_THROWS_AS(SpectralCurve::validate({{-1, 0}}), sg::UnpairedComplexPoint);
}

TEST_CASE("eval_R product evaluation") {
    auto c = fixture_g1();
    REQUIRE(c.eval_R({-2, 0}).real() == Approx(4.0));
    REQUIRE(c.eval_R({-2, 0}).imag() == Approx(0.0));
    REQUIRE(std::abs(c.eval_R({0, 0})) == 0.0);
    REQUIRE(c.eval_R({2, 0}).real() == Approx(36.0));

    // derivative against central differences
    const cplx z(0.7, 0.3);
    const double h = 1e-6;
    const cplx fd = (c.eval_R(z + h) - c.eval_R(z - h)) / (2 * h);
    REQUIRE(std::abs(c.eval_R_deriv(z) - fd) < 1e-6);
}

TEST_CASE("R is real-symmetric and has the band/gap sign pattern") {
    for (const auto& c : {fixture_g1(), fixture_g2(), fixture_g2_mixed()}) {
        for (double x : {-5.0, -3.3, -1.7, -0.4, 0.6, 2.1}) {
            const cplx z(x, 0.8);
            REQUIRE(std::abs(c.eval_R(std::conj(z)) - std::conj(c.eval_R(z))) < 1e-12 * std::abs(c.eval_R(z)) + 1e-14);
        }
        // R > 0 on the positive axis
        for (int i = 1; i <= 40; ++i) REQUIRE(c.eval_R({0.3 * i, 0}).real() > 0.0);
        // sign alternation on the negative axis: bands negative, gaps positive
        const int m = c.negative_pairs();
        for (int k = 1; k <= m; ++k) {
            const auto [lo, hi] = c.gap(k);
            for (int i = 1; i < 12; ++i)
                REQUIRE(c.eval_R({lo + (hi - lo) * i / 12.0, 0}).real() >= 0.0);
        }
        // band (E_1, 0)
        const double e1 = c.branch_points()[0].real();
        for (int i = 1; i < 12; ++i) REQUIRE(c.eval_R({e1 * i / 12.0, 0}).real() < 0.0);
        // band beyond E_2m
        if (m > 0) {
            const double last = c.branch_points()[2 * m - 1].real();
            for (int i = 1; i < 8; ++i) REQUIRE(c.eval_R({last - 0.4 * i, 0}).real() < 0.0);
        }
    }
}

TEST_CASE("involutions") {
    auto c = fixture_g1();
    const cplx lam(-0.5, 0.5 * std::sqrt(15.0));
    const sg::CurvePoint p{lam, 2.0 * lam};
    REQUIRE(c.on_curve(p));

    const auto sp = sg::apply_involution(p, sg::Involution::Sigma);
    REQUIRE(c.on_curve(sp));
    const auto spp = sg::apply_involution(sp, sg::Involution::Sigma);
    REQUIRE(spp.lambda == p.lambda);
    REQUIRE(spp.mu == p.mu);

    const auto tp = sg::apply_involution(p, sg::Involution::Tau);
    REQUIRE(tp.lambda == std::conj(p.lambda));
    REQUIRE(tp.mu == std::conj(p.mu));
    REQUIRE(c.on_curve(tp));

    const sg::CurvePoint real_pt{{2.0, 0.0}, {6.0, 0.0}};
    REQUIRE(c.on_curve(real_pt));
    const auto tr = sg::apply_involution(real_pt, sg::Involution::Tau);
    REQUIRE(tr.lambda == real_pt.lambda);
    REQUIRE(tr.mu == real_pt.mu);
}

TEST_CASE("continue_mu basics") {
    auto c = fixture_g1();
    const cplx start(1.0, 0.0);
    const cplx mu0 = std::sqrt(c.eval_R(start));

    // constant path
    std::vector<cplx> constant = {start, start};
    REQUIRE(std::abs(sg::continue_mu(c, constant, mu0) - mu0) < 1e-12);

    // loop around -1 only flips the sheet
    {
        auto loop = polygon({-1, 0}, 0.5, 0.5);
        const cplx m0 = std::sqrt(c.eval_R(loop[0]));
        const cplx m1 = sg::continue_mu(c, loop, m0);
        REQUIRE(std::abs(m1 + m0) < 1e-10 * std::abs(m0));
    }
    // loop around both -1 and -4 is trivial
    {
        auto loop = polygon({-2.5, 0}, 2.2, 1.0);
        const cplx m0 = std::sqrt(c.eval_R(loop[0]));
        const cplx m1 = sg::continue_mu(c, loop, m0);
        REQUIRE(std::abs(m1 - m0) < 1e-10 * std::abs(m0));
    }

    // refinement invariance: doubling the polygon resolution changes nothing
    {
        auto coarse = polygon({-1, 0}, 0.5, 0.5, 16);
        auto fine = polygon({-1, 0}, 0.5, 0.5, 512);
        const cplx m0 = std::sqrt(c.eval_R(coarse[0]));
        REQUIRE(std::abs(sg::continue_mu(c, coarse, m0) - sg::continue_mu(c, fine, m0)) < 1e-10);
    }

    // path through a branch point is rejected
    std::vector<cplx> bad = {{1.0, 0.0}, {-4.0, 0.0}};
    REQUIRE_THROWS_AS(sg::continue_mu(c, bad, mu0), sg::PathThroughBranchPoint);
    // off-curve seed is rejected
    REQUIRE_THROWS_AS(sg::continue_mu(c, constant, mu0 * 1.5), sg::LostBranch);
}

TEST_CASE("monodromy: single branch points flip, pairs compose to identity") {
    for (const auto& c : {fixture_g1(), fixture_g2(), fixture_g2_mixed()}) {
        std::vector<cplx> all = c.branch_points();
        all.emplace_back(0.0, 0.0);

        auto clearance = [&](cplx center) {
            double d = 1e30;
            for (const cplx& e : all)
                if (std::abs(e - center) > 1e-12) d = std::min(d, std::abs(e - center));
            return d;
        };

        std::vector<std::vector<cplx>> loops;
        for (const cplx& e : all) {
            const double r = 0.4 * clearance(e);
            auto loop = polygon(e, r, r);
            const cplx m0 = std::sqrt(c.eval_R(loop[0]));
            const cplx m1 = sg::continue_mu(c, loop, m0);
            REQUIRE(std::abs(m1 + m0) < 1e-9 * std::abs(m0));  // sigma
            loops.push_back(loop);
        }
        // all pairs: concatenation of two single loops (based path via the start
        // points, bridged over the top to dodge intermediate branch points) has
        // trivial monodromy
        const double bridge_h = 0.55 * c.scale();
        for (std::size_t i = 0; i < all.size(); ++i)
            for (std::size_t j = i + 1; j < all.size(); ++j) {
                const cplx ai = loops[i].front();
                const cplx aj = loops[j].front();
                std::vector<cplx> path = loops[i];
                path.push_back(ai + cplx(0, bridge_h));
                path.push_back(aj + cplx(0, bridge_h));
                path.push_back(aj);
                path.insert(path.end(), loops[j].begin(), loops[j].end());
                path.push_back(aj + cplx(0, bridge_h));
                path.push_back(ai + cplx(0, bridge_h));
                path.push_back(ai);
                const cplx m0 = std::sqrt(c.eval_R(path[0]));
                const cplx m1 = sg::continue_mu(c, path, m0);
                REQUIRE(std::abs(m1 - m0) < 1e-9 * std::abs(m0));
            }
    }
}

TEST_CASE("mu_on_plus_sheet matches the hand-traced gap branches") {
    // For E=(-1,-4) the UHP continuation to the gap midpoint lands on
    // -sqrt|R|: arg R increases by 2*pi along the corridor.
    auto c1 = fixture_g1();
    const cplx mu_gap = sg::mu_on_plus_sheet(c1, {-2.5, 0.0});
    REQUIRE(mu_gap.real() < 0.0);
    REQUIRE(std::abs(mu_gap.imag()) < 1e-9);
    REQUIRE(std::abs(mu_gap * mu_gap - c1.eval_R({-2.5, 0.0})) < 1e-9);

    auto c2 = fixture_g2();
    const cplx g1 = sg::mu_on_plus_sheet(c2, {-1.5, 0.0});
    const cplx g2v = sg::mu_on_plus_sheet(c2, {-3.5, 0.0});
    REQUIRE(g1.real() < 0.0);   // eps_1 = -1
    REQUIRE(g2v.real() > 0.0);  // eps_2 = +1
}

TEST_CASE("band distance") {
    auto c = fixture_g1();
    REQUIRE(c.band_distance({-0.5, 0.0}) == Approx(0.0));   // inside [E_1, 0]
    REQUIRE(c.band_distance({-6.0, 0.0}) == Approx(0.0));   // inside (-inf, E_2]
    REQUIRE(c.band_distance({-2.5, 0.0}) == Approx(1.5));   // gap midpoint
    REQUIRE(c.band_distance({-0.5, 0.7}) == Approx(0.7));   // above the band
    REQUIRE(c.band_distance({1.0, 0.0}) == Approx(1.0));    // positive axis
}
