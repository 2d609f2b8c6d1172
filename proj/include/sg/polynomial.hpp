// Dense univariate polynomials with real coefficients (low order first) and
// root extraction through a scaled companion matrix.

#ifndef SG_POLYNOMIAL_HPP
#define SG_POLYNOMIAL_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <vector>

#include "sg/curve.hpp"
#include "sg/errors.hpp"

namespace sg {

struct RealPolynomial {
    std::vector<double> coeffs;  // c_0 + c_1 x + ... (degree <= g-1 when used as P)

    RealPolynomial() = default;
    explicit RealPolynomial(std::vector<double> c) : coeffs(std::move(c)) {}

    double eval(double x) const {
        double v = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * x + *it;
        return v;
    }
    cplx eval(cplx x) const {
        cplx v = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * x + *it;
        return v;
    }
    RealPolynomial derivative() const {
        std::vector<double> d;
        for (std::size_t i = 1; i < coeffs.size(); ++i) d.push_back(coeffs[i] * double(i));
        return RealPolynomial(std::move(d));
    }
    int degree() const {
        for (int i = static_cast<int>(coeffs.size()) - 1; i >= 0; --i)
            if (coeffs[static_cast<std::size_t>(i)] != 0.0) return i;
        return -1;
    }
};

namespace detail {

// Roots of a real-coefficient polynomial, Newton-polished. The variable is
// rescaled by `scale` before forming the companion matrix so the coefficients
// stay O(1) at genus <= 4 branch-point magnitudes.
inline std::vector<cplx> polynomial_roots(const std::vector<double>& coeffs, double scale) {
    int deg = -1;
    for (int i = static_cast<int>(coeffs.size()) - 1; i >= 0; --i)
        if (coeffs[static_cast<std::size_t>(i)] != 0.0) {
            deg = i;
            break;
        }
    if (deg <= 0) return {};
    if (scale <= 0.0) scale = 1.0;

    // q(z) = p(scale*z) / (scale^deg * p_deg), monic in z
    std::vector<double> q(static_cast<std::size_t>(deg) + 1);
    double pw = 1.0;
    for (int i = 0; i <= deg; ++i) {
        q[static_cast<std::size_t>(i)] = coeffs[static_cast<std::size_t>(i)] * pw;
        pw *= scale;
    }
    const double lead = q[static_cast<std::size_t>(deg)];
    for (double& c : q) c /= lead;

    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(deg, deg);
    for (int i = 0; i < deg; ++i) C(i, deg - 1) = -q[static_cast<std::size_t>(i)];
    for (int i = 1; i < deg; ++i) C(i, i - 1) = 1.0;

    Eigen::EigenSolver<Eigen::MatrixXd> es(C, /*computeEigenvectors=*/false);
    std::vector<cplx> roots;
    roots.reserve(static_cast<std::size_t>(deg));
    for (int i = 0; i < deg; ++i) roots.push_back(es.eigenvalues()(i) * scale);

    auto p = [&](cplx z) {
        cplx v = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * z + *it;
        return v;
    };
    auto dp = [&](cplx z) {
        cplx v = 0.0;
        for (int i = static_cast<int>(coeffs.size()) - 1; i >= 1; --i)
            v = v * z + coeffs[static_cast<std::size_t>(i)] * double(i);
        return v;
    };
    for (cplx& r : roots) {
        for (int it = 0; it < 3; ++it) {
            const cplx d = dp(r);
            if (std::abs(d) < 1e-14) break;  // multiple root, leave to clustering
            const cplx step = p(r) / d;
            if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
            if (std::abs(step) > 0.1 * scale) break;
            r -= step;
        }
    }
    return roots;
}

// Newton-form interpolation through (x_k, y_k), returned as monomial
// coefficients c_0..c_{n-1}.
inline std::vector<cplx> interpolate_coeffs(const std::vector<cplx>& xs,
                                            const std::vector<cplx>& ys) {
    const std::size_t n = xs.size();
    std::vector<cplx> dd = ys;  // divided differences, built in place
    for (std::size_t level = 1; level < n; ++level)
        for (std::size_t i = n - 1; i >= level; --i)
            dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - level]);

    std::vector<cplx> c(n, cplx(0.0));
    // Horner expansion of the Newton form
    std::vector<cplx> acc(n, cplx(0.0));
    acc[0] = 1.0;
    std::size_t acc_len = 1;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < acc_len; ++i) c[i] += dd[k] * acc[i];
        if (k + 1 < n) {
            // acc *= (x - xs[k])
            for (std::size_t i = acc_len; i > 0; --i) acc[i] = acc[i - 1];
            acc[0] = 0.0;
            ++acc_len;
            for (std::size_t i = 0; i + 1 < acc_len; ++i) acc[i] -= xs[k] * acc[i + 1];
        }
    }
    return c;
}

}  // namespace detail

}  // namespace sg

#endif
