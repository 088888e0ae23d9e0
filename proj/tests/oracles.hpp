#pragma once

// Independent reference implementations for the tests. Deliberately naive:
// long double, direct formulas, brute force where affordable.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Real = long double;

// Closed form straight from the definition, no log-domain tricks.
inline double renyi(const std::vector<double>& p, double alpha) {
    Real total = 0;
    for (double v : p) total += v;
    if (alpha == 0.0) {
        int n = 0;
        for (double v : p) n += v > 1e-12;
        return static_cast<double>(std::log2(static_cast<Real>(n)));
    }
    if (alpha == 1.0) {
        Real h = 0;
        for (double v : p)
            if (v > 0) h -= (v / total) * std::log2(static_cast<Real>(v) / total);
        return static_cast<double>(h);
    }
    if (std::isinf(alpha)) {
        Real m = 0;
        for (double v : p) m = std::max<Real>(m, v / total);
        return static_cast<double>(-std::log2(m));
    }
    Real s = 0;
    for (double v : p)
        if (v > 0) s += std::pow(static_cast<Real>(v) / total, static_cast<Real>(alpha));
    return static_cast<double>(std::log2(s) / (1 - static_cast<Real>(alpha)));
}

// Plain OLS by cyclic coordinate descent on the residual sum of squares.
inline Eigen::VectorXd ols_coordinate_descent(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                              int sweeps = 20000) {
    const auto n = x.rows(), d = x.cols();
    std::vector<Real> phi(d, 0), r(n);
    for (Eigen::Index i = 0; i < n; ++i) r[i] = y(i);
    std::vector<Real> norm(d, 0);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < n; ++i) norm[j] += static_cast<Real>(x(i, j)) * x(i, j);
    for (int s = 0; s < sweeps; ++s) {
        Real biggest = 0;
        for (Eigen::Index j = 0; j < d; ++j) {
            if (norm[j] == 0) continue;
            Real g = 0;
            for (Eigen::Index i = 0; i < n; ++i) g += static_cast<Real>(x(i, j)) * r[i];
            const Real step = g / norm[j];
            phi[j] += step;
            for (Eigen::Index i = 0; i < n; ++i) r[i] -= step * x(i, j);
            biggest = std::max(biggest, std::abs(step));
        }
        if (biggest < 1e-15L) break;
    }
    Eigen::VectorXd out(d);
    for (Eigen::Index j = 0; j < d; ++j) out(j) = static_cast<double>(phi[j]);
    return out;
}

inline double gaussian_item(double y, double yhat, double sigma2) {
    const Real r = static_cast<Real>(y) - yhat;
    return static_cast<double>(-0.5L * std::log(2 * 3.14159265358979323846264338327950288L * sigma2) -
                               r * r / (2 * static_cast<Real>(sigma2)));
}

inline Real bernoulli_item(double y, Real eta) {
    const Real lp = eta >= 0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
    const Real lq = -eta >= 0 ? -std::log1p(std::exp(eta)) : -eta - std::log1p(std::exp(-eta));
    return y * lp + (1 - y) * lq;
}

inline Real bernoulli_mean(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<Real>& phi) {
    Real total = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Real eta = 0;
        for (Eigen::Index j = 0; j < x.cols(); ++j) eta += x(i, j) * phi[j];
        total += bernoulli_item(y(i), eta);
    }
    return total / x.rows();
}

// Gradient ascent with backtracking on the average fractional-response llh.
// Runs on a Gram-Schmidt orthonormalized copy of x with Barzilai-Borwein step
// lengths; coefficients are mapped back through R at the end.
inline Eigen::VectorXd logistic_gradient_ascent(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                                int max_iter = 100000) {
    const auto n = x.rows(), d = x.cols();
    std::vector<std::vector<Real>> q(d, std::vector<Real>(n));
    std::vector<std::vector<Real>> r(d, std::vector<Real>(d, 0));
    for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) q[j][i] = x(i, j);
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index k = 0; k < j; ++k) {
                Real dot = 0;
                for (Eigen::Index i = 0; i < n; ++i) dot += q[k][i] * q[j][i];
                dot /= n;  // columns have mean square 1
                r[k][j] += dot;
                for (Eigen::Index i = 0; i < n; ++i) q[j][i] -= dot * q[k][i];
            }
        }
        Real norm = 0;
        for (Eigen::Index i = 0; i < n; ++i) norm += q[j][i] * q[j][i];
        norm = std::sqrt(norm / n);
        r[j][j] = norm;
        for (Eigen::Index i = 0; i < n; ++i) q[j][i] /= norm;
    }
    auto mean_llh = [&](const std::vector<Real>& psi) {
        Real total = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            Real eta = 0;
            for (Eigen::Index j = 0; j < d; ++j) eta += q[j][i] * psi[j];
            total += y(i) * eta - (eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)));
        }
        return total / n;
    };
    auto gradient = [&](const std::vector<Real>& psi, std::vector<Real>& g) {
        std::fill(g.begin(), g.end(), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            Real eta = 0;
            for (Eigen::Index j = 0; j < d; ++j) eta += q[j][i] * psi[j];
            const Real p = 1 / (1 + std::exp(-eta));
            for (Eigen::Index j = 0; j < d; ++j) g[j] += (y(i) - p) * q[j][i] / n;
        }
    };
    std::vector<Real> psi(d, 0), grad(d), next(d), next_grad(d);
    Real value = mean_llh(psi);
    gradient(psi, grad);
    Real step = 1;
    for (int it = 0; it < max_iter; ++it) {
        Real g2 = 0;
        for (Real g : grad) g2 += g * g;
        if (g2 < 1e-24L) break;
        bool moved = false;
        Real t = step;
        while (t > 1e-20L) {
            for (Eigen::Index j = 0; j < d; ++j) next[j] = psi[j] + t * grad[j];
            const Real v = mean_llh(next);
            if (v > value && v >= value + 1e-4L * t * g2) {
                value = v;
                moved = true;
                break;
            }
            t /= 2;
        }
        if (!moved) break;
        gradient(next, next_grad);
        // Barzilai-Borwein length for the next trial step.
        Real ss = 0, sy = 0;
        for (Eigen::Index j = 0; j < d; ++j) {
            const Real sj = next[j] - psi[j];
            ss += sj * sj;
            sy += sj * (grad[j] - next_grad[j]);
        }
        step = sy > 0 ? std::clamp<Real>(ss / sy, 1e-6L, 1e6L) : 1;
        psi.swap(next);
        grad.swap(next_grad);
    }
    // x = Q R, so phi = R^-1 psi.
    std::vector<Real> phi(d);
    for (Eigen::Index j = d - 1; j >= 0; --j) {
        Real s = psi[j];
        for (Eigen::Index k = j + 1; k < d; ++k) s -= r[j][k] * phi[k];
        phi[j] = s / r[j][j];
    }
    Eigen::VectorXd out(d);
    for (Eigen::Index j = 0; j < d; ++j) out(j) = static_cast<double>(phi[j]);
    return out;
}

// Sign-flip p-value by enumerating every mask and summing from scratch.
inline double sign_flip_enumerated(const std::vector<double>& d) {
    const std::size_t n = d.size();
    Real obs = 0;
    for (double v : d) obs += v;
    obs = std::abs(obs);
    std::uint64_t count = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        Real s = 0;
        for (std::size_t i = 0; i < n; ++i) s += (mask >> i & 1) ? -d[i] : d[i];
        if (std::abs(s) >= obs - 1e-12L * obs) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(std::uint64_t{1} << n);
}

// BH adjusted values by the min-over-j formula, O(m^2).
inline std::vector<double> bh(const std::vector<double>& p) {
    const std::size_t m = p.size();
    std::vector<double> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> adj_sorted(m);
    for (std::size_t k = 0; k < m; ++k) {
        double best = 1.0;
        for (std::size_t j = k; j < m; ++j) best = std::min(best, m * sorted[j] / static_cast<double>(j + 1));
        adj_sorted[k] = best;
    }
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        // ties share the adjusted value of their first sorted slot
        const auto k = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), p[i]) - sorted.begin());
        out[i] = adj_sorted[k];
    }
    return out;
}

// Kolmogorov-Smirnov distance of a sample from U(0, 1).
inline double ks_uniform(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        d = std::max(d, (i + 1) / n - v[i]);
        d = std::max(d, v[i] - i / n);
    }
    return d;
}

}  // namespace oracle
