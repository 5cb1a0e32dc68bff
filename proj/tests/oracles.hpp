#pragma once

// Independent straight-line oracles used by the test suites. Everything here
// is deliberately written against the definitions, not against the library
// code paths it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "probe/linalg.hpp"

namespace oracle {

// Largest singular value via cyclic Jacobi eigensolver on the Gram matrix.
inline double svd_largest(const probe::Matrix& w) {
    const int n = w.cols;
    probe::Matrix g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int r = 0; r < w.rows; ++r) s += w(r, i) * w(r, j);
            g(i, j) = s;
        }
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += g(p, q) * g(p, q);
        if (off < 1e-26) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(g(p, q)) < 1e-300) continue;
                const double theta = 0.5 * std::atan2(2.0 * g(p, q), g(q, q) - g(p, p));
                const double c = std::cos(theta), s = std::sin(theta);
                for (int k = 0; k < n; ++k) {
                    const double gkp = g(k, p), gkq = g(k, q);
                    g(k, p) = c * gkp - s * gkq;
                    g(k, q) = s * gkp + c * gkq;
                }
                for (int k = 0; k < n; ++k) {
                    const double gpk = g(p, k), gqk = g(q, k);
                    g(p, k) = c * gpk - s * gqk;
                    g(q, k) = s * gpk + c * gqk;
                }
            }
        }
    }
    double lmax = 0.0;
    for (int i = 0; i < n; ++i) lmax = std::max(lmax, g(i, i));
    return std::sqrt(std::max(lmax, 0.0));
}

// 3x3 inverse by the adjugate formula.
inline probe::Matrix inverse3(const probe::Matrix& m) {
    const double a = m(0, 0), b = m(0, 1), c = m(0, 2);
    const double d = m(1, 0), e = m(1, 1), f = m(1, 2);
    const double g = m(2, 0), h = m(2, 1), i = m(2, 2);
    const double det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
    probe::Matrix inv(3, 3);
    inv(0, 0) = (e * i - f * h) / det;
    inv(0, 1) = (c * h - b * i) / det;
    inv(0, 2) = (b * f - c * e) / det;
    inv(1, 0) = (f * g - d * i) / det;
    inv(1, 1) = (a * i - c * g) / det;
    inv(1, 2) = (c * d - a * f) / det;
    inv(2, 0) = (d * h - e * g) / det;
    inv(2, 1) = (b * g - a * h) / det;
    inv(2, 2) = (a * e - b * d) / det;
    return inv;
}

// central finite differences of a scalar function
inline probe::Vec central_differences(const std::function<double(const probe::Vec&)>& f,
                                      const probe::Vec& x, double h = 1e-5) {
    probe::Vec g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe::Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

inline double max_rel_error(const probe::Vec& a, const probe::Vec& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-8});
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

// brute-force grid search for the two-coefficient HSIC objective
inline probe::Vec hsic_grid_search(const std::vector<probe::Matrix>& grams,
                                   const probe::Matrix& output, double rho, double lo, double hi,
                                   double step) {
    auto objective = [&](double b1, double b2) {
        double obj = 0.0;
        for (std::size_t i = 0; i < output.data.size(); ++i) {
            const double r = output.data[i] - b1 * grams[0].data[i] - b2 * grams[1].data[i];
            obj += r * r;
        }
        return 0.5 * obj + rho * (std::abs(b1) + std::abs(b2));
    };
    double best1 = lo, best2 = lo, best = objective(lo, lo);
    for (double b1 = lo; b1 <= hi + 1e-12; b1 += step)
        for (double b2 = lo; b2 <= hi + 1e-12; b2 += step) {
            const double o = objective(b1, b2);
            if (o < best) {
                best = o;
                best1 = b1;
                best2 = b2;
            }
        }
    return {best1, best2};
}

// Spearman rank correlation by hand (distinct values)
inline double spearman_hand(const probe::Vec& xs, const probe::Vec& ys) {
    const int n = static_cast<int>(xs.size());
    auto rank = [&](const probe::Vec& v) {
        probe::Vec r(n);
        for (int i = 0; i < n; ++i) {
            int less = 0;
            for (int j = 0; j < n; ++j)
                if (v[j] < v[i]) ++less;
            r[i] = less + 1;
        }
        return r;
    };
    const probe::Vec rx = rank(xs), ry = rank(ys);
    double d2 = 0.0;
    for (int i = 0; i < n; ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
    return 1.0 - 6.0 * d2 / (n * (static_cast<double>(n) * n - 1));
}

}  // namespace oracle
