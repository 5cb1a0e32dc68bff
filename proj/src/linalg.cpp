#include "probe/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace probe {

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool same_shape(const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols, m.rows);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) t(c, r) = m(r, c);
    return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: shape mismatch");
    Matrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

Vec matvec(const Matrix& m, const Vec& v) {
    if (m.cols != static_cast<int>(v.size())) throw std::invalid_argument("matvec: shape mismatch");
    Vec out(m.rows, 0.0);
    for (int r = 0; r < m.rows; ++r) {
        double s = 0.0;
        for (int c = 0; c < m.cols; ++c) s += m(r, c) * v[c];
        out[r] = s;
    }
    return out;
}

Vec matvec_transposed(const Matrix& m, const Vec& v) {
    if (m.rows != static_cast<int>(v.size())) throw std::invalid_argument("matvec_transposed: shape mismatch");
    Vec out(m.cols, 0.0);
    for (int r = 0; r < m.rows; ++r) {
        const double vr = v[r];
        if (vr == 0.0) continue;
        for (int c = 0; c < m.cols; ++c) out[c] += m(r, c) * vr;
    }
    return out;
}

Vec add(const Vec& a, const Vec& b) {
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Vec sub(const Vec& a, const Vec& b) {
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Vec hadamard(const Vec& a, const Vec& b) {
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

void axpy(double alpha, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Vec& v) { return std::sqrt(dot(v, v)); }

double norm_p(const Vec& v, double p) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
    if (p == 2.0) return norm2(v);
    if (p == 1.0) {
        double s = 0.0;
        for (double x : v) s += std::abs(x);
        return s;
    }
    double s = 0.0;
    for (double x : v) s += std::pow(std::abs(x), p);
    return std::pow(s, 1.0 / p);
}

double frobenius(const Matrix& m) {
    double s = 0.0;
    for (double x : m.data) s += x * x;
    return std::sqrt(s);
}

double frobenius_inner(const Matrix& a, const Matrix& b) {
    if (!same_shape(a, b)) throw std::invalid_argument("frobenius_inner: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double trace(const Matrix& m) {
    double s = 0.0;
    const int n = std::min(m.rows, m.cols);
    for (int i = 0; i < n; ++i) s += m(i, i);
    return s;
}

double max_abs(const Matrix& m) {
    double s = 0.0;
    for (double x : m.data) s = std::max(s, std::abs(x));
    return s;
}

double operator_norm_1(const Matrix& m) {
    double best = 0.0;
    for (int c = 0; c < m.cols; ++c) {
        double s = 0.0;
        for (int r = 0; r < m.rows; ++r) s += std::abs(m(r, c));
        best = std::max(best, s);
    }
    return best;
}

double operator_norm_inf(const Matrix& m) {
    double best = 0.0;
    for (int r = 0; r < m.rows; ++r) {
        double s = 0.0;
        for (int c = 0; c < m.cols; ++c) s += std::abs(m(r, c));
        best = std::max(best, s);
    }
    return best;
}

SpectralResult spectral_norm(const Matrix& m) {
    SpectralResult res;
    if (m.rows == 0 || m.cols == 0) return res;
    const int n = m.cols;
    Vec v(n, 1.0 / std::sqrt(static_cast<double>(n)));
    double lambda_prev = 0.0;
    const double tol = 1e-10;
    const int max_iter = 10000;
    for (int it = 0; it < max_iter; ++it) {
        Vec w = matvec_transposed(m, matvec(m, v));  // W^T W v
        const double lambda = norm2(w);
        res.iterations = it + 1;
        if (lambda == 0.0) {
            res.value = 0.0;
            return res;
        }
        for (double& x : w) x /= lambda;
        v = std::move(w);
        if (std::abs(lambda - lambda_prev) <= tol * std::max(1.0, lambda)) {
            res.value = std::sqrt(lambda);
            return res;
        }
        lambda_prev = lambda;
    }
    res.value = std::sqrt(lambda_prev);
    res.converged = false;
    return res;
}

InverseResult invert(const Matrix& m) {
    InverseResult res;
    if (m.rows != m.cols) throw std::invalid_argument("invert: matrix not square");
    const int n = m.rows;
    Matrix a = m;
    Matrix inv = Matrix::identity(n);
    double max_pivot = 0.0;
    double min_pivot = std::numeric_limits<double>::infinity();
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        const double pv = a(pivot, col);
        if (std::abs(pv) < 1e-300) {
            res.singular = true;
            res.condition_estimate = std::numeric_limits<double>::infinity();
            return res;
        }
        if (pivot != col) {
            for (int c = 0; c < n; ++c) {
                std::swap(a(pivot, c), a(col, c));
                std::swap(inv(pivot, c), inv(col, c));
            }
        }
        max_pivot = std::max(max_pivot, std::abs(pv));
        min_pivot = std::min(min_pivot, std::abs(pv));
        const double inv_pv = 1.0 / pv;
        for (int c = 0; c < n; ++c) {
            a(col, c) *= inv_pv;
            inv(col, c) *= inv_pv;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            if (f == 0.0) continue;
            for (int c = 0; c < n; ++c) {
                a(r, c) -= f * a(col, c);
                inv(r, c) -= f * inv(col, c);
            }
        }
    }
    res.inverse = std::move(inv);
    res.condition_estimate = min_pivot > 0.0 ? max_pivot / min_pivot
                                             : std::numeric_limits<double>::infinity();
    return res;
}

double softplus(double x) {
    // log(1 + e^x) without overflow
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Vec softmax(const Vec& logits) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : logits) mx = std::max(mx, x);
    Vec out(logits.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        denom += out[i];
    }
    for (double& x : out) x /= denom;
    return out;
}

}  // namespace probe
