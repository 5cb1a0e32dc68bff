#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace probe {

using Vec = std::vector<double>;

// Dense row-major matrix. Small sizes throughout (hidden dims ~16), so no
// BLAS; everything stays readable and deterministic.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    std::span<double> row(int r) { return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
    std::span<const double> row(int r) const { return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }

    static Matrix identity(int n);
};

bool same_shape(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);
Vec matvec(const Matrix& m, const Vec& v);           // m * v
Vec matvec_transposed(const Matrix& m, const Vec& v); // m^T * v

Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);
Vec hadamard(const Vec& a, const Vec& b);
void axpy(double alpha, const Vec& x, Vec& y);
double dot(const Vec& a, const Vec& b);
double norm2(const Vec& v);
double norm_p(const Vec& v, double p);  // p >= 1, p = inf via infinity()

double frobenius(const Matrix& m);
double frobenius_inner(const Matrix& a, const Matrix& b);
double trace(const Matrix& m);
double max_abs(const Matrix& m);

// matrix p-norms used by the Lipschitz profile: p=1 max column sum,
// p=inf max row sum, p=2 spectral via power iteration
double operator_norm_1(const Matrix& m);
double operator_norm_inf(const Matrix& m);

struct SpectralResult {
    double value = 0.0;
    bool converged = true;
    int iterations = 0;
};

// Largest singular value by power iteration on W^T W; all-ones start vector,
// tolerance 1e-10, max 10000 iterations. Non-convergence returns the best
// estimate with converged=false.
SpectralResult spectral_norm(const Matrix& m);

struct InverseResult {
    Matrix inverse;
    bool singular = false;
    double condition_estimate = 0.0;  // max|pivot| / min|pivot|
};

// Gauss-Jordan with partial pivoting.
InverseResult invert(const Matrix& m);

// softplus and friends, stable forms
double softplus(double x);
double sigmoid(double x);

Vec softmax(const Vec& logits);

}  // namespace probe
