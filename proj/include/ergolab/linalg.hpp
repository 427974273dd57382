#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace ergolab {

/// Small dense square matrix of doubles, row-major. Sizes here are tiny
/// (2x2 .. 8x8), so everything is O(n^3) direct arithmetic.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(int n) : n_(n), a_(static_cast<size_t>(n) * n, 0.0) {}
    Matrix(int n, std::vector<double> row_major);

    static Matrix identity(int n);
    static Matrix diagonal(const std::vector<double>& d);

    int size() const { return n_; }
    double& at(int i, int j) { return a_[static_cast<size_t>(i) * n_ + j]; }
    double at(int i, int j) const { return a_[static_cast<size_t>(i) * n_ + j]; }
    const std::vector<double>& data() const { return a_; }

    Matrix operator*(const Matrix& rhs) const;
    Matrix operator+(const Matrix& rhs) const;
    Matrix operator-(const Matrix& rhs) const;
    Matrix scaled(double s) const;
    Matrix transposed() const;
    std::vector<double> apply(const std::vector<double>& v) const;

    double max_abs() const;

private:
    int n_ = 0;
    std::vector<double> a_;
};

enum class MatrixNorm { Spectral, Frobenius };

double frobenius_norm(const Matrix& m);

/// Operator 2-norm: largest singular value, via cyclic Jacobi on A^T A.
/// Deterministic and accurate to ~1e-14 relative at these sizes.
double spectral_norm(const Matrix& m);

double matrix_norm(const Matrix& m, MatrixNorm norm);

/// Eigenvalues of a symmetric matrix (ascending), cyclic Jacobi sweeps.
std::vector<double> symmetric_eigenvalues(const Matrix& m);

/// Eigenvalue magnitudes largest->smallest for a general 2x2 (closed form,
/// handles the complex-pair case).
std::vector<double> eigenvalue_magnitudes_2x2(const Matrix& m);

/// Spectral radius of a general square matrix. Closed form for n<=2;
/// otherwise Gelfand's formula rho = lim ||A^m||^(1/m) evaluated by
/// normalized repeated squaring (log-scale is tracked, no overflow).
/// Returns 0 for nilpotent inputs.
double spectral_radius(const Matrix& m);

/// log(spectral_radius), returning -inf when the radius is zero.
double log_spectral_radius(const Matrix& m);

/// exp(A) via scaling-and-squaring with a Taylor kernel. Fine for the
/// tiny, well-scaled matrices used in the near-fixed-point flow patch.
Matrix matrix_exponential(const Matrix& m);

/// Central-difference Jacobian of a vector field at x.
Matrix numerical_jacobian(const std::function<void(const std::vector<double>&, std::vector<double>&)>& field,
                          const std::vector<double>& x, double h = 1e-6);

/// Solves A x = b by Gaussian elimination with partial pivoting.
/// Returns nullopt when the matrix is (numerically) singular.
std::vector<double> solve_linear(const Matrix& a, const std::vector<double>& b, bool* singular = nullptr);

} // namespace ergolab
