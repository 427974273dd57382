#include "ergolab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ergolab/errors.hpp"

namespace ergolab {

Matrix::Matrix(int n, std::vector<double> row_major) : n_(n), a_(std::move(row_major)) {
    if (a_.size() != static_cast<size_t>(n) * n) {
        throw StructuralError("matrix data length does not match a square " + std::to_string(n) + "x" +
                              std::to_string(n) + " layout");
    }
}

Matrix Matrix::identity(int n) {
    Matrix m(n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(const std::vector<double>& d) {
    Matrix m(static_cast<int>(d.size()));
    for (size_t i = 0; i < d.size(); ++i) m.at(static_cast<int>(i), static_cast<int>(i)) = d[i];
    return m;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
    if (n_ != rhs.n_) throw StructuralError("matrix size mismatch in product");
    Matrix out(n_);
    for (int i = 0; i < n_; ++i) {
        for (int k = 0; k < n_; ++k) {
            const double aik = at(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < n_; ++j) out.at(i, j) += aik * rhs.at(k, j);
        }
    }
    return out;
}

Matrix Matrix::operator+(const Matrix& rhs) const {
    if (n_ != rhs.n_) throw StructuralError("matrix size mismatch in sum");
    Matrix out(n_);
    for (size_t i = 0; i < a_.size(); ++i) out.a_[i] = a_[i] + rhs.a_[i];
    return out;
}

Matrix Matrix::operator-(const Matrix& rhs) const {
    if (n_ != rhs.n_) throw StructuralError("matrix size mismatch in difference");
    Matrix out(n_);
    for (size_t i = 0; i < a_.size(); ++i) out.a_[i] = a_[i] - rhs.a_[i];
    return out;
}

Matrix Matrix::scaled(double s) const {
    Matrix out(n_);
    for (size_t i = 0; i < a_.size(); ++i) out.a_[i] = a_[i] * s;
    return out;
}

Matrix Matrix::transposed() const {
    Matrix out(n_);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) out.at(j, i) = at(i, j);
    return out;
}

std::vector<double> Matrix::apply(const std::vector<double>& v) const {
    if (static_cast<int>(v.size()) != n_) throw StructuralError("matrix/vector size mismatch");
    std::vector<double> out(n_, 0.0);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) out[i] += at(i, j) * v[j];
    return out;
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::fabs(v));
    return m;
}

double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data()) s += v * v;
    return std::sqrt(s);
}

std::vector<double> symmetric_eigenvalues(const Matrix& in) {
    const int n = in.size();
    Matrix a = in;
    // Cyclic Jacobi rotations; tiny sizes, so sweep until off-diagonal dies.
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
        if (off < 1e-300) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (apq == 0.0) continue;
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a.at(k, p);
                    const double akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a.at(p, k);
                    const double aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (int i = 0; i < n; ++i) eig[i] = a.at(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

double spectral_norm(const Matrix& m) {
    // Scale first so A^T A cannot overflow/underflow for extreme entries.
    const double scale = m.max_abs();
    if (scale == 0.0) return 0.0;
    const Matrix b = m.scaled(1.0 / scale);
    const Matrix bt_b = b.transposed() * b;
    const std::vector<double> eig = symmetric_eigenvalues(bt_b);
    const double lmax = std::max(0.0, eig.back());
    return scale * std::sqrt(lmax);
}

double matrix_norm(const Matrix& m, MatrixNorm norm) {
    return norm == MatrixNorm::Spectral ? spectral_norm(m) : frobenius_norm(m);
}

std::vector<double> eigenvalue_magnitudes_2x2(const Matrix& m) {
    const double tr = m.at(0, 0) + m.at(1, 1);
    const double det = m.at(0, 0) * m.at(1, 1) - m.at(0, 1) * m.at(1, 0);
    const double disc = tr * tr / 4.0 - det;
    if (disc >= 0.0) {
        const double r = std::sqrt(disc);
        const double l1 = tr / 2.0 + r;
        const double l2 = tr / 2.0 - r;
        double hi = std::fabs(l1), lo = std::fabs(l2);
        if (hi < lo) std::swap(hi, lo);
        return {hi, lo};
    }
    const double mag = std::sqrt(det); // complex pair, |lambda| = sqrt(det)
    return {mag, mag};
}

double spectral_radius(const Matrix& m) {
    const int n = m.size();
    if (n == 0) return 0.0;
    if (n == 1) return std::fabs(m.at(0, 0));
    if (n == 2) return eigenvalue_magnitudes_2x2(m)[0];

    // Gelfand via normalized squaring: after j squarings the scaled log-norm
    // acc satisfies log||A^(2^j)|| = acc, so log(rho) ~ acc / 2^j. The
    // polynomial factor from Jordan blocks decays like log(poly)/2^j.
    double n0 = frobenius_norm(m);
    if (n0 == 0.0) return 0.0;
    Matrix b = m.scaled(1.0 / n0);
    double acc = std::log(n0);
    double pow2 = 1.0;
    for (int j = 0; j < 50; ++j) {
        b = b * b;
        const double nb = frobenius_norm(b);
        if (nb == 0.0) return 0.0; // nilpotent
        acc = 2.0 * acc + std::log(nb);
        b = b.scaled(1.0 / nb);
        pow2 *= 2.0;
    }
    return std::exp(acc / pow2);
}

double log_spectral_radius(const Matrix& m) {
    const double r = spectral_radius(m);
    if (r == 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(r);
}

Matrix matrix_exponential(const Matrix& m) {
    const int n = m.size();
    // Scale down until ||A/2^s|| is small, Taylor, then square back up.
    double nrm = frobenius_norm(m);
    int s = 0;
    while (nrm > 0.5 && s < 64) {
        nrm /= 2.0;
        ++s;
    }
    const Matrix a = m.scaled(std::ldexp(1.0, -s));
    Matrix term = Matrix::identity(n);
    Matrix sum = Matrix::identity(n);
    for (int k = 1; k <= 24; ++k) {
        term = (term * a).scaled(1.0 / k);
        sum = sum + term;
        if (term.max_abs() < 1e-18) break;
    }
    for (int i = 0; i < s; ++i) sum = sum * sum;
    return sum;
}

std::vector<double> solve_linear(const Matrix& a_in, const std::vector<double>& b_in, bool* singular) {
    const int n = a_in.size();
    if (static_cast<int>(b_in.size()) != n) throw StructuralError("linear solve size mismatch");
    Matrix a = a_in;
    std::vector<double> b = b_in;
    if (singular) *singular = false;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(a.at(r, col)) > std::fabs(a.at(pivot, col))) pivot = r;
        if (std::fabs(a.at(pivot, col)) < 1e-300) {
            if (singular) *singular = true;
            return std::vector<double>(static_cast<size_t>(n), 0.0);
        }
        if (pivot != col) {
            for (int j = 0; j < n; ++j) std::swap(a.at(pivot, j), a.at(col, j));
            std::swap(b[static_cast<size_t>(pivot)], b[static_cast<size_t>(col)]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a.at(r, col) / a.at(col, col);
            if (f == 0.0) continue;
            for (int j = col; j < n; ++j) a.at(r, j) -= f * a.at(col, j);
            b[static_cast<size_t>(r)] -= f * b[static_cast<size_t>(col)];
        }
    }
    std::vector<double> x(static_cast<size_t>(n), 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[static_cast<size_t>(r)];
        for (int j = r + 1; j < n; ++j) s -= a.at(r, j) * x[static_cast<size_t>(j)];
        x[static_cast<size_t>(r)] = s / a.at(r, r);
    }
    return x;
}

Matrix numerical_jacobian(const std::function<void(const std::vector<double>&, std::vector<double>&)>& field,
                          const std::vector<double>& x, double h) {
    const int n = static_cast<int>(x.size());
    Matrix j(n);
    std::vector<double> xp = x, xm = x, fp(n), fm(n);
    for (int c = 0; c < n; ++c) {
        xp[c] = x[c] + h;
        xm[c] = x[c] - h;
        field(xp, fp);
        field(xm, fm);
        for (int r = 0; r < n; ++r) j.at(r, c) = (fp[r] - fm[r]) / (2.0 * h);
        xp[c] = x[c];
        xm[c] = x[c];
    }
    return j;
}

} // namespace ergolab
