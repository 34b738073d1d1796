// Small dense linear-algebra kit: vectors as std::vector<double>, a minimal
// row-major matrix, Gaussian elimination, Cholesky, and matrix-free power
// iteration. Everything is deterministic; no BLAS, no exceptions on the hot
// path.
#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace byzsgd {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b);
double sq_norm(const Vec& a);
double norm(const Vec& a);
Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);
Vec scaled(const Vec& a, double s);
// y += s * x
void axpy(Vec& y, double s, const Vec& x);
void scale_inplace(Vec& a, double s);
Vec zeros(std::size_t d);
double distance(const Vec& a, const Vec& b);

struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  static Mat identity(std::size_t n);
  bool empty() const { return rows == 0 || cols == 0; }
};

Vec matvec(const Mat& m, const Vec& x);
Mat mat_sub(const Mat& a, const Mat& b);

// Solves A x = b by Gaussian elimination with partial pivoting.
// Throws std::runtime_error on a numerically singular system.
Vec solve_linear(Mat a, Vec b);

// Lower-triangular Cholesky factor of a symmetric PSD matrix.
// Throws std::invalid_argument when the matrix is not PSD (within tolerance).
Mat cholesky(const Mat& a);

struct PowerResult {
  double value = 0.0;  // dominant eigenvalue (Rayleigh quotient)
  Vec vector;          // unit eigenvector estimate
  std::size_t iters = 0;
  bool converged = false;
};

// Power iteration on a symmetric PSD operator given as a matvec callback.
// Deterministic start vector unless warm_start is supplied. Tolerance is the
// relative eigenvalue change between sweeps.
PowerResult power_iteration(const std::function<void(const Vec&, Vec&)>& apply,
                            std::size_t dim, std::size_t max_iters = 200,
                            double tol = 1e-10, const Vec* warm_start = nullptr);

// Spectral norm (largest |eigenvalue|) of a symmetric, possibly indefinite
// matrix, via power iteration on M^2.
double spectral_norm_symmetric(const Mat& m, std::size_t max_iters = 200,
                               double tol = 1e-10);

}  // namespace byzsgd
