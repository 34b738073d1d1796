#include "byzsgd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace byzsgd {

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sq_norm(const Vec& a) { return dot(a, a); }

double norm(const Vec& a) { return std::sqrt(sq_norm(a)); }

Vec add(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

Vec sub(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

Vec scaled(const Vec& a, double s) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * s;
  return r;
}

void axpy(Vec& y, double s, const Vec& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

void scale_inplace(Vec& a, double s) {
  for (double& v : a) v *= s;
}

Vec zeros(std::size_t d) { return Vec(d, 0.0); }

double distance(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return std::sqrt(s);
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vec matvec(const Mat& m, const Vec& x) {
  Vec r(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    const double* row = &m.a[i * m.cols];
    for (std::size_t j = 0; j < m.cols; ++j) s += row[j] * x[j];
    r[i] = s;
  }
  return r;
}

Mat mat_sub(const Mat& a, const Mat& b) {
  Mat r(a.rows, a.cols);
  for (std::size_t i = 0; i < a.a.size(); ++i) r.a[i] = a.a[i] - b.a[i];
  return r;
}

Vec solve_linear(Mat a, Vec b) {
  const std::size_t n = a.rows;
  if (a.cols != n || b.size() != n) throw std::invalid_argument("solve_linear: shape mismatch");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::abs(a(col, col));
    for (std::size_t i = col + 1; i < n; ++i) {
      if (std::abs(a(i, col)) > best) {
        best = std::abs(a(i, col));
        pivot = i;
      }
    }
    if (best < 1e-300) throw std::runtime_error("solve_linear: singular matrix");
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(pivot, j), a(col, j));
      std::swap(b[pivot], b[col]);
    }
    const double inv = 1.0 / a(col, col);
    for (std::size_t i = col + 1; i < n; ++i) {
      const double f = a(i, col) * inv;
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a(i, j) -= f * a(col, j);
      b[i] -= f * b[col];
    }
  }
  Vec x(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * x[j];
    x[ii] = s / a(ii, ii);
  }
  return x;
}

Mat cholesky(const Mat& m) {
  const std::size_t n = m.rows;
  if (m.cols != n) throw std::invalid_argument("cholesky: matrix not square");
  Mat l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s < -1e-10) throw std::invalid_argument("cholesky: matrix not PSD");
        l(i, j) = std::sqrt(std::max(s, 0.0));
      } else {
        l(i, j) = l(j, j) > 1e-300 ? s / l(j, j) : 0.0;
      }
    }
  }
  return l;
}

namespace {

// Fixed pseudo-random start so power iteration is deterministic and never
// exactly orthogonal to the dominant eigenspace on structured inputs.
Vec default_start(std::size_t dim) {
  Vec v(dim);
  std::uint64_t state = 0x9e3779b97f4a7c15ULL;
  for (std::size_t i = 0; i < dim; ++i) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    v[i] = static_cast<double>(z >> 11) * 0x1.0p-53 - 0.5;
  }
  const double n = norm(v);
  scale_inplace(v, 1.0 / n);
  return v;
}

}  // namespace

PowerResult power_iteration(const std::function<void(const Vec&, Vec&)>& apply,
                            std::size_t dim, std::size_t max_iters, double tol,
                            const Vec* warm_start) {
  PowerResult res;
  Vec v = (warm_start != nullptr && warm_start->size() == dim && norm(*warm_start) > 0.0)
              ? *warm_start
              : default_start(dim);
  scale_inplace(v, 1.0 / norm(v));
  Vec av(dim, 0.0);
  double lambda_prev = 0.0;
  for (std::size_t it = 0; it < max_iters; ++it) {
    apply(v, av);
    const double lambda = dot(v, av);
    const double n = norm(av);
    res.iters = it + 1;
    if (n < 1e-300) {
      // Operator annihilates the iterate: eigenvalue 0.
      res.value = 0.0;
      res.vector = v;
      res.converged = true;
      return res;
    }
    v = scaled(av, 1.0 / n);
    if (it > 0 && std::abs(lambda - lambda_prev) <= tol * std::max(std::abs(lambda), 1e-300)) {
      res.value = lambda;
      res.vector = v;
      res.converged = true;
      return res;
    }
    lambda_prev = lambda;
  }
  apply(v, av);
  res.value = dot(v, av);
  res.vector = v;
  res.converged = false;
  return res;
}

double spectral_norm_symmetric(const Mat& m, std::size_t max_iters, double tol) {
  if (m.empty()) return 0.0;
  Vec tmp(m.rows, 0.0);
  auto apply = [&](const Vec& x, Vec& out) {
    tmp = matvec(m, x);
    out = matvec(m, tmp);
  };
  const PowerResult r = power_iteration(apply, m.rows, max_iters, tol);
  return std::sqrt(std::max(r.value, 0.0));
}

}  // namespace byzsgd
