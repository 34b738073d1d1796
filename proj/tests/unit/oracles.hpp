// Test-only oracles, deliberately independent of the library's numerical
// paths: a cyclic Jacobi eigensolver for small symmetric matrices and a
// central-finite-difference gradient.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "byzsgd/linalg.hpp"

namespace oracles {

using byzsgd::Mat;
using byzsgd::Vec;

// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations,
// returned in descending order.
inline std::vector<double> jacobi_eigenvalues(Mat a, int max_sweeps = 60) {
  const std::size_t n = a.rows;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = 0.5 * (a(q, q) - a(p, p)) / a(p, q);
        const double t =
            (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double app = a(p, p), aqq = a(q, q), apq = a(p, q);
        a(p, p) = c * c * app - 2.0 * s * c * apq + s * s * aqq;
        a(q, q) = s * s * app + 2.0 * s * c * apq + c * c * aqq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(p, k) = a(k, p);
          a(k, q) = s * akp + c * akq;
          a(q, k) = a(k, q);
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end(), std::greater<double>());
  return eig;
}

inline double jacobi_lambda_max(const Mat& a) { return jacobi_eigenvalues(a).front(); }

// Central finite differences of a scalar function.
inline Vec finite_difference_gradient(const std::function<double(const Vec&)>& f,
                                      const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    Vec hi = x, lo = x;
    hi[j] += h;
    lo[j] -= h;
    g[j] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

// Dense deviation second-moment matrix (1/m) sum (p - c)(p - c)^T.
inline Mat deviation_matrix(const std::vector<Vec>& points, const Vec& center) {
  const std::size_t d = center.size();
  Mat m(d, d);
  for (const Vec& p : points) {
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        m(i, j) += (p[i] - center[i]) * (p[j] - center[j]);
  }
  const double inv = 1.0 / static_cast<double>(points.size());
  for (double& v : m.a) v *= inv;
  return m;
}

// All size-k index subsets of [n], lexicographic.
inline std::vector<std::vector<std::size_t>> all_subsets(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> comb(k);
  for (std::size_t i = 0; i < k; ++i) comb[i] = i;
  for (;;) {
    out.push_back(comb);
    std::size_t pos = k;
    while (pos > 0 && comb[pos - 1] == n - k + (pos - 1)) --pos;
    if (pos == 0) break;
    ++comb[pos - 1];
    for (std::size_t j = pos; j < k; ++j) comb[j] = comb[j - 1] + 1;
  }
  return out;
}

}  // namespace oracles
