#include "byzsgd/model.hpp"

#include <cmath>
#include <stdexcept>

namespace byzsgd {

namespace {

double regularizer_value(double lambda, const Vec& x) {
  double s = 0.0;
  for (const double xi : x) s += xi * xi / (1.0 + xi * xi);
  return lambda * s;
}

void add_regularizer_gradient(double lambda, const Vec& x, Vec& g) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double denom = 1.0 + x[j] * x[j];
    g[j] += lambda * 2.0 * x[j] / (denom * denom);
  }
}

}  // namespace

double per_sample_loss(const ObjectiveSpec& spec, const LocalDataset& ds, std::size_t i,
                       const Vec& x) {
  if (i >= ds.size()) throw std::out_of_range("per_sample_loss: sample index");
  const double r = dot(ds.features[i], x) - ds.responses[i];
  double v = 0.5 * r * r;
  if (spec.kind == ObjectiveKind::kSmoothNonconvex)
    v += regularizer_value(spec.nonconvex_weight, x);
  return v;
}

Vec per_sample_gradient(const ObjectiveSpec& spec, const LocalDataset& ds, std::size_t i,
                        const Vec& x) {
  if (i >= ds.size()) throw std::out_of_range("per_sample_gradient: sample index");
  const double r = dot(ds.features[i], x) - ds.responses[i];
  Vec g = scaled(ds.features[i], r);
  if (spec.kind == ObjectiveKind::kSmoothNonconvex)
    add_regularizer_gradient(spec.nonconvex_weight, x, g);
  return g;
}

Vec local_full_gradient(const ObjectiveSpec& spec, const LocalDataset& ds, const Vec& x) {
  const std::size_t n = ds.size();
  if (n == 0) throw std::invalid_argument("local_full_gradient: empty dataset");
  Vec g = zeros(x.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double r = dot(ds.features[i], x) - ds.responses[i];
    axpy(g, r, ds.features[i]);
  }
  scale_inplace(g, 1.0 / static_cast<double>(n));
  if (spec.kind == ObjectiveKind::kSmoothNonconvex)
    add_regularizer_gradient(spec.nonconvex_weight, x, g);
  return g;
}

Vec global_gradient(const ObjectiveSpec& spec, const std::vector<LocalDataset>& worlds,
                    const Vec& x) {
  if (worlds.empty()) throw std::invalid_argument("global_gradient: zero workers");
  Vec g = zeros(x.size());
  for (const LocalDataset& ds : worlds) {
    const Vec gr = local_full_gradient(spec, ds, x);
    axpy(g, 1.0, gr);
  }
  scale_inplace(g, 1.0 / static_cast<double>(worlds.size()));
  return g;
}

Vec minibatch_gradient(Rng& rng, const ObjectiveSpec& spec, const LocalDataset& ds,
                       std::size_t b, const Vec& x) {
  const std::size_t n = ds.size();
  if (b < 1 || b > n) throw std::invalid_argument("minibatch_gradient: batch size out of range");
  const std::vector<std::size_t> batch = rng.sample_without_replacement(n, b);
  Vec g = zeros(x.size());
  for (const std::size_t i : batch) {
    const double r = dot(ds.features[i], x) - ds.responses[i];
    axpy(g, r, ds.features[i]);
  }
  scale_inplace(g, 1.0 / static_cast<double>(b));
  if (spec.kind == ObjectiveKind::kSmoothNonconvex)
    add_regularizer_gradient(spec.nonconvex_weight, x, g);
  return g;
}

Vec project(const Vec& x, const DomainSpec& dom) {
  if (!dom.bounded()) return x;
  Vec delta = x;
  if (!dom.center.empty()) delta = sub(x, dom.center);
  const double n = norm(delta);
  if (n <= dom.radius) return x;
  Vec out = scaled(delta, dom.radius / n);
  if (!dom.center.empty()) out = add(out, dom.center);
  return out;
}

Mat quadratic_hessian(const std::vector<LocalDataset>& worlds) {
  const std::size_t d = worlds.front().dim();
  Mat h(d, d);
  for (const LocalDataset& ds : worlds) {
    const double wgt = 1.0 / (static_cast<double>(worlds.size()) * static_cast<double>(ds.size()));
    for (const Vec& w : ds.features) {
      for (std::size_t i = 0; i < d; ++i) {
        const double wi = w[i] * wgt;
        if (wi == 0.0) continue;
        for (std::size_t j = 0; j < d; ++j) h(i, j) += wi * w[j];
      }
    }
  }
  return h;
}

Vec quadratic_rhs(const std::vector<LocalDataset>& worlds) {
  const std::size_t d = worlds.front().dim();
  Vec b = zeros(d);
  for (const LocalDataset& ds : worlds) {
    const double wgt = 1.0 / (static_cast<double>(worlds.size()) * static_cast<double>(ds.size()));
    for (std::size_t i = 0; i < ds.size(); ++i) axpy(b, wgt * ds.responses[i], ds.features[i]);
  }
  return b;
}

Vec quadratic_optimum(const std::vector<LocalDataset>& worlds) {
  return solve_linear(quadratic_hessian(worlds), quadratic_rhs(worlds));
}

CurvatureResult curvature_constants(const ObjectiveSpec& spec,
                                    const std::vector<LocalDataset>& worlds) {
  const Mat h = quadratic_hessian(worlds);
  const std::size_t d = h.rows;
  CurvatureResult res;

  auto apply_h = [&](const Vec& v, Vec& out) { out = matvec(h, v); };
  const PowerResult top = power_iteration(apply_h, d);
  const double l_quad = std::max(top.value, 0.0);

  if (l_quad <= 0.0) {
    res.L = spec.kind == ObjectiveKind::kSmoothNonconvex ? 2.0 * spec.nonconvex_weight : 0.0;
    res.mu = 0.0;
    res.mu_degenerate = true;
    return res;
  }

  if (spec.kind == ObjectiveKind::kSmoothNonconvex) {
    res.L = l_quad + 2.0 * spec.nonconvex_weight;
    res.mu = 0.0;
    return res;
  }

  // Smallest eigenvalue by power iteration on L*I - H (PSD shift).
  auto apply_shift = [&](const Vec& v, Vec& out) {
    out = matvec(h, v);
    for (std::size_t i = 0; i < d; ++i) out[i] = l_quad * v[i] - out[i];
  };
  const PowerResult shifted = power_iteration(apply_shift, d);
  double mu = l_quad - std::max(shifted.value, 0.0);
  if (mu < 1e-10 * l_quad) {
    mu = 0.0;
    res.mu_degenerate = true;
  }
  res.L = l_quad;
  res.mu = mu;
  return res;
}

double measure_kappa(const ObjectiveSpec& spec, const std::vector<LocalDataset>& worlds,
                     const std::vector<Vec>& probes) {
  if (probes.empty()) throw std::invalid_argument("measure_kappa: empty probe set");
  double best = 0.0;
  for (const Vec& x : probes) {
    const Vec g = global_gradient(spec, worlds, x);
    for (const LocalDataset& ds : worlds) {
      const Vec gr = local_full_gradient(spec, ds, x);
      best = std::max(best, distance(gr, g));
    }
  }
  return best;
}

std::optional<double> kappa_ball_bound_quadratic(const std::vector<LocalDataset>& worlds,
                                                 const DomainSpec& dom) {
  if (!dom.bounded()) return std::nullopt;
  const std::size_t d = worlds.front().dim();
  const Vec xc = dom.center.empty() ? zeros(d) : dom.center;

  // Per-worker second moment A_r and rhs b_r; grad F_r(x) = A_r x - b_r.
  Mat a_bar(d, d);
  Vec b_bar = zeros(d);
  std::vector<Mat> a_r(worlds.size());
  std::vector<Vec> b_r(worlds.size());
  for (std::size_t r = 0; r < worlds.size(); ++r) {
    const LocalDataset& ds = worlds[r];
    Mat a(d, d);
    Vec b = zeros(d);
    const double wgt = 1.0 / static_cast<double>(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const Vec& w = ds.features[i];
      for (std::size_t p = 0; p < d; ++p) {
        const double wp = w[p] * wgt;
        if (wp == 0.0) continue;
        for (std::size_t q = 0; q < d; ++q) a(p, q) += wp * w[q];
      }
      axpy(b, wgt * ds.responses[i], w);
    }
    for (std::size_t idx = 0; idx < a.a.size(); ++idx) a_bar.a[idx] += a.a[idx];
    axpy(b_bar, 1.0, b);
    a_r[r] = std::move(a);
    b_r[r] = std::move(b);
  }
  const double inv_r = 1.0 / static_cast<double>(worlds.size());
  for (double& v : a_bar.a) v *= inv_r;
  scale_inplace(b_bar, inv_r);

  double best = 0.0;
  for (std::size_t r = 0; r < worlds.size(); ++r) {
    const Mat diff = mat_sub(a_r[r], a_bar);
    const Vec at_center = sub(matvec(diff, xc), sub(b_r[r], b_bar));
    best = std::max(best, norm(at_center) + dom.radius * spectral_norm_symmetric(diff));
  }
  return best;
}

double measure_sigma(const ObjectiveSpec& spec, const std::vector<LocalDataset>& worlds,
                     const std::vector<Vec>& probes) {
  if (probes.empty()) throw std::invalid_argument("measure_sigma: empty probe set");
  double best_sq = 0.0;
  for (const Vec& x : probes) {
    for (const LocalDataset& ds : worlds) {
      const Vec gr = local_full_gradient(spec, ds, x);
      double acc = 0.0;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const Vec gi = per_sample_gradient(spec, ds, i, x);
        acc += sq_norm(sub(gi, gr));
      }
      best_sq = std::max(best_sq, acc / static_cast<double>(ds.size()));
    }
  }
  return std::sqrt(best_sq);
}

double measure_second_moment(const ObjectiveSpec& spec,
                             const std::vector<LocalDataset>& worlds,
                             const std::vector<Vec>& probes) {
  if (probes.empty()) throw std::invalid_argument("measure_second_moment: empty probe set");
  double best = 0.0;
  for (const Vec& x : probes) {
    for (const LocalDataset& ds : worlds) {
      double acc = 0.0;
      for (std::size_t i = 0; i < ds.size(); ++i)
        acc += sq_norm(per_sample_gradient(spec, ds, i, x));
      best = std::max(best, acc / static_cast<double>(ds.size()));
    }
  }
  return best;
}

std::vector<Vec> default_probes(const std::vector<LocalDataset>& worlds,
                                const DomainSpec& dom, std::uint64_t seed) {
  const std::size_t d = worlds.front().dim();
  std::vector<Vec> probes;
  probes.push_back(zeros(d));
  Vec xstar;
  try {
    xstar = quadratic_optimum(worlds);
    probes.push_back(project(xstar, dom));
  } catch (const std::runtime_error&) {
    xstar = zeros(d);  // singular normal equations: skip the optimum probe
  }
  const double radius = dom.bounded() ? dom.radius : 2.0 * norm(xstar) + 1.0;
  const Vec center = dom.center.empty() ? zeros(d) : dom.center;
  Rng rng = Rng::stream(seed, StreamTag::kProbe);
  for (int p = 0; p < 16; ++p) {
    Vec dir = rng.normal_vec(d);
    const double n = norm(dir);
    const double u = std::pow(rng.uniform01(), 1.0 / static_cast<double>(d));
    scale_inplace(dir, n > 0 ? radius * u / n : 0.0);
    probes.push_back(add(center, dir));
  }
  return probes;
}

}  // namespace byzsgd
