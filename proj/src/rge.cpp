#include "byzsgd/rge.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace byzsgd::rge {

namespace {

constexpr std::size_t kMaxAlternations = 100;
constexpr double kSaddleRelTol = 1e-8;
// Relative slack on the termination threshold and relative floor for
// tau_max, both tied to the active input scale sum_i c_i ||g_i||^2. Keeps
// the loop exact for bit-identical columns and stable as gradients shrink
// toward an optimum.
constexpr double kThresholdRelSlack = 1e-12;
constexpr double kTauRelFloor = 1e-18;

}  // namespace

double default_sigma0_sq(double sigma, double b, double kappa, double eps,
                         double eps_prime, double d, double R) {
  if (eps_prime <= 0.0) throw std::invalid_argument("default_sigma0_sq: eps_prime must be > 0");
  if (eps + eps_prime >= 1.0)
    throw std::invalid_argument("default_sigma0_sq: eps + eps_prime must be < 1");
  if (b < 1.0) throw std::invalid_argument("default_sigma0_sq: b must be >= 1");
  const double sampling = 24.0 * sigma * sigma / (b * eps_prime) *
                          (1.0 + d / ((1.0 - (eps + eps_prime)) * R));
  return sampling + 16.0 * kappa * kappa;
}

double default_sigma0_sq_compressed(double g2, double b, double kappa, double eps,
                                    double eps_prime, double d, double k, double R) {
  if (k < 1.0 || k > d)
    throw std::invalid_argument("default_sigma0_sq_compressed: k out of range");
  if (eps_prime <= 0.0)
    throw std::invalid_argument("default_sigma0_sq_compressed: eps_prime must be > 0");
  if (eps + eps_prime >= 1.0)
    throw std::invalid_argument("default_sigma0_sq_compressed: eps + eps_prime must be < 1");
  if (b < 1.0) throw std::invalid_argument("default_sigma0_sq_compressed: b must be >= 1");
  const double sampling = 24.0 * d * g2 / (k * b * eps_prime) *
                          (1.0 + k / ((1.0 - (eps + eps_prime)) * R));
  return sampling + 16.0 * kappa * kappa;
}

double weight_cap(double alpha, std::size_t total) {
  return (4.0 - alpha) / (alpha * (2.0 + alpha) * static_cast<double>(total));
}

std::size_t min_active_floor(double alpha, std::size_t total) {
  const double units = alpha * (2.0 + alpha) * static_cast<double>(total) / (4.0 - alpha);
  return static_cast<std::size_t>(std::ceil(units - 1e-9));
}

namespace {

// Water-filled extreme points of the capped simplex with respect to s: the
// mass-1 assignments concentrating on the smallest / largest entries.
struct FitInterval {
  Vec w_min, w_max;
  double s_min = 0.0, s_max = 0.0;
};

FitInterval build_fit_interval(const Vec& s, double cap) {
  const std::size_t n = s.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return s[a] < s[b]; });

  FitInterval fi;
  fi.w_min = Vec(n, 0.0);
  fi.w_max = Vec(n, 0.0);
  double remaining = 1.0;
  for (const std::size_t j : order) {
    const double m = std::min(cap, remaining);
    fi.w_min[j] = m;
    remaining -= m;
    if (remaining <= 0.0) break;
  }
  remaining = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const double m = std::min(cap, remaining);
    fi.w_max[*it] = m;
    remaining -= m;
    if (remaining <= 0.0) break;
  }
  fi.s_min = dot(s, fi.w_min);
  fi.s_max = dot(s, fi.w_max);
  return fi;
}

double interpolation_coeff(const FitInterval& fi, double fitted) {
  // w = lambda * w_min + (1 - lambda) * w_max reaches <s,w> = fitted
  const double span = fi.s_max - fi.s_min;
  if (span <= 0.0) return 1.0;
  return std::clamp((fi.s_max - fitted) / span, 0.0, 1.0);
}

}  // namespace

ColumnFit column_fit(const Vec& s, double target, double cap) {
  const std::size_t n = s.size();
  if (cap <= 0.0) throw std::invalid_argument("column_fit: cap must be positive");
  if (static_cast<double>(n) * cap < 1.0 - 1e-12)
    throw InfeasibleCapError("column_fit: |A| * cap < 1, capped simplex is empty");
  const FitInterval fi = build_fit_interval(s, cap);
  ColumnFit out;
  out.fitted = std::clamp(target, fi.s_min, fi.s_max);
  const double lambda = interpolation_coeff(fi, out.fitted);
  out.w = Vec(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    out.w[j] = lambda * fi.w_min[j] + (1.0 - lambda) * fi.w_max[j];
  return out;
}

SaddleSolution solve_saddle(const GradientMatrix& g_active, const Vec& c, double cap,
                            const Vec* warm_direction) {
  const std::size_t m = g_active.count();
  const std::size_t d = g_active.dim;
  if (m == 0) throw std::invalid_argument("solve_saddle: no columns");
  if (c.size() != m) throw std::invalid_argument("solve_saddle: weight length mismatch");
  if (static_cast<double>(m) * cap < 1.0 - 1e-12)
    throw InfeasibleCapError("solve_saddle: |A| * cap < 1, capped simplex is empty");

  const auto& cols = g_active.cols;
  std::vector<double> sqrt_c(m);
  for (std::size_t i = 0; i < m; ++i) sqrt_c[i] = std::sqrt(std::max(c[i], 0.0));

  // Initial direction: principal direction of the residuals of the uniform
  // (clipped to cap) weight matrix, unless a warm start is given.
  Vec v;
  if (warm_direction != nullptr && warm_direction->size() == d && norm(*warm_direction) > 0.0) {
    v = scaled(*warm_direction, 1.0 / norm(*warm_direction));
  } else {
    const double u = std::min(1.0 / static_cast<double>(m), cap);
    Vec mean_col = zeros(d);
    for (const Vec& col : cols) axpy(mean_col, u, col);
    std::vector<Vec> resid(m);
    for (std::size_t i = 0; i < m; ++i) resid[i] = scaled(sub(cols[i], mean_col), sqrt_c[i]);
    auto apply = [&](const Vec& x, Vec& out) {
      out.assign(d, 0.0);
      for (const Vec& z : resid) axpy(out, dot(z, x), z);
    };
    v = power_iteration(apply, d).vector;
  }

  struct Snapshot {
    Vec v, tau, lambda, w_min, w_max;
    double phi = -1.0;
  };
  Snapshot best;

  Vec s(m), tau(m), lambda(m), fitted(m);
  Vec u_min, u_max;
  FitInterval fi;
  double phi = 0.0;
  bool converged = false;
  std::size_t alternations = 0;

  for (std::size_t iter = 0; iter < kMaxAlternations; ++iter) {
    alternations = iter + 1;

    // W-step: all columns share the projection vector s = G^T v and the
    // achievable interval; tau_i = (s_i - clamp(s_i))^2.
    for (std::size_t i = 0; i < m; ++i) s[i] = dot(cols[i], v);
    fi = build_fit_interval(s, cap);
    phi = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      fitted[i] = std::clamp(s[i], fi.s_min, fi.s_max);
      const double miss = s[i] - fitted[i];
      tau[i] = miss * miss;
      lambda[i] = interpolation_coeff(fi, fitted[i]);
      phi += c[i] * tau[i];
    }
    if (phi > best.phi) best = Snapshot{v, tau, lambda, fi.w_min, fi.w_max, phi};

    // Y-step: principal direction of the sqrt(c)-weighted residuals of the
    // current W; its top eigenvalue is max_Y Phi(W, Y).
    u_min = zeros(d);
    u_max = zeros(d);
    for (std::size_t j = 0; j < m; ++j) {
      if (fi.w_min[j] != 0.0) axpy(u_min, fi.w_min[j], cols[j]);
      if (fi.w_max[j] != 0.0) axpy(u_max, fi.w_max[j], cols[j]);
    }
    std::vector<Vec> resid(m);
    for (std::size_t i = 0; i < m; ++i) {
      Vec r = cols[i];
      axpy(r, -lambda[i], u_min);
      axpy(r, -(1.0 - lambda[i]), u_max);
      resid[i] = scaled(r, sqrt_c[i]);
    }
    auto apply = [&](const Vec& x, Vec& out) {
      out.assign(d, 0.0);
      for (const Vec& z : resid) axpy(out, dot(z, x), z);
    };
    const PowerResult pr = power_iteration(apply, d, 200, 1e-10, &v);
    const double upper = std::max(pr.value, 0.0);  // Phi(W, best Y)

    // Duality-gap form of the relative-change test: W and Y are mutual best
    // responses when max_Y Phi(W, Y) is within tolerance of Phi(W, v).
    const double gap = upper - phi;
    const double scale = std::max({upper, phi, 1e-300});
    if (gap <= kSaddleRelTol * scale) {
      converged = true;
      break;
    }
    v = pr.vector;
  }

  const Snapshot chosen =
      converged ? Snapshot{v, tau, lambda, fi.w_min, fi.w_max, phi} : best;

  SaddleSolution sol;
  sol.direction = chosen.v;
  sol.tau = chosen.tau;
  sol.phi = chosen.phi;
  sol.converged = converged;
  sol.alternations = alternations;
  sol.weights.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    Vec w(m, 0.0);
    for (std::size_t j = 0; j < m; ++j)
      w[j] = chosen.lambda[i] * chosen.w_min[j] + (1.0 - chosen.lambda[i]) * chosen.w_max[j];
    sol.weights[i] = std::move(w);
  }
  return sol;
}

FilterState make_filter_state(std::size_t m, double eps_tilde, double sigma0_sq) {
  if (eps_tilde < 0.0 || eps_tilde > 0.25 + 1e-12)
    throw std::invalid_argument("make_filter_state: eps_tilde must lie in [0, 1/4]");
  if (sigma0_sq < 0.0) throw std::invalid_argument("make_filter_state: negative sigma0_sq");
  FilterState st;
  st.c = Vec(m, 1.0);
  st.active.resize(m);
  std::iota(st.active.begin(), st.active.end(), std::size_t{0});
  st.alpha = 1.0 - eps_tilde;
  st.sigma0_sq = sigma0_sq;
  return st;
}

FilterRoundResult filter_round(FilterState& state, const SaddleSolution& sol,
                               std::size_t total, double scale_hint) {
  const std::size_t na = state.active.size();
  if (sol.tau.size() != na) throw std::invalid_argument("filter_round: tau/active mismatch");

  double sum_c_tau = 0.0;
  double tau_max = 0.0;
  for (std::size_t i = 0; i < na; ++i) {
    sum_c_tau += state.c[state.active[i]] * sol.tau[i];
    tau_max = std::max(tau_max, sol.tau[i]);
  }

  const double threshold = 4.0 * static_cast<double>(total) * state.sigma0_sq;
  const double slack = kThresholdRelSlack * scale_hint;
  FilterRoundResult res;
  if (sum_c_tau <= threshold + slack) {
    res.terminated = true;
    return res;
  }

  if (tau_max <= kTauRelFloor * std::max(scale_hint, DBL_MIN))
    throw FilterCollapsedError(
        "filter inconsistency: threshold exceeded with vanishing tau_max "
        "(sigma0_sq set far too small or data inconsistent)");

  std::vector<std::size_t> kept;
  kept.reserve(na);
  for (std::size_t i = 0; i < na; ++i) {
    const std::size_t idx = state.active[i];
    state.c[idx] *= (1.0 - sol.tau[i] / tau_max);
    if (state.c[idx] < 0.5) {
      res.removed.push_back(idx);
    } else {
      kept.push_back(idx);
    }
  }
  state.active = std::move(kept);
  state.rounds += 1;
  if (state.active.empty())
    throw FilterCollapsedError("filter collapsed: active set became empty");
  return res;
}

Vec estimate(const GradientMatrix& g, double sigma0_sq, double eps_tilde,
             EstimateReport* report) {
  const std::size_t m = g.count();
  if (m < 2) throw std::invalid_argument("estimate: need at least two columns");
  for (const Vec& col : g.cols)
    if (col.size() != g.dim) throw std::invalid_argument("estimate: ragged columns");

  FilterState state = make_filter_state(m, eps_tilde, sigma0_sq);
  const double cap = weight_cap(state.alpha, m);

  EstimateReport local;
  EstimateReport& rep = report != nullptr ? *report : local;
  rep = EstimateReport{};
  rep.min_active_seen = m;

  Vec warm_v;
  Vec prev_c = state.c;
  bool terminated = false;

  for (std::size_t round = 0; round <= m && !terminated; ++round) {
    const std::size_t na = state.active.size();
    if (static_cast<double>(na) * cap < 1.0 - 1e-12)
      throw InfeasibleCapError("estimate: active set fell below the feasibility floor");
    rep.min_active_seen = std::min(rep.min_active_seen, na);

    GradientMatrix g_a;
    g_a.dim = g.dim;
    g_a.cols.reserve(na);
    Vec c_a(na);
    double scale_hint = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
      const std::size_t idx = state.active[i];
      g_a.cols.push_back(g.cols[idx]);
      c_a[i] = state.c[idx];
      scale_hint += c_a[i] * sq_norm(g.cols[idx]);
    }

    const SaddleSolution sol =
        solve_saddle(g_a, c_a, cap, warm_v.empty() ? nullptr : &warm_v);
    warm_v = sol.direction;
    rep.phi_trace.push_back(sol.phi);
    rep.converged = rep.converged && sol.converged;

    // argmax of tau before the update, for the structural invariant
    std::size_t argmax_idx = state.active[0];
    double tau_best = -1.0;
    for (std::size_t i = 0; i < na; ++i) {
      if (sol.tau[i] > tau_best) {
        tau_best = sol.tau[i];
        argmax_idx = state.active[i];
      }
    }

    const FilterRoundResult rr = filter_round(state, sol, m, scale_hint);
    if (rr.terminated) {
      rep.sum_c_tau_final = sol.phi;
      terminated = true;
      break;
    }

    rep.removed.insert(rep.removed.end(), rr.removed.begin(), rr.removed.end());
    if (std::find(rr.removed.begin(), rr.removed.end(), argmax_idx) == rr.removed.end())
      rep.argmax_removed_each_round = false;
    for (std::size_t i = 0; i < m; ++i)
      if (state.c[i] > prev_c[i] + 1e-15 || state.c[i] < -1e-15 || state.c[i] > 1.0 + 1e-15)
        rep.weights_monotone = false;
    prev_c = state.c;
  }

  rep.rounds = state.rounds;
  rep.final_active = state.active;
  rep.min_active_seen = std::min(rep.min_active_seen, state.active.size());

  Vec ghat = zeros(g.dim);
  for (const std::size_t idx : state.active) axpy(ghat, 1.0, g.cols[idx]);
  scale_inplace(ghat, 1.0 / static_cast<double>(state.active.size()));
  return ghat;
}

double max_eig_deviation(const std::vector<Vec>& points, const Vec& center) {
  if (points.empty()) throw std::invalid_argument("max_eig_deviation: no points");
  const std::size_t d = center.size();
  std::vector<Vec> dev(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) dev[i] = sub(points[i], center);
  const double inv = 1.0 / static_cast<double>(points.size());
  auto apply = [&](const Vec& x, Vec& out) {
    out.assign(d, 0.0);
    for (const Vec& z : dev) axpy(out, dot(z, x) * inv, z);
  };
  return std::max(power_iteration(apply, d).value, 0.0);
}

ConcentrationCheck full_batch_concentration_check(const std::vector<Vec>& honest_grads,
                                                  double kappa) {
  Vec mean = zeros(honest_grads.front().size());
  for (const Vec& grad : honest_grads) axpy(mean, 1.0, grad);
  scale_inplace(mean, 1.0 / static_cast<double>(honest_grads.size()));
  ConcentrationCheck chk;
  chk.lambda_max = max_eig_deviation(honest_grads, mean);
  chk.ok = chk.lambda_max <= 4.0 * kappa * kappa + 1e-9;
  return chk;
}

std::string EstimateReport::to_json() const {
  auto append_size_list = [](std::string& out, const std::vector<std::size_t>& xs) {
    out += '[';
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i != 0) out += ',';
      out += std::to_string(xs[i]);
    }
    out += ']';
  };
  std::string out = "{\"rounds\":" + std::to_string(rounds) + ",\"active_indices\":";
  append_size_list(out, final_active);
  out += ",\"removed_indices\":";
  append_size_list(out, removed);
  out += ",\"phi_trace\":[";
  char buf[32];
  for (std::size_t i = 0; i < phi_trace.size(); ++i) {
    if (i != 0) out += ',';
    std::snprintf(buf, sizeof(buf), "%.17g", phi_trace[i]);
    out += buf;
  }
  out += "],\"converged\":";
  out += converged ? "true" : "false";
  out += '}';
  return out;
}

}  // namespace byzsgd::rge
