#include "byzsgd/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace byzsgd::datagen {

namespace {

Vec shift_for_worker(std::size_t r, std::size_t d, double rho) {
  Vec delta(d, 0.0);
  if (rho == 0.0 || d == 0) return delta;
  const std::size_t axis = (r / 2) % d;
  delta[axis] = (r % 2 == 0) ? rho : -rho;
  return delta;
}

}  // namespace

GeneratedWorld generate(Rng& rng, const HeteroModelSpec& spec) {
  if (spec.d < 1 || spec.workers < 1 || spec.samples_per_worker < 1)
    throw std::invalid_argument("generate: spec dimensions must be positive");
  if (spec.shift_radius < 0.0) throw std::invalid_argument("generate: negative shift radius");

  Mat chol;
  const bool identity_cov = spec.feature_cov.empty();
  if (!identity_cov) {
    if (spec.feature_cov.rows != spec.d || spec.feature_cov.cols != spec.d)
      throw std::invalid_argument("generate: feature_cov shape mismatch");
    chol = cholesky(spec.feature_cov);  // throws on non-PSD covariance
  }
  const Vec base = spec.base_param.empty() ? zeros(spec.d) : spec.base_param;
  if (base.size() != spec.d) throw std::invalid_argument("generate: base_param length mismatch");

  GeneratedWorld out;
  out.worlds.resize(spec.workers);
  out.true_params.resize(spec.workers);
  out.shifts.resize(spec.workers);
  for (std::size_t r = 0; r < spec.workers; ++r) {
    out.shifts[r] = shift_for_worker(r, spec.d, spec.shift_radius);
    out.true_params[r] = add(base, out.shifts[r]);

    LocalDataset& ds = out.worlds[r];
    ds.features.resize(spec.samples_per_worker);
    ds.responses.resize(spec.samples_per_worker);
    for (std::size_t i = 0; i < spec.samples_per_worker; ++i) {
      Vec w = rng.normal_vec(spec.d);
      if (!identity_cov) {
        // w <- L * z for z standard normal
        Vec transformed(spec.d, 0.0);
        for (std::size_t p = 0; p < spec.d; ++p) {
          double s = 0.0;
          for (std::size_t q = 0; q <= p; ++q) s += chol(p, q) * w[q];
          transformed[p] = s;
        }
        w = std::move(transformed);
      }
      double y = dot(w, out.true_params[r]);
      if (spec.noise_std > 0.0) y += spec.noise_std * rng.normal();
      ds.features[i] = std::move(w);
      ds.responses[i] = y;
    }
  }
  return out;
}

double kappa_mean_theoretical(const HeteroModelSpec& spec, const std::vector<Vec>& shifts) {
  if (shifts.empty()) return 0.0;
  Vec mean = zeros(spec.d);
  for (const Vec& delta : shifts) axpy(mean, 1.0, delta);
  scale_inplace(mean, 1.0 / static_cast<double>(shifts.size()));

  double best = 0.0;
  for (const Vec& delta : shifts) {
    Vec diff = sub(mean, delta);
    if (!spec.feature_cov.empty()) diff = matvec(spec.feature_cov, diff);
    best = std::max(best, norm(diff));
  }
  return best;
}

void dump_csv(const std::string& dir, const std::vector<LocalDataset>& worlds) {
  std::filesystem::create_directories(dir);
  for (std::size_t r = 0; r < worlds.size(); ++r) {
    const LocalDataset& ds = worlds[r];
    std::ofstream f(dir + "/worker_" + std::to_string(r) + ".csv", std::ios::binary);
    if (!f) throw std::runtime_error("dump_csv: cannot open output file");
    const std::size_t p = ds.dim();
    for (std::size_t j = 0; j < p; ++j) f << "w" << j << ",";
    f << "y\n";
    char buf[32];
    for (std::size_t i = 0; i < ds.size(); ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", ds.features[i][j]);
        f << buf << ",";
      }
      std::snprintf(buf, sizeof(buf), "%.17g", ds.responses[i]);
      f << buf << "\n";
    }
  }
}

std::vector<LocalDataset> load_csv(const std::string& dir, std::size_t workers) {
  std::vector<LocalDataset> worlds(workers);
  for (std::size_t r = 0; r < workers; ++r) {
    std::ifstream f(dir + "/worker_" + std::to_string(r) + ".csv");
    if (!f) throw std::runtime_error("load_csv: missing worker file " + std::to_string(r));
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("load_csv: empty worker file");
    LocalDataset& ds = worlds[r];
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      Vec row;
      while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
      if (row.empty()) continue;
      ds.responses.push_back(row.back());
      row.pop_back();
      ds.features.push_back(std::move(row));
    }
  }
  return worlds;
}

}  // namespace byzsgd::datagen
