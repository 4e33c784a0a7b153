#include "gedi/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace gedi {

namespace {

constexpr double kPi = 3.141592653589793238462643;

void check_even_positive(int n, const char* who) {
  if (n <= 0 || n % 2 != 0)
    throw std::invalid_argument(std::string(who) + ": n must be positive and even");
}

}  // namespace

LabeledDataset make_moons(int n, double noise_std, std::uint64_t seed) {
  check_even_positive(n, "make_moons");
  if (noise_std < 0.0) throw std::invalid_argument("make_moons: noise_std must be >= 0");
  Rng rng(seed);
  LabeledDataset ds;
  ds.points.resize(n, 2);
  ds.labels.resize(n);
  const int half = n / 2;
  for (int i = 0; i < half; ++i) {
    const double theta = rng.uniform(0.0, kPi);
    ds.points(i, 0) = std::cos(theta);
    ds.points(i, 1) = std::sin(theta);
    ds.labels(i) = 0;
  }
  for (int i = half; i < n; ++i) {
    const double theta = rng.uniform(0.0, kPi);
    ds.points(i, 0) = 1.0 - std::cos(theta);
    ds.points(i, 1) = 0.5 - std::sin(theta);
    ds.labels(i) = 1;
  }
  if (noise_std > 0.0)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < 2; ++j) ds.points(i, j) += noise_std * rng.normal();
  ds.spec = GeneratorSpec{"moons", n, noise_std, 0.5, seed};
  return ds;
}

LabeledDataset make_circles(int n, double radius_ratio, double noise_std, std::uint64_t seed) {
  check_even_positive(n, "make_circles");
  if (!(radius_ratio > 0.0 && radius_ratio < 1.0))
    throw std::invalid_argument("make_circles: radius_ratio must lie in (0, 1)");
  if (noise_std < 0.0) throw std::invalid_argument("make_circles: noise_std must be >= 0");
  Rng rng(seed);
  LabeledDataset ds;
  ds.points.resize(n, 2);
  ds.labels.resize(n);
  const int half = n / 2;
  for (int i = 0; i < n; ++i) {
    const double r = i < half ? 1.0 : radius_ratio;
    const double theta = rng.uniform(0.0, 2.0 * kPi);
    ds.points(i, 0) = r * std::cos(theta);
    ds.points(i, 1) = r * std::sin(theta);
    ds.labels(i) = i < half ? 0 : 1;
  }
  if (noise_std > 0.0)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < 2; ++j) ds.points(i, j) += noise_std * rng.normal();
  ds.spec = GeneratorSpec{"circles", n, noise_std, radius_ratio, seed};
  return ds;
}

LabeledDataset make_dataset(const GeneratorSpec& spec) {
  if (spec.name == "moons") return make_moons(spec.n, spec.noise_std, spec.seed);
  if (spec.name == "circles")
    return make_circles(spec.n, spec.radius_ratio, spec.noise_std, spec.seed);
  throw std::invalid_argument("make_dataset: unknown generator '" + spec.name + "'");
}

Eigen::MatrixXd augment(const Eigen::MatrixXd& x, const AugmentationSpec& spec, Rng& rng) {
  if (spec.noise_std < 0.0) throw std::invalid_argument("augment: noise_std must be >= 0");
  if (spec.noise_std == 0.0) return x;
  Eigen::MatrixXd out = x;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += spec.noise_std * rng.normal();
  return out;
}

LogitDataset permute_dataset(const LogitDataset& ds, const std::vector<int>& pi) {
  const Eigen::Index n = ds.logits.rows();
  if (static_cast<Eigen::Index>(pi.size()) != n)
    throw std::invalid_argument("permute_dataset: permutation length mismatch");
  std::vector<bool> seen(pi.size(), false);
  for (int p : pi) {
    if (p < 0 || p >= n || seen[static_cast<std::size_t>(p)])
      throw std::invalid_argument("permute_dataset: pi is not a bijection");
    seen[static_cast<std::size_t>(p)] = true;
  }
  LogitDataset out = ds;
  for (Eigen::Index i = 0; i < n; ++i)
    out.logits.row(i) = ds.logits.row(pi[static_cast<std::size_t>(i)]);
  return out;
}

void write_dataset_csv(const LabeledDataset& ds, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_dataset_csv: cannot open " + path);
  f << "x1,x2,label\n";
  char buf[64];
  for (Eigen::Index i = 0; i < ds.points.rows(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", ds.points(i, 0), ds.points(i, 1),
                  ds.labels(i));
    f << buf;
  }
}

}  // namespace gedi
