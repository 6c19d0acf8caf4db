#include "curvnet/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include "curvnet/random.hpp"

namespace curvnet {

void DatasetSpec::validate() const {
  if (rho < 64) throw ValidationError("DatasetSpec: rho must be >= 64");
  if (repeats_per_radius < 1)
    throw ValidationError("DatasetSpec: repeats_per_radius must be >= 1");
  if (reinit_iterations.empty())
    throw ValidationError("DatasetSpec: need at least one reinit iteration count");
  for (std::size_t k = 0; k < reinit_iterations.size(); ++k) {
    if (reinit_iterations[k] < 0)
      throw ValidationError("DatasetSpec: negative reinit iteration count");
    if (k > 0 && reinit_iterations[k] <= reinit_iterations[k - 1])
      throw ValidationError("DatasetSpec: reinit iteration counts must be ascending");
  }
}

int circle_count(int rho) {
  if (rho < 9) throw ValidationError("circle_count: rho must be >= 9");
  return static_cast<int>(std::ceil((rho - 8.2) / 2.0)) + 1;
}

namespace {

void harvest_circle(const LevelSetField<UniformGrid>& field, double target,
                    std::vector<Sample>& out) {
  const UniformGrid& grid = field.grid();
  for (NodeId node : interface_adjacent_nodes(grid, field.values())) {
    const auto stencil = grid.stencil9_at(node);
    if (!stencil) continue;
    Sample s;
    s.stencil = stencil_values(field, *stencil);
    s.hkappa = target;
    out.push_back(s);
    out.push_back(s.negated());
  }
}

}  // namespace

std::vector<Sample> generate_circle_samples(const DatasetSpec& spec) {
  spec.validate();
  const double h = spec.h();
  const double r_min = 1.6 * h;
  const double r_max = 0.5 - 2.0 * h;
  if (r_min > r_max)
    throw ValidationError("generate_circle_samples: empty radius range at rho " +
                          std::to_string(spec.rho));

  const UniformGrid grid(SquareBounds{{0.0, 0.0}, 1.0}, spec.rho);
  const int radii = circle_count(spec.rho);
  Rng rng(spec.seed);
  ReinitParams reinit;
  reinit.iterations = spec.reinit_iterations.back();

  std::vector<Sample> samples;
  for (int ri = 0; ri < radii; ++ri) {
    const double r =
        radii == 1 ? r_min : r_min + (r_max - r_min) * ri / static_cast<double>(radii - 1);
    const double target = h / r;
    for (int rep = 0; rep < spec.repeats_per_radius; ++rep) {
      const Point2 center{uniform_in(rng, 0.5 - 0.5 * h, 0.5 + 0.5 * h),
                          uniform_in(rng, 0.5 - 0.5 * h, 0.5 + 0.5 * h)};

      CircleSpec sdf{center, r, CircleSpec::Form::kSignedDistance};
      const auto sdf_field = LevelSetField<UniformGrid>::sampled(
          grid, [&](const Point2& p) { return eval_circle(sdf, p); });
      harvest_circle(sdf_field, target, samples);

      CircleSpec quad{center, r, CircleSpec::Form::kQuadratic};
      const auto quad_field = LevelSetField<UniformGrid>::sampled(
          grid, [&](const Point2& p) { return eval_circle(quad, p); });
      const auto redistanced =
          reinitialize_snapshots(quad_field, reinit, spec.reinit_iterations);
      for (const auto& field : redistanced) harvest_circle(field, target, samples);
    }
  }
  return samples;
}

Normalization fit_normalization(std::span<const Sample> train) {
  if (train.size() < 2)
    throw ValidationError("fit_normalization: need at least two samples");
  Normalization norm;
  const double inv_n = 1.0 / static_cast<double>(train.size());
  for (int k = 0; k < 9; ++k) {
    double sum = 0.0;
    for (const Sample& s : train) sum += s.stencil[k];
    norm.mean[k] = sum * inv_n;
  }
  for (int k = 0; k < 9; ++k) {
    double sq = 0.0;
    for (const Sample& s : train) {
      const double d = s.stencil[k] - norm.mean[k];
      sq += d * d;
    }
    norm.stddev[k] = std::sqrt(sq * inv_n);
    if (!(norm.stddev[k] > 1e-15 * std::max(1.0, std::abs(norm.mean[k]))))
      throw ValidationError("fit_normalization: stencil component " + std::to_string(k) +
                            " is constant across the training set");
  }
  return norm;
}

SplitSet split_samples(std::vector<Sample> samples, std::uint64_t seed) {
  if (samples.size() < 10)
    throw ValidationError("split_samples: need at least 10 samples");
  Rng rng(seed);
  shuffle(samples, rng);
  const std::size_t n = samples.size();
  const std::size_t n_train = static_cast<std::size_t>(std::floor(0.70 * n));
  const std::size_t n_val = static_cast<std::size_t>(std::floor(0.15 * n));
  SplitSet split;
  split.train.assign(samples.begin(), samples.begin() + n_train);
  split.validation.assign(samples.begin() + n_train, samples.begin() + n_train + n_val);
  split.test.assign(samples.begin() + n_train + n_val, samples.end());
  return split;
}

const char* const kSampleCsvHeader =
    "phi_mp,phi_0p,phi_pp,phi_m0,phi_00,phi_p0,phi_mm,phi_0m,phi_pm,hkappa";

namespace {

int format_sample(const Sample& s, char* buf, std::size_t cap) {
  int off = 0;
  for (int k = 0; k < 9; ++k)
    off += std::snprintf(buf + off, cap - off, "%.17g,", s.stencil[k]);
  off += std::snprintf(buf + off, cap - off, "%.17g\n", s.hkappa);
  return off;
}

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv1a(std::uint64_t& state, const char* data, std::size_t len) {
  for (std::size_t k = 0; k < len; ++k) {
    state ^= static_cast<unsigned char>(data[k]);
    state *= kFnvPrime;
  }
}

}  // namespace

void write_samples_csv(const std::filesystem::path& path, std::span<const Sample> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("write_samples_csv: cannot open " + path.string());
  out << kSampleCsvHeader << '\n';
  char buf[320];
  for (const Sample& s : samples) {
    const int len = format_sample(s, buf, sizeof buf);
    out.write(buf, len);
  }
  if (!out) throw ValidationError("write_samples_csv: write failed for " + path.string());
}

std::vector<Sample> read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("read_samples_csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kSampleCsvHeader)
    throw ValidationError("read_samples_csv: bad header in " + path.string());
  std::vector<Sample> samples;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Sample s;
    const char* cur = line.c_str();
    for (int k = 0; k < 10; ++k) {
      char* end = nullptr;
      const double v = std::strtod(cur, &end);
      if (end == cur || (k < 9 && *end != ',') || (k == 9 && *end != '\0'))
        throw ValidationError("read_samples_csv: malformed record at line " +
                              std::to_string(line_no) + " of " + path.string());
      if (k < 9)
        s.stencil[k] = v;
      else
        s.hkappa = v;
      cur = end + (k < 9 ? 1 : 0);
    }
    samples.push_back(s);
  }
  return samples;
}

std::uint64_t samples_digest(std::span<const Sample> samples) {
  std::uint64_t state = kFnvOffset;
  fnv1a(state, kSampleCsvHeader, std::strlen(kSampleCsvHeader));
  fnv1a(state, "\n", 1);
  char buf[320];
  for (const Sample& s : samples) {
    const int len = format_sample(s, buf, sizeof buf);
    fnv1a(state, buf, static_cast<std::size_t>(len));
  }
  return state;
}

}  // namespace curvnet
