#include "mtp/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mtp::nn {

namespace {

Evaluation evaluate(const std::function<Evaluation()>& f) {
  Evaluation e = f();
  if (!std::isfinite(e.value)) throw NumericError("finite_diff_check: objective is not finite");
  return e;
}

}  // namespace

GradCheckReport finite_diff_check(const std::function<Evaluation()>& f,
                                  std::vector<TensorView> params,
                                  std::vector<TensorView> analytic,
                                  const GradCheckOptions& options) {
  if (!(options.epsilon > 0.0)) throw UsageError("finite_diff_check: epsilon must be positive");
  if (params.size() != analytic.size()) {
    throw DimensionError("finite_diff_check: gradient layout mismatch");
  }
  std::mt19937_64 rng(options.sample_seed);
  GradCheckReport report;
  const double eps = options.epsilon;

  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& p = params[t];
    const auto& a = analytic[t];
    if (p.data.size() != a.data.size()) {
      throw DimensionError("finite_diff_check: size mismatch for " + p.name);
    }
    std::vector<std::size_t> coords(p.data.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords_per_tensor && coords.size() > options.max_coords_per_tensor) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_tensor);
      std::sort(coords.begin(), coords.end());
    }

    TensorCheck tc{p.name, 0.0, 0, 0};
    for (std::size_t k : coords) {
      const double saved = p.data[k];
      p.data[k] = saved + eps;
      const Evaluation plus = evaluate(f);
      p.data[k] = saved - eps;
      const Evaluation minus = evaluate(f);
      p.data[k] = saved;
      if (plus.signature != minus.signature) {
        ++tc.skipped_kinks;
        continue;
      }
      const double numeric = static_cast<double>((plus.value - minus.value) / (2.0L * eps));
      const double exact = a.data[k];
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
      tc.max_rel_error = std::max(tc.max_rel_error, std::abs(exact - numeric) / denom);
      ++tc.checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, tc.max_rel_error);
    report.tensors.push_back(std::move(tc));
  }
  return report;
}

}  // namespace mtp::nn
