#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mtp/nn/tensor.hpp"

namespace mtp::nn {

/// One evaluation of the checked objective. `value` is long double so an
/// objective computed in extended precision keeps its low-order digits through
/// the difference quotient. `signature` identifies the smooth piece the
/// evaluation landed on (see GradTape::kink_signature); pass 0 for functions
/// without kinks.
struct Evaluation {
  long double value = 0.0L;
  std::uint64_t signature = 0;
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// 0 checks every coordinate; otherwise a seeded sample of this many per tensor.
  std::size_t max_coords_per_tensor = 0;
  std::uint64_t sample_seed = 0;
};

struct TensorCheck {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::vector<TensorCheck> tensors;
};

/// Central-difference check of `analytic` against `f`.
///
/// For every checked coordinate the parameter is moved by +eps and -eps in
/// place, f is re-evaluated, and |a - n| / max(|a|, |n|, 1e-8) is recorded.
/// Coordinates whose two perturbed evaluations land on different smooth
/// pieces (a relu or max-pool branch flips) are skipped and counted.
/// Throws NumericError if f returns a non-finite value.
GradCheckReport finite_diff_check(const std::function<Evaluation()>& f,
                                  std::vector<TensorView> params,
                                  std::vector<TensorView> analytic,
                                  const GradCheckOptions& options = {});

template <TensorCollection P>
GradCheckReport finite_diff_check(const std::function<Evaluation()>& f, P& params, P& analytic,
                                  const GradCheckOptions& options = {}) {
  return finite_diff_check(f, params.views(), analytic.views(), options);
}

}  // namespace mtp::nn
