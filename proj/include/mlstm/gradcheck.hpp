#ifndef MLSTM_GRADCHECK_HPP
#define MLSTM_GRADCHECK_HPP

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mlstm/errors.hpp"
#include "mlstm/params.hpp"

namespace mlstm {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> per_param;
  double max_rel_err = 0.0;
};

// Central-difference validation of analytic gradients. loss_fn(true) runs a
// forward pass and accumulates gradients into the store; loss_fn(false) runs
// forward only. The loss function must be deterministic. Relative error is
// |a - n| / max(|a|, |n|, 1e-8).
inline GradCheckReport gradient_check(const std::function<double(bool)>& loss_fn, ParameterStore& store,
                                      double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidInputError("gradient_check: epsilon must be positive");
  store.zero_grads();
  const double base = loss_fn(true);
  if (!std::isfinite(base)) throw NumericError("gradient_check: non-finite loss");

  std::vector<Tensor> analytic;
  analytic.reserve(store.count());
  for (const auto& e : store.entries()) analytic.push_back(e.grad.clone());

  GradCheckReport report;
  for (size_t pi = 0; pi < store.count(); ++pi) {
    auto& entry = store.entries()[pi];
    GradCheckEntry rec{entry.name, 0.0};
    for (int i = 0; i < entry.value.size(); ++i) {
      const double saved = entry.value.at(i);
      entry.value.at(i) = saved + epsilon;
      const double lp = loss_fn(false);
      entry.value.at(i) = saved - epsilon;
      const double lm = loss_fn(false);
      entry.value.at(i) = saved;
      if (!std::isfinite(lp) || !std::isfinite(lm))
        throw NumericError("gradient_check: non-finite loss at " + entry.name);
      const double numeric = (lp - lm) / (2.0 * epsilon);
      const double a = analytic[pi].at(i);
      const double rel = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      rec.max_rel_err = std::max(rec.max_rel_err, rel);
    }
    report.max_rel_err = std::max(report.max_rel_err, rec.max_rel_err);
    report.per_param.push_back(std::move(rec));
  }
  return report;
}

}  // namespace mlstm

#endif
