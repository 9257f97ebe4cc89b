#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perfimpact/regress.hpp"

namespace perfimpact {

struct Dataset;

struct EvalReport {
  int k = 0;
  std::uint64_t seed = 0;
  std::string dataset_digest;
  std::string group_split = "row";
  std::vector<ModelEvaluation> models;  // fixed kind order

  // Lowest mean MAE; ties go to the earlier kind. Throws EmptyReport.
  const ModelEvaluation& best() const;
};

// Cross-validates every kind in kAllModelKinds with default specs seeded by
// `seed` over one fold plan.
EvalReport evaluate_models(const Dataset& dataset, const FoldPlan& plan, std::uint64_t seed);

// {"k":..,"seed":..,"dataset_digest":..,"group_split":..,"models":[{"kind":..,
// "fold_mae":[..],"mean_mae_seconds":..,"relative_mae_percent":..}]}
// A non-finite relative MAE is written as null.
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);  // throws InvalidArgument

// 640x400 bar chart of relative MAE, one bar per model in report order.
// Throws EmptyReport.
std::string render_chart(const EvalReport& report);

// Fixed-width console table; ANSI bold on the best row when `color`.
std::string format_table(const EvalReport& report, bool color);

}  // namespace perfimpact
