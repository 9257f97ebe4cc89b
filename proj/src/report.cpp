#include "perfimpact/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "perfimpact/dataset.hpp"
#include "perfimpact/errors.hpp"

namespace perfimpact {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

const ModelEvaluation& EvalReport::best() const {
  if (models.empty()) throw EmptyReport("report has no models");
  const ModelEvaluation* best = &models.front();
  for (const auto& m : models) {
    if (m.mean_mae_seconds < best->mean_mae_seconds) best = &m;
  }
  return *best;
}

EvalReport evaluate_models(const Dataset& dataset, const FoldPlan& plan, std::uint64_t seed) {
  const Eigen::MatrixXd X = dataset.features();
  const Eigen::VectorXd y = dataset.targets();
  EvalReport report;
  report.k = plan.k;
  report.seed = seed;
  report.dataset_digest = dataset_digest(dataset);
  for (ModelKind kind : kAllModelKinds) {
    report.models.push_back(cross_validate(default_spec(kind, seed), X, y, plan));
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  ordered_json doc;
  doc["k"] = report.k;
  doc["seed"] = report.seed;
  if (!report.dataset_digest.empty()) doc["dataset_digest"] = report.dataset_digest;
  doc["group_split"] = report.group_split;
  doc["models"] = ordered_json::array();
  for (const auto& m : report.models) {
    ordered_json entry;
    entry["kind"] = model_kind_name(m.kind);
    entry["fold_mae"] = m.fold_mae;
    entry["mean_mae_seconds"] = m.mean_mae_seconds;
    if (std::isfinite(m.relative_mae_percent)) {
      entry["relative_mae_percent"] = m.relative_mae_percent;
    } else {
      entry["relative_mae_percent"] = nullptr;
    }
    doc["models"].push_back(entry);
  }
  return doc.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  EvalReport report;
  try {
    const auto doc = nlohmann::json::parse(text);
    report.k = doc.at("k").get<int>();
    report.seed = doc.at("seed").get<std::uint64_t>();
    report.dataset_digest = doc.value("dataset_digest", "");
    report.group_split = doc.value("group_split", "row");
    for (const auto& entry : doc.at("models")) {
      ModelEvaluation m;
      m.kind = model_kind_from_name(entry.at("kind").get<std::string>());
      // Non-finite numbers are written as null.
      auto number = [](const nlohmann::json& v) {
        return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
      };
      for (const auto& v : entry.at("fold_mae")) m.fold_mae.push_back(number(v));
      m.mean_mae_seconds = number(entry.at("mean_mae_seconds"));
      m.relative_mae_percent = number(entry.at("relative_mae_percent"));
      report.models.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed report JSON: ") + e.what());
  }
  return report;
}

std::string render_chart(const EvalReport& report) {
  if (report.models.empty()) throw EmptyReport("nothing to plot: report has no models");
  constexpr double width = 640, height = 400;
  constexpr double left = 70, right = 20, top = 40, bottom = 60;
  constexpr double plot_w = width - left - right;
  constexpr double plot_h = height - top - bottom;
  const double base_y = top + plot_h;

  double max_rel = 0.0;
  for (const auto& m : report.models) {
    if (std::isfinite(m.relative_mae_percent)) max_rel = std::max(max_rel, m.relative_mae_percent);
  }
  const double slot = plot_w / static_cast<double>(report.models.size());
  const double bar_w = slot * 0.6;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
         "viewBox=\"0 0 640 400\" font-family=\"sans-serif\">\n";
  svg << "<rect class=\"background\" x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
  svg << "<text x=\"320\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">"
         "Cross-validated MAE by model (k = "
      << report.k << ")</text>\n";
  svg << "<line x1=\"" << fixed(left, 2) << "\" y1=\"" << fixed(top, 2) << "\" x2=\""
      << fixed(left, 2) << "\" y2=\"" << fixed(base_y, 2) << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << fixed(left, 2) << "\" y1=\"" << fixed(base_y, 2) << "\" x2=\""
      << fixed(left + plot_w, 2) << "\" y2=\"" << fixed(base_y, 2) << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"20\" y=\"" << fixed(top + plot_h / 2, 2)
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
      << fixed(top + plot_h / 2, 2) << ")\">Relative MAE (%), lower is better</text>\n";

  for (std::size_t i = 0; i < report.models.size(); ++i) {
    const auto& m = report.models[i];
    const bool finite = std::isfinite(m.relative_mae_percent);
    const double h = finite && max_rel > 0 ? m.relative_mae_percent / max_rel * plot_h : 0.0;
    const double x = left + slot * static_cast<double>(i) + (slot - bar_w) / 2;
    const double cx = x + bar_w / 2;
    svg << "<rect class=\"bar\" x=\"" << fixed(x, 4) << "\" y=\"" << fixed(base_y - h, 4)
        << "\" width=\"" << fixed(bar_w, 4) << "\" height=\"" << fixed(h, 4)
        << "\" fill=\"#4682b4\"/>\n";
    svg << "<text x=\"" << fixed(cx, 2) << "\" y=\"" << fixed(base_y - h - 6, 2)
        << "\" font-size=\"12\" text-anchor=\"middle\">"
        << (finite ? fixed(m.relative_mae_percent, 2) : std::string("n/a")) << "</text>\n";
    svg << "<text x=\"" << fixed(cx, 2) << "\" y=\"" << fixed(base_y + 20, 2)
        << "\" font-size=\"12\" text-anchor=\"middle\">" << xml_escape(model_kind_name(m.kind))
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string format_table(const EvalReport& report, bool color) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-15s %16s %16s %8s\n", "model", "mean MAE (s)",
                "relative MAE (%)", "folds");
  out << line;
  out << std::string(58, '-') << "\n";
  const ModelEvaluation* best = report.models.empty() ? nullptr : &report.best();
  for (const auto& m : report.models) {
    const std::string rel =
        std::isfinite(m.relative_mae_percent) ? fixed(m.relative_mae_percent, 2) : "n/a";
    std::snprintf(line, sizeof line, "%-15s %16.4f %16s %8zu", std::string(model_kind_name(m.kind)).c_str(),
                  m.mean_mae_seconds, rel.c_str(), m.fold_mae.size());
    if (color && &m == best) {
      out << "\x1b[1m" << line << "\x1b[0m\n";
    } else {
      out << line << "\n";
    }
  }
  return out.str();
}

}  // namespace perfimpact
