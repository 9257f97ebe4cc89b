#include <cmath>
#include <regex>

#include "doctest.h"
#include "perfimpact/dataset.hpp"
#include "perfimpact/errors.hpp"
#include "perfimpact/pipeline.hpp"
#include "perfimpact/report.hpp"
#include "util.hpp"

using namespace perfimpact;
using namespace perfimpact::testing;

namespace {

ModelEvaluation entry(ModelKind kind, double rel) {
  ModelEvaluation m;
  m.kind = kind;
  m.fold_mae = {rel / 10, rel / 5};
  m.mean_mae_seconds = rel / 7;
  m.relative_mae_percent = rel;
  return m;
}

struct Bar {
  double y, height;
};

std::vector<Bar> bars(const std::string& svg) {
  static const std::regex rect(R"re(<rect class="bar" x="[0-9.]+" y="([0-9.]+)" width="[0-9.]+" height="([0-9.]+)")re");
  std::vector<Bar> out;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), rect); it != std::sregex_iterator();
       ++it) {
    out.push_back({std::stod((*it)[1]), std::stod((*it)[2])});
  }
  return out;
}

const EvalReport& fixture_report() {
  static const EvalReport report = [] {
    const Dataset ds = read_csv(fixture("dataset/synthetic210.csv"));
    return evaluate_dataset(ds, 10, 0, GroupSplit::Row).report;
  }();
  return report;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("evaluation of the fixture dataset") {
  const EvalReport& r = fixture_report();
  REQUIRE(r.models.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(r.models[i].kind == kAllModelKinds[i]);
    CHECK(r.models[i].fold_mae.size() == 10);
    CHECK(std::isfinite(r.models[i].relative_mae_percent));
  }
  CHECK(r.dataset_digest == fnv1a_hex(read_file(fixture("dataset/synthetic210.csv"))));
}

TEST_CASE("json shape and round trip") {
  const EvalReport& r = fixture_report();
  const std::string json = report_to_json(r);
  CHECK(json.rfind("{\n  \"k\": 10,\n  \"seed\": 0,\n  \"dataset_digest\": ", 0) == 0);
  const EvalReport back = report_from_json(json);
  CHECK(report_to_json(back) == json);
  REQUIRE(back.models.size() == 6);
  CHECK(back.models[5].fold_mae == r.models[5].fold_mae);

  EvalReport nan_report;
  nan_report.k = 2;
  nan_report.models = {entry(ModelKind::Linear, std::nan(""))};
  const std::string with_null = report_to_json(nan_report);
  CHECK(with_null.find("\"relative_mae_percent\": null") != std::string::npos);
  CHECK(std::isnan(report_from_json(with_null).models[0].relative_mae_percent));
  CHECK_THROWS_AS(report_from_json("{\"k\": 2}"), InvalidArgument);
  CHECK_THROWS_AS(report_from_json("not json"), InvalidArgument);
}

TEST_CASE("best picks the lowest mean MAE") {
  EvalReport r;
  r.models = {entry(ModelKind::Linear, 7), entry(ModelKind::Ridge, 3), entry(ModelKind::Lasso, 3)};
  CHECK(r.best().kind == ModelKind::Ridge);
  CHECK_THROWS_AS(EvalReport{}.best(), EmptyReport);
}

TEST_CASE("chart examples") {
  EvalReport r;
  r.k = 10;
  r.models = {entry(ModelKind::Linear, 0.0)};
  std::string svg = render_chart(r);
  auto b = bars(svg);
  REQUIRE(b.size() == 1);
  CHECK(b[0].height == 0.0);
  CHECK(svg.find(">0.00</text>") != std::string::npos);
  CHECK(svg.find(">linear</text>") != std::string::npos);

  r.models = {entry(ModelKind::Linear, 2.0), entry(ModelKind::Ridge, 4.0)};
  b = bars(render_chart(r));
  REQUIRE(b.size() == 2);
  CHECK(b[1].height == doctest::Approx(2.0 * b[0].height).epsilon(1e-9));
  CHECK(b[0].y + b[0].height == doctest::Approx(b[1].y + b[1].height));

  CHECK_THROWS_AS(render_chart(EvalReport{}), EmptyReport);
}

TEST_CASE("six-model chart") {
  const std::string svg = render_chart(fixture_report());
  CHECK(svg == render_chart(fixture_report()));
  CHECK(svg.rfind("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\"", 0) == 0);
  CHECK(svg.find("lower is better") != std::string::npos);
  const auto b = bars(svg);
  REQUIRE(b.size() == 6);
  double max_rel = 0.0, max_h = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    max_rel = std::max(max_rel, fixture_report().models[i].relative_mae_percent);
    max_h = std::max(max_h, b[i].height);
  }
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(b[i].height / max_h ==
          doctest::Approx(fixture_report().models[i].relative_mae_percent / max_rel).epsilon(1e-5));
  }
}

TEST_CASE("console table") {
  const EvalReport& r = fixture_report();
  const std::string plain = format_table(r, false);
  CHECK(plain.find("\x1b[") == std::string::npos);
  CHECK(std::count(plain.begin(), plain.end(), '\n') == 8);
  const std::string colored = format_table(r, true);
  CHECK(colored.find("\x1b[1m" + std::string(model_kind_name(r.best().kind))) != std::string::npos);
}

}  // TEST_SUITE
