#include <doctest.h>

#include "cemee/errors.hpp"
#include "cemee/features.hpp"
#include "support/panel_builder.hpp"

using namespace cemee;
using testsupport::PanelBuilder;

namespace {

ClusterPanel three_point_panel() {
  // proximal outcomes (1,0,1), states Z = (0,2,1), R = (0.5,0.25,0.75)
  return PanelBuilder({"Z", "R"})
      .cluster("c1")
      .individual("u1")
      .row(1, 1, 0.2, 1, {0.0, 0.5})
      .row(2, 0, 0.2, 0, {2.0, 0.25})
      .row(3, 0, 0.2, 1, {1.0, 0.75})
      .build();
}

}  // namespace

TEST_CASE("lagged outcome with delta 1 is the proximal outcome") {
  const auto panel = three_point_panel();
  const auto lag = lagged_outcome(panel, 1);
  CHECK(lag.values[0][0] == std::vector<int>{1, 0, 1});
}

TEST_CASE("lagged outcome with delta 2 shifts the index") {
  const auto panel = three_point_panel();
  const auto lag = lagged_outcome(panel, 2);
  CHECK(lag.values[0][0] == std::vector<int>{0, 1});
}

TEST_CASE("delta beyond the horizon is rejected") {
  const auto panel = three_point_panel();
  CHECK_THROWS_AS(lagged_outcome(panel, 4), DataError);
  CHECK_THROWS_AS(lagged_outcome(panel, 0), DataError);
}

TEST_CASE("explicit lag column is copied and must be binary") {
  const auto panel = PanelBuilder({"L"})
                         .cluster("c1")
                         .individual("u1")
                         .row(1, 0, 0.2, 0, {1.0})
                         .row(2, 0, 0.2, 0, {0.0})
                         .row(3, 0, 0.2, 0, {1.0})
                         .build();
  const auto lag = lagged_outcome(panel, 2, LagSpec::from_column("L"));
  CHECK(lag.values[0][0] == std::vector<int>{1, 0});

  const auto bad = PanelBuilder({"L"})
                       .cluster("c1")
                       .individual("u1")
                       .row(1, 0, 0.2, 0, {0.5})
                       .row(2, 0, 0.2, 0, {0.0})
                       .build();
  CHECK_THROWS_AS(lagged_outcome(bad, 1, LagSpec::from_column("L")), DataError);
  CHECK_THROWS_AS(lagged_outcome(panel, 1, LagSpec::from_column("nope")), DataError);
}

TEST_CASE("design rows carry the requested feature vectors") {
  Rng rng(3);
  const auto panel = testsupport::random_panel(rng, 2, 3, 6);

  FeatureSpec moderator = FeatureSpec::intercept_only();
  FeatureSpec control{{FeatureTerm::intercept(), FeatureTerm::time_index()}};
  const auto design = build_design(panel, moderator, control, 1);

  CHECK(design.q == 1);
  CHECK(design.p == 2);
  CHECK(design.n_rows() == 2 * 3 * 6);
  CHECK(design.n_clusters() == 2);

  // g row at t = 5 is (1, 5)
  for (int r = 0; r < design.n_rows(); ++r) {
    if (design.t[r] == 5) {
      CHECK(design.g_row(r)[0] == 1.0);
      CHECK(design.g_row(r)[1] == 5.0);
      CHECK(design.f_row(r)[0] == 1.0);
    }
  }
}

TEST_CASE("moderator column values flow into the f rows") {
  const auto panel = three_point_panel();
  FeatureSpec moderator{{FeatureTerm::intercept(), FeatureTerm::col("Z")}};
  const auto design = build_design(panel, moderator, FeatureSpec::intercept_only(), 1);
  CHECK(design.f_row(1)[0] == 1.0);
  CHECK(design.f_row(1)[1] == 2.0);  // Z = 2 at t = 2
}

TEST_CASE("case-study-shaped control spec has dimension three") {
  const auto panel = three_point_panel();
  FeatureSpec control{
      {FeatureTerm::intercept(), FeatureTerm::time_index(), FeatureTerm::col("R")}};
  const auto design = build_design(panel, FeatureSpec::intercept_only(), control, 1);
  CHECK(design.p == 3);
  CHECK(design.g_row(2)[0] == 1.0);
  CHECK(design.g_row(2)[1] == 3.0);
  CHECK(design.g_row(2)[2] == 0.75);
}

TEST_CASE("design row count matches the lag-adjusted horizon") {
  Rng rng(5);
  const auto panel = testsupport::random_panel(rng, 3, 2, 7);
  for (int delta = 1; delta <= 3; ++delta) {
    const auto design = build_design(panel, FeatureSpec::intercept_only(),
                                     FeatureSpec::intercept_only(), delta);
    CHECK(design.n_rows() == 3 * 2 * (7 - delta + 1));
    CHECK(design.rows_per_individual == 7 - delta + 1);
  }
}

TEST_CASE("unknown feature column is rejected") {
  const auto panel = three_point_panel();
  FeatureSpec bad{{FeatureTerm::col("missing")}};
  CHECK_THROWS_AS(build_design(panel, bad, FeatureSpec::intercept_only(), 1),
                  DataError);
  FeatureSpec empty;
  CHECK_THROWS_AS(build_design(panel, empty, FeatureSpec::intercept_only(), 1),
                  DataError);
}

TEST_CASE("lag window columns expose the next decisions") {
  const auto panel = three_point_panel();
  const auto design = build_design(panel, FeatureSpec::intercept_only(),
                                   FeatureSpec::intercept_only(), 2);
  REQUIRE(design.n_rows() == 2);
  // windows are the (A, prob) pairs at t+1
  CHECK(design.win_a[0] == 0.0);  // A at t = 2
  CHECK(design.win_a[1] == 0.0);  // A at t = 3
  CHECK(design.win_p[0] == 0.2);
}

TEST_CASE("scaled column term applies its factor") {
  const auto panel = three_point_panel();
  FeatureSpec spec{{FeatureTerm::scaled("Z", 0.5)}};
  const auto design = build_design(panel, spec, FeatureSpec::intercept_only(), 1);
  CHECK(design.f_row(1)[0] == 1.0);  // 0.5 * 2
  CHECK(spec.terms[0].name() == "0.5*Z");
}
