#include <gtest/gtest.h>

#include "marrow_like.hpp"
#include "pmmp/pmmp.hpp"

namespace {

using namespace pmmp;

TEST(Design, DenseScenarioHas120Predictors) {
  auto rep = sim::generate(sim::ScenarioConfig{}, 0);
  const auto e = expand(rep.data, model_terms(rep.data.schema.categorical));
  EXPECT_EQ(e.predictor_count(), 120);
  EXPECT_EQ(e.labels.size(), 120u);
  EXPECT_EQ(e.continuous_count, 1);
}

TEST(Design, RegistryTermSetHas371Predictors) {
  Dataset d;
  d.schema = marrow::schema();
  d.y = VectorXd::Zero(1);
  d.x = MatrixXd::Zero(1, 6);
  d.c = LevelMatrix::Zero(1, 8);
  const auto e = expand(d, model_terms(d.schema.categorical));
  EXPECT_EQ(e.predictor_count(), 371);
}

TEST(Design, SingleBinaryMainEffect) {
  Dataset d;
  d.schema.response = "y";
  d.schema.categorical.variables.push_back({"a", {"no", "yes"}, 0});
  d.y = VectorXd::Zero(3);
  d.x.resize(3, 0);
  d.c.resize(3, 1);
  d.c << 0, 1, 1;
  const auto e = expand(d, {{0}});
  ASSERT_EQ(e.predictor_count(), 1);
  EXPECT_EQ(e.matrix.col(0), (VectorXd(3) << 0, 1, 1).finished());
  EXPECT_EQ(e.labels[0], "a=yes");
}

TEST(Design, HandEnumeratedFiveRows) {
  Dataset d;
  d.schema.response = "y";
  d.schema.categorical.variables.push_back({"a", {"1", "2", "3"}, 0});
  d.schema.categorical.variables.push_back({"b", {"1", "2"}, 0});
  d.schema.categorical.interactions = {{0, 1}};
  d.y = VectorXd::Zero(5);
  d.x.resize(5, 0);
  d.c.resize(5, 2);
  d.c << 0, 0,
         1, 0,
         2, 1,
         1, 1,
         0, 1;
  const auto e = expand(d, model_terms(d.schema.categorical));
  // Columns: a=2, a=3, b=2, a=2:b=2, a=3:b=2.
  MatrixXd expected(5, 5);
  expected << 0, 0, 0, 0, 0,
              1, 0, 0, 0, 0,
              0, 1, 1, 0, 1,
              1, 0, 1, 1, 0,
              0, 0, 1, 0, 0;
  EXPECT_EQ(e.matrix, expected);
  const std::vector<std::string> labels{"a=2", "a=3", "b=2", "a=2:b=2", "a=3:b=2"};
  EXPECT_EQ(e.labels, labels);
}

TEST(Design, LastCategoryAsReference) {
  Dataset d;
  d.schema.response = "y";
  d.schema.categorical.variables.push_back({"a", {"1", "2", "3"}, 2});
  d.y = VectorXd::Zero(3);
  d.x.resize(3, 0);
  d.c.resize(3, 1);
  d.c << 0, 1, 2;
  const auto e = expand(d, {{0}});
  MatrixXd expected(3, 2);
  expected << 1, 0, 0, 1, 0, 0;
  EXPECT_EQ(e.matrix, expected);
}

TEST(Design, ContinuousColumnsComeFirst) {
  auto rep = sim::generate(sim::ScenarioConfig{}, 3);
  const auto e = expand(rep.data, model_terms(rep.data.schema.categorical));
  EXPECT_EQ(e.matrix.col(0), rep.data.x.col(0));
  EXPECT_EQ(e.labels[0], "x");
}

TEST(Design, UnknownTermIsRejected) {
  auto rep = sim::generate(sim::ScenarioConfig{}, 0);
  EXPECT_THROW(expand(rep.data, {{0, 7}}), ConfigError);
  EXPECT_THROW(expand(rep.data, {{1, 0}}), ConfigError);
}

TEST(Design, AllInteractionsOrdering) {
  const std::vector<Term> expected{{0, 1}, {0, 2}, {1, 2}, {0, 1, 2}};
  EXPECT_EQ(all_interactions(3, 3), expected);
  EXPECT_EQ(all_interactions(8, 3).size(), 28u + 56u);
}

}  // namespace
