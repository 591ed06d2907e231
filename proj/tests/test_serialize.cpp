#include <gtest/gtest.h>

#include "cli_support.hpp"
#include "oracles.hpp"

namespace {

using namespace pmmp;

TEST(ModelFile, RoundTripPreservesPredictions) {
  std::mt19937_64 rng(1);
  const auto d = oracle::random_grouped(rng, 9, 2);
  const auto f = fit(d);
  const auto back = model_from_json(nlohmann::json::parse(model_to_json(make_bundle(f, d, {})).dump()));
  const auto& g = back.fit;
  EXPECT_EQ(g.b0, f.b0);
  EXPECT_EQ(g.b, f.b);
  EXPECT_EQ(g.R, f.R);
  EXPECT_EQ(g.h, f.h);
  EXPECT_EQ(g.partition.keys, f.partition.keys);
  EXPECT_EQ(g.stats.n, f.stats.n);
  EXPECT_EQ(g.stats.ybar, f.stats.ybar);
  const auto w1 = build_w(f.stats, f.h), w2 = build_w(g.stats, g.h);
  const VectorXd a1 = alpha_hats(f), a2 = alpha_hats(g);
  for (Index i = 0; i < d.size(); ++i) {
    const VectorXd x = d.x.row(i).transpose();
    const GroupKey key{d.c(i, 0)};
    EXPECT_EQ(predict_theta(f, x, key).theta, predict_theta(g, x, key).theta);
    const Index k = *f.partition.find(key);
    EXPECT_EQ(mse_at(f, w1, x, k, a1).value, mse_at(g, w2, x, k, a2).value);
  }
}

TEST(ModelFile, SerializationIsStable) {
  std::mt19937_64 rng(2);
  const auto d = oracle::random_grouped(rng, 6, 1);
  const auto j1 = model_to_json(make_bundle(fit(d), d, {})).dump(2);
  const auto j2 = model_to_json(model_from_json(nlohmann::json::parse(j1))).dump(2);
  EXPECT_EQ(j1, j2);
}

TEST(ModelFile, RejectsForeignOrBrokenFiles) {
  EXPECT_THROW(model_from_json({{"format", "other"}}), SchemaError);
  std::mt19937_64 rng(3);
  const auto d = oracle::random_grouped(rng, 4, 1);
  auto j = model_to_json(make_bundle(fit(d), d, {}));
  auto unsorted = j;
  std::swap(unsorted["groups"][0], unsorted["groups"][1]);
  EXPECT_THROW(model_from_json(unsorted), SchemaError);
  auto wide = j;
  wide["groups"][0]["xbar"] = {1.0, 2.0};
  EXPECT_THROW(model_from_json(wide), SchemaError);
  auto missing = j;
  missing.erase("parameters");
  EXPECT_THROW(model_from_json(missing), SchemaError);
  auto version = j;
  version["version"] = 99;
  EXPECT_THROW(model_from_json(version), SchemaError);
}

TEST(ModelFile, WriteAndRead) {
  cli::ScratchDir dir("model");
  std::mt19937_64 rng(4);
  const auto d = oracle::random_grouped(rng, 5, 2);
  const auto f = fit(d);
  write_model(dir / "m.json", make_bundle(f, d, {}));
  EXPECT_EQ(read_model(dir / "m.json").fit.b, f.b);
  io::write_file_atomic(dir / "bad.json", "{not json");
  EXPECT_THROW(read_model(dir / "bad.json"), SchemaError);
}

}  // namespace
