#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "bcnet/serialization.hpp"

namespace bcnet {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bcnet_ser_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

WidthSpace space() { return WidthSpace({{8, 1.0}, {12, 2.5}}, 4, 5, 3); }

TEST(SpaceJson, RoundTrip) {
  const auto s = space();
  const auto j = space_to_json(s);
  EXPECT_EQ(j.at("group_count"), 4);
  EXPECT_EQ(j.at("layers").size(), 2u);
  EXPECT_EQ(space_from_json(j), s);
}

TEST(WidthJson, PlainIntegerArray) {
  const NetworkWidth w{{6, 3}};
  EXPECT_EQ(width_to_json(w).dump(), "[6,3]");
  EXPECT_EQ(width_from_json(Json::parse("[6,3]")), w);
  EXPECT_THROW(width_from_json(Json::parse("{\"a\":1}")), std::invalid_argument);
}

TEST(DistributionJson, RoundTrip) {
  const SamplingDistribution d{{{0.25, 0.75}, {1.0, 0.0}}};
  EXPECT_EQ(distribution_from_json(distribution_to_json(d)), d);
}

TEST(LedgerJson, RoundTrip) {
  LossLedger ledger(3);
  ledger.record(NetworkWidth{{2, 3}}, 0.5);
  ledger.record(NetworkWidth{{4, 6}}, 0.25);
  ledger.record(NetworkWidth{{8, 12}}, 0.125);
  EXPECT_EQ(ledger_from_json(ledger_to_json(ledger)), ledger);
}

TEST(CountersJson, ReportsSpread) {
  auto c = UpdateCounters::for_space(space());
  c.counts[0] = {1, 1, 2, 2, 1, 1, 0, 0};
  const auto j = counters_to_json(c);
  EXPECT_EQ(j.at("spread")[0], 2);
  EXPECT_EQ(j.at("spread")[1], 0);
  EXPECT_TRUE(j.contains("audited_counts"));
}

TEST(PopulationJson, CarriesGenomeWidthAndFitness) {
  Population p;
  p.individuals.push_back(Individual{Genome{2, 1}, Fitness{0.5, 10.0}, true, 0.0});
  p.individuals.push_back(Individual{Genome{4, 4}, std::nullopt, true, 0.0});
  const auto j = population_to_json(p, space());
  EXPECT_EQ(j.at("individuals")[0].at("width").dump(), "[4,3]");
  EXPECT_EQ(j.at("individuals")[0].at("estimated_accuracy"), 0.5);
  EXPECT_FALSE(j.at("individuals")[1].contains("flops"));
}

TEST_F(TempDir, WeightsRoundTripAtSinglePrecision) {
  const auto w = init_supernet(space(), 3);
  const auto path = dir_ / "w.bcnw";
  save_weights(w, path, Json{{"seed", 3}});
  const auto loaded = load_weights(path);
  EXPECT_EQ(loaded.space, w.space);
  ASSERT_EQ(loaded.layers.size(), w.layers.size());
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    for (std::size_t e = 0; e < w.layers[i].weight.data.size(); ++e) {
      EXPECT_EQ(loaded.layers[i].weight.data[e],
                static_cast<double>(static_cast<float>(w.layers[i].weight.data[e])));
    }
  }
  // A second save of the loaded weights is byte-identical.
  const auto again = dir_ / "again.bcnw";
  save_weights(loaded, again, Json{{"seed", 3}});
  EXPECT_EQ(read_text(path), read_text(again));
  EXPECT_EQ(read_text(path).substr(0, 4), "BCNW");
}

TEST_F(TempDir, WeightsRejectCorruptFiles) {
  const auto w = init_supernet(space(), 1);
  const auto path = dir_ / "w.bcnw";
  save_weights(w, path);
  const std::string good = read_text(path);

  write_text(dir_ / "magic.bcnw", "XXXX" + good.substr(4));
  EXPECT_THROW(load_weights(dir_ / "magic.bcnw"), std::runtime_error);

  std::string version = good;
  version[4] = 9;
  write_text(dir_ / "version.bcnw", version);
  EXPECT_THROW(load_weights(dir_ / "version.bcnw"), std::runtime_error);

  write_text(dir_ / "short.bcnw", good.substr(0, good.size() - 3));
  EXPECT_THROW(load_weights(dir_ / "short.bcnw"), std::runtime_error);

  write_text(dir_ / "long.bcnw", good + "abcd");
  EXPECT_THROW(load_weights(dir_ / "long.bcnw"), std::runtime_error);

  EXPECT_THROW(load_weights(dir_ / "missing.bcnw"), std::runtime_error);
}

TEST_F(TempDir, JsonFilesRoundTripAndReportParseErrors) {
  const Json j = {{"b", 1}, {"a", {1, 2}}};
  write_json(dir_ / "x.json", j);
  EXPECT_EQ(read_json(dir_ / "x.json"), j);
  EXPECT_EQ(read_text(dir_ / "x.json").back(), '\n');
  write_text(dir_ / "bad.json", "{not json");
  EXPECT_THROW(read_json(dir_ / "bad.json"), std::runtime_error);
}

}  // namespace
}  // namespace bcnet
