#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <set>
#include <stdexcept>

#include "bcnet/oracle.hpp"
#include "bcnet/width_space.hpp"

namespace bcnet {
namespace {

WidthSpace uniform_space(int layers, int channels, int k, int in = 4, int out = 2) {
  return WidthSpace(std::vector<LayerSpec>(static_cast<std::size_t>(layers), {channels, 1.0}), k,
                    in, out);
}

TEST(WidthSpace, RejectsIndivisibleLayer) {
  try {
    WidthSpace({{8, 1.0}, {6, 1.0}}, 4, 3, 2);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos) << e.what();
  }
}

TEST(WidthSpace, RejectsNonPositiveParameters) {
  EXPECT_THROW(WidthSpace({}, 2, 3, 2), std::invalid_argument);
  EXPECT_THROW(WidthSpace({{4, 1.0}}, 0, 3, 2), std::invalid_argument);
  EXPECT_THROW(WidthSpace({{4, 1.0}}, 2, 0, 2), std::invalid_argument);
  EXPECT_THROW(WidthSpace({{4, 0.0}}, 2, 3, 2), std::invalid_argument);
}

TEST(WidthSpace, OptionsAreGroupMultiples) {
  const WidthSpace s({{8, 1.0}, {12, 1.0}}, 4, 3, 2);
  EXPECT_EQ(s.options(0), (std::vector<int>{2, 4, 6, 8}));
  EXPECT_EQ(s.options(1), (std::vector<int>{3, 6, 9, 12}));
  EXPECT_EQ(s.full_width().channels, (std::vector<int>{8, 12}));
  EXPECT_EQ(s.min_width().channels, (std::vector<int>{2, 3}));
}

TEST(WidthSpace, SizeIsKToTheL) {
  EXPECT_EQ(*uniform_space(3, 4, 4).size().exact, 64u);
  EXPECT_EQ(*uniform_space(10, 4, 1).size().exact, 1u);
  EXPECT_EQ(*uniform_space(2, 20, 20).size().exact, 400u);
}

TEST(WidthSpace, HugeSizeFallsBackToLog10) {
  const auto size = uniform_space(40, 8, 8).size();
  EXPECT_FALSE(size.exact.has_value());
  EXPECT_NEAR(size.log10, 40 * std::log10(8.0), 1e-9);
}

TEST(WidthSpace, GenomeRoundTrip) {
  const WidthSpace s({{8, 1.0}, {12, 1.0}}, 4, 3, 2);
  const NetworkWidth w{{6, 3}};
  EXPECT_EQ(s.to_genome(w), (Genome{3, 1}));
  EXPECT_EQ(s.to_width(Genome{3, 1}), w);
  EXPECT_THROW(s.to_genome(NetworkWidth{{5, 3}}), std::invalid_argument);
  EXPECT_THROW(s.to_genome(NetworkWidth{{8}}), std::invalid_argument);
  EXPECT_FALSE(s.contains(NetworkWidth{{0, 3}}));
  EXPECT_FALSE(s.contains_genome(Genome{5, 1}));
}

TEST(UniformSample, IndicesInRange) {
  const auto s = uniform_space(3, 8, 4);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    EXPECT_TRUE(s.contains(uniform_sample(s, seed)));
  }
}

TEST(UniformSample, SingletonSpace) {
  const auto s = uniform_space(5, 6, 1);
  EXPECT_EQ(uniform_sample(s, 9), s.full_width());
}

TEST(UniformSample, SameSeedSameWidth) {
  const auto s = uniform_space(6, 8, 4);
  EXPECT_EQ(uniform_sample(s, 1234), uniform_sample(s, 1234));
}

TEST(UniformSample, GroupFrequenciesNearUniform) {
  const auto s = uniform_space(3, 8, 4);
  Rng rng(7);
  constexpr int kDraws = 100000;
  std::array<std::array<int, 4>, 3> counts{};
  for (int n = 0; n < kDraws; ++n) {
    const auto g = uniform_sample_genome(s, rng);
    for (int l = 0; l < 3; ++l) ++counts[static_cast<std::size_t>(l)][static_cast<std::size_t>(g[static_cast<std::size_t>(l)] - 1)];
  }
  for (const auto& layer : counts) {
    for (int c : layer) EXPECT_NEAR(static_cast<double>(c) / kDraws, 0.25, 0.01);
  }
}

TEST(Complement, MirrorsGroupIndex) {
  const auto s = uniform_space(3, 6, 6);
  const auto c = complement(s, NetworkWidth{{3, 2, 4}});
  EXPECT_EQ(c.width.channels, (std::vector<int>{3, 4, 2}));
  EXPECT_FALSE(c.any_clamped());
}

TEST(Complement, MidpointIsSelfComplementary) {
  const auto s = uniform_space(2, 8, 4);
  EXPECT_EQ(s.to_genome(complement(s, s.to_width(Genome{2, 2})).width), (Genome{2, 2}));
}

TEST(Complement, FullLayerIsClampedAndFlagged) {
  const auto s = uniform_space(2, 8, 4);
  const auto c = complement(s, s.to_width(Genome{4, 1}));
  EXPECT_EQ(s.to_genome(c.width), (Genome{1, 3}));
  EXPECT_EQ(c.clamped, (std::vector<bool>{true, false}));
  EXPECT_TRUE(c.any_clamped());
}

TEST(Complement, InvolutionWithoutFullLayers) {
  const auto s = uniform_space(3, 10, 5);
  for (int a = 1; a < 5; ++a) {
    for (int b = 1; b < 5; ++b) {
      const auto w = s.to_width(Genome{a, b, 5 - a});
      EXPECT_EQ(complement(s, complement(s, w).width).width, w);
    }
  }
}

TEST(IndexSets, UaIsLeftmost) {
  EXPECT_EQ(ua_index_set(6, 3).positions(), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(ua_index_set(6, 6).positions(), (std::vector<int>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(ua_index_set(6, 1).positions(), (std::vector<int>{1}));
  EXPECT_THROW(ua_index_set(6, 0), std::invalid_argument);
  EXPECT_THROW(ua_index_set(6, 7), std::invalid_argument);
}

TEST(IndexSets, BcLeftAndRight) {
  const auto two = bc_index_sets(6, 2);
  EXPECT_EQ(two.left.positions(), (std::vector<int>{1, 2}));
  EXPECT_EQ(two.right.positions(), (std::vector<int>{5, 6}));

  const auto full = bc_index_sets(6, 6);
  const auto merged = full.left.merged(full.right);
  EXPECT_EQ(merged.size(), 12);
  for (int ch = 1; ch <= 6; ++ch) EXPECT_EQ(merged.count(ch), 2);

  const auto four = bc_index_sets(6, 4);
  EXPECT_EQ(four.right.positions(), (std::vector<int>{3, 4, 5, 6}));
  const auto m4 = four.left.merged(four.right);
  EXPECT_EQ(m4.count(3), 2);
  EXPECT_EQ(m4.count(4), 2);
  EXPECT_EQ(m4.count(1), 1);
  EXPECT_EQ(m4.count(6), 1);
  EXPECT_THROW(bc_index_sets(6, 0), std::invalid_argument);
}

TEST(IndexSets, BcSidesHaveCElementsEach) {
  for (int l = 1; l <= 64; ++l) {
    for (int c = 1; c <= l; ++c) {
      const auto sets = bc_index_sets(l, c);
      ASSERT_EQ(sets.left.size(), c);
      ASSERT_EQ(sets.right.size(), c);
      ASSERT_EQ(sets.left.merged(sets.right).size(), 2 * c);
    }
  }
}

TEST(Cardinality, ClosedForms) {
  EXPECT_EQ(cardinality_ua(6, 1), 6);
  EXPECT_EQ(cardinality_ua(6, 6), 1);
  EXPECT_EQ(cardinality_ua(10, 4), 7);
  for (int c = 1; c <= 6; ++c) EXPECT_EQ(cardinality_bc(6, c), 7);
  EXPECT_EQ(cardinality_bc(1, 1), 2);
  EXPECT_EQ(cardinality_bc(20, 13), 21);
  EXPECT_THROW(cardinality_ua(4, 5), std::invalid_argument);
  EXPECT_THROW(cardinality_bc(4, 0), std::invalid_argument);
}

TEST(Cardinality, BcDecomposesIntoMirroredUa) {
  for (int l = 1; l <= 64; ++l) {
    const auto ua = oracle::enumerate_cardinalities(l, Principle::UA);
    const auto bc = oracle::enumerate_cardinalities(l, Principle::BC);
    for (int c = 1; c <= l; ++c) {
      ASSERT_EQ(cardinality_bc(l, c), cardinality_ua(l, c) + cardinality_ua(l, l + 1 - c));
      ASSERT_EQ(cardinality_bc(l, c), l + 1);
      ASSERT_EQ(ua[static_cast<std::size_t>(c - 1)], cardinality_ua(l, c));
      ASSERT_EQ(bc[static_cast<std::size_t>(c - 1)], cardinality_bc(l, c));
    }
  }
}

}  // namespace
}  // namespace bcnet
