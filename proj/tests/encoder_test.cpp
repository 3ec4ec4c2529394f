#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "stdsh/encoder.hpp"
#include "stdsh/gradcheck.hpp"
#include "stdsh/hypergraph.hpp"

using namespace stdsh;
using namespace stdsh::dsha;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, bool grad = false) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(r * c);
  for (double& x : v) x = u(rng);
  return Tensor({r, c}, std::move(v), grad);
}

Tensor col(std::initializer_list<double> v) { return Tensor({v.size(), 1}, std::vector<double>(v)); }

}  // namespace

TEST(IntraAttention, SingleMemberGetsWeightOne) {
  Mask h(3, 1);
  h.set(1, 0, true);
  Tape tape;
  Tensor alpha = intra_attention(tape, col({0.3, -2.0, 5.0}), h, col({1.0}), 1.0);
  EXPECT_EQ(alpha.at(1, 0), 1.0);
  EXPECT_EQ(alpha.at(0, 0), 0.0);
  EXPECT_EQ(alpha.at(2, 0), 0.0);
}

TEST(IntraAttention, EqualScoresSplitEvenly) {
  Tape tape;
  Tensor alpha = intra_attention(tape, col({0.7, 0.7}), Mask(2, 1, true), col({2.0}), 1.0);
  EXPECT_EQ(alpha.at(0, 0), 0.5);
  EXPECT_EQ(alpha.at(1, 0), 0.5);
}

TEST(IntraAttention, HandSoftmax) {
  Tape tape;
  Tensor alpha = intra_attention(tape, col({0.0, std::log(2.0)}), Mask(2, 1, true), col({1.0}), 1.0);
  EXPECT_NEAR(alpha.at(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(alpha.at(1, 0), 2.0 / 3.0, 1e-15);
}

TEST(IntraAttention, EmptyHyperedgeRejected) {
  Mask h(2, 2, false);
  h.set(0, 0, true);
  h.set(1, 0, true);
  Tape tape;
  EXPECT_THROW(intra_attention(tape, col({1, 2}), h, col({1}), 1.0), std::invalid_argument);
}

TEST(IntraAttention, AdditiveShiftInvariantScalingNot) {
  // An additive constant on the scores of every member leaves alpha unchanged;
  // scaling the scorer does not.
  Mask h(3, 1, true);
  Tape tape;
  const Tensor xh = Tensor::matrix(3, 2, {0.1, 0.4, -0.3, 0.2, 0.5, -0.6});
  const Tensor a = col({0.8, -0.5});
  const Tensor base = intra_attention(tape, xh, h, a, 1.0);
  // Shift: adding c to every member's projected features along a/|a|^2 adds c to each score.
  const double c = 3.7;
  const double a2 = 0.8 * 0.8 + 0.5 * 0.5;
  Tensor shifted_x = xh.clone();
  for (std::size_t r = 0; r < 3; ++r) {
    shifted_x.at(r, 0) += c * 0.8 / a2;
    shifted_x.at(r, 1) += c * -0.5 / a2;
  }
  const Tensor shifted = intra_attention(tape, shifted_x, h, a, 1.0);
  const Tensor scaled = intra_attention(tape, xh, h, col({1.6, -1.0}), 1.0);
  double max_shift = 0, max_scale = 0;
  for (std::size_t r = 0; r < 3; ++r) {
    max_shift = std::max(max_shift, std::abs(base.at(r, 0) - shifted.at(r, 0)));
    max_scale = std::max(max_scale, std::abs(base.at(r, 0) - scaled.at(r, 0)));
  }
  EXPECT_LE(max_shift, 1e-14);
  EXPECT_GT(max_scale, 1e-3);
}

TEST(HyperedgeEmbed, OneHotSelectsRow) {
  Tape tape;
  const Tensor xh = Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6});
  const Tensor alpha = Tensor::matrix(3, 1, {0, 1, 0});
  const Tensor z = hyperedge_embed(tape, alpha, xh);
  EXPECT_EQ(z.at(0, 0), 3.0);
  EXPECT_EQ(z.at(0, 1), 4.0);
}

TEST(HyperedgeEmbed, Midpoint) {
  Tape tape;
  const Tensor z = hyperedge_embed(tape, Tensor::matrix(2, 1, {0.5, 0.5}), col({0.0, 2.0}));
  EXPECT_EQ(z.at(0, 0), 1.0);
}

TEST(HyperedgeEmbed, MatchesLoopAndIsConvex) {
  std::mt19937_64 rng(11);
  const Tensor xh = random_tensor(4, 3, rng);
  Tape tape;
  const Tensor alpha = intra_attention(tape, xh, Mask(4, 1, true), random_tensor(3, 1, rng), 1.0);
  const Tensor z = hyperedge_embed(tape, alpha, xh);
  for (std::size_t c = 0; c < 3; ++c) {
    double sum = 0, lo = 1e9, hi = -1e9;
    for (std::size_t i = 0; i < 4; ++i) {
      sum += alpha.at(i, 0) * xh.at(i, c);
      lo = std::min(lo, xh.at(i, c));
      hi = std::max(hi, xh.at(i, c));
    }
    EXPECT_NEAR(z.at(0, c), sum, 1e-15);
    EXPECT_GE(z.at(0, c), lo);
    EXPECT_LE(z.at(0, c), hi);
  }
}

TEST(InterAttention, EqualEdgeScoresSplitEvenly) {
  Tape tape;
  const Tensor beta = inter_attention(tape, col({1.0, 1.0}), Mask(1, 2, true), col({0.3}), 1.0);
  EXPECT_EQ(beta.at(0, 0), 0.5);
  EXPECT_EQ(beta.at(0, 1), 0.5);
}

TEST(InterAttention, HandSoftmax) {
  Tape tape;
  const Tensor beta = inter_attention(tape, col({0.0, std::log(3.0)}), Mask(1, 2, true), col({1.0}), 1.0);
  EXPECT_NEAR(beta.at(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(beta.at(0, 1), 0.75, 1e-15);
}

TEST(InterAttention, HighTemperatureIsUniform) {
  Tape tape;
  const Tensor beta = inter_attention(tape, col({-3.0, 5.0}), Mask(1, 2, true), col({1.0}), 1e9);
  EXPECT_NEAR(beta.at(0, 0), 0.5, 1e-8);
  EXPECT_NEAR(beta.at(0, 1), 0.5, 1e-8);
}

TEST(InterAttention, IsolatedNodeRejected) {
  Mask h(2, 1, false);
  h.set(0, 0, true);
  Tape tape;
  EXPECT_THROW(inter_attention(tape, col({1.0}), h, col({1.0}), 1.0), std::invalid_argument);
}

TEST(Encoder, SingleNodeReadoutIsItsRow) {
  EncoderConfig cfg{.feature_width = 4, .heads = 2, .model_width = 3};
  Encoder enc(cfg, 5);
  std::mt19937_64 rng(5);
  Tape tape;
  const auto out = enc.encode(tape, random_tensor(1, 4, rng), hg::build_st_hypergraph(1, 1).incidence());
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out.graph_embedding.at(0, c), out.node_embeddings.at(0, c));
}

TEST(Encoder, IdentityChainCollapses) {
  EncoderConfig cfg{.feature_width = 1, .heads = 1, .model_width = 1};
  EncoderParams p;
  p.heads.push_back({Tensor::matrix(1, 1, {1.0}), Tensor::matrix(1, 1, {1.0}), Tensor::matrix(1, 1, {1.0})});
  p.wo = Tensor::matrix(1, 1, {1.0});
  p.bo = Tensor::matrix(1, 1, {0.0});
  Encoder enc(cfg, p);
  Tape tape;
  const double c = -2.75;
  const auto out = enc.encode(tape, Tensor::matrix(1, 1, {c}), hg::build_st_hypergraph(1, 1).incidence());
  EXPECT_EQ(out.graph_embedding.item(), c);
}

TEST(Encoder, PadsFeatureWidthToHeadMultiple) {
  EXPECT_EQ(padded_width(164, 4), 164u);
  EXPECT_EQ(padded_width(10, 4), 12u);
  Encoder enc({.feature_width = 10, .heads = 4, .model_width = 8}, 1);
  EXPECT_EQ(enc.input_width(), 12u);
  EXPECT_EQ(enc.head_width(), 3u);
}

TEST(Encoder, NormalizationOnRandomInstances) {
  std::mt19937_64 rng(21);
  const std::size_t head_choices[] = {1, 2, 4};
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng() % 6, t = 1 + rng() % 5, k = head_choices[rng() % 3];
    const auto g = hg::build_st_hypergraph(n, t);
    Encoder enc({.feature_width = 8, .heads = k, .model_width = 5}, rng());
    Tape tape;
    const auto out = enc.encode(tape, random_tensor(n * t, 8, rng), g.incidence());
    const auto& h = g.incidence();
    for (std::size_t head = 0; head < k; ++head) {
      for (std::size_t e = 0; e < h.cols(); ++e) {
        double s = 0;
        for (std::size_t i = 0; i < h.rows(); ++i) {
          if (!h(i, e)) {
            EXPECT_EQ(out.alpha[head].at(i, e), 0.0);
          }
          s += out.alpha[head].at(i, e);
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
      }
      for (std::size_t i = 0; i < h.rows(); ++i) {
        double s = 0;
        for (std::size_t e = 0; e < h.cols(); ++e) {
          if (!h(i, e)) {
            EXPECT_EQ(out.beta[head].at(i, e), 0.0);
          }
          s += out.beta[head].at(i, e);
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
      }
    }
  }
}

TEST(Encoder, ReadoutIsPermutationInvariant) {
  std::mt19937_64 rng(31);
  const auto g = hg::build_st_hypergraph(4, 3);
  Encoder enc({.feature_width = 6, .heads = 2, .model_width = 5}, 3);
  const Tensor x = random_tensor(12, 6, rng);
  Tape tape;
  const Tensor g0 = enc.encode(tape, x, g.incidence()).graph_embedding;
  std::vector<std::size_t> perm(12);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor xp = tape.take_rows(x, perm);
    const Tensor g1 = enc.encode(tape, xp, g.permuted_rows(perm).incidence()).graph_embedding;
    for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(g0.at(0, c), g1.at(0, c), 1e-12);
  }
}

TEST(Encoder, UniformAblationAverages) {
  const auto g = hg::build_st_hypergraph(3, 2);
  Encoder enc({.feature_width = 4, .heads = 2, .model_width = 3, .attention = false}, 3);
  std::mt19937_64 rng(4);
  Tape tape;
  const auto out = enc.encode(tape, random_tensor(6, 4, rng), g.incidence());
  EXPECT_EQ(out.alpha[0].at(0, 0), 1.0 / 3.0);  // spatial edge, 3 members
  EXPECT_EQ(out.alpha[0].at(0, 2), 0.5);        // temporal edge, 2 members
  EXPECT_EQ(out.beta[1].at(4, 1), 0.5);
}

TEST(Encoder, GradientThroughAllParameters) {
  std::mt19937_64 rng(41);
  const auto g = hg::build_st_hypergraph(3, 2);
  Encoder enc({.feature_width = 5, .heads = 2, .model_width = 4, .tau = 0.8}, 9);
  const Tensor x = random_tensor(6, 5, rng);
  const Tensor w = random_tensor(1, 4, rng);
  std::vector<Tensor> params = enc.parameters();
  const double err = finite_diff_check(
      [&](Tape& t) {
        const auto out = enc.encode(t, x, g.incidence());
        return t.add(t.reduce_sum(t.mul(out.graph_embedding, w)), t.mean(t.square(out.node_embeddings)));
      },
      params, 1e-5);
  EXPECT_LE(err, 1e-4);
}

TEST(Encoder, ParameterNames) {
  Encoder enc({.feature_width = 4, .heads = 2, .model_width = 3}, 1);
  std::vector<std::string> names;
  for (const auto& p : enc.named_parameters()) names.push_back(p.name);
  EXPECT_EQ(names, (std::vector<std::string>{"enc.W.h1", "enc.a.h1", "enc.b.h1", "enc.W.h2", "enc.a.h2", "enc.b.h2",
                                             "enc.Wo", "enc.bo"}));
}

TEST(Encoder, RejectsBadConfig) {
  EXPECT_THROW(Encoder({.feature_width = 4, .heads = 2, .model_width = 3, .tau = 0.0}, 1), std::invalid_argument);
  EXPECT_THROW(Encoder({.feature_width = 0, .heads = 2, .model_width = 3}, 1), std::invalid_argument);
}
