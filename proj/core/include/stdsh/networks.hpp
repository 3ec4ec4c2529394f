#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stdsh/checkpoint.hpp"
#include "stdsh/tape.hpp"
#include "stdsh/tensor.hpp"

namespace stdsh {

// in -> hidden (tanh) -> out. Used for both the shared actor (out = action
// logits) and the centralized critic (out = 1).
class Mlp {
 public:
  Mlp(std::string prefix, std::size_t in, std::size_t hidden, std::size_t out, std::uint64_t seed,
      double output_gain = 1.0);

  // x: B x in -> B x out
  Tensor forward(Tape& tape, const Tensor& x) const;

  std::size_t in_width() const { return w1_.rows(); }
  std::size_t out_width() const { return w2_.cols(); }
  std::vector<Tensor> parameters() const { return {w1_, b1_, w2_, b2_}; }
  // prefix.W1, prefix.b1, prefix.W2, prefix.b2
  std::vector<NamedTensor> named_parameters() const;

 private:
  std::string prefix_;
  Tensor w1_, b1_, w2_, b2_;
};

class PolicyNet : public Mlp {
 public:
  // The output layer starts small so the initial policy is close to uniform.
  PolicyNet(std::size_t obs_width, std::size_t actions, std::uint64_t seed, std::size_t hidden = 256)
      : Mlp("actor", obs_width, hidden, actions, seed, 0.01) {}
};

class CriticNet : public Mlp {
 public:
  CriticNet(std::size_t input_width, std::uint64_t seed, std::size_t hidden = 256)
      : Mlp("critic", input_width, hidden, 1, seed) {}
};

}  // namespace stdsh
