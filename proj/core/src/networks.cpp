#include "stdsh/networks.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace stdsh {
namespace {

Tensor xavier(std::size_t rows, std::size_t cols, double gain, std::mt19937_64& rng) {
  const double limit = gain * std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> data(rows * cols);
  for (double& x : data) x = dist(rng);
  return Tensor({rows, cols}, std::move(data), true);
}

}  // namespace

Mlp::Mlp(std::string prefix, std::size_t in, std::size_t hidden, std::size_t out, std::uint64_t seed,
         double output_gain)
    : prefix_(std::move(prefix)) {
  if (in == 0 || hidden == 0 || out == 0) throw std::invalid_argument("Mlp widths must be positive");
  std::mt19937_64 rng(seed);
  w1_ = xavier(in, hidden, 1.0, rng);
  b1_ = Tensor::zeros({1, hidden}, true);
  w2_ = xavier(hidden, out, output_gain, rng);
  b2_ = Tensor::zeros({1, out}, true);
}

Tensor Mlp::forward(Tape& tape, const Tensor& x) const {
  if (x.cols() != in_width()) {
    throw std::invalid_argument(prefix_ + ": input width " + std::to_string(x.cols()) + ", expected " +
                                std::to_string(in_width()));
  }
  Tensor h = tape.tanh(tape.add(tape.matmul(x, w1_), b1_));
  return tape.add(tape.matmul(h, w2_), b2_);
}

std::vector<NamedTensor> Mlp::named_parameters() const {
  return {{prefix_ + ".W1", w1_}, {prefix_ + ".b1", b1_}, {prefix_ + ".W2", w2_}, {prefix_ + ".b2", b2_}};
}

}  // namespace stdsh
