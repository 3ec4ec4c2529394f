#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stdsh/checkpoint.hpp"
#include "stdsh/tape.hpp"
#include "stdsh/tensor.hpp"

namespace stdsh::dsha {

struct EncoderConfig {
  std::size_t feature_width = 0;  // raw node feature width before padding
  std::size_t heads = 4;
  std::size_t model_width = 64;
  double tau = 1.0;
  // false replaces both attention stages with uniform averaging over
  // members / incident hyperedges (DSHA ablation).
  bool attention = true;
};

// Feature width rounded up to a multiple of the head count.
std::size_t padded_width(std::size_t feature_width, std::size_t heads);

struct HeadParams {
  Tensor w;  // d x d_h projection
  Tensor a;  // d_h x 1 node scorer (intra-hyperedge stage)
  Tensor b;  // d_h x 1 hyperedge scorer (inter-hyperedge stage)
};

struct EncoderParams {
  std::vector<HeadParams> heads;
  Tensor wo;  // (K*d_h) x d_model
  Tensor bo;  // 1 x d_model
  double tau = 1.0;
};

// Stage A. For projected features xh (N x d_h) returns alpha (N x E) where
// column e is a temperature softmax of the node scores xh*a over the members
// of e, stabilised by subtracting the member max. Non-members are exactly 0.
Tensor intra_attention(Tape& tape, const Tensor& xh, const Mask& incidence, const Tensor& a,
                       double tau);

// z_e = sum_i alpha[i,e] * xh_i, i.e. alpha^T xh (E x d_h).
Tensor hyperedge_embed(Tape& tape, const Tensor& alpha, const Tensor& xh);

// Stage B. Row i of beta (N x E) is a temperature softmax of the hyperedge
// scores z*b over the hyperedges incident to node i.
Tensor inter_attention(Tape& tape, const Tensor& z, const Mask& incidence, const Tensor& b,
                       double tau);

// Uniform weights: column-normalised (members) or row-normalised (incident
// edges) incidence. Used when attention is ablated.
Tensor uniform_intra(const Mask& incidence);
Tensor uniform_inter(const Mask& incidence);

struct EncoderOutput {
  Tensor node_embeddings;  // Y_hat, N x d_model
  Tensor graph_embedding;  // g, 1 x d_model
  std::vector<Tensor> alpha;  // per head, N x E
  std::vector<Tensor> beta;   // per head, N x E
};

class Encoder {
 public:
  Encoder(EncoderConfig config, std::uint64_t seed);
  Encoder(EncoderConfig config, EncoderParams params);

  EncoderOutput encode(Tape& tape, const Tensor& x, const Mask& incidence) const;

  const EncoderConfig& config() const { return config_; }
  std::size_t input_width() const { return d_; }
  std::size_t head_width() const { return d_ / config_.heads; }
  const EncoderParams& params() const { return params_; }
  EncoderParams& params() { return params_; }

  std::vector<Tensor> parameters() const;
  // Names: enc.W.h{k}, enc.a.h{k}, enc.b.h{k} for heads k = 1..K, then enc.Wo, enc.bo.
  std::vector<NamedTensor> named_parameters() const;

 private:
  void validate() const;

  EncoderConfig config_;
  std::size_t d_ = 0;
  EncoderParams params_;
};

}  // namespace stdsh::dsha
