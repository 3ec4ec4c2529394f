#include "stdsh/encoder.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace stdsh::dsha {
namespace {

Tensor uniform_init(Shape shape, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

double xavier(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void check_incidence(const Mask& h, std::size_t rows, std::string_view who) {
  if (h.rows() != rows) {
    throw std::invalid_argument(std::string(who) + ": incidence has " + std::to_string(h.rows()) +
                                " rows, features have " + std::to_string(rows));
  }
}

}  // namespace

std::size_t padded_width(std::size_t feature_width, std::size_t heads) {
  if (heads == 0) throw std::invalid_argument("encoder: head count must be positive");
  return (feature_width + heads - 1) / heads * heads;
}

Tensor intra_attention(Tape& tape, const Tensor& xh, const Mask& incidence, const Tensor& a,
                       double tau) {
  check_incidence(incidence, xh.rows(), "intra_attention");
  for (std::size_t e = 0; e < incidence.cols(); ++e) {
    if (incidence.col_count(e) == 0) {
      throw std::invalid_argument("intra_attention: hyperedge " + std::to_string(e) + " is empty");
    }
  }
  const Tensor s = tape.matmul(xh, a);  // N x 1
  const Tensor per_edge = tape.expand(tape.transpose(s), incidence.cols(), incidence.rows());
  const Tensor alpha_t = tape.masked_softmax(per_edge, incidence.transposed(), tau);
  return tape.transpose(alpha_t);
}

Tensor hyperedge_embed(Tape& tape, const Tensor& alpha, const Tensor& xh) {
  return tape.matmul(tape.transpose(alpha), xh);
}

Tensor inter_attention(Tape& tape, const Tensor& z, const Mask& incidence, const Tensor& b,
                       double tau) {
  if (incidence.cols() != z.rows()) {
    throw std::invalid_argument("inter_attention: incidence has " + std::to_string(incidence.cols()) +
                                " hyperedges, embeddings have " + std::to_string(z.rows()));
  }
  for (std::size_t i = 0; i < incidence.rows(); ++i) {
    if (incidence.row_count(i) == 0) {
      throw std::invalid_argument("inter_attention: node " + std::to_string(i) + " is isolated");
    }
  }
  const Tensor t = tape.matmul(z, b);  // E x 1
  const Tensor per_node = tape.expand(tape.transpose(t), incidence.rows(), incidence.cols());
  return tape.masked_softmax(per_node, incidence, tau);
}

Tensor uniform_intra(const Mask& incidence) {
  Tensor out = Tensor::zeros({incidence.rows(), incidence.cols()});
  for (std::size_t e = 0; e < incidence.cols(); ++e) {
    const std::size_t k = incidence.col_count(e);
    if (k == 0) throw std::invalid_argument("uniform_intra: hyperedge " + std::to_string(e) + " is empty");
    for (std::size_t i = 0; i < incidence.rows(); ++i)
      if (incidence(i, e)) out.at(i, e) = 1.0 / static_cast<double>(k);
  }
  return out;
}

Tensor uniform_inter(const Mask& incidence) {
  Tensor out = Tensor::zeros({incidence.rows(), incidence.cols()});
  for (std::size_t i = 0; i < incidence.rows(); ++i) {
    const std::size_t k = incidence.row_count(i);
    if (k == 0) throw std::invalid_argument("uniform_inter: node " + std::to_string(i) + " is isolated");
    for (std::size_t e = 0; e < incidence.cols(); ++e)
      if (incidence(i, e)) out.at(i, e) = 1.0 / static_cast<double>(k);
  }
  return out;
}

Encoder::Encoder(EncoderConfig config, std::uint64_t seed)
    : config_(config), d_(padded_width(config.feature_width, config.heads)) {
  if (config_.feature_width == 0 || config_.model_width == 0) {
    throw std::invalid_argument("encoder: feature and model widths must be positive");
  }
  std::mt19937_64 rng(seed);
  const std::size_t dh = d_ / config_.heads;
  for (std::size_t k = 0; k < config_.heads; ++k) {
    HeadParams h;
    h.w = uniform_init({d_, dh}, xavier(d_, dh), rng);
    h.a = uniform_init({dh, 1}, xavier(dh, 1), rng);
    h.b = uniform_init({dh, 1}, xavier(dh, 1), rng);
    params_.heads.push_back(std::move(h));
  }
  params_.wo = uniform_init({config_.heads * dh, config_.model_width},
                            xavier(config_.heads * dh, config_.model_width), rng);
  params_.bo = Tensor::zeros({1, config_.model_width}, true);
  params_.tau = config_.tau;
  validate();
}

Encoder::Encoder(EncoderConfig config, EncoderParams params)
    : config_(config), d_(padded_width(config.feature_width, config.heads)), params_(std::move(params)) {
  validate();
}

void Encoder::validate() const {
  if (!(params_.tau > 0.0)) throw std::invalid_argument("encoder: tau must be > 0");
  if (params_.heads.size() != config_.heads) throw std::invalid_argument("encoder: head count mismatch");
  const std::size_t dh = d_ / config_.heads;
  auto expect = [](const Tensor& t, std::size_t r, std::size_t c, const char* what) {
    if (!t.defined() || t.rows() != r || t.cols() != c) {
      throw std::invalid_argument(std::string("encoder: ") + what + " must be " + std::to_string(r) +
                                  "x" + std::to_string(c));
    }
    for (double v : t.data())
      if (!std::isfinite(v)) throw std::invalid_argument(std::string("encoder: ") + what + " is not finite");
  };
  for (const HeadParams& h : params_.heads) {
    expect(h.w, d_, dh, "W");
    expect(h.a, dh, 1, "a");
    expect(h.b, dh, 1, "b");
  }
  expect(params_.wo, config_.heads * dh, config_.model_width, "Wo");
  expect(params_.bo, 1, config_.model_width, "bo");
}

EncoderOutput Encoder::encode(Tape& tape, const Tensor& x, const Mask& incidence) const {
  if (x.cols() > d_) {
    throw std::invalid_argument("encoder: features have width " + std::to_string(x.cols()) +
                                ", encoder expects at most " + std::to_string(d_));
  }
  check_incidence(incidence, x.rows(), "encoder");
  const Tensor xp = tape.pad_cols(x, d_);
  const double tau = params_.tau;

  EncoderOutput out;
  std::vector<Tensor> head_out;
  head_out.reserve(params_.heads.size());
  const Tensor fixed_alpha = config_.attention ? Tensor() : uniform_intra(incidence);
  const Tensor fixed_beta = config_.attention ? Tensor() : uniform_inter(incidence);
  for (const HeadParams& h : params_.heads) {
    const Tensor xh = tape.matmul(xp, h.w);
    const Tensor alpha = config_.attention ? intra_attention(tape, xh, incidence, h.a, tau) : fixed_alpha;
    const Tensor z = hyperedge_embed(tape, alpha, xh);
    const Tensor beta = config_.attention ? inter_attention(tape, z, incidence, h.b, tau) : fixed_beta;
    // beta is already zero off the incidence pattern, so beta*H == beta.
    head_out.push_back(tape.matmul(beta, z));
    out.alpha.push_back(alpha);
    out.beta.push_back(beta);
  }
  const Tensor cat = tape.concat_cols(head_out);
  out.node_embeddings = tape.add(tape.matmul(cat, params_.wo), params_.bo);
  out.graph_embedding = tape.reduce_max(out.node_embeddings);
  return out;
}

std::vector<Tensor> Encoder::parameters() const {
  std::vector<Tensor> p;
  for (const HeadParams& h : params_.heads) {
    p.push_back(h.w);
    p.push_back(h.a);
    p.push_back(h.b);
  }
  p.push_back(params_.wo);
  p.push_back(params_.bo);
  return p;
}

std::vector<NamedTensor> Encoder::named_parameters() const {
  std::vector<NamedTensor> p;
  for (std::size_t k = 0; k < params_.heads.size(); ++k) {
    const std::string suffix = ".h" + std::to_string(k + 1);
    p.push_back({"enc.W" + suffix, params_.heads[k].w});
    p.push_back({"enc.a" + suffix, params_.heads[k].a});
    p.push_back({"enc.b" + suffix, params_.heads[k].b});
  }
  p.push_back({"enc.Wo", params_.wo});
  p.push_back({"enc.bo", params_.bo});
  return p;
}

}  // namespace stdsh::dsha
