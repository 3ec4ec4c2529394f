#include "stdsh/hypergraph.hpp"

#include <stdexcept>
#include <string>

namespace stdsh::hg {

STHypergraph::STHypergraph(std::size_t n_intersections, std::size_t t_window, EdgeFamilies families)
    : n_(n_intersections), t_(t_window), families_(families) {
  if (n_ == 0 || t_ == 0) {
    throw std::invalid_argument("hypergraph: need n >= 1 and t >= 1 (got n=" + std::to_string(n_) +
                                ", t=" + std::to_string(t_) + ")");
  }
  if (!families_.spatial && !families_.temporal) {
    throw std::invalid_argument("hypergraph: at least one hyperedge family is required");
  }
  h_ = Mask(num_nodes(), num_edges());
  const std::size_t m = num_spatial();
  for (std::size_t tau = 0; tau < t_; ++tau) {
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t row = node_index(i, tau);
      if (families_.spatial) h_.set(row, tau, true);
      if (families_.temporal) h_.set(row, m + i, true);
    }
  }
}

std::size_t STHypergraph::node_index(std::size_t intersection, std::size_t step) const {
  if (intersection >= n_ || step >= t_) {
    throw std::out_of_range("hypergraph: node (" + std::to_string(intersection) + "," +
                            std::to_string(step) + ") outside " + std::to_string(n_) + "x" +
                            std::to_string(t_));
  }
  return step * n_ + intersection;
}

std::pair<std::size_t, std::size_t> STHypergraph::node_at(std::size_t row) const {
  if (row >= num_nodes()) throw std::out_of_range("hypergraph: row " + std::to_string(row) + " out of range");
  return {row % n_, row / n_};
}

EdgeKind STHypergraph::edge_kind(std::size_t e) const {
  if (e >= num_edges()) throw std::out_of_range("hypergraph: hyperedge " + std::to_string(e) + " out of range");
  return e < num_spatial() ? EdgeKind::kSpatial : EdgeKind::kTemporal;
}

std::vector<std::size_t> STHypergraph::members(std::size_t e) const {
  if (e >= num_edges()) throw std::out_of_range("hypergraph: hyperedge " + std::to_string(e) + " out of range");
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < h_.rows(); ++r)
    if (h_(r, e)) out.push_back(r);
  return out;
}

std::vector<std::size_t> STHypergraph::incident_edges(std::size_t node) const {
  if (node >= num_nodes()) throw std::out_of_range("hypergraph: row " + std::to_string(node) + " out of range");
  std::vector<std::size_t> out;
  for (std::size_t e = 0; e < h_.cols(); ++e)
    if (h_(node, e)) out.push_back(e);
  return out;
}

Tensor STHypergraph::incidence_tensor() const {
  Tensor t = Tensor::zeros({h_.rows(), h_.cols()});
  for (std::size_t r = 0; r < h_.rows(); ++r)
    for (std::size_t c = 0; c < h_.cols(); ++c) t.at(r, c) = h_(r, c) ? 1.0 : 0.0;
  return t;
}

STHypergraph STHypergraph::permuted_rows(const std::vector<std::size_t>& perm) const {
  if (perm.size() != num_nodes()) throw std::invalid_argument("hypergraph: permutation size mismatch");
  STHypergraph out;
  out.n_ = n_;
  out.t_ = t_;
  out.families_ = families_;
  out.h_ = Mask(h_.rows(), h_.cols());
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t r = 0; r < perm.size(); ++r) {
    if (perm[r] >= perm.size() || seen[perm[r]]) throw std::invalid_argument("hypergraph: not a permutation");
    seen[perm[r]] = true;
    for (std::size_t c = 0; c < h_.cols(); ++c) out.h_.set(r, c, h_(perm[r], c));
  }
  return out;
}

STHypergraph build_st_hypergraph(std::size_t n_intersections, std::size_t t_window, EdgeFamilies families) {
  return STHypergraph(n_intersections, t_window, families);
}

}  // namespace stdsh::hg
