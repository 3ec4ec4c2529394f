#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "stdsh/tensor.hpp"

namespace stdsh::hg {

enum class EdgeKind { kSpatial, kTemporal };

// Which hyperedge families to instantiate; dropping one family is used by the
// SHE/THE ablations.
struct EdgeFamilies {
  bool spatial = true;
  bool temporal = true;
};

// Spatio-temporal hypergraph over n intersections and a window of t steps.
//
// Nodes are (intersection, window position) instances, row index tau*n + i, so
// one timestep's nodes are contiguous. Spatial hyperedge tau groups every
// intersection at step tau; temporal hyperedge i groups every step of
// intersection i. Columns are laid out spatial first ([0, M)), then temporal
// ([M, M+P)), with M = t and P = n when both families are present.
class STHypergraph {
 public:
  STHypergraph(std::size_t n_intersections, std::size_t t_window, EdgeFamilies families = {});

  std::size_t n_intersections() const { return n_; }
  std::size_t t_window() const { return t_; }
  std::size_t num_nodes() const { return n_ * t_; }
  std::size_t num_spatial() const { return families_.spatial ? t_ : 0; }
  std::size_t num_temporal() const { return families_.temporal ? n_ : 0; }
  std::size_t num_edges() const { return num_spatial() + num_temporal(); }
  EdgeFamilies families() const { return families_; }

  std::size_t node_index(std::size_t intersection, std::size_t step) const;
  std::pair<std::size_t, std::size_t> node_at(std::size_t row) const;

  EdgeKind edge_kind(std::size_t e) const;
  std::vector<std::size_t> members(std::size_t e) const;
  std::vector<std::size_t> incident_edges(std::size_t node) const;

  // Binary N x E incidence matrix.
  const Mask& incidence() const { return h_; }
  // Same matrix as a dense real tensor.
  Tensor incidence_tensor() const;

  // Returns a copy with node rows reordered: new row r is old row perm[r].
  STHypergraph permuted_rows(const std::vector<std::size_t>& perm) const;

 private:
  STHypergraph() = default;

  std::size_t n_ = 0;
  std::size_t t_ = 0;
  EdgeFamilies families_;
  Mask h_;
};

STHypergraph build_st_hypergraph(std::size_t n_intersections, std::size_t t_window,
                                 EdgeFamilies families = {});

}  // namespace stdsh::hg
