#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "liftperc/graph.hpp"
#include "liftperc/lift.hpp"
#include "liftperc/rng.hpp"

namespace liftperc {

// Disjoint-set forest with union by size and path halving.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), VertexId{0});
  }

  VertexId find(VertexId x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(VertexId a, VertexId b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

  std::size_t set_size(VertexId x) { return size_[find(x)]; }

 private:
  std::vector<VertexId> parent_;
  std::vector<std::size_t> size_;
};

// One bit per host edge (1 = open).
struct PercolationConfig {
  std::vector<std::uint8_t> omega;
  double p = 0.0;
};

// Open iff uniform < p; consumes exactly edge_count draws.
PercolationConfig sample_percolation(std::size_t edge_count, double p, Stream& rng);
// Shared-uniform mode: thresholding the same uniforms at p <= p' gives
// nested configurations.
std::vector<double> sample_uniforms(std::size_t count, Stream& rng);
std::vector<std::uint8_t> threshold(std::span<const double> uniforms, double p);

struct Cluster {
  VertexId root;                 // smallest member
  std::vector<VertexId> members;  // sorted
  std::size_t size = 0;
  bool touches_boundary = false;
};

// Cluster label of every vertex: the smallest vertex id of its cluster.
template <class Host>
std::vector<VertexId> clusters(const Host& host, std::span<const std::uint8_t> omega) {
  DisjointSets ds(host.vertex_count());
  for (VertexId x = 0; x < host.vertex_count(); ++x) {
    host.for_each_incident(x, [&](EdgeId e, VertexId y) {
      if (omega[e] && x < y) ds.unite(x, y);
    });
  }
  std::vector<VertexId> label(host.vertex_count());
  std::vector<VertexId> smallest(host.vertex_count(), static_cast<VertexId>(-1));
  for (VertexId x = 0; x < host.vertex_count(); ++x) {
    const VertexId r = ds.find(x);
    if (smallest[r] == static_cast<VertexId>(-1)) smallest[r] = x;
    label[x] = smallest[r];
  }
  return label;
}

// BFS cluster of v; `boundary` may be empty (then touches_boundary is false).
template <class Host>
Cluster cluster_of(const Host& host, std::span<const std::uint8_t> omega, VertexId v,
                   std::span<const std::uint8_t> boundary = {}) {
  std::vector<std::uint8_t> seen(host.vertex_count(), 0);
  std::vector<VertexId> stack{v};
  seen[v] = 1;
  Cluster c{v, {}, 0, false};
  while (!stack.empty()) {
    const VertexId x = stack.back();
    stack.pop_back();
    c.members.push_back(x);
    if (!boundary.empty() && boundary[x]) c.touches_boundary = true;
    host.for_each_incident(x, [&](EdgeId e, VertexId y) {
      if (omega[e] && !seen[y]) {
        seen[y] = 1;
        stack.push_back(y);
      }
    });
  }
  std::sort(c.members.begin(), c.members.end());
  c.root = c.members.front();
  c.size = c.members.size();
  return c;
}

// True iff the open cluster of origin meets the boundary mask. Stops early.
template <class Host>
bool reaches(const Host& host, std::span<const std::uint8_t> omega, VertexId origin,
             std::span<const std::uint8_t> boundary) {
  if (boundary[origin]) return true;
  std::vector<std::uint8_t> seen(host.vertex_count(), 0);
  std::vector<VertexId> stack{origin};
  seen[origin] = 1;
  while (!stack.empty()) {
    const VertexId x = stack.back();
    stack.pop_back();
    bool hit = false;
    host.for_each_incident(x, [&](EdgeId e, VertexId y) {
      if (omega[e] && !seen[y]) {
        seen[y] = 1;
        if (boundary[y]) hit = true;
        stack.push_back(y);
      }
    });
    if (hit) return true;
  }
  return false;
}

// Size of the open cluster of origin, stopping once it reaches `cap`.
template <class Host>
std::size_t cluster_size(const Host& host, std::span<const std::uint8_t> omega, VertexId origin,
                         std::size_t cap = static_cast<std::size_t>(-1)) {
  std::vector<std::uint8_t> seen(host.vertex_count(), 0);
  std::vector<VertexId> stack{origin};
  seen[origin] = 1;
  std::size_t size = 1;
  while (!stack.empty() && size < cap) {
    const VertexId x = stack.back();
    stack.pop_back();
    host.for_each_incident(x, [&](EdgeId e, VertexId y) {
      if (omega[e] && !seen[y]) {
        seen[y] = 1;
        ++size;
        stack.push_back(y);
      }
    });
  }
  return size;
}

// Smallest p at which origin is joined to the boundary when edge e is open
// iff uniforms[e] < p: the minimax uniform over origin-boundary paths,
// computed by invasion from origin. Returns -infinity if origin is on the boundary
// and +infinity if no path exists. reaches(threshold(u, p)) == (result < p).
template <class Host>
double reach_threshold(const Host& host, std::span<const double> uniforms, VertexId origin,
                       std::span<const std::uint8_t> boundary);

// Min/max projection of a percolation configuration on a lift onto the base.
struct ProjectedPair {
  std::vector<std::uint8_t> omega_min;
  std::vector<std::uint8_t> omega_max;
};

ProjectedPair project_min_max(const LiftedGraph& lift, std::span<const std::uint8_t> omega);

// Projection of a set of lifted vertices (sorted, unique).
std::vector<VertexId> project_vertices(std::span<const VertexId> lifted);

}  // namespace liftperc

#include "liftperc/detail/invasion.hpp"
