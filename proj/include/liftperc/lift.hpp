#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "liftperc/graph.hpp"
#include "liftperc/rng.hpp"

namespace liftperc {

// Lifted vertex (v, level) has id 2v + level; lifted edge (e, level) has id
// 2e + level, where (e, 0) is the lift incident to u_0 for u the smaller
// endpoint of e. Lexicographic order on (v, level) is therefore id order.
constexpr VertexId lifted_vertex(VertexId v, unsigned level) { return 2 * v + (level & 1u); }
constexpr VertexId project(VertexId x) { return x >> 1; }
constexpr unsigned level_of(VertexId x) { return x & 1u; }
constexpr VertexId twin(VertexId x) { return x ^ 1u; }
constexpr EdgeId lifted_edge(EdgeId e, unsigned level) { return 2 * e + (level & 1u); }
constexpr EdgeId project_edge(EdgeId le) { return le >> 1; }
constexpr EdgeId twin_edge(EdgeId le) { return le ^ 1u; }

// One switching bit per base edge (1 = the two lifts cross levels).
class SwitchConfig {
 public:
  SwitchConfig() = default;
  explicit SwitchConfig(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}
  static SwitchConfig zeros(std::size_t n) { return SwitchConfig(std::vector<std::uint8_t>(n, 0)); }

  std::size_t size() const { return bits_.size(); }
  std::uint8_t operator[](EdgeId e) const { return bits_[e]; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::size_t switching_count() const;

  // Bit e lives in byte e/8 at position e%8; bytes are written as two
  // lowercase hex digits in increasing byte order.
  std::string to_hex() const;
  static SwitchConfig from_hex(const std::string& hex, std::size_t n);

  friend bool operator==(const SwitchConfig&, const SwitchConfig&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

// Draws exactly edge_count() uniforms for every q, including q = 0 and q = 1.
SwitchConfig sample_switch_config(const BaseGraph& g, double q, Stream& rng);

// Subset S of base vertices as a 0/1 mask.
using GaugeSet = std::vector<std::uint8_t>;

// The 2-lift (V x {0,1}, E(eta)). Holds a pointer to the base graph, which
// must outlive it.
class LiftedGraph {
 public:
  LiftedGraph(const BaseGraph& base, SwitchConfig eta);

  const BaseGraph& base() const { return *base_; }
  const SwitchConfig& eta() const { return eta_; }
  std::size_t vertex_count() const { return 2 * base_->vertex_count(); }
  std::size_t edge_count() const { return 2 * base_->edge_count(); }
  std::size_t degree(VertexId x) const { return base_->degree(project(x)); }

  // Lifted edge (e, l) joins u_l and v_{l xor eta_e}.
  std::pair<VertexId, VertexId> endpoints(EdgeId le) const {
    const EdgeId e = project_edge(le);
    const unsigned l = level_of(le);
    const auto& be = base_->edge(e);
    return {lifted_vertex(be.u, l), lifted_vertex(be.v, l ^ eta_[e])};
  }

  template <class Fn>
  void for_each_incident(VertexId x, Fn&& fn) const {
    const VertexId v = project(x);
    const unsigned l = level_of(x);
    for (const auto& inc : base_->incident(v)) {
      const unsigned flip = eta_[inc.edge];
      const unsigned edge_level = base_->edge(inc.edge).u == v ? l : (l ^ flip);
      fn(lifted_edge(inc.edge, edge_level), lifted_vertex(inc.neighbor, l ^ flip));
    }
  }

 private:
  const BaseGraph* base_;
  SwitchConfig eta_;
};

LiftedGraph build_lift(const BaseGraph& g, SwitchConfig eta);

// Gauge transformation phi_S: swaps the two lifts of every vertex in S. The
// image is the lift of eta' with eta'_e = eta_e xor [exactly one endpoint in S].
LiftedGraph apply_gauge(const LiftedGraph& lift, const GaugeSet& s);
SwitchConfig gauge_switches(const BaseGraph& g, const SwitchConfig& eta, const GaugeSet& s);
inline VertexId gauge_vertex(const GaugeSet& s, VertexId x) { return x ^ s[project(x)]; }
// Image of lifted edge le under phi_S, as an edge id of the gauged lift.
EdgeId gauge_edge(const BaseGraph& g, const GaugeSet& s, EdgeId le);
// Edge-wise transport of a percolation configuration along phi_S.
std::vector<std::uint8_t> gauge_transport(const BaseGraph& g, const GaugeSet& s,
                                          std::span<const std::uint8_t> omega);

// Parity of eta over a cycle of g given as an edge list. Throws ConfigError if
// the edges do not form a single cycle.
bool is_switching_cycle(const BaseGraph& g, const SwitchConfig& eta, std::span<const EdgeId> cycle);

}  // namespace liftperc
