#include "liftperc/lift.hpp"

#include <algorithm>
#include <map>

#include "liftperc/errors.hpp"

namespace liftperc {

std::size_t SwitchConfig::switching_count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::string SwitchConfig::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  const std::size_t bytes = (bits_.size() + 7) / 8;
  out.reserve(2 * bytes);
  for (std::size_t b = 0; b < bytes; ++b) {
    unsigned value = 0;
    for (std::size_t k = 0; k < 8 && 8 * b + k < bits_.size(); ++k)
      value |= static_cast<unsigned>(bits_[8 * b + k] & 1u) << k;
    out += kDigits[value >> 4];
    out += kDigits[value & 15u];
  }
  return out;
}

SwitchConfig SwitchConfig::from_hex(const std::string& hex, std::size_t n) {
  require(hex.size() == 2 * ((n + 7) / 8), "switch hex string has wrong length");
  auto nibble = [](char c) -> unsigned {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw ConfigError("bad hex digit in switch string");
  };
  std::vector<std::uint8_t> bits(n, 0);
  for (std::size_t b = 0; 2 * b < hex.size(); ++b) {
    const unsigned value = nibble(hex[2 * b]) << 4 | nibble(hex[2 * b + 1]);
    for (std::size_t k = 0; k < 8; ++k) {
      const bool bit = (value >> k) & 1u;
      if (8 * b + k < n)
        bits[8 * b + k] = bit;
      else
        require(!bit, "switch hex string sets padding bits");
    }
  }
  return SwitchConfig(std::move(bits));
}

SwitchConfig sample_switch_config(const BaseGraph& g, double q, Stream& rng) {
  check_probability(q, "q");
  std::vector<std::uint8_t> bits(g.edge_count());
  for (auto& b : bits) b = rng.uniform() < q;
  return SwitchConfig(std::move(bits));
}

LiftedGraph::LiftedGraph(const BaseGraph& base, SwitchConfig eta)
    : base_(&base), eta_(std::move(eta)) {
  require(eta_.size() == base.edge_count(), "switch configuration does not match graph");
}

LiftedGraph build_lift(const BaseGraph& g, SwitchConfig eta) { return LiftedGraph(g, std::move(eta)); }

SwitchConfig gauge_switches(const BaseGraph& g, const SwitchConfig& eta, const GaugeSet& s) {
  require(s.size() == g.vertex_count(), "gauge set does not match graph");
  require(eta.size() == g.edge_count(), "switch configuration does not match graph");
  std::vector<std::uint8_t> bits(g.edge_count());
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const auto& be = g.edge(e);
    bits[e] = eta[e] ^ ((s[be.u] ^ s[be.v]) & 1u);
  }
  return SwitchConfig(std::move(bits));
}

LiftedGraph apply_gauge(const LiftedGraph& lift, const GaugeSet& s) {
  return LiftedGraph(lift.base(), gauge_switches(lift.base(), lift.eta(), s));
}

EdgeId gauge_edge(const BaseGraph& g, const GaugeSet& s, EdgeId le) {
  // (e, l) = {u_l, v_.} is sent to the edge at u_{l xor s_u}.
  const EdgeId e = project_edge(le);
  return lifted_edge(e, level_of(le) ^ s[g.edge(e).u]);
}

std::vector<std::uint8_t> gauge_transport(const BaseGraph& g, const GaugeSet& s,
                                          std::span<const std::uint8_t> omega) {
  require(omega.size() == 2 * g.edge_count(), "percolation configuration does not match lift");
  std::vector<std::uint8_t> out(omega.size());
  for (EdgeId le = 0; le < omega.size(); ++le) out[gauge_edge(g, s, le)] = omega[le];
  return out;
}

bool is_switching_cycle(const BaseGraph& g, const SwitchConfig& eta, std::span<const EdgeId> cycle) {
  require(cycle.size() >= 3, "a cycle needs at least 3 edges");
  std::map<VertexId, int> deg;
  std::vector<EdgeId> sorted(cycle.begin(), cycle.end());
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "repeated edge in cycle");
  for (EdgeId e : cycle) {
    require(e < g.edge_count(), "edge id out of range");
    ++deg[g.edge(e).u];
    ++deg[g.edge(e).v];
  }
  for (const auto& [v, d] : deg) require(d == 2, "edges do not form a cycle");
  // A 2-regular edge set is a single cycle iff it is connected.
  std::vector<Edge> local;
  std::map<VertexId, VertexId> index;
  for (const auto& [v, d] : deg) index.emplace(v, static_cast<VertexId>(index.size()));
  for (EdgeId e : cycle) local.push_back({index[g.edge(e).u], index[g.edge(e).v]});
  require(is_connected(index.size(), local), "edges form more than one cycle");

  unsigned parity = 0;
  for (EdgeId e : cycle) parity ^= eta[e];
  return parity != 0;
}

}  // namespace liftperc
