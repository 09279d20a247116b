#include "liftperc/perco.hpp"

#include <algorithm>

#include "liftperc/errors.hpp"

namespace liftperc {

PercolationConfig sample_percolation(std::size_t edge_count, double p, Stream& rng) {
  check_probability(p, "p");
  PercolationConfig cfg{std::vector<std::uint8_t>(edge_count), p};
  for (auto& b : cfg.omega) b = rng.uniform() < p;
  return cfg;
}

std::vector<double> sample_uniforms(std::size_t count, Stream& rng) {
  std::vector<double> u(count);
  for (auto& x : u) x = rng.uniform();
  return u;
}

std::vector<std::uint8_t> threshold(std::span<const double> uniforms, double p) {
  std::vector<std::uint8_t> out(uniforms.size());
  for (std::size_t i = 0; i < uniforms.size(); ++i) out[i] = uniforms[i] < p;
  return out;
}

ProjectedPair project_min_max(const LiftedGraph& lift, std::span<const std::uint8_t> omega) {
  require(omega.size() == lift.edge_count(), "percolation configuration does not match lift");
  const std::size_t m = lift.base().edge_count();
  ProjectedPair out{std::vector<std::uint8_t>(m), std::vector<std::uint8_t>(m)};
  for (EdgeId e = 0; e < m; ++e) {
    const std::uint8_t a = omega[lifted_edge(e, 0)], b = omega[lifted_edge(e, 1)];
    out.omega_min[e] = a & b;
    out.omega_max[e] = a | b;
  }
  return out;
}

std::vector<VertexId> project_vertices(std::span<const VertexId> lifted) {
  std::vector<VertexId> out;
  out.reserve(lifted.size());
  for (VertexId x : lifted) out.push_back(project(x));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace liftperc
