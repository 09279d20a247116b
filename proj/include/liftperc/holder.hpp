#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "liftperc/graph.hpp"
#include "liftperc/lift.hpp"
#include "liftperc/rng.hpp"

namespace liftperc {

struct HolderParams {
  double q = 0;
  double r = 0;
  double a = 0;

  // Throws ConfigError unless 0 < r < 1, 0 <= q <= 1-r and q <= a <= q+r.
  void validate() const;
  double A() const;       // 2 sqrt(r)(1 - sqrt(r))/(1 - r)
  double p_plus() const;  // 1 - sqrt(r)
  double q_hat() const;   // q/(1 - r)
};

struct HolderEdge {
  double eta_uniform;
  int x;  // -1 or +1
  std::uint8_t y, z;
  std::uint8_t omega_plus, omega_minus, eta_hat, eta_bar;
};

struct HolderSample {
  std::vector<HolderEdge> edges;
};

// Deterministic rules applied to the auxiliary variables.
void apply_holder_rules(const HolderParams& params, HolderEdge& edge);
// Draws 4 uniforms per edge (eta, X, Y, Z) regardless of branch.
HolderEdge sample_holder_edge(const HolderParams& params, Stream& rng);
HolderSample sample_holder(const HolderParams& params, const BaseGraph& g, Stream& rng);

// Every edge open on the hat side (omega+ or omega-) has eta_hat == eta_bar.
bool verify_coupling_property(const HolderSample& sample);

// Per-edge audit over many independent edge samples.
struct HolderAudit {
  std::uint64_t samples = 0;
  // counts[omega+][omega-][eta_hat][eta_bar]
  std::array<std::array<std::array<std::array<std::uint64_t, 2>, 2>, 2>, 2> counts{};
  std::uint64_t violations = 0;
};
HolderAudit holder_edge_audit(const HolderParams& params, std::uint64_t samples, std::uint64_t seed,
                              unsigned workers);

struct DominationReport {
  std::uint64_t trials = 0;
  std::uint64_t hat_reach = 0;
  std::uint64_t bar_reach = 0;
  std::uint64_t violations = 0;         // hat side reaches, bar side does not
  std::uint64_t subset_violations = 0;  // an open hat edge closed on the bar side
};

// Two-layer coupling on a box: hat side is G_{p(1-sqrt r), q/(1-r)} and bar
// side is G_{p, a}, sharing one thinning uniform per lifted edge.
DominationReport downward_domination_check(const BaseGraph& box, double p, const HolderParams& params,
                                           std::uint64_t trials, std::uint64_t seed, unsigned workers);

double holder_constant(double alpha, double beta);

struct CurvePoint {
  double q = 0;
  double pc_hat = 0;
  double stderr = 0;
};

struct HolderBoundReport {
  double constant = 0;
  // max over adjacent pairs of |dpc| - C sqrt(dq) - k * pooled stderr
  double max_violation = 0;
  std::size_t worst_pair = 0;
  std::vector<double> margins;
};

// Pairs are adjacent grid points (sorted by q); pooled stderr is
// sqrt(se_i^2 + se_j^2).
HolderBoundReport holder_bound_check(std::vector<CurvePoint> curve, double constant, double k_stderr);

}  // namespace liftperc
