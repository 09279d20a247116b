#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "liftperc/graph.hpp"
#include "liftperc/lift.hpp"
#include "liftperc/rng.hpp"

namespace liftperc {

// Disjoint unit squares tiling a 2d box densely, with a cell partition around
// them. Squares sit at lower corners (2i, 2j) with i + j even.
struct CyclePartition {
  std::vector<std::vector<VertexId>> cycles;     // vertices in cycle order
  std::vector<std::vector<EdgeId>> cycle_edges;  // edges in cycle order
  std::vector<std::uint32_t> cell_of;            // per vertex
  std::vector<std::vector<VertexId>> cells;      // sorted members
  int N = 4;
  int R = 0;  // density radius (exact, by BFS)
  int L = 0;  // |B_R(C)| on the infinite lattice
  int D = 0;  // 2R + N
  int r = 0;  // R + N
};

CyclePartition build_cycle_partition(const BaseGraph& box);
// Throws InvariantViolation if any partition invariant fails.
void validate_partition(const BaseGraph& box, const CyclePartition& part);
// |B_R(unit square)| in Z^2, computed on a box large enough to hold it.
int lattice_square_ball_size(int R);

// P(a cycle of length N is switching) = sum over odd k, closed form.
double switching_cycle_probability(int N, double q);
double switching_cycle_probability_sum(int N, double q);
boost::multiprecision::cpp_rational switching_cycle_probability_exact(int N,
                                                                      const boost::multiprecision::cpp_rational& q);

// max of n iid Bernoulli(1-(1-p)^(1/n)) against Bernoulli(p).
struct SplitCheck {
  std::uint64_t trials = 0, ones = 0;
  double target = 0, estimate = 0, z = 0;
};
SplitCheck split_bernoulli_check(double p, int n, std::uint64_t trials, std::uint64_t seed, unsigned workers);

struct BetaField {
  std::vector<std::uint8_t> beta;       // per base vertex
  std::vector<std::uint8_t> cell_open;  // O_i per cell
  double c = 0;                         // P(O_i = 1)
  double t = 0;                         // P(beta_x = 1)
};

// O_i = switching state of C_i under eta; O_i is split into |P_i| iid bits
// whose maximum is O_i, and each bit is thinned to parameter t.
BetaField sample_beta_field(const BaseGraph& box, const CyclePartition& part, const SwitchConfig& eta, double q,
                            Stream& rng);

// Edges with both endpoints in B_r(u).
std::vector<EdgeId> ball_edges(const BaseGraph& g, VertexId u, int r);

// Per-vertex B_r(u), its edges and S_{r+1}(u), precomputed once per (g, r).
struct EnhancedGeometry {
  int r = 0;
  std::vector<std::vector<VertexId>> ball;
  std::vector<std::vector<EdgeId>> ball_edges;
  std::vector<std::vector<VertexId>> next_sphere;
};
EnhancedGeometry make_enhanced_geometry(const BaseGraph& g, int r);

// Enhanced cluster of o, literal alternating construction: odd steps take
// omega-closures, even steps annex S_{r+1}(u) for every u in the current set
// with B_r(u) inside it, fully open, and alpha_u = 1. Returns a 0/1 mask.
std::vector<std::uint8_t> enhanced_cluster_alternating(const BaseGraph& g, const std::vector<std::uint8_t>& omega,
                                                       const std::vector<std::uint8_t>& alpha, VertexId o, int r);
// Same set by a worklist; stops early once a boundary vertex is added when
// `boundary` is non-empty.
std::vector<std::uint8_t> enhanced_cluster(const BaseGraph& g, const EnhancedGeometry& geo,
                                           const std::vector<std::uint8_t>& omega,
                                           const std::vector<std::uint8_t>& alpha, VertexId o,
                                           const std::vector<std::uint8_t>& boundary = {});
bool enhanced_reaches(const BaseGraph& g, const EnhancedGeometry& geo, const std::vector<std::uint8_t>& omega,
                      const std::vector<std::uint8_t>& alpha, VertexId o,
                      const std::vector<std::uint8_t>& boundary);

struct EnhancedPc {
  double s = 0;
  int r = 0;
  std::uint64_t trials = 0;
  double pc_hat = 0, ci_low = 0, ci_high = 0, stderr = 0;
};

// Per-trial exact thresholds for enhanced reach; alpha_u = [v_u < s] with
// shared vertex uniforms, so results are coupled across s.
std::vector<double> enhanced_thresholds(const BaseGraph& box, int r, double s, std::uint64_t trials,
                                        std::uint64_t seed, unsigned workers);
EnhancedPc estimate_enhanced_pc(const BaseGraph& box, int r, double s, std::uint64_t trials, std::uint64_t seed,
                                unsigned workers);

// ---- monotonicity coupling----------------------------------------------------

struct CouplingTranscript {
  int M = 0;
  double p_hat = 0;
  double t = 0;
  double s_fill = 0;  // min over u of the analytic success probability
  std::vector<std::uint8_t> c_final;        // base mask C_inf
  std::vector<std::uint8_t> c_prime_final;  // lifted mask C'_inf
  std::vector<std::uint8_t> kappa;          // base copies, index e*M + k
  std::vector<std::uint8_t> alpha;          // per base vertex, after filling
  std::vector<std::uint8_t> alpha_defined;
  std::uint64_t actions = 0;
  std::uint64_t odd_steps = 0, even_steps = 0;
  std::uint64_t p_explored_edges = 0, s_explored_copies = 0;
  std::uint64_t alpha_trials = 0, alpha_successes = 0;
  double alpha_expected = 0;  // sum over s-explored u of the analytic success probability
  bool base_reaches = false, lift_reaches = false;
  bool enhanced_matches = false;
  std::vector<std::string> violations;
};

// Runs the exploration on G_q (q, p) with the given partition; invariants
// (A)-(E) are checked after every atomic action and recorded, not thrown.
CouplingTranscript run_monotonicity_coupling(const BaseGraph& box, double q, double p,
                                             const CyclePartition& part, Stream& rng);

}  // namespace liftperc
