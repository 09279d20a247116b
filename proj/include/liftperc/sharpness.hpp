#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "liftperc/estimators.hpp"
#include "liftperc/graph.hpp"
#include "liftperc/lift.hpp"
#include "liftperc/rng.hpp"

namespace liftperc {

// Source of Bernoulli bits, so that a coupling can be driven either by a
// stream or by an enumerator walking every bit sequence.
class BitSource {
 public:
  virtual ~BitSource() = default;
  virtual bool bernoulli(double p) = 0;
};

class StreamBits final : public BitSource {
 public:
  explicit StreamBits(Stream& rng) : rng_(&rng) {}
  bool bernoulli(double p) override { return rng_->uniform() < p; }

 private:
  Stream* rng_;
};

// Depth-first walk over all bit sequences a procedure can consume. Usage:
//   EnumeratingBits bits; do { run(bits); use(bits.weight()); } while (bits.next());
// Bits with p = 0 or p = 1 are forced and do not branch.
class EnumeratingBits final : public BitSource {
 public:
  bool bernoulli(double p) override;
  double weight() const { return weight_; }
  bool next();

 private:
  struct Choice {
    bool value;
    bool branching;
  };
  std::vector<Choice> path_;
  std::size_t pos_ = 0;
  double weight_ = 1;
};

// ---- structure functions ----------------------------------------------------

// (f, g) representation of G_q. Abstract edge (e, i) has id 2e + i; it is
// lifted edge (e, i xor label_e). Vertices are the lifted vertices 2v + l.
struct StructureFunctions {
  const BaseGraph* base = nullptr;
  SwitchConfig eta;
  std::vector<std::uint8_t> label;

  std::size_t vertex_count() const { return 2 * base->vertex_count(); }
  std::size_t edge_count() const { return 2 * base->edge_count(); }
  EdgeId lifted_of(EdgeId a) const { return a ^ label[project_edge(a)]; }
  std::pair<VertexId, VertexId> f(EdgeId a) const;
  std::vector<EdgeId> g(VertexId x) const;  // sorted

  template <class Fn>
  void for_each_incident(VertexId x, Fn&& fn) const {
    const VertexId v = project(x);
    const unsigned l = level_of(x);
    for (const auto& inc : base->incident(v)) {
      const unsigned flip = eta[inc.edge];
      const unsigned edge_level = base->edge(inc.edge).u == v ? l : (l ^ flip);
      fn(lifted_edge(inc.edge, edge_level) ^ label[inc.edge], lifted_vertex(inc.neighbor, l ^ flip));
    }
  }

  LiftedGraph forget_labels() const { return LiftedGraph(*base, eta); }
};

// Draws eta (|E| uniforms) then the labels (|E| fair bits).
StructureFunctions build_structure_functions(const BaseGraph& g, double q, Stream& rng);
StructureFunctions build_structure_functions(const BaseGraph& g, double q, BitSource& bits);
// Throws InvariantViolation unless f and g agree and each pair of abstract
// edges is one of the two labelings allowed by eta.
void validate_structure(const StructureFunctions& sf);

// ---- exploration ------------------------------------------------------------

struct ExplorationStep {
  VertexId x = 0;
  std::vector<EdgeId> g_x;  // revealed incidence of x
  EdgeId e = 0;
  std::uint8_t omega = 0;
  bool f_revealed = false;
  std::pair<VertexId, VertexId> f_e{0, 0};
  bool cluster_phase = true;

  friend bool operator==(const ExplorationStep&, const ExplorationStep&) = default;
};

struct ExplorationTrace {
  VertexId origin = 0;
  std::vector<ExplorationStep> steps;  // exactly one per abstract edge
  std::vector<VertexId> cluster;       // sorted
  std::size_t cluster_steps = 0;

  friend bool operator==(const ExplorationTrace&, const ExplorationTrace&) = default;
};

// What the explorer is allowed to ask.
class ExplorationOracle {
 public:
  virtual ~ExplorationOracle() = default;
  virtual std::vector<EdgeId> g(VertexId x) = 0;
  virtual std::uint8_t omega(EdgeId a) = 0;
  virtual std::pair<VertexId, VertexId> f(EdgeId a) = 0;
};

// Reveal g(o); then repeatedly take the smallest unexplored edge of g(C)
// and reveal its state; an open edge has f revealed and its new endpoint
// is revealed next, a closed one is followed by the smallest explored vertex.
// Once C is closed, the rest is revealed in id order (vertices whose g is
// still hidden first, edges with state and endpoints).
ExplorationTrace explore(std::size_t vertex_count, std::size_t edge_count, VertexId o, ExplorationOracle& oracle);
ExplorationTrace explore_cluster(const StructureFunctions& sf, const std::vector<std::uint8_t>& omega, VertexId o);
// Re-runs the explorer against the revealed data only; throws
// InvariantViolation if it asks for anything the trace did not reveal.
ExplorationTrace replay_exploration(const ExplorationTrace& trace, std::size_t vertex_count,
                                    std::size_t edge_count);

// ---- ghost field, m_h and the decay inequality ------------------------------

struct GhostField {
  double h = 0;
  std::vector<std::uint8_t> green;  // per lifted vertex
};
GhostField sample_ghost(std::size_t vertex_count, double h, Stream& rng);

struct GhostEstimate {
  std::uint64_t trials = 0, hits = 0;
  double m_hat = 0, stderr = 0;
};
// Monte Carlo over (eta, omega, M) for the origin o_0 of the box lift.
GhostEstimate estimate_m_h(const BaseGraph& box, double p, double h, double q, std::uint64_t trials,
                           std::uint64_t seed, unsigned workers);
// Same for an arbitrary graph and base origin (cluster of origin_0).
GhostEstimate estimate_m_h_at(const BaseGraph& g, VertexId origin, double p, double h, double q,
                              std::uint64_t trials, std::uint64_t seed, unsigned workers);

struct ExpRow {
  int n = 0;
  double psi_p = 0, se_p = 0, psi_s = 0, se_s = 0;
  double bound = 0, se_bound = 0, margin = 0, pooled_se = 0;
};

struct ExpReport {
  double p = 0, h = 0, q = 0.5;
  std::uint64_t trials = 0;
  GhostEstimate ghost;
  double s_raw = 0, s_hat = 0;
  bool clamped = false;
  std::vector<ExpRow> rows;  // n = 2..n_max
  double worst_sigma = 0;    // max over rows of margin / pooled_se (margins <= 0 with zero se count as 0)
  double max_margin = 0;
  bool within(double k_sigma) const;
};

// m_h, psi(p) and psi(s) come from independent streams; s = p(1 - 2 m_h)
// clamped to [0, 1].
ExpReport verify_exp_inequality(const BaseGraph& box, double p, double h, std::uint64_t trials, std::uint64_t seed,
                                unsigned workers, int n_max = 30);

// ---- remaining graph and its coupling --------------------------------------

struct RemainingGraph {
  const StructureFunctions* sf = nullptr;
  std::vector<std::uint8_t> in_cluster;  // C_o, per lifted vertex
  std::vector<std::uint8_t> shadow;      // C_o*: surviving vertices whose twin is in C_o
  std::vector<std::int8_t> type;         // per abstract edge: -1 deleted, else 0/1/2
  std::size_t count[3] = {0, 0, 0};

  bool surviving_vertex(VertexId x) const { return !in_cluster[x]; }
  bool surviving_edge(EdgeId a) const { return type[a] >= 0; }
};

// Rejects C_o that is empty or not connected by edges of g restricted to C_o.
RemainingGraph build_remaining_graph(const StructureFunctions& sf, const std::vector<VertexId>& cluster);
// Type invariants; throws InvariantViolation.
void validate_remaining(const RemainingGraph& rg);

// Cluster of x in the remaining graph (omega on abstract edges; deleted
// edges ignored). Sorted.
std::vector<VertexId> remaining_cluster(const RemainingGraph& rg, const std::vector<std::uint8_t>& omega,
                                        VertexId x);

// Structure drawn from the law of G_q conditioned on g agreeing with `given`
// on every cluster vertex. The condition factorizes over base edges, so each
// (eta_e, label_e) is drawn from its own conditional law (no rejection).
StructureFunctions sample_conditioned_structure(const StructureFunctions& given, const std::vector<VertexId>& cluster,
                                                double q, BitSource& bits);

inline constexpr VertexId kNoVertex = static_cast<VertexId>(-1);
inline constexpr EdgeId kNoEdge = static_cast<EdgeId>(-1);

struct RemainingCoupling {
  StructureFunctions full;                // (eta*, labels*)
  std::vector<std::uint8_t> omega_star;   // per abstract edge
  std::vector<VertexId> image;            // phi: a on C_o*, identity elsewhere, kNoVertex on C_o
  std::vector<EdgeId> assoc;              // a on surviving edges (identity on type 0)
  std::vector<VertexId> parent;           // pioneer parent on C_o*; roots point to themselves
  std::vector<EdgeId> pioneer;            // pioneer edge into each non-root vertex of C_o*
  std::vector<VertexId> roots;
  std::vector<std::uint8_t> height;       // H(x) = level of a(x), on C_o*
  std::uint64_t height_checks = 0;
  std::vector<std::string> violations;
};

// Runs the construction on (rg, omega) and returns (omega*, f*) on the full
// graph. With strict set, q != 1/2 is rejected since the law equality
// depends on it; otherwise the construction runs and nothing is claimed.
RemainingCoupling couple_remaining_to_full(const RemainingGraph& rg, const std::vector<std::uint8_t>& omega,
                                           double p, double q, BitSource& bits, bool strict = true);

struct DominationResult {
  std::uint64_t vertices = 0;
  std::uint64_t inclusion_violations = 0;  // phi(cluster of x) not inside the full cluster of phi(x)
  std::uint64_t green_violations = 0;      // cluster meets M but the image cluster misses phi(M)
};
DominationResult domination_check(const RemainingGraph& rg, const std::vector<std::uint8_t>& omega,
                                  const RemainingCoupling& c, const GhostField& ghost);

// Conditioned structure, then iid omega on surviving edges, then the
// coupling, all drawn from `bits` in that order.
struct RemainingInstance {
  std::unique_ptr<StructureFunctions> structure;
  RemainingGraph graph;
  std::vector<std::uint8_t> omega;
  RemainingCoupling coupling;
};
RemainingInstance sample_remaining_instance(const StructureFunctions& given, const std::vector<VertexId>& cluster,
                                            double p, double q, BitSource& bits, bool strict = true);

// (omega, eta, labels) packed as omega bits, then eta bits, then label bits;
// needs 4|E| <= 64.
std::uint64_t encode_configuration(const StructureFunctions& sf, const std::vector<std::uint8_t>& omega);
// Probability of an encoded configuration under G_q percolation at p.
double configuration_probability(std::uint64_t key, std::size_t base_edges, double p, double q);

}  // namespace liftperc
