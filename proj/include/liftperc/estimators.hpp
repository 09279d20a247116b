#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "liftperc/graph.hpp"
#include "liftperc/lift.hpp"
#include "liftperc/stats.hpp"

namespace liftperc {

// Finite-volume setting: origin o_0 (center of the box, level 0) and the
// lifted boundary pi^{-1}(outer face of the box).
struct BoxSetting {
  const BaseGraph* box;
  VertexId origin;                     // base vertex
  std::vector<std::uint8_t> boundary;  // base mask

  explicit BoxSetting(const BaseGraph& g);
  std::vector<std::uint8_t> lifted_boundary() const;
};

struct ThetaEstimate {
  double p = 0, q = 0;
  int box_side = 0;
  std::uint64_t trials = 0, reach_count = 0;
  double theta_hat = 0, stderr = 0;
  Interval wilson;
};

// Fraction of trials in which the cluster of o_0 in G_q (box) reaches the
// lifted boundary. q < 0 selects the base graph itself.
ThetaEstimate estimate_theta(const BaseGraph& box, double q, double p, std::uint64_t trials,
                             std::uint64_t seed, unsigned workers);

struct SandwichReport {
  std::uint64_t trials = 0, min_reach = 0, lift_reach = 0, max_reach = 0;
  std::uint64_t violations = 0;  // min-reach without lift-reach, or lift-reach without max-reach
};
SandwichReport sandwich_check(const BaseGraph& box, double q, double p, std::uint64_t trials,
                              std::uint64_t seed, unsigned workers);

// Per-trial reach thresholds: trial t reaches at p iff threshold[t] < p.
// Sorted ascending.
struct ThresholdBatch {
  std::vector<double> thresholds;

  std::uint64_t count_reaching(double p) const;
  double reach_fraction(double p) const;
};

// Thresholds for plain percolation on G_q (q < 0: base graph).
ThresholdBatch sample_thresholds(const BaseGraph& box, double q, std::uint64_t trials, std::uint64_t seed,
                                 unsigned workers, const std::string& tag = "pc");

// Threshold of a monotone event given one uniform per edge: the smallest
// edge uniform u* such that the event holds with edges {u <= u*} open.
// -infinity if it holds with everything closed, +infinity if never.
double monotone_threshold(std::vector<double> uniforms,
                          const std::function<bool(const std::vector<std::uint8_t>&)>& event);

struct BisectionStep {
  double low, high, mid, reach_fraction;
};

struct PcEstimate {
  double q = 0;
  std::vector<int> box_sides;
  std::uint64_t trials = 0;
  std::vector<BisectionStep> trace;
  double pc_hat = 0, ci_low = 0, ci_high = 0, stderr = 0;
};

// Bisection for the p where the reach fraction crosses `level`.
double bisect_crossing(const ThresholdBatch& batch, double level, int steps,
                       std::vector<BisectionStep>* trace = nullptr);
// pc_hat at level 1/2; CI from crossings at 1/2 -+ 1.96 sigma, stderr from
// crossings at 1/2 -+ sigma, sigma = 0.5/sqrt(trials).
PcEstimate pc_from_batch(const ThresholdBatch& batch, double q, int box_side, int steps = 40);

PcEstimate estimate_pc(const BaseGraph& box, double q, std::uint64_t trials, std::uint64_t seed,
                       unsigned workers);
// Schedule of box sides; the estimate on the largest box is returned, with
// every side recorded. (One estimate per side is in `per_side` if non-null.)
PcEstimate estimate_pc_schedule(int dimension, const std::vector<int>& sides, double q,
                                std::uint64_t trials, std::uint64_t seed, unsigned workers,
                                std::vector<PcEstimate>* per_side = nullptr);

struct ContinuityReport {
  double constant = 0;
  double max_margin = 0;  // max over adjacent pairs of |dpc| - C sqrt(dq) - k pooled stderr
  std::vector<double> margins;
};

ContinuityReport continuity_report(const std::vector<PcEstimate>& curve, double constant, double k_stderr);

// z = (pc_base - pc_lift) / pooled stderr.
double monotonicity_z(const PcEstimate& base, const PcEstimate& lift);

// psi_n = P(|C_o| >= n) for n = 1..n_max; index 0 unused.
struct PsiCurve {
  std::uint64_t trials = 0;
  std::vector<double> psi;
  std::vector<double> stderr;
};

PsiCurve psi_from_sizes(const std::vector<std::uint64_t>& capped_sizes, int n_max);
// Annealed over (eta, omega); q < 0 selects the base graph.
PsiCurve tail_psi(const BaseGraph& box, double q, double p, int n_max, std::uint64_t trials, std::uint64_t seed,
                  unsigned workers);
// Quenched: eta fixed, trials over omega only.
PsiCurve quenched_tail(const BaseGraph& box, const SwitchConfig& eta, double p, int n_max, std::uint64_t trials,
                       std::uint64_t seed, unsigned workers);

struct DecayFit {
  double c_hat = 0;  // psi_n ~ C exp(-c n)
  double C_hat = 0;
  int n_low = 0, n_high = 0;
  double r_squared = 0;
  bool degenerate = false;
  bool low_confidence = false;
};

// Weighted least squares of log psi_n on n. Range: n >= 2, points with
// psi > 0 and relative stderr <= max_rel_err (empty stderr = exact input);
// then the start is advanced until R^2 >= target or fewer than 5 points remain.
DecayFit fit_decay(const PsiCurve& curve, double max_rel_err = 0.1, double target_r2 = 0.995);

}  // namespace liftperc
