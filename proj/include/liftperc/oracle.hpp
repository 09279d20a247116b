#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "liftperc/graph.hpp"
#include "liftperc/lift.hpp"

namespace liftperc {

using Rational = boost::multiprecision::cpp_rational;

inline constexpr std::size_t kMaxDisconnectEdges = 24;
inline constexpr std::size_t kMaxJointEdges = 9;

// Exact P(G_{1/2} is disconnected) by enumerating all 2^|E| switch
// configurations and testing each lift with union-find.
Rational exact_disconnection_probability(const BaseGraph& g);
// Number of switch configurations whose lift is disconnected.
std::uint64_t disconnected_lift_count(const BaseGraph& g);

// Gauge sets S with phi_S(eta) = eta for every eta.
std::vector<GaugeSet> gauge_orbit_kernel(const BaseGraph& g);

// Every connected labelled graph on 1..max_vertices vertices (each edge subset
// of K_n that is connected), in order of n then subset mask.
std::vector<BaseGraph> connected_graph_corpus(int max_vertices);

// Weighted counts of an event over (eta, omega): count[j][k] is the number of
// configurations with j switching base edges and k open lifted edges for which
// the event holds. P = sum count[j][k] q^j (1-q)^(m-j) p^k (1-p)^(2m-k).
struct CountTable {
  std::size_t edges = 0;
  std::vector<std::vector<std::uint64_t>> count;

  Rational evaluate(const Rational& q, const Rational& p) const;
  double evaluate(double q, double p) const;
};

// Conditional on a fixed eta: counts[k] over omega with k open edges.
std::vector<std::uint64_t> two_point_counts(const LiftedGraph& lift, VertexId x, VertexId y);
Rational two_point_given_eta(const LiftedGraph& lift, const Rational& p, VertexId x, VertexId y);

CountTable two_point_table(const BaseGraph& g, VertexId x, VertexId y);
// P(u_{ul} <-> v_{vl}) in G_{q} percolated at p. Lifted ids x = 2u+ul.
Rational exact_two_point(const BaseGraph& g, const Rational& q, const Rational& p, VertexId u,
                         unsigned u_level, VertexId v, unsigned v_level);

// Tables for |C_x| = s, s = 1..2|V| (index 0 unused).
std::vector<CountTable> cluster_size_tables(const BaseGraph& g, VertexId x);
std::vector<Rational> exact_cluster_size_law(const BaseGraph& g, const Rational& q, const Rational& p,
                                             VertexId x);
// psi_n = P(|C_x| >= n) with x a lifted vertex.
Rational exact_cluster_tail(const BaseGraph& g, const Rational& q, const Rational& p, VertexId x, int n);
// m_h = P(C_x meets an iid ghost set of density 1 - e^{-h}).
double exact_ghost_probability(const BaseGraph& g, double q, double p, VertexId x, double h);

// Joint law of (omega+, omega-, eta_hat, eta_bar) for one edge of the
// Holder coupling, indexed [omega+][omega-][eta_hat][eta_bar].
struct HolderJoint {
  std::array<std::array<std::array<std::array<long double, 2>, 2>, 2>, 2> prob{};

  long double marginal(int wp, int wm, int hat, int bar) const;  // -1 = summed out
};

HolderJoint exact_holder_joint(double q, double r, double a);

}  // namespace liftperc
