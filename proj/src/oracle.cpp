#include "liftperc/oracle.hpp"

#include <bit>
#include <cmath>

#include "liftperc/errors.hpp"
#include "liftperc/perco.hpp"

namespace liftperc {

namespace {

Rational rational_pow(const Rational& x, std::size_t k) {
  Rational out = 1;
  for (std::size_t i = 0; i < k; ++i) out *= x;
  return out;
}

void guard_joint(const BaseGraph& g) {
  if (g.edge_count() > kMaxJointEdges)
    throw SizeGuardError("joint (eta, omega) enumeration limited to " + std::to_string(kMaxJointEdges) +
                         " edges, got " + std::to_string(g.edge_count()));
}

SwitchConfig eta_from_mask(std::size_t m, std::uint64_t mask) {
  std::vector<std::uint8_t> bits(m);
  for (std::size_t e = 0; e < m; ++e) bits[e] = (mask >> e) & 1u;
  return SwitchConfig(std::move(bits));
}

// Calls fn(k, labels) for every omega on the lift; k = number of open edges.
template <class Fn>
void for_each_omega(const LiftedGraph& lift, Fn&& fn) {
  const std::size_t me = lift.edge_count();
  std::vector<std::pair<VertexId, VertexId>> ends(me);
  for (EdgeId le = 0; le < me; ++le) ends[le] = lift.endpoints(le);
  std::vector<VertexId> label(lift.vertex_count());
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << me); ++mask) {
    DisjointSets ds(lift.vertex_count());
    for (EdgeId le = 0; le < me; ++le)
      if ((mask >> le) & 1u) ds.unite(ends[le].first, ends[le].second);
    for (VertexId x = 0; x < label.size(); ++x) label[x] = ds.find(x);
    fn(static_cast<std::size_t>(std::popcount(mask)), label);
  }
}

}  // namespace

std::uint64_t disconnected_lift_count(const BaseGraph& g) {
  const std::size_t m = g.edge_count();
  if (m > kMaxDisconnectEdges)
    throw SizeGuardError("disconnection enumeration limited to " + std::to_string(kMaxDisconnectEdges) + " edges");
  std::uint64_t disconnected = 0;
  const std::size_t n2 = 2 * g.vertex_count();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    DisjointSets ds(n2);
    std::size_t merges = 0;
    for (EdgeId e = 0; e < m; ++e) {
      const unsigned s = (mask >> e) & 1u;
      const auto& be = g.edge(e);
      merges += ds.unite(lifted_vertex(be.u, 0), lifted_vertex(be.v, s));
      merges += ds.unite(lifted_vertex(be.u, 1), lifted_vertex(be.v, 1 - s));
    }
    if (merges + 1 < n2) ++disconnected;
  }
  return disconnected;
}

Rational exact_disconnection_probability(const BaseGraph& g) {
  Rational out(disconnected_lift_count(g));
  out /= Rational(boost::multiprecision::cpp_int(1) << g.edge_count());
  return out;
}

std::vector<GaugeSet> gauge_orbit_kernel(const BaseGraph& g) {
  const std::size_t n = g.vertex_count(), m = g.edge_count();
  if (n > 20) throw SizeGuardError("gauge kernel search limited to 20 vertices");
  // all eta when feasible; otherwise the flip pattern does not depend on eta
  const bool every_eta = n + m <= 22;
  std::vector<GaugeSet> kernel;
  for (std::uint64_t smask = 0; smask < (std::uint64_t{1} << n); ++smask) {
    GaugeSet s(n);
    for (std::size_t v = 0; v < n; ++v) s[v] = (smask >> v) & 1u;
    bool fixes = true;
    const std::uint64_t etas = every_eta ? (std::uint64_t{1} << m) : 1;
    for (std::uint64_t emask = 0; emask < etas && fixes; ++emask) {
      auto eta = eta_from_mask(m, emask);
      fixes = gauge_switches(g, eta, s) == eta;
    }
    if (fixes) kernel.push_back(std::move(s));
  }
  return kernel;
}

std::vector<BaseGraph> connected_graph_corpus(int max_vertices) {
  require(max_vertices >= 1 && max_vertices <= 6, "corpus limited to 6 vertices");
  std::vector<BaseGraph> out;
  for (int n = 1; n <= max_vertices; ++n) {
    std::vector<Edge> all;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) all.push_back({static_cast<VertexId>(a), static_cast<VertexId>(b)});
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << all.size()); ++mask) {
      std::vector<Edge> edges;
      for (std::size_t i = 0; i < all.size(); ++i)
        if ((mask >> i) & 1u) edges.push_back(all[i]);
      if (is_connected(n, edges)) out.push_back(build_custom(n, edges));
    }
  }
  return out;
}

Rational CountTable::evaluate(const Rational& q, const Rational& p) const {
  const std::size_t m = edges;
  Rational total = 0;
  for (std::size_t j = 0; j <= m; ++j) {
    Rational wq = rational_pow(q, j) * rational_pow(1 - q, m - j);
    if (wq == 0) continue;
    for (std::size_t k = 0; k <= 2 * m; ++k) {
      if (count[j][k] == 0) continue;
      total += wq * rational_pow(p, k) * rational_pow(1 - p, 2 * m - k) * Rational(count[j][k]);
    }
  }
  return total;
}

double CountTable::evaluate(double q, double p) const {
  const std::size_t m = edges;
  long double total = 0;
  for (std::size_t j = 0; j <= m; ++j)
    for (std::size_t k = 0; k <= 2 * m; ++k)
      if (count[j][k])
        total += static_cast<long double>(count[j][k]) * std::pow((long double)q, j) *
                 std::pow(1.0L - q, m - j) * std::pow((long double)p, k) * std::pow(1.0L - p, 2 * m - k);
  return static_cast<double>(total);
}

std::vector<std::uint64_t> two_point_counts(const LiftedGraph& lift, VertexId x, VertexId y) {
  guard_joint(lift.base());
  std::vector<std::uint64_t> counts(lift.edge_count() + 1, 0);
  for_each_omega(lift, [&](std::size_t k, const std::vector<VertexId>& lab) {
    if (lab[x] == lab[y]) ++counts[k];
  });
  return counts;
}

Rational two_point_given_eta(const LiftedGraph& lift, const Rational& p, VertexId x, VertexId y) {
  auto counts = two_point_counts(lift, x, y);
  const std::size_t me = lift.edge_count();
  Rational total = 0;
  for (std::size_t k = 0; k <= me; ++k)
    if (counts[k]) total += rational_pow(p, k) * rational_pow(1 - p, me - k) * Rational(counts[k]);
  return total;
}

CountTable two_point_table(const BaseGraph& g, VertexId x, VertexId y) {
  guard_joint(g);
  const std::size_t m = g.edge_count();
  CountTable t{m, std::vector<std::vector<std::uint64_t>>(m + 1, std::vector<std::uint64_t>(2 * m + 1, 0))};
  for (std::uint64_t emask = 0; emask < (std::uint64_t{1} << m); ++emask) {
    LiftedGraph lift(g, eta_from_mask(m, emask));
    const auto j = static_cast<std::size_t>(std::popcount(emask));
    auto counts = two_point_counts(lift, x, y);
    for (std::size_t k = 0; k <= 2 * m; ++k) t.count[j][k] += counts[k];
  }
  return t;
}

Rational exact_two_point(const BaseGraph& g, const Rational& q, const Rational& p, VertexId u,
                         unsigned u_level, VertexId v, unsigned v_level) {
  require(q >= 0 && q <= 1 && p >= 0 && p <= 1, "q and p must lie in [0,1]");
  require(u < g.vertex_count() && v < g.vertex_count(), "vertex id out of range");
  return two_point_table(g, lifted_vertex(u, u_level), lifted_vertex(v, v_level)).evaluate(q, p);
}

std::vector<CountTable> cluster_size_tables(const BaseGraph& g, VertexId x) {
  guard_joint(g);
  const std::size_t m = g.edge_count(), n2 = 2 * g.vertex_count();
  require(x < n2, "lifted vertex out of range");
  std::vector<CountTable> tables(
      n2 + 1, CountTable{m, std::vector<std::vector<std::uint64_t>>(m + 1, std::vector<std::uint64_t>(2 * m + 1, 0))});
  for (std::uint64_t emask = 0; emask < (std::uint64_t{1} << m); ++emask) {
    LiftedGraph lift(g, eta_from_mask(m, emask));
    const auto j = static_cast<std::size_t>(std::popcount(emask));
    for_each_omega(lift, [&](std::size_t k, const std::vector<VertexId>& lab) {
      std::size_t s = 0;
      for (VertexId y = 0; y < n2; ++y) s += lab[y] == lab[x];
      ++tables[s].count[j][k];
    });
  }
  return tables;
}

std::vector<Rational> exact_cluster_size_law(const BaseGraph& g, const Rational& q, const Rational& p,
                                             VertexId x) {
  auto tables = cluster_size_tables(g, x);
  std::vector<Rational> law(tables.size());
  for (std::size_t s = 1; s < tables.size(); ++s) law[s] = tables[s].evaluate(q, p);
  return law;
}

Rational exact_cluster_tail(const BaseGraph& g, const Rational& q, const Rational& p, VertexId x, int n) {
  auto law = exact_cluster_size_law(g, q, p, x);
  Rational tail = 0;
  for (std::size_t s = std::max(n, 1); s < law.size(); ++s) tail += law[s];
  return n <= 1 ? Rational(1) : tail;
}

double exact_ghost_probability(const BaseGraph& g, double q, double p, VertexId x, double h) {
  require(h >= 0, "h must be non-negative");
  auto tables = cluster_size_tables(g, x);
  double m = 0;
  for (std::size_t s = 1; s < tables.size(); ++s) m += tables[s].evaluate(q, p) * -std::expm1(-h * double(s));
  return m;
}

long double HolderJoint::marginal(int wp, int wm, int hat, int bar) const {
  long double total = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d)
          if ((wp < 0 || wp == a) && (wm < 0 || wm == b) && (hat < 0 || hat == c) && (bar < 0 || bar == d))
            total += prob[a][b][c][d];
  return total;
}

HolderJoint exact_holder_joint(double q_in, double r_in, double a_in) {
  require(r_in > 0 && r_in < 1, "r must lie in (0,1)");
  require(q_in >= 0 && q_in <= 1 - r_in, "q must lie in [0, 1-r]");
  require(a_in >= q_in && a_in <= q_in + r_in, "a must lie in [q, q+r]");
  const long double q = q_in, r = r_in, a = a_in;
  const long double sr = std::sqrt(r);
  const long double A = 2 * sr * (1 - sr) / (1 - r);
  const long double b = q / (1 - r);
  HolderJoint j;
  // outside (q, q+r]: omega from (X, Y); eta_hat and eta_bar agree
  auto outside = [&](long double len, int bit) {
    j.prob[1][1][bit][bit] += len * (1 - A);
    j.prob[1][0][bit][bit] += len * A / 2;
    j.prob[0][1][bit][bit] += len * A / 2;
  };
  outside(q, 1);
  outside(1 - q - r, 0);
  // inside: both closed, eta_hat = Z, eta_bar = [u <= a]
  j.prob[0][0][1][1] += (a - q) * b;
  j.prob[0][0][0][1] += (a - q) * (1 - b);
  j.prob[0][0][1][0] += (q + r - a) * b;
  j.prob[0][0][0][0] += (q + r - a) * (1 - b);
  return j;
}

}  // namespace liftperc
