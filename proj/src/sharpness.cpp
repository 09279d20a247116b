#include "liftperc/sharpness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

#include "liftperc/errors.hpp"
#include "liftperc/parallel.hpp"
#include "liftperc/perco.hpp"

namespace liftperc {

bool EnumeratingBits::bernoulli(double p) {
  if (pos_ == path_.size()) path_.push_back({false, p > 0 && p < 1});
  Choice& c = path_[pos_++];
  if (!c.branching) {
    // forced bit: replay must see the same kind of draw
    const bool v = p >= 1;
    return v;
  }
  weight_ *= c.value ? p : 1 - p;
  return c.value;
}

bool EnumeratingBits::next() {
  pos_ = 0;
  weight_ = 1;
  while (!path_.empty() && (path_.back().value || !path_.back().branching)) path_.pop_back();
  if (path_.empty()) return false;
  path_.back().value = true;
  return true;
}

// ---- structure functions ----------------------------------------------------

std::pair<VertexId, VertexId> StructureFunctions::f(EdgeId a) const {
  const EdgeId le = lifted_of(a);
  const EdgeId e = project_edge(le);
  const unsigned l = level_of(le);
  const auto& be = base->edge(e);
  return {lifted_vertex(be.u, l), lifted_vertex(be.v, l ^ eta[e])};
}

std::vector<EdgeId> StructureFunctions::g(VertexId x) const {
  std::vector<EdgeId> out;
  for_each_incident(x, [&](EdgeId a, VertexId) { out.push_back(a); });
  std::sort(out.begin(), out.end());
  return out;
}

StructureFunctions build_structure_functions(const BaseGraph& g, double q, Stream& rng) {
  StructureFunctions sf;
  sf.base = &g;
  sf.eta = sample_switch_config(g, q, rng);
  sf.label.resize(g.edge_count());
  for (auto& l : sf.label) l = rng.uniform() < 0.5;
  return sf;
}

StructureFunctions build_structure_functions(const BaseGraph& g, double q, BitSource& bits) {
  check_probability(q, "q");
  StructureFunctions sf;
  sf.base = &g;
  std::vector<std::uint8_t> eta(g.edge_count());
  for (auto& b : eta) b = bits.bernoulli(q);
  sf.eta = SwitchConfig(std::move(eta));
  sf.label.resize(g.edge_count());
  for (auto& l : sf.label) l = bits.bernoulli(0.5);
  return sf;
}

void validate_structure(const StructureFunctions& sf) {
  auto fail = [](const std::string& what) { throw InvariantViolation("structure functions: " + what); };
  if (sf.eta.size() != sf.base->edge_count() || sf.label.size() != sf.base->edge_count()) fail("size mismatch");
  for (EdgeId a = 0; a < sf.edge_count(); ++a) {
    const auto [x, y] = sf.f(a);
    for (VertexId z : {x, y}) {
      auto gz = sf.g(z);
      if (!std::binary_search(gz.begin(), gz.end(), a)) fail("f and g disagree");
    }
  }
  for (VertexId x = 0; x < sf.vertex_count(); ++x)
    for (EdgeId a : sf.g(x)) {
      const auto [u, v] = sf.f(a);
      if (u != x && v != x) fail("g lists an edge not incident to x");
    }
  for (EdgeId e = 0; e < sf.base->edge_count(); ++e) {
    const auto& be = sf.base->edge(e);
    const auto f0 = sf.f(2 * e), f1 = sf.f(2 * e + 1);
    const unsigned s = sf.eta[e];
    const std::pair<VertexId, VertexId> p0{lifted_vertex(be.u, 0), lifted_vertex(be.v, s)};
    const std::pair<VertexId, VertexId> p1{lifted_vertex(be.u, 1), lifted_vertex(be.v, 1 ^ s)};
    if (!((f0 == p0 && f1 == p1) || (f0 == p1 && f1 == p0))) fail("pair not allowed by eta");
  }
}

// ---- exploration ------------------------------------------------------------

ExplorationTrace explore(std::size_t vertex_count, std::size_t edge_count, VertexId o, ExplorationOracle& oracle) {
  require(o < vertex_count, "origin out of range");
  ExplorationTrace tr;
  tr.origin = o;
  tr.steps.reserve(edge_count);
  std::vector<std::uint8_t> in_c(vertex_count, 0), g_known(vertex_count, 0), done(edge_count, 0);
  std::priority_queue<EdgeId, std::vector<EdgeId>, std::greater<EdgeId>> cand;
  in_c[o] = 1;
  VertexId c_min = o;
  VertexId pending = o;
  bool cluster_phase = true;
  VertexId v_next = 0;
  EdgeId e_next = 0;
  for (std::size_t k = 0; k < edge_count; ++k) {
    ExplorationStep s;
    if (cluster_phase) {
      s.x = pending != kNoVertex ? pending : c_min;
    } else {
      while (v_next < vertex_count && g_known[v_next]) ++v_next;
      s.x = v_next < vertex_count ? v_next : 0;
    }
    pending = kNoVertex;
    s.g_x = oracle.g(s.x);
    if (!g_known[s.x]) {
      g_known[s.x] = 1;
      if (cluster_phase && in_c[s.x])
        for (EdgeId a : s.g_x)
          if (!done[a]) cand.push(a);
    }
    if (cluster_phase) {
      while (!cand.empty() && done[cand.top()]) cand.pop();
      if (cand.empty()) {
        cluster_phase = false;
        tr.cluster_steps = k;
      }
    }
    s.cluster_phase = cluster_phase;
    if (cluster_phase) {
      s.e = cand.top();
      cand.pop();
      s.omega = oracle.omega(s.e);
      if (s.omega) {
        s.f_e = oracle.f(s.e);
        s.f_revealed = true;
        const auto [a, b] = s.f_e;
        if (!(in_c[a] && in_c[b])) {
          const VertexId y = in_c[a] ? b : a;
          in_c[y] = 1;
          c_min = std::min(c_min, y);
          pending = y;
        }
      }
    } else {
      while (done[e_next]) ++e_next;
      s.e = e_next;
      s.omega = oracle.omega(s.e);
      s.f_e = oracle.f(s.e);
      s.f_revealed = true;
    }
    done[s.e] = 1;
    tr.steps.push_back(std::move(s));
  }
  if (cluster_phase) tr.cluster_steps = edge_count;
  for (VertexId x = 0; x < vertex_count; ++x)
    if (in_c[x]) tr.cluster.push_back(x);
  return tr;
}

namespace {

class StructureOracle final : public ExplorationOracle {
 public:
  StructureOracle(const StructureFunctions& sf, const std::vector<std::uint8_t>& omega) : sf_(sf), omega_(omega) {}
  std::vector<EdgeId> g(VertexId x) override { return sf_.g(x); }
  std::uint8_t omega(EdgeId a) override { return omega_[a]; }
  std::pair<VertexId, VertexId> f(EdgeId a) override { return sf_.f(a); }

 private:
  const StructureFunctions& sf_;
  const std::vector<std::uint8_t>& omega_;
};

// Answers only what a trace revealed.
class RecordedOracle final : public ExplorationOracle {
 public:
  explicit RecordedOracle(const ExplorationTrace& tr) {
    for (const auto& s : tr.steps) {
      g_.emplace(s.x, s.g_x);
      omega_.emplace(s.e, s.omega);
      if (s.f_revealed) f_.emplace(s.e, s.f_e);
    }
  }
  std::vector<EdgeId> g(VertexId x) override { return lookup(g_, x, "g"); }
  std::uint8_t omega(EdgeId a) override { return lookup(omega_, a, "omega"); }
  std::pair<VertexId, VertexId> f(EdgeId a) override { return lookup(f_, a, "f"); }

 private:
  template <class Map, class Key>
  static typename Map::mapped_type lookup(const Map& m, Key k, const char* what) {
    auto it = m.find(k);
    if (it == m.end()) throw InvariantViolation(std::string("replay asked for unrevealed ") + what);
    return it->second;
  }
  std::map<VertexId, std::vector<EdgeId>> g_;
  std::map<EdgeId, std::uint8_t> omega_;
  std::map<EdgeId, std::pair<VertexId, VertexId>> f_;
};

}  // namespace

ExplorationTrace explore_cluster(const StructureFunctions& sf, const std::vector<std::uint8_t>& omega, VertexId o) {
  require(omega.size() == sf.edge_count(), "percolation configuration does not match graph");
  StructureOracle oracle(sf, omega);
  return explore(sf.vertex_count(), sf.edge_count(), o, oracle);
}

ExplorationTrace replay_exploration(const ExplorationTrace& trace, std::size_t vertex_count,
                                    std::size_t edge_count) {
  RecordedOracle oracle(trace);
  return explore(vertex_count, edge_count, trace.origin, oracle);
}

// ---- ghost field, m_h and the decay inequality ------------------------------

GhostField sample_ghost(std::size_t vertex_count, double h, Stream& rng) {
  require(h > 0, "ghost field parameter h must be positive");
  GhostField gf;
  gf.h = h;
  const double p = -std::expm1(-h);
  gf.green.resize(vertex_count);
  for (auto& g : gf.green) g = rng.uniform() < p;
  return gf;
}

GhostEstimate estimate_m_h(const BaseGraph& box, double p, double h, double q, std::uint64_t trials,
                           std::uint64_t seed, unsigned workers) {
  return estimate_m_h_at(box, box.box_center(), p, h, q, trials, seed, workers);
}

GhostEstimate estimate_m_h_at(const BaseGraph& box, VertexId origin, double p, double h, double q,
                              std::uint64_t trials, std::uint64_t seed, unsigned workers) {
  check_probability(p, "p");
  check_probability(q, "q");
  require(h > 0, "ghost field parameter h must be positive");
  require(trials > 0, "trial budget must be positive");
  require(origin < box.vertex_count(), "origin out of range");
  const VertexId o = lifted_vertex(origin, 0);
  std::vector<std::uint8_t> hit(trials, 0);
  const Stream root = make_stream(seed, "ghost");
  parallel_for(trials, workers, [&](std::size_t t) {
    Stream rng = root.split(t);
    LiftedGraph lift(box, sample_switch_config(box, q, rng));
    auto om = sample_percolation(lift.edge_count(), p, rng);
    auto ghost = sample_ghost(lift.vertex_count(), h, rng);
    auto cl = cluster_of(lift, std::span<const std::uint8_t>(om.omega), o);
    for (VertexId x : cl.members)
      if (ghost.green[x]) {
        hit[t] = 1;
        break;
      }
  });
  GhostEstimate g;
  g.trials = trials;
  for (auto b : hit) g.hits += b;
  g.m_hat = double(g.hits) / trials;
  g.stderr = binomial_stderr(g.m_hat, trials);
  return g;
}

bool ExpReport::within(double k_sigma) const {
  for (const auto& r : rows)
    if (r.margin > k_sigma * r.pooled_se) return false;
  return true;
}

ExpReport verify_exp_inequality(const BaseGraph& box, double p, double h, std::uint64_t trials, std::uint64_t seed,
                                unsigned workers, int n_max) {
  check_probability(p, "p");
  require(h > 0, "ghost field parameter h must be positive");
  require(n_max >= 2, "n_max must be at least 2");
  ExpReport rep;
  rep.p = p;
  rep.h = h;
  rep.trials = trials;
  rep.ghost = estimate_m_h(box, p, h, 0.5, trials, seed, workers);
  const double m = rep.ghost.m_hat;
  rep.s_raw = p * (1 - 2 * m);
  rep.s_hat = std::clamp(rep.s_raw, 0.0, 1.0);
  rep.clamped = rep.s_hat != rep.s_raw;
  Stream sp = make_stream(seed, "exp-psi-p"), ss = make_stream(seed, "exp-psi-s");
  const auto curve_p = tail_psi(box, 0.5, p, n_max, trials, sp.next(), workers);
  const auto curve_s = tail_psi(box, 0.5, rep.s_hat, n_max, trials, ss.next(), workers);
  rep.worst_sigma = -std::numeric_limits<double>::infinity();
  rep.max_margin = -std::numeric_limits<double>::infinity();
  for (int n = 2; n <= n_max; ++n) {
    ExpRow r;
    r.n = n;
    r.psi_p = curve_p.psi[n];
    r.se_p = curve_p.stderr[n];
    r.psi_s = curve_s.psi[n];
    r.se_s = curve_s.stderr[n];
    if (m < 1) {
      const double k = std::exp(-h * n) / (1 - m);
      r.bound = r.psi_p * k;
      // delta method in (psi_p, m_h)
      const double d_m = r.psi_p * k / (1 - m);
      r.se_bound = std::sqrt(k * k * r.se_p * r.se_p + d_m * d_m * rep.ghost.stderr * rep.ghost.stderr);
    } else {
      r.bound = std::numeric_limits<double>::infinity();
    }
    r.margin = r.psi_s - r.bound;
    r.pooled_se = std::sqrt(r.se_s * r.se_s + r.se_bound * r.se_bound);
    double sigma;
    if (r.pooled_se > 0)
      sigma = r.margin / r.pooled_se;
    else
      sigma = r.margin > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    rep.worst_sigma = std::max(rep.worst_sigma, sigma);
    rep.max_margin = std::max(rep.max_margin, r.margin);
    rep.rows.push_back(r);
  }
  return rep;
}

// ---- remaining graph --------------------------------------------------------

RemainingGraph build_remaining_graph(const StructureFunctions& sf, const std::vector<VertexId>& cluster) {
  if (cluster.empty()) throw ConfigError("remaining graph needs a non-empty cluster");
  const std::size_t n = sf.vertex_count();
  RemainingGraph rg;
  rg.sf = &sf;
  rg.in_cluster.assign(n, 0);
  for (VertexId x : cluster) {
    if (x >= n) throw ConfigError("cluster vertex out of range");
    rg.in_cluster[x] = 1;
  }
  // connected through edges of g restricted to the cluster
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<VertexId> stack{cluster.front()};
  seen[cluster.front()] = 1;
  std::size_t reached = 0;
  while (!stack.empty()) {
    const VertexId x = stack.back();
    stack.pop_back();
    ++reached;
    sf.for_each_incident(x, [&](EdgeId, VertexId y) {
      if (rg.in_cluster[y] && !seen[y]) {
        seen[y] = 1;
        stack.push_back(y);
      }
    });
  }
  std::size_t distinct = 0;
  for (auto b : rg.in_cluster) distinct += b;
  if (reached != distinct) throw ConfigError("cluster is not connected");
  rg.shadow.assign(n, 0);
  for (VertexId x = 0; x < n; ++x) rg.shadow[x] = !rg.in_cluster[x] && rg.in_cluster[twin(x)];
  rg.type.assign(sf.edge_count(), -1);
  for (EdgeId a = 0; a < sf.edge_count(); ++a) {
    const auto [x, y] = sf.f(a);
    if (rg.in_cluster[x] || rg.in_cluster[y]) continue;
    rg.type[a] = static_cast<std::int8_t>(rg.shadow[x] + rg.shadow[y]);
    ++rg.count[rg.type[a]];
  }
  return rg;
}

void validate_remaining(const RemainingGraph& rg) {
  auto fail = [](const std::string& what) { throw InvariantViolation("remaining graph: " + what); };
  const auto& sf = *rg.sf;
  std::size_t counts[3] = {0, 0, 0};
  for (EdgeId a = 0; a < sf.edge_count(); ++a) {
    const auto [x, y] = sf.f(a);
    const bool deleted = rg.in_cluster[x] || rg.in_cluster[y];
    if (deleted != (rg.type[a] < 0)) fail("deleted edges disagree with the cluster");
    if (deleted) continue;
    const int k = rg.shadow[x] + rg.shadow[y];
    if (k != rg.type[a]) fail("type is not the number of shadow endpoints");
    ++counts[k];
    const EdgeId t = a ^ 1u;  // the other abstract edge of the same base edge
    if (k == 0 && rg.type[t] != 0) fail("type-0 edge without a type-0 twin");
    if (k > 0 && rg.type[t] >= 0) fail("type-1/2 edge whose twin survived");
    // edge boundary of the shadow is exactly E_1
    const bool boundary = rg.shadow[x] != rg.shadow[y];
    if (boundary != (k == 1)) fail("edge boundary of the shadow is not E_1");
  }
  for (int k = 0; k < 3; ++k)
    if (counts[k] != rg.count[k]) fail("type counts");
}

std::vector<VertexId> remaining_cluster(const RemainingGraph& rg, const std::vector<std::uint8_t>& omega,
                                        VertexId x) {
  require(!rg.in_cluster[x], "vertex was deleted with the cluster");
  const auto& sf = *rg.sf;
  std::vector<std::uint8_t> seen(sf.vertex_count(), 0);
  std::vector<VertexId> stack{x}, out;
  seen[x] = 1;
  while (!stack.empty()) {
    const VertexId z = stack.back();
    stack.pop_back();
    out.push_back(z);
    sf.for_each_incident(z, [&](EdgeId a, VertexId y) {
      if (rg.type[a] >= 0 && omega[a] && !seen[y]) {
        seen[y] = 1;
        stack.push_back(y);
      }
    });
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// Abstract label at lifted vertex x of base edge e under (eta, label).
unsigned label_at(const BaseGraph& g, EdgeId e, VertexId x, unsigned eta, unsigned label) {
  const unsigned l = g.edge(e).u == project(x) ? level_of(x) : (level_of(x) ^ eta);
  return l ^ label;
}

}  // namespace

StructureFunctions sample_conditioned_structure(const StructureFunctions& given, const std::vector<VertexId>& cluster,
                                                double q, BitSource& bits) {
  check_probability(q, "q");
  const BaseGraph& g = *given.base;
  std::vector<std::vector<VertexId>> constrained(g.edge_count());
  for (VertexId x : cluster)
    for (const auto& inc : g.incident(project(x))) constrained[inc.edge].push_back(x);
  std::vector<std::uint8_t> eta(g.edge_count()), label(g.edge_count());
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    bool ok[2][2];
    for (unsigned s = 0; s < 2; ++s)
      for (unsigned l = 0; l < 2; ++l) {
        ok[s][l] = true;
        for (VertexId x : constrained[e])
          ok[s][l] = ok[s][l] &&
                     label_at(g, e, x, s, l) == label_at(g, e, x, given.eta[e], given.label[e]);
      }
    const double w1 = q * (ok[1][0] + ok[1][1]), w0 = (1 - q) * (ok[0][0] + ok[0][1]);
    if (w0 + w1 <= 0) throw InvariantViolation("conditioning event has probability zero");
    const unsigned s = bits.bernoulli(w1 / (w0 + w1));
    const double pl = ok[s][0] && ok[s][1] ? 0.5 : (ok[s][1] ? 1.0 : 0.0);
    eta[e] = s;
    label[e] = bits.bernoulli(pl);
  }
  StructureFunctions sf;
  sf.base = &g;
  sf.eta = SwitchConfig(std::move(eta));
  sf.label = std::move(label);
  return sf;
}

// ---- coupling ---------------------------------------------------------------

RemainingCoupling couple_remaining_to_full(const RemainingGraph& rg, const std::vector<std::uint8_t>& omega,
                                           double p, double q, BitSource& bits, bool strict) {
  check_probability(p, "p");
  check_probability(q, "q");
  if (strict && q != 0.5) throw ConfigError("the remaining-graph coupling law holds at q = 1/2 only");
  const auto& sf = *rg.sf;
  const BaseGraph& g = *sf.base;
  const std::size_t nv = sf.vertex_count(), ne = sf.edge_count(), m = g.edge_count();
  require(omega.size() == ne, "percolation configuration does not match graph");

  RemainingCoupling c;
  auto violation = [&](const std::string& what) {
    if (c.violations.size() < 64) c.violations.push_back(what);
  };

  std::vector<std::uint8_t> base_in(g.vertex_count(), 0);
  for (VertexId x = 0; x < nv; ++x)
    if (rg.in_cluster[x]) base_in[project(x)] = 1;
  std::vector<int> base_type(m);
  for (EdgeId e = 0; e < m; ++e) base_type[e] = base_in[g.edge(e).u] + base_in[g.edge(e).v];

  std::vector<std::uint8_t> eta_star(m, 0), label_star(m, 0);
  // fresh structure on pairs with both base endpoints under the cluster
  for (EdgeId e = 0; e < m; ++e)
    if (base_type[e] == 2) {
      eta_star[e] = bits.bernoulli(q);
      label_star[e] = bits.bernoulli(0.5);
    }

  c.image.assign(nv, kNoVertex);
  c.assoc.assign(ne, kNoEdge);
  c.parent.assign(nv, kNoVertex);
  c.pioneer.assign(nv, kNoEdge);
  c.height.assign(nv, 0);
  for (VertexId x = 0; x < nv; ++x)
    if (!rg.in_cluster[x] && !rg.shadow[x]) c.image[x] = x;
  for (EdgeId a = 0; a < ne; ++a)
    if (rg.type[a] == 0) c.assoc[a] = a;

  // abstract edge of base edge e at full-graph vertex z
  auto full_edge_at = [&](EdgeId e, VertexId z) -> EdgeId {
    return 2 * e + label_at(g, e, z, eta_star[e], label_star[e]);
  };
  auto full_other_end = [&](EdgeId e, VertexId z) -> VertexId {
    return lifted_vertex(project(z) == g.edge(e).u ? g.edge(e).v : g.edge(e).u, level_of(z) ^ eta_star[e]);
  };

  // exploration of H = (C_o* + its vertex boundary, E_1 + E_2) along E_2
  std::vector<std::uint8_t> in_s(nv, 0), in_a(ne, 0);
  std::priority_queue<EdgeId, std::vector<EdgeId>, std::greater<EdgeId>> cand;
  auto add_to_s = [&](VertexId x) {
    in_s[x] = 1;
    sf.for_each_incident(x, [&](EdgeId a, VertexId) {
      if (rg.type[a] == 2 && !in_a[a]) cand.push(a);
    });
  };
  for (VertexId r = 0; r < nv; ++r) {
    if (!rg.shadow[r] || in_s[r]) continue;
    const unsigned delta = bits.bernoulli(0.5);
    c.image[r] = lifted_vertex(project(r), delta);
    c.parent[r] = r;
    c.roots.push_back(r);
    add_to_s(r);
    while (!cand.empty()) {
      const EdgeId a = cand.top();
      cand.pop();
      if (in_a[a]) continue;
      auto [u, v] = sf.f(a);
      const VertexId x = in_s[u] && in_s[v] ? std::min(u, v) : (in_s[u] ? u : v);
      const VertexId y = x == u ? v : u;
      const EdgeId e = project_edge(a);
      c.assoc[a] = full_edge_at(e, c.image[x]);
      in_a[a] = 1;
      if (omega[a] && c.image[y] == kNoVertex) {
        c.image[y] = full_other_end(e, c.image[x]);
        c.parent[y] = x;
        c.pioneer[y] = a;
        add_to_s(y);
      }
    }
  }
  for (VertexId x = 0; x < nv; ++x)
    if (rg.shadow[x]) c.height[x] = static_cast<std::uint8_t>(level_of(c.image[x]));

  std::vector<std::uint8_t> omega_star(ne, 0);
  for (EdgeId e = 0; e < m; ++e) {
    std::vector<EdgeId> alive;
    for (EdgeId a : {2 * e, 2 * e + 1})
      if (rg.type[a] >= 0) alive.push_back(a);
    if (base_type[e] == 0) {
      if (alive.size() != 2) violation("pair outside the cluster lost an edge");
      eta_star[e] = sf.eta[e];
      label_star[e] = sf.label[e];
      omega_star[2 * e] = omega[2 * e];
      omega_star[2 * e + 1] = omega[2 * e + 1];
      continue;
    }
    if (alive.size() > 1) {
      violation("two surviving edges over the cluster");
      continue;
    }
    if (alive.empty()) {
      if (base_type[e] == 1) {
        eta_star[e] = bits.bernoulli(q);
        label_star[e] = bits.bernoulli(0.5);
      }
      omega_star[2 * e] = bits.bernoulli(p);
      omega_star[2 * e + 1] = bits.bernoulli(p);
      continue;
    }
    const EdgeId a = alive.front();
    if (base_type[e] == 2) {
      if (rg.type[a] != 2) violation("surviving edge over a type-2 pair is not type 2");
      omega_star[c.assoc[a]] = omega[a];
      omega_star[c.assoc[a] ^ 1u] = bits.bernoulli(p);
      continue;
    }
    // type 1: f(a) = {x, y_j} with x in the shadow
    if (rg.type[a] != 1) {
      violation("surviving edge over a type-1 pair is not type 1");
      continue;
    }
    auto [u, v] = sf.f(a);
    const VertexId x = rg.shadow[u] ? u : v;
    const VertexId y = x == u ? v : u;
    const VertexId ax = c.image[x];
    const unsigned i = bits.bernoulli(0.5);
    const bool x_first = project(ax) == g.edge(e).u;
    const unsigned l = x_first ? level_of(ax) : level_of(y);
    eta_star[e] = level_of(ax) ^ level_of(y);
    label_star[e] = i ^ l;
    c.assoc[a] = 2 * e + i;
    omega_star[2 * e + i] = omega[a];
    omega_star[(2 * e + i) ^ 1u] = bits.bernoulli(p);
    ++c.height_checks;
    if ((sf.eta[e] ^ level_of(x)) != (eta_star[e] ^ c.height[x])) violation("height relation fails");
  }
  c.full.base = &g;
  c.full.eta = SwitchConfig(std::move(eta_star));
  c.full.label = std::move(label_star);
  c.omega_star = std::move(omega_star);

  // ---- invariants ----
  std::vector<std::uint8_t> used_edge(ne, 0), used_vertex(nv, 0);
  for (EdgeId a = 0; a < ne; ++a) {
    if (rg.type[a] < 0) continue;
    const EdgeId b = c.assoc[a];
    if (b == kNoEdge) {
      violation("surviving edge without association");
      continue;
    }
    if (used_edge[b]++) violation("association is not injective on edges");
    if (omega[a] && !c.omega_star[b]) violation("open edge mapped to a closed edge");
    // the image edge starts at the image of an endpoint
    const auto [u, v] = sf.f(a);
    const auto [s, t] = c.full.f(b);
    const bool ok_u = c.image[u] == s || c.image[u] == t, ok_v = c.image[v] == s || c.image[v] == t;
    if (rg.type[a] == 2 ? !(ok_u || ok_v) : !(ok_u && ok_v)) violation("image edge misses the image endpoints");
  }
  for (VertexId x = 0; x < nv; ++x) {
    if (rg.in_cluster[x]) continue;
    if (c.image[x] == kNoVertex) {
      violation("surviving vertex without image");
      continue;
    }
    if (used_vertex[c.image[x]]++) violation("image is not injective on vertices");
  }
  // pioneer forest: parents reach a root, trees are the open E_2 components
  DisjointSets comps(nv);
  for (EdgeId a = 0; a < ne; ++a)
    if (rg.type[a] == 2 && omega[a]) {
      const auto [u, v] = sf.f(a);
      comps.unite(u, v);
    }
  for (VertexId x = 0; x < nv; ++x) {
    if (!rg.shadow[x]) continue;
    VertexId z = x;
    std::size_t hops = 0;
    while (c.parent[z] != z && hops <= nv) {
      if (c.parent[z] == kNoVertex) break;
      z = c.parent[z];
      ++hops;
    }
    if (c.parent[z] != z) {
      violation("pioneer path does not reach a root");
      continue;
    }
    if (comps.find(z) != comps.find(x)) violation("pioneer tree leaves the open component");
    if (x != z) {
      const EdgeId a = c.pioneer[x];
      const auto [s, t] = sf.f(a);
      if (!omega[a] || !((s == x && t == c.parent[x]) || (t == x && s == c.parent[x])))
        violation("pioneer edge does not join parent and child");
      const auto [fs, ft] = c.full.f(c.assoc[a]);
      const VertexId ip = c.image[c.parent[x]], ix = c.image[x];
      if (!((fs == ip && ft == ix) || (fs == ix && ft == ip))) violation("association does not lift the forest");
    }
  }
  for (std::size_t i = 0; i < c.roots.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (comps.find(c.roots[i]) == comps.find(c.roots[j])) violation("two roots in one open component");
  return c;
}

DominationResult domination_check(const RemainingGraph& rg, const std::vector<std::uint8_t>& omega,
                                  const RemainingCoupling& c, const GhostField& ghost) {
  const auto& sf = *rg.sf;
  const std::size_t nv = sf.vertex_count();
  const auto label = clusters(c.full, std::span<const std::uint8_t>(c.omega_star));
  std::vector<std::uint8_t> image_green(nv, 0), comp_green(nv, 0);
  for (VertexId x = 0; x < nv; ++x)
    if (!rg.in_cluster[x] && ghost.green[x]) image_green[c.image[x]] = 1;
  for (VertexId y = 0; y < nv; ++y)
    if (image_green[y]) comp_green[label[y]] = 1;
  DominationResult out;
  for (VertexId x = 0; x < nv; ++x) {
    if (rg.in_cluster[x]) continue;
    ++out.vertices;
    const auto k = remaining_cluster(rg, omega, x);
    const VertexId lx = label[c.image[x]];
    bool included = true, meets = false;
    for (VertexId z : k) {
      included = included && label[c.image[z]] == lx;
      meets = meets || ghost.green[z];
    }
    out.inclusion_violations += !included;
    out.green_violations += meets && !comp_green[lx];
  }
  return out;
}

RemainingInstance sample_remaining_instance(const StructureFunctions& given, const std::vector<VertexId>& cluster,
                                            double p, double q, BitSource& bits, bool strict) {
  RemainingInstance out;
  out.structure = std::make_unique<StructureFunctions>(sample_conditioned_structure(given, cluster, q, bits));
  out.graph = build_remaining_graph(*out.structure, cluster);
  out.omega.assign(out.structure->edge_count(), 0);
  for (EdgeId a = 0; a < out.omega.size(); ++a)
    if (out.graph.type[a] >= 0) out.omega[a] = bits.bernoulli(p);
  out.coupling = couple_remaining_to_full(out.graph, out.omega, p, q, bits, strict);
  return out;
}

std::uint64_t encode_configuration(const StructureFunctions& sf, const std::vector<std::uint8_t>& omega) {
  const std::size_t m = sf.base->edge_count();
  require(4 * m <= 64, "configuration too large to encode");
  std::uint64_t key = 0;
  for (std::size_t a = 0; a < 2 * m; ++a) key |= std::uint64_t(omega[a] & 1u) << a;
  for (std::size_t e = 0; e < m; ++e) {
    key |= std::uint64_t(sf.eta[e] & 1u) << (2 * m + e);
    key |= std::uint64_t(sf.label[e] & 1u) << (3 * m + e);
  }
  return key;
}

double configuration_probability(std::uint64_t key, std::size_t m, double p, double q) {
  double w = 1;
  for (std::size_t a = 0; a < 2 * m; ++a) w *= (key >> a & 1u) ? p : 1 - p;
  for (std::size_t e = 0; e < m; ++e) w *= ((key >> (2 * m + e)) & 1u) ? q : 1 - q;
  for (std::size_t e = 0; e < m; ++e) w *= 0.5;
  return w;
}

}  // namespace liftperc
