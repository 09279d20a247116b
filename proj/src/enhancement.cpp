#include "liftperc/enhancement.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

#include "liftperc/errors.hpp"
#include "liftperc/estimators.hpp"
#include "liftperc/parallel.hpp"
#include "liftperc/perco.hpp"

namespace liftperc {

using boost::multiprecision::cpp_rational;

int lattice_square_ball_size(int R) {
  const int side = 2 * R + 4;
  auto big = build_box(2, side);
  std::vector<VertexId> sq;
  for (int dx = 0; dx < 2; ++dx)
    for (int dy = 0; dy < 2; ++dy) {
      int c[2] = {R + 1 + dx, R + 1 + dy};
      sq.push_back(big.vertex_at(c));
    }
  return static_cast<int>(ball_of_set(big, sq, R).size());
}

CyclePartition build_cycle_partition(const BaseGraph& box) {
  if (box.box_dimension() != 2) throw ConfigError("cycle partitions are built for 2d boxes only");
  const int side = box.box_side();
  CyclePartition part;
  for (int x = 0; x + 1 < side; x += 2)
    for (int y = 0; y + 1 < side; y += 2) {
      if ((x / 2 + y / 2) % 2) continue;
      int c[4][2] = {{x, y}, {x + 1, y}, {x + 1, y + 1}, {x, y + 1}};
      std::vector<VertexId> cyc;
      for (auto& xy : c) cyc.push_back(box.vertex_at(xy));
      std::vector<EdgeId> edges;
      for (int i = 0; i < 4; ++i) edges.push_back(*box.find_edge(cyc[i], cyc[(i + 1) % 4]));
      part.cycles.push_back(std::move(cyc));
      part.cycle_edges.push_back(std::move(edges));
    }
  if (part.cycles.empty()) throw ConfigError("box too small to hold a unit square");

  const std::size_t n = box.vertex_count();
  std::vector<VertexId> sources;
  part.cell_of.assign(n, static_cast<std::uint32_t>(-1));
  for (std::uint32_t i = 0; i < part.cycles.size(); ++i)
    for (VertexId v : part.cycles[i]) {
      part.cell_of[v] = i;
      sources.push_back(v);
    }
  auto dist = distances_from(box, sources);
  part.R = *std::max_element(dist.begin(), dist.end());
  // layer by layer: take the cell of the smallest neighbour one step closer
  std::vector<VertexId> order(n);
  for (VertexId v = 0; v < n; ++v) order[v] = v;
  std::stable_sort(order.begin(), order.end(), [&](VertexId a, VertexId b) { return dist[a] < dist[b]; });
  for (VertexId v : order) {
    if (dist[v] == 0) continue;
    VertexId best = static_cast<VertexId>(-1);
    for (const auto& inc : box.incident(v))
      if (dist[inc.neighbor] == dist[v] - 1) best = std::min(best, inc.neighbor);
    part.cell_of[v] = part.cell_of[best];
  }
  part.cells.assign(part.cycles.size(), {});
  for (VertexId v = 0; v < n; ++v) part.cells[part.cell_of[v]].push_back(v);
  part.N = 4;
  part.L = lattice_square_ball_size(part.R);
  part.D = 2 * part.R + part.N;
  part.r = part.R + part.N;
  validate_partition(box, part);
  return part;
}

void validate_partition(const BaseGraph& box, const CyclePartition& part) {
  auto fail = [](const std::string& what) { throw InvariantViolation("cycle partition: " + what); };
  const std::size_t n = box.vertex_count();
  std::vector<int> owner(n, -1);
  std::vector<VertexId> all;
  for (std::size_t i = 0; i < part.cycles.size(); ++i) {
    const auto& cyc = part.cycles[i];
    if (cyc.size() != static_cast<std::size_t>(part.N)) fail("cycle of wrong length");
    for (std::size_t k = 0; k < cyc.size(); ++k) {
      if (owner[cyc[k]] >= 0) fail("cycles overlap");
      owner[cyc[k]] = static_cast<int>(i);
      all.push_back(cyc[k]);
      if (!box.find_edge(cyc[k], cyc[(k + 1) % cyc.size()])) fail("cycle is not closed");
      if (part.cell_of[cyc[k]] != i) fail("cycle outside its cell");
    }
  }
  auto dist = distances_from(box, all);
  for (VertexId v = 0; v < n; ++v)
    if (dist[v] < 0 || dist[v] > part.R) fail("union of cycles is not R-dense");
  std::vector<int> seen(n, 0);
  for (std::size_t i = 0; i < part.cells.size(); ++i) {
    const auto& cell = part.cells[i];
    if (cell.size() > static_cast<std::size_t>(part.L)) fail("cell larger than L");
    std::vector<std::uint8_t> in(n, 0);
    for (VertexId v : cell) {
      if (seen[v]++) fail("cells overlap");
      if (part.cell_of[v] != i) fail("cell_of disagrees with cells");
      in[v] = 1;
    }
    // connected
    std::vector<VertexId> stack{cell.front()};
    std::vector<std::uint8_t> vis(n, 0);
    vis[cell.front()] = 1;
    std::size_t reached = 0;
    while (!stack.empty()) {
      VertexId x = stack.back();
      stack.pop_back();
      ++reached;
      for (const auto& inc : box.incident(x))
        if (in[inc.neighbor] && !vis[inc.neighbor]) {
          vis[inc.neighbor] = 1;
          stack.push_back(inc.neighbor);
        }
    }
    if (reached != cell.size()) fail("cell is not connected");
  }
  for (VertexId v = 0; v < n; ++v)
    if (seen[v] != 1) fail("cells do not cover every vertex");
  if (part.D != 2 * part.R + part.N || part.r != part.R + part.N) fail("derived radii inconsistent");
}

double switching_cycle_probability(int N, double q) {
  require(N >= 3, "cycle length must be at least 3");
  check_probability(q, "q");
  return 0.5 * (1 - std::pow(1 - 2 * q, N));
}

double switching_cycle_probability_sum(int N, double q) {
  require(N >= 3, "cycle length must be at least 3");
  check_probability(q, "q");
  double total = 0, binom = 1;
  for (int k = 0; k <= N; ++k) {
    if (k % 2) total += binom * std::pow(q, k) * std::pow(1 - q, N - k);
    binom = binom * (N - k) / (k + 1);
  }
  return total;
}

cpp_rational switching_cycle_probability_exact(int N, const cpp_rational& q) {
  require(N >= 3, "cycle length must be at least 3");
  cpp_rational total = 0, binom = 1;
  for (int k = 0; k <= N; ++k) {
    if (k % 2) {
      cpp_rational term = binom;
      for (int i = 0; i < k; ++i) term *= q;
      for (int i = 0; i < N - k; ++i) term *= 1 - q;
      total += term;
    }
    binom = binom * (N - k) / (k + 1);
  }
  return total;
}

SplitCheck split_bernoulli_check(double p, int n, std::uint64_t trials, std::uint64_t seed, unsigned workers) {
  check_probability(p, "p");
  require(n >= 1, "n must be at least 1");
  require(trials > 0, "trial budget must be positive");
  const double pi = 1 - std::pow(1 - p, 1.0 / n);
  constexpr std::uint64_t kChunk = 1 << 14;
  const std::uint64_t chunks = (trials + kChunk - 1) / kChunk;
  std::vector<std::uint64_t> ones(chunks, 0);
  const Stream root = make_stream(seed, "split-bernoulli");
  parallel_for(chunks, workers, [&](std::size_t c) {
    Stream rng = root.split(c);
    const std::uint64_t len = std::min(kChunk, trials - c * kChunk);
    for (std::uint64_t i = 0; i < len; ++i) {
      bool any = false;
      for (int k = 0; k < n; ++k) any |= rng.uniform() < pi;
      ones[c] += any;
    }
  });
  SplitCheck out;
  out.trials = trials;
  for (auto o : ones) out.ones += o;
  out.target = p;
  out.estimate = double(out.ones) / trials;
  const double se = std::sqrt(p * (1 - p) / trials);
  out.z = se > 0 ? (out.estimate - p) / se : (out.estimate == p ? 0.0 : std::numeric_limits<double>::infinity());
  return out;
}

BetaField sample_beta_field(const BaseGraph& box, const CyclePartition& part, const SwitchConfig& eta, double q,
                            Stream& rng) {
  check_probability(q, "q");
  BetaField f;
  f.c = switching_cycle_probability(part.N, q);
  f.t = 1 - std::pow(1 - f.c, 1.0 / part.L);
  f.beta.assign(box.vertex_count(), 0);
  f.cell_open.assign(part.cells.size(), 0);
  for (std::size_t i = 0; i < part.cells.size(); ++i) {
    const auto& cell = part.cells[i];
    const bool open = is_switching_cycle(box, eta, part.cycle_edges[i]);
    f.cell_open[i] = open;
    const std::size_t m = cell.size();
    const double pi = 1 - std::pow(1 - f.c, 1.0 / double(m));
    bool seen_one = false;
    for (std::size_t k = 0; k < m; ++k) {
      // two draws per vertex whatever the branch
      const double u = rng.uniform(), w = rng.uniform();
      bool v = false;
      if (open && pi > 0) {
        if (seen_one) {
          v = u < pi;
        } else {
          const double remaining = double(m - k);
          v = u < pi / (1 - std::pow(1 - pi, remaining));
        }
      }
      seen_one |= v;
      f.beta[cell[k]] = v && pi > 0 && w < f.t / pi;
    }
  }
  return f;
}

std::vector<EdgeId> ball_edges(const BaseGraph& g, VertexId u, int r) {
  auto b = ball(g, u, r);
  std::vector<std::uint8_t> in(g.vertex_count(), 0);
  for (VertexId v : b.members) in[v] = 1;
  std::vector<EdgeId> out;
  for (VertexId v : b.members)
    for (const auto& inc : g.incident(v))
      if (in[inc.neighbor] && v < inc.neighbor) out.push_back(inc.edge);
  std::sort(out.begin(), out.end());
  return out;
}

EnhancedGeometry make_enhanced_geometry(const BaseGraph& g, int r) {
  require(r >= 0, "enhancement radius must be non-negative");
  EnhancedGeometry geo;
  geo.r = r;
  const std::size_t n = g.vertex_count();
  geo.ball.resize(n);
  geo.ball_edges.resize(n);
  geo.next_sphere.resize(n);
  std::vector<int> dist(n, -1);
  for (VertexId u = 0; u < n; ++u) {
    std::vector<VertexId> touched{u};
    dist[u] = 0;
    for (std::size_t i = 0; i < touched.size(); ++i) {
      const VertexId x = touched[i];
      if (dist[x] == r + 1) continue;
      for (const auto& inc : g.incident(x))
        if (dist[inc.neighbor] < 0) {
          dist[inc.neighbor] = dist[x] + 1;
          touched.push_back(inc.neighbor);
        }
    }
    for (VertexId x : touched) {
      if (dist[x] <= r) {
        geo.ball[u].push_back(x);
        for (const auto& inc : g.incident(x))
          if (x < inc.neighbor && dist[inc.neighbor] >= 0 && dist[inc.neighbor] <= r)
            geo.ball_edges[u].push_back(inc.edge);
      } else {
        geo.next_sphere[u].push_back(x);
      }
    }
    for (VertexId x : touched) dist[x] = -1;
    std::sort(geo.ball[u].begin(), geo.ball[u].end());
    std::sort(geo.ball_edges[u].begin(), geo.ball_edges[u].end());
    std::sort(geo.next_sphere[u].begin(), geo.next_sphere[u].end());
  }
  return geo;
}

std::vector<std::uint8_t> enhanced_cluster_alternating(const BaseGraph& g, const std::vector<std::uint8_t>& omega,
                                                       const std::vector<std::uint8_t>& alpha, VertexId o, int r) {
  const std::size_t n = g.vertex_count();
  std::vector<std::uint8_t> cur(n, 0);
  cur[o] = 1;
  for (std::size_t round = 0; round <= n; ++round) {
    // odd step: omega-closure
    std::vector<VertexId> stack;
    for (VertexId v = 0; v < n; ++v)
      if (cur[v]) stack.push_back(v);
    while (!stack.empty()) {
      VertexId x = stack.back();
      stack.pop_back();
      for (const auto& inc : g.incident(x))
        if (omega[inc.edge] && !cur[inc.neighbor]) {
          cur[inc.neighbor] = 1;
          stack.push_back(inc.neighbor);
        }
    }
    // even step, evaluated against the odd-step set
    std::vector<std::uint8_t> next = cur;
    bool grew = false;
    for (VertexId u = 0; u < n; ++u) {
      if (!cur[u] || !alpha[u]) continue;
      auto b = ball(g, u, r);
      bool ok = std::all_of(b.members.begin(), b.members.end(), [&](VertexId v) { return cur[v] != 0; });
      if (!ok) continue;
      for (EdgeId e : ball_edges(g, u, r)) ok = ok && omega[e];
      if (!ok) continue;
      for (VertexId v : sphere(g, u, r + 1))
        if (!next[v]) {
          next[v] = 1;
          grew = true;
        }
    }
    if (!grew) return cur;
    cur = std::move(next);
  }
  return cur;
}

std::vector<std::uint8_t> enhanced_cluster(const BaseGraph& g, const EnhancedGeometry& geo,
                                           const std::vector<std::uint8_t>& omega,
                                           const std::vector<std::uint8_t>& alpha, VertexId o,
                                           const std::vector<std::uint8_t>& boundary) {
  const std::size_t n = g.vertex_count();
  std::vector<std::uint8_t> in(n, 0), fired(n, 0);
  std::vector<VertexId> work;
  bool hit = false;
  auto add = [&](VertexId v) {
    if (in[v]) return;
    in[v] = 1;
    work.push_back(v);
    if (!boundary.empty() && boundary[v]) hit = true;
  };
  add(o);
  while (!work.empty() && !hit) {
    const VertexId x = work.back();
    work.pop_back();
    for (const auto& inc : g.incident(x))
      if (omega[inc.edge]) add(inc.neighbor);
    // x may complete B_r(u) for any u within distance r
    for (VertexId u : geo.ball[x]) {
      if (fired[u] || !alpha[u] || !in[u]) continue;
      bool ok = true;
      for (VertexId v : geo.ball[u])
        if (!in[v]) {
          ok = false;
          break;
        }
      if (!ok) continue;
      for (EdgeId e : geo.ball_edges[u])
        if (!omega[e]) {
          ok = false;
          break;
        }
      if (!ok) continue;
      fired[u] = 1;
      for (VertexId v : geo.next_sphere[u]) add(v);
    }
  }
  return in;
}

bool enhanced_reaches(const BaseGraph& g, const EnhancedGeometry& geo, const std::vector<std::uint8_t>& omega,
                      const std::vector<std::uint8_t>& alpha, VertexId o,
                      const std::vector<std::uint8_t>& boundary) {
  if (boundary[o]) return true;
  auto in = enhanced_cluster(g, geo, omega, alpha, o, boundary);
  for (VertexId v = 0; v < in.size(); ++v)
    if (in[v] && boundary[v]) return true;
  return false;
}

std::vector<double> enhanced_thresholds(const BaseGraph& box, int r, double s, std::uint64_t trials,
                                        std::uint64_t seed, unsigned workers) {
  check_probability(s, "s");
  require(trials > 0, "trial budget must be positive");
  const auto geo = make_enhanced_geometry(box, r);
  const auto boundary = box.box_boundary_mask();
  const VertexId o = box.box_center();
  std::vector<double> th(trials);
  const Stream root = make_stream(seed, "enhanced-pc");
  parallel_for(trials, workers, [&](std::size_t t) {
    Stream rng = root.split(t);
    auto u = sample_uniforms(box.edge_count(), rng);
    std::vector<std::uint8_t> alpha(box.vertex_count());
    for (auto& a : alpha) a = rng.uniform() < s;
    th[t] = monotone_threshold(u, [&](const std::vector<std::uint8_t>& om) {
      return enhanced_reaches(box, geo, om, alpha, o, boundary);
    });
  });
  std::sort(th.begin(), th.end());
  return th;
}

EnhancedPc estimate_enhanced_pc(const BaseGraph& box, int r, double s, std::uint64_t trials, std::uint64_t seed,
                                unsigned workers) {
  ThresholdBatch batch{enhanced_thresholds(box, r, s, trials, seed, workers)};
  auto est = pc_from_batch(batch, -1, box.box_side());
  EnhancedPc out;
  out.s = s;
  out.r = r;
  out.trials = trials;
  out.pc_hat = est.pc_hat;
  out.ci_low = est.ci_low;
  out.ci_high = est.ci_high;
  out.stderr = est.stderr;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

enum CopyStatus : std::uint8_t { kUnexplored = 0, kP = 1, kS = 2 };

class MonoCoupling {
 public:
  MonoCoupling(const BaseGraph& g, double q, double p, const CyclePartition& part, Stream& rng)
      : g_(g), part_(part), rng_(rng), lift_(g, sample_switch_config(g, q, rng)), geo_(make_enhanced_geometry(g, part.r)) {
    check_probability(p, "p");
    const std::size_t n = g.vertex_count(), m = g.edge_count();
    beta_ = sample_beta_field(g, part, lift_.eta(), q, rng);
    int big = 0;
    for (VertexId u = 0; u < n; ++u) big = std::max<int>(big, static_cast<int>(ball(g, u, part.r + 2).members.size()));
    M_ = big + 1;
    p_hat_ = 1 - std::pow(1 - p, 1.0 / M_);
    omega_.resize(2 * m * M_);
    for (auto& w : omega_) w = rng.uniform() < p_hat_;
    omega_or_.assign(2 * m, 0);
    for (EdgeId le = 0; le < 2 * m; ++le)
      for (int k = 0; k < M_; ++k) omega_or_[le] |= omega_[le * M_ + k];
    status_.assign(2 * m * M_, kUnexplored);
    p_count_.assign(2 * m, 0);
    s_count_.assign(2 * m, 0);
    p_explored_.assign(m, 0);
    kappa_.assign(m * M_, 0);
    kappa_def_.assign(m * M_, 0);
    c_.assign(n, 0);
    c_prime_.assign(2 * n, 0);
    s_explored_.assign(n, 0);
    alpha_.assign(n, 0);
    alpha_def_.assign(n, 0);
    const VertexId o = g.box_center();
    origin_ = o;
    origin_lift_ = lifted_vertex(o, 0);
    auto cl = cluster_of(lift_, omega_or_, origin_lift_);
    reach_mask_.assign(2 * n, 0);
    for (VertexId x : cl.members) reach_mask_[x] = 1;
  }

  CouplingTranscript run() {
    add_c(origin_);
    add_c_prime(origin_lift_);
    check("step 0");
    for (std::size_t guard = 0; guard <= g_.vertex_count() + 1; ++guard) {
      odd_step();
      ++tr_.odd_steps;
      const bool grew = even_step();
      ++tr_.even_steps;
      if (!grew) break;
    }
    finish();
    return std::move(tr_);
  }

 private:
  void add_c(VertexId v) {
    if (c_[v]) return;
    c_[v] = 1;
    for (const auto& inc : g_.incident(v))
      if (!p_explored_[inc.edge]) frontier_.push(inc.edge);
  }
  void add_c_prime(VertexId x) { c_prime_[x] = 1; }

  void violation(const std::string& what) {
    if (tr_.violations.size() < 64) tr_.violations.push_back(what + " (action " + std::to_string(tr_.actions) + ")");
  }

  // (A)-(E) over the whole state; linear in |V| + |E|.
  void check(const char* where) {
    const std::size_t m = g_.edge_count(), n = g_.vertex_count();
    for (EdgeId e = 0; e < m; ++e) {
      const EdgeId a = lifted_edge(e, 0), b = lifted_edge(e, 1);
      if (p_explored_[e]) {
        const bool one = (p_count_[a] == M_ && p_count_[b] == 0) || (p_count_[b] == M_ && p_count_[a] == 0);
        if (!one) violation(std::string("(A) at ") + where + ", edge " + std::to_string(e));
      } else if (p_count_[a] || p_count_[b] || s_count_[a] || s_count_[b]) {
        violation(std::string("(B) at ") + where + ", edge " + std::to_string(e));
      }
      for (EdgeId le : {a, b})
        if (s_count_[le] > M_ - 1 || (p_count_[le] && s_count_[le]))
          violation(std::string("(D) at ") + where + ", lifted edge " + std::to_string(le));
    }
    std::vector<std::uint8_t> image(n, 0);
    for (VertexId x = 0; x < 2 * n; ++x) {
      if (!c_prime_[x]) continue;
      if (!reach_mask_[x]) violation(std::string("(C) at ") + where + ", vertex " + std::to_string(x));
      image[project(x)] = 1;
    }
    if (image != c_) violation(std::string("(E) at ") + where);
  }

  void odd_step() {
    while (!frontier_.empty()) {
      const EdgeId e = frontier_.top();
      frontier_.pop();
      if (p_explored_[e]) continue;
      const auto& be = g_.edge(e);
      const VertexId u = c_[be.u] ? be.u : be.v;
      const VertexId v = be.other(u);
      // smallest lift with an endpoint in C'
      EdgeId chosen = lifted_edge(e, 0);
      bool found = false;
      for (unsigned l = 0; l < 2 && !found; ++l) {
        const auto [a, b] = lift_.endpoints(lifted_edge(e, l));
        if (c_prime_[a] || c_prime_[b]) {
          chosen = lifted_edge(e, l);
          found = true;
        }
      }
      if (!found) violation("(E) no lift of edge " + std::to_string(e) + " meets C'");
      p_explored_[e] = 1;
      ++tr_.p_explored_edges;
      bool open = false;
      for (int k = 0; k < M_; ++k) {
        const std::size_t c = std::size_t(chosen) * M_ + k;
        if (status_[c] != kUnexplored) violation("(B) copy already explored at p-exploration");
        status_[c] = kP;
        kappa_[std::size_t(e) * M_ + k] = omega_[c];
        kappa_def_[std::size_t(e) * M_ + k] = 1;
        open |= omega_[c] != 0;
      }
      p_count_[chosen] = M_;
      if (open) {
        const auto [a, b] = lift_.endpoints(chosen);
        add_c_prime(a);
        add_c_prime(b);
        add_c(v);
      }
      ++tr_.actions;
      check("odd step");
    }
  }

  bool kappa_open(EdgeId e) const {
    for (int k = 0; k < M_; ++k)
      if (kappa_[std::size_t(e) * M_ + k]) return true;
    return false;
  }

  // s-explore the smallest unexplored copy of le; returns its omega bit.
  bool s_explore(EdgeId le) {
    for (int k = 0; k < M_; ++k) {
      const std::size_t c = std::size_t(le) * M_ + k;
      if (status_[c] == kUnexplored) {
        status_[c] = kS;
        ++s_count_[le];
        ++tr_.s_explored_copies;
        return omega_[c] != 0;
      }
    }
    violation("(D) no s-unexplored copy left on lifted edge " + std::to_string(le));
    return false;
  }

  bool even_step() {
    const std::size_t n = g_.vertex_count();
    const std::vector<std::uint8_t> c1 = c_;
    bool grew = false;
    for (VertexId u = 0; u < n; ++u) {
      if (!c1[u] || s_explored_[u]) continue;
      bool ok = std::all_of(geo_.ball[u].begin(), geo_.ball[u].end(), [&](VertexId v) { return c1[v] != 0; });
      if (!ok) continue;
      for (EdgeId e : geo_.ball_edges[u]) {
        if (!p_explored_[e]) {
          violation("edge inside an explored ball is p-unexplored");
          ok = false;
          break;
        }
        if (!kappa_open(e)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;

      s_explored_[u] = 1;
      const VertexId x0 = lifted_vertex(u, 0), x1 = lifted_vertex(u, 1);
      if (!c_prime_[x0] && !c_prime_[x1]) violation("(E) no lift of the enhanced vertex in C'");

      // substep 3: the p-unexplored lift of every edge of Z(x, r)
      bool all3 = true;
      for (EdgeId e : geo_.ball_edges[u])
        for (unsigned l = 0; l < 2; ++l) {
          const EdgeId le = lifted_edge(e, l);
          if (p_count_[le] == 0) all3 = s_explore(le) && all3;
        }
      ++tr_.actions;
      check("even step substep 3");

      // substep 4: one copy of the p-unexplored lift of each edge of S_{r+1/2}(u)
      bool all4 = true;
      std::vector<EdgeId> chosen;
      if (all3) {
        for (EdgeId e : sphere_edges(g_, u, part_.r)) {
          EdgeId le = p_count_[lifted_edge(e, 0)] == 0 ? lifted_edge(e, 0) : lifted_edge(e, 1);
          if (p_count_[le] != 0) violation("(A) both lifts p-explored");
          all4 = s_explore(le) && all4;
          chosen.push_back(le);
        }
        ++tr_.actions;
        check("even step substep 4");
      }

      const bool success = all3 && all4 && beta_.beta[u];
      const std::size_t n3 = geo_.ball_edges[u].size();
      const std::size_t n4 = sphere_edges(g_, u, part_.r).size();
      tr_.alpha_expected += std::pow(p_hat_, double(n3 + n4)) * beta_.t;
      ++tr_.alpha_trials;
      tr_.alpha_successes += success;
      alpha_[u] = success;
      alpha_def_[u] = 1;
      if (success) {
        for (VertexId v : geo_.next_sphere[u])
          if (!c_[v]) {
            grew = true;
            add_c(v);
          }
        for (VertexId v : geo_.ball[u]) {
          add_c_prime(lifted_vertex(v, 0));
          add_c_prime(lifted_vertex(v, 1));
        }
        for (EdgeId le : chosen) {
          const auto [a, b] = lift_.endpoints(le);
          add_c_prime(a);
          add_c_prime(b);
        }
      }
      ++tr_.actions;
      check("even step substep 7");
    }
    return grew;
  }

  void finish() {
    const std::size_t n = g_.vertex_count(), m = g_.edge_count();
    tr_.M = M_;
    tr_.p_hat = p_hat_;
    tr_.t = beta_.t;
    double s_min = 1;
    for (VertexId u = 0; u < n; ++u) {
      const std::size_t n34 = geo_.ball_edges[u].size() + sphere_edges(g_, u, part_.r).size();
      s_min = std::min(s_min, std::pow(p_hat_, double(n34)) * beta_.t);
    }
    tr_.s_fill = s_min;
    for (std::size_t c = 0; c < m * std::size_t(M_); ++c)
      if (!kappa_def_[c]) kappa_[c] = rng_.uniform() < p_hat_;
    for (VertexId u = 0; u < n; ++u)
      if (!alpha_def_[u]) alpha_[u] = rng_.uniform() < s_min;
    tr_.c_final = c_;
    tr_.c_prime_final = c_prime_;
    tr_.kappa = kappa_;
    tr_.alpha = alpha_;
    tr_.alpha_defined = alpha_def_;
    const auto bnd = g_.box_boundary_mask();
    for (VertexId v = 0; v < n; ++v) tr_.base_reaches = tr_.base_reaches || (c_[v] && bnd[v]);
    for (VertexId x = 0; x < 2 * n; ++x) tr_.lift_reaches = tr_.lift_reaches || (c_prime_[x] && bnd[project(x)]);
    if (tr_.lift_reaches && !tr_.base_reaches) violation("lift reaches the boundary but the base does not");
    std::vector<std::uint8_t> kappa_or(m, 0);
    for (EdgeId e = 0; e < m; ++e) kappa_or[e] = kappa_open(e);
    tr_.enhanced_matches = enhanced_cluster_alternating(g_, kappa_or, alpha_, origin_, part_.r) == c_;
    if (!tr_.enhanced_matches) violation("C_inf differs from the enhanced cluster of (kappa, alpha)");
  }

  const BaseGraph& g_;
  const CyclePartition& part_;
  Stream& rng_;
  LiftedGraph lift_;
  EnhancedGeometry geo_;
  BetaField beta_;
  int M_ = 0;
  double p_hat_ = 0;
  VertexId origin_ = 0, origin_lift_ = 0;
  std::vector<std::uint8_t> omega_, omega_or_, status_, p_explored_, kappa_, kappa_def_;
  std::vector<int> p_count_, s_count_;
  std::vector<std::uint8_t> c_, c_prime_, s_explored_, alpha_, alpha_def_, reach_mask_;
  std::priority_queue<EdgeId, std::vector<EdgeId>, std::greater<EdgeId>> frontier_;
  CouplingTranscript tr_;
};

}  // namespace

CouplingTranscript run_monotonicity_coupling(const BaseGraph& box, double q, double p, const CyclePartition& part,
                                             Stream& rng) {
  check_probability(q, "q");
  MonoCoupling run(box, q, p, part, rng);
  return run.run();
}

}  // namespace liftperc
