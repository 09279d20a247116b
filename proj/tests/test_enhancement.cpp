#include "doctest.h"

#include <cmath>
#include <cstdlib>

#include "liftperc/enhancement.hpp"
#include "liftperc/errors.hpp"
#include "liftperc/perco.hpp"

using namespace liftperc;
using boost::multiprecision::cpp_rational;

namespace {

// Points of Z^2 within L1-distance R of the unit square {0,1}^2.
int square_ball_brute(int R) {
  int count = 0;
  for (int x = -R - 1; x <= R + 2; ++x)
    for (int y = -R - 1; y <= R + 2; ++y) {
      const int dx = std::max({0, -x, x - 1}), dy = std::max({0, -y, y - 1});
      count += dx + dy <= R;
    }
  return count;
}

// Least set containing o, closed under open edges and under annexing S_{r+1}(u)
// for qualifying u. Naive: recompute everything until nothing changes.
std::vector<std::uint8_t> enhanced_fixpoint(const BaseGraph& g, const std::vector<std::uint8_t>& omega,
                                            const std::vector<std::uint8_t>& alpha, VertexId o, int r) {
  const std::size_t n = g.vertex_count();
  std::vector<std::uint8_t> in(n, 0);
  in[o] = 1;
  for (bool changed = true; changed;) {
    changed = false;
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
      const auto& be = g.edge(e);
      if (omega[e] && in[be.u] != in[be.v]) {
        in[be.u] = in[be.v] = 1;
        changed = true;
      }
    }
    for (VertexId u = 0; u < n; ++u) {
      if (!in[u] || !alpha[u]) continue;
      auto d = distances_from(g, u);
      bool ok = true;
      for (VertexId v = 0; v < n; ++v)
        if (d[v] >= 0 && d[v] <= r && !in[v]) ok = false;
      for (EdgeId e = 0; e < g.edge_count(); ++e) {
        const auto& be = g.edge(e);
        if (d[be.u] >= 0 && d[be.u] <= r && d[be.v] >= 0 && d[be.v] <= r && !omega[e]) ok = false;
      }
      if (!ok) continue;
      for (VertexId v = 0; v < n; ++v)
        if (d[v] == r + 1 && !in[v]) {
          in[v] = 1;
          changed = true;
        }
    }
  }
  return in;
}

}  // namespace

TEST_CASE("square ball sizes") {
  CHECK(lattice_square_ball_size(0) == 4);
  CHECK(lattice_square_ball_size(1) == 12);
  for (int R = 0; R <= 6; ++R) CHECK(lattice_square_ball_size(R) == square_ball_brute(R));
}

TEST_CASE("cycle partition examples") {
  auto b8 = build_box(2, 8);
  auto part = build_cycle_partition(b8);
  CHECK(part.cycles.size() == 8);
  // the empty 2x2 corner block at (6, 0) puts (7, 0) at distance 2
  CHECK(part.R == 2);
  CHECK(part.L == 24);
  CHECK(part.D == 8);
  CHECK(part.r == 6);
  std::size_t total = 0;
  for (const auto& c : part.cells) total += c.size();
  CHECK(total == b8.vertex_count());

  auto b2 = build_box(2, 2);
  auto p2 = build_cycle_partition(b2);
  CHECK(p2.cycles.size() == 1);
  CHECK(p2.R == 0);
  CHECK(p2.cells[0].size() == 4);

  auto b4 = build_box(2, 4);
  CHECK(build_cycle_partition(b4).R == 2);

  for (int side : {3, 5, 7, 10, 11, 16}) {
    auto b = build_box(2, side);
    auto p = build_cycle_partition(b);
    CHECK_NOTHROW(validate_partition(b, p));
    int R = 0;
    for (VertexId v = 0; v < b.vertex_count(); ++v) {
      int best = 1 << 20;
      for (const auto& cyc : p.cycles)
        for (VertexId c : cyc) best = std::min(best, distance(b, v, c));
      R = std::max(R, best);
    }
    CHECK(p.R == R);
    CHECK(p.L == square_ball_brute(R));
    // every cycle lies in B_R of each vertex of its cell... at least the
    // cycle of a vertex's cell is within R + 2
    for (VertexId v = 0; v < b.vertex_count(); ++v)
      for (VertexId c : p.cycles[p.cell_of[v]]) CHECK(distance(b, v, c) <= p.R + 2);
  }

  CHECK_THROWS_AS(build_cycle_partition(build_box(2, 1)), ConfigError);
  CHECK_THROWS_AS(build_cycle_partition(build_box(3, 4)), ConfigError);

  auto broken = part;
  std::swap(broken.cells[0].back(), broken.cells[1].back());
  CHECK_THROWS_AS(validate_partition(b8, broken), InvariantViolation);
  broken = part;
  broken.L = 3;
  CHECK_THROWS_AS(validate_partition(b8, broken), InvariantViolation);
}

TEST_CASE("switching cycle probability") {
  CHECK(switching_cycle_probability_exact(3, cpp_rational(1, 3)) == cpp_rational(13, 27));
  for (int N = 3; N <= 8; ++N)
    for (int a = 0; a <= 8; ++a) {
      const cpp_rational q(a, 8);
      // brute force over all 2^N switch patterns
      cpp_rational brute = 0;
      for (unsigned mask = 0; mask < (1u << N); ++mask) {
        if (__builtin_popcount(mask) % 2 == 0) continue;
        cpp_rational w = 1;
        for (int i = 0; i < N; ++i) w *= (mask >> i & 1) ? q : 1 - q;
        brute += w;
      }
      CHECK(switching_cycle_probability_exact(N, q) == brute);
      const double qd = a / 8.0, exact = static_cast<double>(brute);
      CHECK(switching_cycle_probability(N, qd) == doctest::Approx(exact).epsilon(1e-14));
      CHECK(switching_cycle_probability_sum(N, qd) == doctest::Approx(exact).epsilon(1e-14));
    }
  CHECK(switching_cycle_probability(4, 0.5) == 0.5);
  CHECK(switching_cycle_probability(4, 0.0) == 0.0);
}

TEST_CASE("bernoulli splitting") {
  for (double p : {0.3, 0.7})
    for (int n : {2, 4, 8}) {
      auto s = split_bernoulli_check(p, n, 200000, 17, 2);
      CHECK(std::abs(s.z) < 4);
    }
  auto a = split_bernoulli_check(0.3, 4, 50000, 5, 1);
  auto b = split_bernoulli_check(0.3, 4, 50000, 5, 7);
  CHECK(a.ones == b.ones);
  CHECK(split_bernoulli_check(0.0, 3, 1000, 1, 1).ones == 0);
  CHECK(split_bernoulli_check(1.0, 3, 1000, 1, 1).ones == 1000);
}

TEST_CASE("beta field") {
  auto box = build_box(2, 8);
  auto part = build_cycle_partition(box);
  const double q = 0.3;
  const int runs = 20000;
  std::uint64_t ones = 0, cell_open = 0;
  std::vector<std::uint64_t> per_vertex(box.vertex_count(), 0);
  Stream root = make_stream(3, "beta-test");
  double t = 0;
  for (int i = 0; i < runs; ++i) {
    Stream rng = root.split(i);
    auto eta = sample_switch_config(box, q, rng);
    auto f = sample_beta_field(box, part, eta, q, rng);
    t = f.t;
    for (std::size_t c = 0; c < part.cells.size(); ++c) {
      CHECK(f.cell_open[c] == is_switching_cycle(box, eta, part.cycle_edges[c]));
      cell_open += f.cell_open[c];
      if (!f.cell_open[c])
        for (VertexId v : part.cells[c]) REQUIRE(f.beta[v] == 0);
    }
    for (VertexId v = 0; v < box.vertex_count(); ++v) {
      per_vertex[v] += f.beta[v];
      ones += f.beta[v];
    }
  }
  const double c = switching_cycle_probability(4, q);
  CHECK(t == doctest::Approx(1 - std::pow(1 - c, 1.0 / part.L)));
  const double nc = double(runs) * part.cells.size();
  CHECK(std::abs(cell_open / nc - c) < 4 * std::sqrt(c * (1 - c) / nc));
  const double nv = double(runs) * box.vertex_count();
  CHECK(std::abs(ones / nv - t) < 4 * std::sqrt(t * (1 - t) / nv));
  // each single vertex is Bernoulli(t), including the first and last of a cell
  for (VertexId v : {part.cells[0].front(), part.cells[0].back()})
    CHECK(std::abs(per_vertex[v] / double(runs) - t) < 4.5 * std::sqrt(t * (1 - t) / runs));

  // q = 0: no cycle switches, beta vanishes
  Stream rng = make_stream(1, "beta-zero");
  auto f0 = sample_beta_field(box, part, SwitchConfig::zeros(box.edge_count()), 0.0, rng);
  CHECK(f0.c == 0);
  CHECK(std::count(f0.beta.begin(), f0.beta.end(), 1) == 0);
}

TEST_CASE("ball edges") {
  auto box = build_box(2, 7);
  const VertexId o = box.box_center();
  CHECK(ball_edges(box, o, 0).empty());
  CHECK(ball_edges(box, o, 1).size() == 4);
  CHECK(ball_edges(box, o, 2).size() == 16);
  auto geo = make_enhanced_geometry(box, 2);
  CHECK(geo.ball_edges[o] == ball_edges(box, o, 2));
  CHECK(geo.next_sphere[o] == sphere(box, o, 3));
  CHECK(geo.ball[o] == ball(box, o, 2).members);
}

TEST_CASE("enhanced cluster crafted fixture") {
  auto box = build_box(2, 7);
  const VertexId o = box.box_center();
  auto geo = make_enhanced_geometry(box, 1);
  std::vector<std::uint8_t> omega(box.edge_count(), 0), alpha(box.vertex_count(), 0);
  for (EdgeId e : ball_edges(box, o, 1)) omega[e] = 1;
  auto count = [](const std::vector<std::uint8_t>& m) { return std::count(m.begin(), m.end(), 1); };
  CHECK(count(enhanced_cluster(box, geo, omega, alpha, o)) == 5);
  alpha[o] = 1;
  auto c = enhanced_cluster(box, geo, omega, alpha, o);
  CHECK(count(c) == 13);
  CHECK(c == enhanced_cluster_alternating(box, omega, alpha, o, 1));
  for (VertexId v : sphere(box, o, 2)) CHECK(c[v]);
  // one closed spoke kills the annexation
  omega[ball_edges(box, o, 1)[0]] = 0;
  CHECK(count(enhanced_cluster(box, geo, omega, alpha, o)) == 4);
  // chained annexation: a second qualifying vertex on S_2 reaches S_3 of its own
  omega[ball_edges(box, o, 1)[0]] = 1;
  int xy[2] = {5, 3};
  const VertexId w = box.vertex_at(xy);
  CHECK(distance(box, o, w) == 2);
  for (EdgeId e : ball_edges(box, w, 1)) omega[e] = 1;
  alpha[w] = 1;
  auto chained = enhanced_cluster(box, geo, omega, alpha, o);
  CHECK(chained == enhanced_fixpoint(box, omega, alpha, o, 1));
  CHECK(chained == enhanced_cluster_alternating(box, omega, alpha, o, 1));
  CHECK(count(chained) > count(c));
}

TEST_CASE("enhanced cluster matches brute-force fixpoint") {
  Stream root = make_stream(11, "enh-random");
  for (int r : {0, 1, 2}) {
    for (int side : {5, 7}) {
      auto box = build_box(2, side);
      auto geo = make_enhanced_geometry(box, r);
      const auto bnd = box.box_boundary_mask();
      for (int i = 0; i < 150; ++i) {
        Stream rng = root.split(1000 * r + 100 * side + i);
        const double p = 0.3 + 0.4 * rng.uniform(), s = rng.uniform();
        auto omega = sample_percolation(box.edge_count(), p, rng).omega;
        std::vector<std::uint8_t> alpha(box.vertex_count());
        for (auto& a : alpha) a = rng.uniform() < s;
        const VertexId o = static_cast<VertexId>(rng.uniform() * box.vertex_count());
        auto brute = enhanced_fixpoint(box, omega, alpha, o, r);
        REQUIRE(enhanced_cluster(box, geo, omega, alpha, o) == brute);
        REQUIRE(enhanced_cluster_alternating(box, omega, alpha, o, r) == brute);
        bool hit = false;
        for (VertexId v = 0; v < box.vertex_count(); ++v) hit = hit || (brute[v] && bnd[v]);
        REQUIRE(enhanced_reaches(box, geo, omega, alpha, o, bnd) == hit);
        // alpha = 0 reduces to the plain cluster
        std::vector<std::uint8_t> none(box.vertex_count(), 0);
        auto plain = enhanced_cluster(box, geo, omega, none, o);
        auto cl = cluster_of(box, omega, o);
        REQUIRE(static_cast<std::size_t>(std::count(plain.begin(), plain.end(), 1)) == cl.size);
      }
    }
  }
}

TEST_CASE("enhanced thresholds are monotone in s") {
  auto box = build_box(2, 15);
  auto t0 = enhanced_thresholds(box, 1, 0.0, 300, 9, 1);
  auto t5 = enhanced_thresholds(box, 1, 0.5, 300, 9, 3);
  auto t9 = enhanced_thresholds(box, 1, 0.9, 300, 9, 2);
  for (std::size_t i = 0; i < t0.size(); ++i) {
    CHECK(t5[i] <= t0[i]);
    CHECK(t9[i] <= t5[i]);
  }
  auto e0 = estimate_enhanced_pc(box, 1, 0.0, 300, 9, 1);
  auto e9 = estimate_enhanced_pc(box, 1, 0.9, 300, 9, 1);
  CHECK(e9.pc_hat <= e0.pc_hat);
  CHECK(e0.ci_low <= e0.pc_hat);
  CHECK(e0.pc_hat <= e0.ci_high);
}

TEST_CASE("monotonicity coupling audit") {
  auto box = build_box(2, 10);
  auto part = build_cycle_partition(box);
  Stream root = make_stream(21, "mono-test");
  int reaches = 0;
  for (int i = 0; i < 60; ++i) {
    Stream rng = root.split(i);
    const double q = i % 3 == 0 ? 0.5 : 0.2 + 0.6 * rng.uniform();
    const double p = 0.3 + 0.5 * rng.uniform();
    auto tr = run_monotonicity_coupling(box, q, p, part, rng);
    INFO("run " << i);
    for (const auto& v : tr.violations) INFO(v);
    REQUIRE(tr.violations.empty());
    REQUIRE(tr.enhanced_matches);
    CHECK((!tr.lift_reaches || tr.base_reaches));
    CHECK(tr.M > 1);
    CHECK(tr.p_hat == doctest::Approx(1 - std::pow(1 - p, 1.0 / tr.M)));
    CHECK(tr.s_fill > 0);
    CHECK(tr.s_fill <= tr.t);
    reaches += tr.lift_reaches;
  }
  CHECK(reaches > 0);

  // same stream, same transcript
  Stream a = make_stream(4, "again"), b = make_stream(4, "again");
  auto ta = run_monotonicity_coupling(box, 0.5, 0.5, part, a);
  auto tb = run_monotonicity_coupling(box, 0.5, 0.5, part, b);
  CHECK(ta.c_final == tb.c_final);
  CHECK(ta.kappa == tb.kappa);
  CHECK(ta.actions == tb.actions);
}

TEST_CASE("monotonicity coupling with forced enhancement") {
  // at p = 1 every copy is open and alpha_u = beta_u, so the annexing
  // branch is exercised; for p < 1 the success probability is astronomically small
  auto box = build_box(2, 6);
  auto part = build_cycle_partition(box);
  Stream root = make_stream(8, "mono-dense");
  std::uint64_t trials = 0, successes = 0;
  double expected = 0;
  for (int i = 0; i < 200; ++i) {
    Stream rng = root.split(i);
    auto tr = run_monotonicity_coupling(box, 0.5, 1.0, part, rng);
    REQUIRE(tr.violations.empty());
    REQUIRE(tr.enhanced_matches);
    trials += tr.alpha_trials;
    successes += tr.alpha_successes;
    expected += tr.alpha_expected;
  }
  MESSAGE("alpha trials " << trials << " successes " << successes << " expected " << expected);
  CHECK(successes > 0);
  CHECK(std::abs(successes - expected) < 4 * std::sqrt(expected) + 1);
}
