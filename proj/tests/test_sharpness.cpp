#include "doctest.h"

#include <cmath>
#include <map>
#include <set>

#include "liftperc/errors.hpp"
#include "liftperc/oracle.hpp"
#include "liftperc/perco.hpp"
#include "liftperc/sharpness.hpp"
#include "liftperc/stats.hpp"

using namespace liftperc;

namespace {

std::vector<std::uint8_t> bernoulli_vector(std::size_t n, double p, Stream& rng) {
  std::vector<std::uint8_t> v(n);
  for (auto& b : v) b = rng.uniform() < p;
  return v;
}

std::pair<VertexId, VertexId> sorted_pair(std::pair<VertexId, VertexId> p) {
  if (p.first > p.second) std::swap(p.first, p.second);
  return p;
}

// Exact law of an encoded configuration produced by the full pipeline,
// summed over every bit sequence.
std::map<std::uint64_t, double> enumerate_coupling_law(const StructureFunctions& given,
                                                       const std::vector<VertexId>& cluster, double p,
                                                       std::uint64_t* leaves, std::uint64_t* violations) {
  std::map<std::uint64_t, double> law;
  EnumeratingBits bits;
  do {
    auto inst = sample_remaining_instance(given, cluster, p, 0.5, bits);
    law[encode_configuration(inst.coupling.full, inst.coupling.omega_star)] += bits.weight();
    ++*leaves;
    *violations += inst.coupling.violations.size();
  } while (bits.next());
  return law;
}

}  // namespace

TEST_CASE("enumerating bits") {
  EnumeratingBits bits;
  double total = 0;
  int leaves = 0;
  std::set<int> seen;
  do {
    int v = 0;
    for (int i = 0; i < 3; ++i) v = 2 * v + bits.bernoulli(0.25);
    // a forced bit in the middle does not branch
    v = 2 * v + bits.bernoulli(1.0);
    seen.insert(v);
    total += bits.weight();
    ++leaves;
  } while (bits.next());
  CHECK(leaves == 8);
  CHECK(seen.size() == 8);
  CHECK(total == 1.0);
}

TEST_CASE("structure functions") {
  auto box = build_box(2, 5);
  Stream root = make_stream(1, "sf");
  for (int i = 0; i < 30; ++i) {
    Stream rng = root.split(i);
    auto sf = build_structure_functions(box, 0.5, rng);
    CHECK_NOTHROW(validate_structure(sf));
    // forgetting labels gives the lift
    auto lift = sf.forget_labels();
    std::multiset<std::pair<VertexId, VertexId>> a, b;
    for (EdgeId e = 0; e < sf.edge_count(); ++e) {
      a.insert(sorted_pair(sf.f(e)));
      b.insert(sorted_pair(lift.endpoints(e)));
    }
    CHECK(a == b);
  }
  StructureFunctions bad = build_structure_functions(box, 0.5, root);
  bad.label.pop_back();
  CHECK_THROWS_AS(validate_structure(bad), InvariantViolation);
}

TEST_CASE("label symmetry") {
  auto box = build_box(2, 3);
  const int runs = 100000;
  std::vector<std::uint64_t> hits(box.edge_count(), 0);
  Stream root = make_stream(2, "sf-sym");
  for (int i = 0; i < runs; ++i) {
    Stream rng = root.split(i);
    auto sf = build_structure_functions(box, 0.3, rng);
    for (EdgeId e = 0; e < box.edge_count(); ++e) {
      const auto [x, y] = sf.f(2 * e);
      hits[e] += x == lifted_vertex(box.edge(e).u, 0) || y == lifted_vertex(box.edge(e).u, 0);
    }
  }
  const double se = std::sqrt(0.25 / runs);
  for (auto h : hits) CHECK(std::abs(h / double(runs) - 0.5) < 3 * se);
}

TEST_CASE("f law on a triangle") {
  auto tri = build_cycle(3);
  // exact: every (eta, label) pattern, keyed by the resulting f
  std::map<std::vector<std::pair<VertexId, VertexId>>, double> exact;
  for (unsigned mask = 0; mask < 64; ++mask) {
    StructureFunctions sf;
    sf.base = &tri;
    std::vector<std::uint8_t> eta(3), lab(3);
    for (int e = 0; e < 3; ++e) {
      eta[e] = mask >> e & 1;
      lab[e] = mask >> (3 + e) & 1;
    }
    sf.eta = SwitchConfig(eta);
    sf.label = lab;
    std::vector<std::pair<VertexId, VertexId>> key;
    for (EdgeId a = 0; a < 6; ++a) key.push_back(sf.f(a));
    exact[key] += 1.0 / 64;
  }
  REQUIRE(exact.size() == 64);
  std::map<std::vector<std::pair<VertexId, VertexId>>, std::uint64_t> counts;
  Stream root = make_stream(3, "sf-tri");
  for (int i = 0; i < 100000; ++i) {
    Stream rng = root.split(i);
    auto sf = build_structure_functions(tri, 0.5, rng);
    std::vector<std::pair<VertexId, VertexId>> key;
    for (EdgeId a = 0; a < 6; ++a) key.push_back(sf.f(a));
    ++counts[key];
  }
  std::vector<std::uint64_t> obs;
  std::vector<double> prob;
  for (const auto& [k, w] : exact) {
    obs.push_back(counts[k]);
    prob.push_back(w);
  }
  CHECK(counts.size() == 64);
  CHECK(chi_square(obs, prob).p_value > 0.01);
}

TEST_CASE("exploration trivial cases") {
  auto box = build_box(2, 4);
  Stream rng = make_stream(4, "expl");
  auto sf = build_structure_functions(box, 0.5, rng);
  const VertexId o = lifted_vertex(box.box_center(), 0);
  const std::size_t ne = sf.edge_count();

  std::vector<std::uint8_t> closed(ne, 0), open(ne, 1);
  auto tc = explore_cluster(sf, closed, o);
  CHECK(tc.steps.size() == ne);
  CHECK(tc.cluster == std::vector<VertexId>{o});
  CHECK(tc.steps[0].x == o);
  CHECK(tc.steps[0].g_x == sf.g(o));
  CHECK(tc.cluster_steps == sf.g(o).size());
  for (std::size_t k = 0; k < tc.cluster_steps; ++k) {
    CHECK(tc.steps[k].x == o);
    CHECK_FALSE(tc.steps[k].f_revealed);
  }
  std::set<EdgeId> seen;
  for (const auto& s : tc.steps) seen.insert(s.e);
  CHECK(seen.size() == ne);

  auto to = explore_cluster(sf, open, o);
  auto comp = cluster_of(sf, std::span<const std::uint8_t>(open), o);
  CHECK(to.cluster == comp.members);
  // every edge of the component has its endpoints revealed during the cluster phase
  std::set<EdgeId> revealed;
  for (std::size_t k = 0; k < to.cluster_steps; ++k)
    if (to.steps[k].f_revealed) revealed.insert(to.steps[k].e);
  for (VertexId x : comp.members)
    for (EdgeId a : sf.g(x)) CHECK(revealed.count(a));
}

TEST_CASE("exploration replay and prefix measurability") {
  auto box = build_box(2, 5);
  Stream root = make_stream(5, "expl-fuzz");
  for (int i = 0; i < 60; ++i) {
    Stream rng = root.split(i);
    const double p = 0.3 + 0.4 * rng.uniform();
    auto sf = build_structure_functions(box, 0.5, rng);
    auto omega = bernoulli_vector(sf.edge_count(), p, rng);
    const VertexId o = lifted_vertex(box.box_center(), rng.uniform() < 0.5);
    auto tr = explore_cluster(sf, omega, o);
    CHECK(tr.cluster == cluster_of(sf, std::span<const std::uint8_t>(omega), o).members);
    CHECK(replay_exploration(tr, sf.vertex_count(), sf.edge_count()) == tr);
    // same input, same trace
    CHECK(explore_cluster(sf, omega, o) == tr);

    for (int trial = 0; trial < 5; ++trial) {
      const std::size_t k = static_cast<std::size_t>(rng.uniform() * tr.steps.size());
      // everything revealed by steps < k
      std::set<EdgeId> omega_seen;
      std::set<VertexId> touched_base;
      for (std::size_t j = 0; j < k; ++j) {
        const auto& s = tr.steps[j];
        omega_seen.insert(s.e);
        touched_base.insert(project(s.x));
        if (s.f_revealed) {
          touched_base.insert(project(s.f_e.first));
          touched_base.insert(project(s.f_e.second));
        }
      }
      auto sf2 = sf;
      auto omega2 = omega;
      for (EdgeId a = 0; a < omega2.size(); ++a)
        if (!omega_seen.count(a)) omega2[a] = rng.uniform() < 0.5;
      std::vector<std::uint8_t> eta2 = sf.eta.bits();
      for (EdgeId e = 0; e < box.edge_count(); ++e) {
        const auto& be = box.edge(e);
        if (touched_base.count(be.u) || touched_base.count(be.v)) continue;
        eta2[e] = rng.uniform() < 0.5;
        sf2.label[e] = rng.uniform() < 0.5;
      }
      sf2.eta = SwitchConfig(eta2);
      auto tr2 = explore_cluster(sf2, omega2, o);
      for (std::size_t j = 0; j < k; ++j) REQUIRE(tr2.steps[j] == tr.steps[j]);
      if (k < tr.steps.size()) CHECK(tr2.steps[k].x == tr.steps[k].x);
    }
  }
  // a doctored trace cannot be replayed
  Stream rng = make_stream(6, "expl-doctored");
  auto sf = build_structure_functions(box, 0.5, rng);
  auto omega = bernoulli_vector(sf.edge_count(), 0.5, rng);
  auto tr = explore_cluster(sf, omega, 0);
  tr.steps.pop_back();
  CHECK_THROWS_AS(replay_exploration(tr, sf.vertex_count(), sf.edge_count()), InvariantViolation);
}

TEST_CASE("ghost field and m_h") {
  Stream rng = make_stream(7, "ghost-test");
  auto gf = sample_ghost(100000, 0.2, rng);
  const double g = 1 - std::exp(-0.2);
  const double frac = std::count(gf.green.begin(), gf.green.end(), 1) / 100000.0;
  CHECK(std::abs(frac - g) < 4 * std::sqrt(g * (1 - g) / 100000));
  CHECK_THROWS_AS(sample_ghost(10, 0.0, rng), ConfigError);

  auto box = build_box(2, 7);
  auto huge = estimate_m_h(box, 0.3, 60.0, 0.5, 2000, 1, 2);
  CHECK(huge.m_hat == 1.0);
  auto p0 = estimate_m_h(box, 0.0, 0.3, 0.5, 50000, 1, 2);
  const double m0 = 1 - std::exp(-0.3);
  CHECK(std::abs(p0.m_hat - m0) < 4 * std::sqrt(m0 * (1 - m0) / 50000));

  auto tri = build_cycle(3);
  const double exact = exact_ghost_probability(tri, 0.5, 0.5, lifted_vertex(0, 0), 0.3);
  auto est = estimate_m_h_at(tri, 0, 0.5, 0.3, 0.5, 100000, 2, 2);
  CHECK(std::abs(est.m_hat - exact) < 3 * est.stderr);
  auto est1 = estimate_m_h_at(tri, 0, 0.5, 0.3, 0.5, 100000, 2, 5);
  CHECK(est1.hits == est.hits);
}

TEST_CASE("decay inequality report") {
  auto box = build_box(2, 11);
  auto zero = verify_exp_inequality(box, 0.0, 0.1, 2000, 1, 2, 10);
  CHECK(zero.rows.size() == 9);
  for (const auto& r : zero.rows) {
    CHECK(r.psi_p == 0);
    CHECK(r.psi_s == 0);
    CHECK(r.margin <= 0);
  }
  CHECK(zero.within(0));

  auto big_h = verify_exp_inequality(box, 0.35, 50.0, 2000, 1, 2, 10);
  CHECK(big_h.clamped);
  CHECK(big_h.s_hat == 0);
  for (const auto& r : big_h.rows) CHECK(r.psi_s == 0);

  auto mid = verify_exp_inequality(box, 0.35, 0.1, 20000, 3, 2, 20);
  CHECK(mid.within(3));
  CHECK(mid.s_hat >= 0);
  CHECK(mid.s_hat <= 0.35);
}

TEST_CASE("remaining graph types") {
  auto box = build_box(2, 5);
  Stream rng = make_stream(8, "rg");
  auto sf = build_structure_functions(box, 0.5, rng);
  const VertexId o = lifted_vertex(box.box_center(), 0);

  auto single = build_remaining_graph(sf, {o});
  CHECK_NOTHROW(validate_remaining(single));
  CHECK(single.count[1] == box.degree(box.box_center()));
  CHECK(single.count[2] == 0);
  for (EdgeId a : sf.g(twin(o))) CHECK(single.type[a] == 1);

  // eta = 0: two disjoint copies; deleting the level-0 copy leaves its twins,
  // all of which are in the shadow
  StructureFunctions flat = sf;
  flat.eta = SwitchConfig::zeros(box.edge_count());
  std::vector<VertexId> level0;
  for (VertexId v = 0; v < box.vertex_count(); ++v) level0.push_back(lifted_vertex(v, 0));
  auto copy = build_remaining_graph(flat, level0);
  CHECK_NOTHROW(validate_remaining(copy));
  CHECK(copy.count[0] == 0);
  CHECK(copy.count[1] == 0);
  CHECK(copy.count[2] == box.edge_count());

  // lifted BFS balls, against a direct reclassification
  for (int r = 0; r <= 3; ++r) {
    auto lift = sf.forget_labels();
    std::vector<int> dist(sf.vertex_count(), -1);
    std::vector<VertexId> q{o};
    dist[o] = 0;
    for (std::size_t i = 0; i < q.size(); ++i)
      lift.for_each_incident(q[i], [&](EdgeId, VertexId y) {
        if (dist[y] < 0) {
          dist[y] = dist[q[i]] + 1;
          q.push_back(y);
        }
      });
    std::vector<VertexId> ball;
    for (VertexId x = 0; x < sf.vertex_count(); ++x)
      if (dist[x] >= 0 && dist[x] <= r) ball.push_back(x);
    auto rg = build_remaining_graph(sf, ball);
    CHECK_NOTHROW(validate_remaining(rg));
    std::set<VertexId> in(ball.begin(), ball.end());
    std::size_t counts[3] = {0, 0, 0};
    for (EdgeId a = 0; a < sf.edge_count(); ++a) {
      const auto [x, y] = sf.f(a);
      if (in.count(x) || in.count(y)) {
        CHECK(rg.type[a] == -1);
        continue;
      }
      const int k = int(in.count(twin(x))) + int(in.count(twin(y)));
      CHECK(rg.type[a] == k);
      ++counts[k];
    }
    for (int k = 0; k < 3; ++k) CHECK(rg.count[k] == counts[k]);
  }

  // not connected
  int far[2] = {0, 0};
  CHECK_THROWS_AS(build_remaining_graph(sf, {o, lifted_vertex(box.vertex_at(far), 0)}), ConfigError);
  CHECK_THROWS_AS(build_remaining_graph(sf, {}), ConfigError);
}

TEST_CASE("coupling law is exact on the 4-cycle") {
  auto cyc = build_cycle(4);
  Stream root = make_stream(9, "law");
  // several conditioning structures and clusters: one vertex, an edge's two
  // ends, and a path through both lifts of a vertex on a switching cycle
  for (int i = 0; i < 6; ++i) {
    Stream rng = root.split(i);
    auto given = build_structure_functions(cyc, 0.5, rng);
    std::vector<std::vector<VertexId>> clusters{{lifted_vertex(0, 0)}};
    const auto [x, y] = given.f(given.g(lifted_vertex(0, 0)).front());
    clusters.push_back({std::min(x, y), std::max(x, y)});
    // switching cycle: the lift is an 8-cycle; take 5 consecutive vertices
    auto sw = given;
    std::vector<std::uint8_t> eta(4, 0);
    eta[i % 4] = 1;
    sw.eta = SwitchConfig(eta);
    {
      auto lift = sw.forget_labels();
      std::vector<VertexId> path{lifted_vertex(0, 0)};
      VertexId prev = kNoVertex;
      while (path.size() < 5) {
        VertexId next = kNoVertex;
        lift.for_each_incident(path.back(), [&](EdgeId, VertexId z) {
          if (z != prev && next == kNoVertex) next = z;
        });
        prev = path.back();
        path.push_back(next);
      }
      std::sort(path.begin(), path.end());
      clusters.push_back(path);
    }
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      const auto& structure = c == 2 ? sw : given;
      for (double p : {0.25, 0.5}) {
        std::uint64_t leaves = 0, violations = 0;
        auto law = enumerate_coupling_law(structure, clusters[c], p, &leaves, &violations);
        INFO("structure " << i << " cluster " << c << " p " << p);
        CHECK(violations == 0);
        CHECK(law.size() == 65536);
        double worst = 0, total = 0;
        for (const auto& [key, w] : law) {
          worst = std::max(worst, std::abs(w - configuration_probability(key, 4, p, 0.5)));
          total += w;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(worst < 1e-15);
      }
    }
  }
}

TEST_CASE("coupling law off q = 1/2 is not claimed") {
  auto cyc = build_cycle(4);
  Stream rng = make_stream(10, "law-q");
  auto given = build_structure_functions(cyc, 0.3, rng);
  StreamBits bits(rng);
  CHECK_THROWS_AS(sample_remaining_instance(given, {0}, 0.5, 0.3, bits), ConfigError);
  auto inst = sample_remaining_instance(given, {0}, 0.5, 0.3, bits, false);
  CHECK(inst.coupling.violations.empty());
}

TEST_CASE("coupling invariants and domination on a box") {
  auto box = build_box(2, 5);
  Stream root = make_stream(11, "dom");
  std::uint64_t runs = 0, checked = 0, heights = 0, e2 = 0;
  for (int i = 0; i < 1500; ++i) {
    Stream rng = root.split(i);
    const double p = 0.2 + 0.5 * rng.uniform();
    auto given = build_structure_functions(box, 0.5, rng);
    auto omega0 = bernoulli_vector(given.edge_count(), p, rng);
    const VertexId o = lifted_vertex(box.box_center(), 0);
    auto cluster = explore_cluster(given, omega0, o).cluster;
    StreamBits bits(rng);
    auto inst = sample_remaining_instance(given, cluster, p, 0.5, bits);
    CHECK_NOTHROW(validate_remaining(inst.graph));
    INFO("run " << i);
    for (const auto& v : inst.coupling.violations) INFO(v);
    REQUIRE(inst.coupling.violations.empty());
    CHECK_NOTHROW(validate_structure(inst.coupling.full));
    auto ghost = sample_ghost(given.vertex_count(), 0.3, rng);
    auto dom = domination_check(inst.graph, inst.omega, inst.coupling, ghost);
    CHECK(dom.inclusion_violations == 0);
    CHECK(dom.green_violations == 0);
    ++runs;
    checked += dom.vertices;
    heights += inst.coupling.height_checks;
    e2 += inst.graph.count[2];
  }
  CHECK(runs == 1500);
  CHECK(heights > 0);
  CHECK(e2 > 0);
  CHECK(checked > 0);
}

TEST_CASE("coupling sampled law on the 4-cycle") {
  auto cyc = build_cycle(4);
  Stream root = make_stream(12, "law-mc");
  auto given = build_structure_functions(cyc, 0.5, root);
  const int runs = 200000;
  std::vector<std::uint64_t> coupled(65536, 0), direct(65536, 0);
  for (int i = 0; i < runs; ++i) {
    Stream rng = root.split(i);
    StreamBits bits(rng);
    auto inst = sample_remaining_instance(given, {lifted_vertex(0, 0)}, 0.5, 0.5, bits);
    ++coupled[encode_configuration(inst.coupling.full, inst.coupling.omega_star)];
    Stream rng2 = root.split(runs + i);
    auto sf = build_structure_functions(cyc, 0.5, rng2);
    ++direct[encode_configuration(sf, bernoulli_vector(8, 0.5, rng2))];
  }
  std::vector<double> prob(65536, 1.0 / 65536);
  CHECK(chi_square(coupled, prob).p_value > 0.01);
  CHECK(chi_square_two_sample(coupled, direct).p_value > 0.01);
}
