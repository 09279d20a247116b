#include "liftperc/holder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "liftperc/errors.hpp"
#include "liftperc/parallel.hpp"
#include "liftperc/perco.hpp"

namespace liftperc {

void HolderParams::validate() const {
  if (!(r > 0 && r < 1)) throw ConfigError("r must lie in (0,1)");
  if (!(q >= 0 && q <= 1 - r)) throw ConfigError("q must lie in [0, 1-r]");
  if (!(a >= q && a <= q + r)) throw ConfigError("a must lie in [q, q+r]");
}

double HolderParams::A() const {
  const double s = std::sqrt(r);
  return 2 * s / (1 + s);  // = 2 sqrt(r)(1 - sqrt(r))/(1 - r)
}

double HolderParams::p_plus() const { return 1 - std::sqrt(r); }
double HolderParams::q_hat() const { return q / (1 - r); }

void apply_holder_rules(const HolderParams& params, HolderEdge& e) {
  const double u = e.eta_uniform;
  const bool inside = u > params.q && u <= params.q + params.r;
  if (inside) {
    e.omega_plus = e.omega_minus = 0;
  } else if (e.y) {
    e.omega_plus = e.x > 0;
    e.omega_minus = e.x < 0;
  } else {
    e.omega_plus = e.omega_minus = 1;
  }
  if (u <= params.q)
    e.eta_hat = 1;
  else if (u > params.q + params.r)
    e.eta_hat = 0;
  else
    e.eta_hat = e.z;
  e.eta_bar = u <= params.a;
}

HolderEdge sample_holder_edge(const HolderParams& params, Stream& rng) {
  HolderEdge e{};
  e.eta_uniform = rng.uniform();
  e.x = rng.uniform() < 0.5 ? -1 : 1;
  e.y = rng.uniform() < params.A();
  e.z = rng.uniform() < params.q_hat();
  apply_holder_rules(params, e);
  return e;
}

HolderSample sample_holder(const HolderParams& params, const BaseGraph& g, Stream& rng) {
  params.validate();
  HolderSample s;
  s.edges.reserve(g.edge_count());
  for (EdgeId e = 0; e < g.edge_count(); ++e) s.edges.push_back(sample_holder_edge(params, rng));
  return s;
}

bool verify_coupling_property(const HolderSample& sample) {
  return std::all_of(sample.edges.begin(), sample.edges.end(), [](const HolderEdge& e) {
    return !(e.omega_plus || e.omega_minus) || e.eta_hat == e.eta_bar;
  });
}

HolderAudit holder_edge_audit(const HolderParams& params, std::uint64_t samples, std::uint64_t seed,
                              unsigned workers) {
  params.validate();
  constexpr std::uint64_t kChunk = 1 << 14;
  const std::uint64_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<HolderAudit> parts(chunks);
  const Stream root = make_stream(seed, "holder-edge");
  parallel_for(chunks, workers, [&](std::size_t c) {
    Stream rng = root.split(c);
    auto& part = parts[c];
    const std::uint64_t n = std::min(kChunk, samples - c * kChunk);
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto e = sample_holder_edge(params, rng);
      ++part.counts[e.omega_plus][e.omega_minus][e.eta_hat][e.eta_bar];
      if ((e.omega_plus || e.omega_minus) && e.eta_hat != e.eta_bar) ++part.violations;
      ++part.samples;
    }
  });
  HolderAudit total;
  for (const auto& part : parts) {
    total.samples += part.samples;
    total.violations += part.violations;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c)
          for (int d = 0; d < 2; ++d) total.counts[a][b][c][d] += part.counts[a][b][c][d];
  }
  return total;
}

DominationReport downward_domination_check(const BaseGraph& box, double p, const HolderParams& params,
                                           std::uint64_t trials, std::uint64_t seed, unsigned workers) {
  check_probability(p, "p");
  params.validate();
  const auto base_boundary = box.box_boundary_mask();
  std::vector<std::uint8_t> boundary(2 * box.vertex_count());
  for (VertexId x = 0; x < boundary.size(); ++x) boundary[x] = base_boundary[project(x)];
  const VertexId origin = lifted_vertex(box.box_center(), 0);
  const std::size_t m = box.edge_count();

  struct Outcome {
    std::uint8_t hat, bar, subset_bad;
  };
  std::vector<Outcome> out(trials);
  const Stream root = make_stream(seed, "holder-domination");
  parallel_for(trials, workers, [&](std::size_t t) {
    Stream rng = root.split(t);
    const auto sample = sample_holder(params, box, rng);
    std::vector<std::uint8_t> hat_bits(m), bar_bits(m);
    for (EdgeId e = 0; e < m; ++e) {
      hat_bits[e] = sample.edges[e].eta_hat;
      bar_bits[e] = sample.edges[e].eta_bar;
    }
    LiftedGraph hat(box, SwitchConfig(std::move(hat_bits)));
    LiftedGraph bar(box, SwitchConfig(std::move(bar_bits)));
    std::vector<std::uint8_t> om_hat(2 * m), om_bar(2 * m);
    std::uint8_t subset_bad = 0;
    for (EdgeId e = 0; e < m; ++e) {
      for (unsigned l = 0; l < 2; ++l) {
        const EdgeId le = lifted_edge(e, l);
        const bool thin = rng.uniform() < p;
        const bool w = l == 0 ? sample.edges[e].omega_plus : sample.edges[e].omega_minus;
        om_bar[le] = thin;
        om_hat[le] = w && thin;
        if (om_hat[le] && (!om_bar[le] || hat.endpoints(le) != bar.endpoints(le))) subset_bad = 1;
      }
    }
    out[t] = {static_cast<std::uint8_t>(reaches(hat, om_hat, origin, boundary)),
              static_cast<std::uint8_t>(reaches(bar, om_bar, origin, boundary)), subset_bad};
  });
  DominationReport rep;
  rep.trials = trials;
  for (const auto& o : out) {
    rep.hat_reach += o.hat;
    rep.bar_reach += o.bar;
    rep.violations += o.hat && !o.bar;
    rep.subset_violations += o.subset_bad;
  }
  return rep;
}

double holder_constant(double alpha, double beta) {
  if (!(alpha > 0 && alpha <= beta && beta < 1)) throw ConfigError("need 0 < alpha <= beta < 1");
  return std::max(1 / std::sqrt(alpha), 1 / std::sqrt(1 - beta));
}

HolderBoundReport holder_bound_check(std::vector<CurvePoint> curve, double constant, double k_stderr) {
  require(curve.size() >= 2, "need at least two curve points");
  std::sort(curve.begin(), curve.end(), [](const auto& a, const auto& b) { return a.q < b.q; });
  HolderBoundReport rep;
  rep.constant = constant;
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const auto& a = curve[i];
    const auto& b = curve[i + 1];
    const double pooled = std::hypot(a.stderr, b.stderr);
    const double margin = std::abs(b.pc_hat - a.pc_hat) - constant * std::sqrt(b.q - a.q) - k_stderr * pooled;
    rep.margins.push_back(margin);
    if (margin > rep.max_violation) {
      rep.max_violation = margin;
      rep.worst_pair = i;
    }
  }
  return rep;
}

}  // namespace liftperc
