#include "liftperc/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "liftperc/errors.hpp"
#include "liftperc/parallel.hpp"
#include "liftperc/perco.hpp"
#include "liftperc/rng.hpp"

namespace liftperc {

BoxSetting::BoxSetting(const BaseGraph& g) : box(&g), origin(g.box_center()), boundary(g.box_boundary_mask()) {}

std::vector<std::uint8_t> BoxSetting::lifted_boundary() const {
  std::vector<std::uint8_t> out(2 * boundary.size());
  for (VertexId x = 0; x < out.size(); ++x) out[x] = boundary[project(x)];
  return out;
}

namespace {

void check_budget(std::uint64_t trials) {
  if (trials == 0) throw ConfigError("trial budget must be positive");
}

}  // namespace

ThetaEstimate estimate_theta(const BaseGraph& box, double q, double p, std::uint64_t trials,
                             std::uint64_t seed, unsigned workers) {
  check_budget(trials);
  check_probability(p, "p");
  if (q >= 0) check_probability(q, "q");
  BoxSetting set(box);
  const auto lb = set.lifted_boundary();
  std::vector<std::uint8_t> hit(trials);
  const Stream root = make_stream(seed, "theta");
  parallel_for(trials, workers, [&](std::size_t t) {
    Stream rng = root.split(t);
    if (q < 0) {
      auto om = sample_percolation(box.edge_count(), p, rng);
      hit[t] = reaches(box, om.omega, set.origin, set.boundary);
    } else {
      LiftedGraph lift(box, sample_switch_config(box, q, rng));
      auto om = sample_percolation(lift.edge_count(), p, rng);
      hit[t] = reaches(lift, om.omega, lifted_vertex(set.origin, 0), lb);
    }
  });
  ThetaEstimate est;
  est.p = p;
  est.q = q;
  est.box_side = box.box_side();
  est.trials = trials;
  for (auto h : hit) est.reach_count += h;
  est.theta_hat = double(est.reach_count) / trials;
  est.stderr = binomial_stderr(est.theta_hat, trials);
  est.wilson = wilson_interval(est.reach_count, trials);
  return est;
}

SandwichReport sandwich_check(const BaseGraph& box, double q, double p, std::uint64_t trials,
                              std::uint64_t seed, unsigned workers) {
  check_budget(trials);
  check_probability(p, "p");
  check_probability(q, "q");
  BoxSetting set(box);
  const auto lb = set.lifted_boundary();
  struct Row {
    std::uint8_t lo, mid, hi;
  };
  std::vector<Row> rows(trials);
  const Stream root = make_stream(seed, "sandwich");
  parallel_for(trials, workers, [&](std::size_t t) {
    Stream rng = root.split(t);
    LiftedGraph lift(box, sample_switch_config(box, q, rng));
    auto om = sample_percolation(lift.edge_count(), p, rng);
    auto pair = project_min_max(lift, om.omega);
    rows[t] = {static_cast<std::uint8_t>(reaches(box, pair.omega_min, set.origin, set.boundary)),
               static_cast<std::uint8_t>(reaches(lift, om.omega, lifted_vertex(set.origin, 0), lb)),
               static_cast<std::uint8_t>(reaches(box, pair.omega_max, set.origin, set.boundary))};
  });
  SandwichReport rep;
  rep.trials = trials;
  for (const auto& r : rows) {
    rep.min_reach += r.lo;
    rep.lift_reach += r.mid;
    rep.max_reach += r.hi;
    rep.violations += (r.lo && !r.mid) || (r.mid && !r.hi);
  }
  return rep;
}

std::uint64_t ThresholdBatch::count_reaching(double p) const {
  return static_cast<std::uint64_t>(std::lower_bound(thresholds.begin(), thresholds.end(), p) - thresholds.begin());
}

double ThresholdBatch::reach_fraction(double p) const {
  return thresholds.empty() ? 0.0 : double(count_reaching(p)) / thresholds.size();
}

ThresholdBatch sample_thresholds(const BaseGraph& box, double q, std::uint64_t trials, std::uint64_t seed,
                                 unsigned workers, const std::string& tag) {
  check_budget(trials);
  if (q >= 0) check_probability(q, "q");
  BoxSetting set(box);
  const auto lb = set.lifted_boundary();
  ThresholdBatch batch;
  batch.thresholds.resize(trials);
  const Stream root = make_stream(seed, tag);
  parallel_for(trials, workers, [&](std::size_t t) {
    Stream rng = root.split(t);
    if (q < 0) {
      auto u = sample_uniforms(box.edge_count(), rng);
      batch.thresholds[t] = reach_threshold(box, u, set.origin, set.boundary);
    } else {
      LiftedGraph lift(box, sample_switch_config(box, q, rng));
      auto u = sample_uniforms(lift.edge_count(), rng);
      batch.thresholds[t] = reach_threshold(lift, u, lifted_vertex(set.origin, 0), lb);
    }
  });
  std::sort(batch.thresholds.begin(), batch.thresholds.end());
  return batch;
}

double monotone_threshold(std::vector<double> uniforms,
                          const std::function<bool(const std::vector<std::uint8_t>&)>& event) {
  std::vector<double> sorted = uniforms;
  std::sort(sorted.begin(), sorted.end());
  auto open_upto = [&](double level) {
    std::vector<std::uint8_t> om(uniforms.size());
    for (std::size_t e = 0; e < uniforms.size(); ++e) om[e] = uniforms[e] <= level;
    return om;
  };
  std::vector<std::uint8_t> closed(uniforms.size(), 0);
  if (event(closed)) return -std::numeric_limits<double>::infinity();
  if (sorted.empty() || !event(open_upto(sorted.back()))) return std::numeric_limits<double>::infinity();
  std::size_t lo = 0, hi = sorted.size() - 1;  // event holds at hi
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (event(open_upto(sorted[mid])))
      hi = mid;
    else
      lo = mid + 1;
  }
  return sorted[hi];
}

double bisect_crossing(const ThresholdBatch& batch, double level, int steps, std::vector<BisectionStep>* trace) {
  double lo = 0, hi = 1;
  for (int i = 0; i < steps; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double f = batch.reach_fraction(mid);
    if (trace) trace->push_back({lo, hi, mid, f});
    if (f < level)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

PcEstimate pc_from_batch(const ThresholdBatch& batch, double q, int box_side, int steps) {
  require(!batch.thresholds.empty(), "empty threshold batch");
  PcEstimate est;
  est.q = q;
  est.box_sides = {box_side};
  est.trials = batch.thresholds.size();
  const double sigma = 0.5 / std::sqrt(double(est.trials));
  est.pc_hat = bisect_crossing(batch, 0.5, steps, &est.trace);
  est.ci_low = bisect_crossing(batch, 0.5 - 1.96 * sigma, steps);
  est.ci_high = bisect_crossing(batch, 0.5 + 1.96 * sigma, steps);
  est.stderr = 0.5 * (bisect_crossing(batch, 0.5 + sigma, steps) - bisect_crossing(batch, 0.5 - sigma, steps));
  return est;
}

PcEstimate estimate_pc(const BaseGraph& box, double q, std::uint64_t trials, std::uint64_t seed, unsigned workers) {
  auto batch = sample_thresholds(box, q, trials, seed, workers);
  return pc_from_batch(batch, q, box.box_side());
}

PcEstimate estimate_pc_schedule(int dimension, const std::vector<int>& sides, double q, std::uint64_t trials,
                                std::uint64_t seed, unsigned workers, std::vector<PcEstimate>* per_side) {
  require(!sides.empty(), "box schedule must be non-empty");
  std::vector<int> sorted = sides;
  std::sort(sorted.begin(), sorted.end());
  PcEstimate last;
  for (int side : sorted) {
    auto box = build_box(dimension, side);
    last = estimate_pc(box, q, trials, seed, workers);
    if (per_side) per_side->push_back(last);
  }
  last.box_sides = sorted;
  return last;
}

ContinuityReport continuity_report(const std::vector<PcEstimate>& curve, double constant, double k_stderr) {
  require(curve.size() >= 2, "need at least two curve points");
  std::vector<const PcEstimate*> pts;
  for (const auto& c : curve) pts.push_back(&c);
  std::sort(pts.begin(), pts.end(), [](auto a, auto b) { return a->q < b->q; });
  ContinuityReport rep;
  rep.constant = constant;
  rep.max_margin = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double m = std::abs(pts[i + 1]->pc_hat - pts[i]->pc_hat) - constant * std::sqrt(pts[i + 1]->q - pts[i]->q) -
                     k_stderr * std::hypot(pts[i]->stderr, pts[i + 1]->stderr);
    rep.margins.push_back(m);
    rep.max_margin = std::max(rep.max_margin, m);
  }
  return rep;
}

double monotonicity_z(const PcEstimate& base, const PcEstimate& lift) {
  const double pooled = std::hypot(base.stderr, lift.stderr);
  return pooled > 0 ? (base.pc_hat - lift.pc_hat) / pooled : 0.0;
}

PsiCurve psi_from_sizes(const std::vector<std::uint64_t>& sizes, int n_max) {
  PsiCurve c;
  c.trials = sizes.size();
  c.psi.assign(n_max + 1, 0.0);
  c.stderr.assign(n_max + 1, 0.0);
  std::vector<std::uint64_t> at_least(n_max + 2, 0);
  for (auto s : sizes) ++at_least[std::min<std::uint64_t>(s, n_max)];
  for (int n = n_max - 1; n >= 1; --n) at_least[n] += at_least[n + 1];
  for (int n = 1; n <= n_max; ++n) {
    c.psi[n] = c.trials ? double(at_least[n]) / c.trials : 0.0;
    c.stderr[n] = binomial_stderr(c.psi[n], c.trials);
  }
  return c;
}

PsiCurve tail_psi(const BaseGraph& box, double q, double p, int n_max, std::uint64_t trials, std::uint64_t seed,
                  unsigned workers) {
  check_budget(trials);
  check_probability(p, "p");
  require(n_max >= 1, "n_max must be at least 1");
  const VertexId o = box.box_center();
  std::vector<std::uint64_t> sizes(trials);
  const Stream root = make_stream(seed, "psi");
  parallel_for(trials, workers, [&](std::size_t t) {
    Stream rng = root.split(t);
    if (q < 0) {
      auto om = sample_percolation(box.edge_count(), p, rng);
      sizes[t] = cluster_size(box, om.omega, o, n_max);
    } else {
      LiftedGraph lift(box, sample_switch_config(box, q, rng));
      auto om = sample_percolation(lift.edge_count(), p, rng);
      sizes[t] = cluster_size(lift, om.omega, lifted_vertex(o, 0), n_max);
    }
  });
  return psi_from_sizes(sizes, n_max);
}

PsiCurve quenched_tail(const BaseGraph& box, const SwitchConfig& eta, double p, int n_max, std::uint64_t trials,
                       std::uint64_t seed, unsigned workers) {
  check_budget(trials);
  check_probability(p, "p");
  LiftedGraph lift(box, eta);
  const VertexId o = lifted_vertex(box.box_center(), 0);
  std::vector<std::uint64_t> sizes(trials);
  const Stream root = make_stream(seed, "quenched");
  parallel_for(trials, workers, [&](std::size_t t) {
    Stream rng = root.split(t);
    auto om = sample_percolation(lift.edge_count(), p, rng);
    sizes[t] = cluster_size(lift, om.omega, o, n_max);
  });
  return psi_from_sizes(sizes, n_max);
}

namespace {

struct Line {
  double slope = 0, intercept = 0, r2 = 0;
};

Line weighted_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
    syy += w[i] * (y[i] - my) * (y[i] - my);
  }
  Line l;
  l.slope = sxy / sxx;
  l.intercept = my - l.slope * mx;
  double res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = y[i] - (l.intercept + l.slope * x[i]);
    res += w[i] * d * d;
  }
  l.r2 = syy > 0 ? 1 - res / syy : 1.0;
  return l;
}

}  // namespace

DecayFit fit_decay(const PsiCurve& curve, double max_rel_err, double target_r2) {
  constexpr std::size_t kMinPoints = 5;
  std::vector<double> xs, ys, ws;
  const bool exact = curve.stderr.empty();
  for (std::size_t n = 2; n < curve.psi.size(); ++n) {
    const double psi = curve.psi[n];
    if (!(psi > 0)) break;
    const double se = exact ? 0.0 : curve.stderr[n];
    if (!exact && se / psi > max_rel_err) break;
    xs.push_back(double(n));
    ys.push_back(std::log(psi));
    // var(log psi) ~ (se/psi)^2
    ws.push_back(se > 0 ? (psi * psi) / (se * se) : 1.0);
  }
  DecayFit fit;
  if (xs.size() < kMinPoints) {
    fit.degenerate = true;
    fit.low_confidence = true;
    return fit;
  }
  std::size_t start = 0;
  Line line = weighted_fit(xs, ys, ws);
  while (line.r2 < target_r2 && xs.size() - (start + 1) >= kMinPoints) {
    ++start;
    line = weighted_fit({xs.begin() + start, xs.end()}, {ys.begin() + start, ys.end()},
                        {ws.begin() + start, ws.end()});
  }
  fit.c_hat = -line.slope;
  fit.C_hat = std::exp(line.intercept);
  fit.n_low = static_cast<int>(xs[start]);
  fit.n_high = static_cast<int>(xs.back());
  fit.r_squared = line.r2;
  fit.low_confidence = line.r2 < target_r2 || 2 * (xs.size() - start) < xs.size();
  return fit;
}

}  // namespace liftperc
