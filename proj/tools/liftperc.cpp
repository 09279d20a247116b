// liftperc: batch runner for the lifted-percolation experiments.
//
// Every command writes its CSV/JSON outputs and a manifest.json into --out.
// Exit codes: 0 ok, 2 config error, 3 invariant violation, 4 size guard.

#include <CLI11.hpp>

#include <cmath>
#include <deque>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "cli_support.hpp"
#include "liftperc/enhancement.hpp"
#include "liftperc/errors.hpp"
#include "liftperc/estimators.hpp"
#include "liftperc/holder.hpp"
#include "liftperc/oracle.hpp"
#include "liftperc/parallel.hpp"
#include "liftperc/perco.hpp"
#include "liftperc/sharpness.hpp"
#include "liftperc/stats.hpp"

namespace fs = std::filesystem;
using namespace liftperc;
using namespace liftperc::cli;

namespace {

struct Options {
  std::string graph;
  std::string q, p, h, s, r, a;
  std::string sides;
  std::string alpha, beta;
  std::uint64_t trials = 0, samples = 0, runs = 0, draws = 0;
  int n_max = 30;
  int radius = 1;
  int origin_level = 0;
  double k = 2;
  bool base = false, sandwich = false;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string out = ".";
};

// What a command run produced; the manifest lists the files.
struct Run {
  const Options& o;
  fs::path dir;
  std::vector<std::string> files;
  // set when the run completed but found invariant violations; reported
  // with exit code 3 after all files are written
  std::string violation;

  fs::path file(const std::string& name) {
    files.push_back(name);
    return dir / name;
  }
};

using Handler = std::function<void(Run&)>;

std::string rational_text(const Rational& x) {
  std::ostringstream s;
  s << numerator(x) << "/" << denominator(x);
  return s.str();
}

ordered_json oracle_record(const std::string& graph, const std::string& q, const std::string& p,
                           const std::string& quantity, const Rational& value) {
  ordered_json r;
  r["graph"] = graph;
  r["q"] = q;
  r["p"] = p;
  r["quantity"] = quantity;
  r["value_num"] = numerator(value).str();
  r["value_den"] = denominator(value).str();
  return r;
}

double single(const std::string& text, const char* name) {
  auto v = parse_grid(text, name);
  if (v.size() != 1) throw ConfigError(std::string("--") + name + " takes a single value");
  return v[0];
}

std::vector<double> probabilities(const std::string& text, const char* name) {
  auto v = parse_grid(text, name);
  for (double x : v) check_probability(x, name);
  return v;
}

BaseGraph box_graph(const Options& o) {
  auto g = graph_from_descriptor(o.graph);
  (void)g.box_side();  // throws ConfigError for non-box graphs
  return g;
}

// ---- commands ---------------------------------------------------------------

void cmd_oracle_disconnect(Run& run) {
  auto g = graph_from_descriptor(run.o.graph);
  const Rational value = exact_disconnection_probability(g);
  const long expo = static_cast<long>(g.vertex_count()) - static_cast<long>(g.edge_count()) - 1;
  Rational formula = 1;
  for (long i = 0; i < std::labs(expo); ++i) formula *= 2;
  if (expo < 0) formula = 1 / formula;
  std::cout << rational_text(value) << "\n";
  ordered_json j;
  j["records"] = ordered_json::array({oracle_record(run.o.graph, "1/2", "", "disconnection", value)});
  j["formula"] = "2^(|V|-|E|-1)";
  j["formula_value"] = rational_text(formula);
  j["matches_formula"] = value == formula;
  write_json(run.file("oracle_disconnect.json"), j);
  if (value != formula) run.violation = "disconnection probability differs from 2^(|V|-|E|-1)";
}

void cmd_oracle_joint(Run& run) {
  const auto& o = run.o;
  auto g = graph_from_descriptor(o.graph);
  const Rational q = parse_rational(o.q, "q"), p = parse_rational(o.p, "p");
  if (q < 0 || q > 1 || p < 0 || p > 1) throw ConfigError("q and p must lie in [0,1]");
  const std::string qs = rational_text(q), ps = rational_text(p);
  const VertexId origin = lifted_vertex(0, o.origin_level);
  ordered_json records = ordered_json::array();
  auto law = exact_cluster_size_law(g, q, p, origin);
  Rational tail = 1;
  for (std::size_t n = 1; n < law.size(); ++n) {
    records.push_back(oracle_record(o.graph, qs, ps, "psi_" + std::to_string(n), tail));
    tail -= law[n];
  }
  for (VertexId v = 0; v < g.vertex_count(); ++v)
    for (unsigned l = 0; l < 2; ++l) {
      const auto value = exact_two_point(g, q, p, 0, o.origin_level, v, l);
      records.push_back(oracle_record(o.graph, qs, ps,
                                      "two_point(0_" + std::to_string(o.origin_level) + "," + std::to_string(v) +
                                          "_" + std::to_string(l) + ")",
                                      value));
    }
  ordered_json j;
  j["records"] = records;
  write_json(run.file("oracle_joint.json"), j);
}

void cmd_lift_sample(Run& run) {
  const auto& o = run.o;
  auto g = graph_from_descriptor(o.graph);
  const double q = single(o.q, "q");
  check_probability(q, "q");
  require(o.samples > 0, "--samples must be positive");
  struct Row {
    std::size_t switching = 0, components = 0;
    std::string hex;
  };
  std::vector<Row> rows(o.samples);
  const Stream root = make_stream(o.seed, "lift-sample");
  parallel_for(o.samples, o.workers, [&](std::size_t i) {
    Stream rng = root.split(i);
    auto eta = sample_switch_config(g, q, rng);
    LiftedGraph lift(g, eta);
    std::vector<std::uint8_t> open(lift.edge_count(), 1);
    auto label = clusters(lift, std::span<const std::uint8_t>(open));
    std::size_t comps = 0;
    for (VertexId x = 0; x < label.size(); ++x) comps += label[x] == x;
    rows[i] = {eta.switching_count(), comps, eta.to_hex()};
  });
  CsvWriter csv(run.file("lift_samples.csv"), {"sample", "switching_edges", "lift_components", "eta_hex"});
  for (std::size_t i = 0; i < rows.size(); ++i)
    csv.cell(std::uint64_t(i)).cell(std::uint64_t(rows[i].switching)).cell(std::uint64_t(rows[i].components))
        .cell(rows[i].hex)
        .end_row();
}

void cmd_theta(Run& run) {
  const auto& o = run.o;
  auto box = box_graph(o);
  std::vector<double> qs = probabilities(o.q.empty() && o.base ? "0.5" : o.q, "q");
  if (o.base) qs.insert(qs.begin(), -1.0);
  if (o.q.empty() && o.base) qs.resize(1);
  const auto ps = probabilities(o.p, "p");
  require(o.trials > 0, "--trials must be positive");
  CsvWriter csv(run.file("theta.csv"),
                {"q", "p", "trials", "reach", "theta_hat", "stderr", "wilson_low", "wilson_high"});
  for (double q : qs)
    for (double p : ps) {
      auto t = estimate_theta(box, q, p, o.trials, point_seed(o.seed, "theta", {q}), o.workers);
      csv.cell(q < 0 ? std::string("base") : num(q)).cell(p).cell(t.trials).cell(t.reach_count).cell(t.theta_hat)
          .cell(t.stderr).cell(t.wilson.low).cell(t.wilson.high)
          .end_row();
    }
  if (!o.sandwich) return;
  CsvWriter sw(run.file("sandwich.csv"),
               {"q", "p", "trials", "min_reach", "lift_reach", "max_reach", "violations"});
  std::uint64_t total = 0;
  for (double q : qs) {
    if (q < 0) continue;
    for (double p : ps) {
      auto s = sandwich_check(box, q, p, o.trials, point_seed(o.seed, "sandwich", {q, p}), o.workers);
      sw.cell(q).cell(p).cell(s.trials).cell(s.min_reach).cell(s.lift_reach).cell(s.max_reach).cell(s.violations)
          .end_row();
      total += s.violations;
    }
  }
  if (total) run.violation = std::to_string(total) + " sandwich violations";
}

std::vector<int> schedule(const Options& o, const BaseGraph& box) {
  if (o.sides.empty()) return {box.box_side()};
  auto sides = parse_int_list(o.sides, "sides");
  for (int s : sides) require(s >= 3, "box sides must be >= 3");
  return sides;
}

void write_pc_curve(Run& run, const std::vector<std::vector<PcEstimate>>& per_q) {
  CsvWriter csv(run.file("pc_curve.csv"), {"q", "box_side", "trials", "pc_hat", "ci_low", "ci_high", "stderr"});
  CsvWriter trace(run.file("pc_bisection.csv"), {"q", "box_side", "step", "low", "high", "mid", "reach_fraction"});
  for (const auto& sides : per_q)
    for (const auto& e : sides) {
      const std::string q = e.q < 0 ? "base" : num(e.q);
      const int side = e.box_sides.empty() ? 0 : e.box_sides.back();
      csv.cell(q).cell(side).cell(e.trials).cell(e.pc_hat).cell(e.ci_low).cell(e.ci_high).cell(e.stderr).end_row();
      for (std::size_t i = 0; i < e.trace.size(); ++i)
        trace.cell(q).cell(side).cell(std::uint64_t(i)).cell(e.trace[i].low).cell(e.trace[i].high)
            .cell(e.trace[i].mid).cell(e.trace[i].reach_fraction)
            .end_row();
    }
}

// One estimate per (q, side); the last entry of each row is the largest box.
std::vector<std::vector<PcEstimate>> pc_grid(const Options& o, const BaseGraph& box, const std::vector<double>& qs,
                                             const char* tag) {
  std::vector<std::vector<PcEstimate>> out;
  auto sides = schedule(o, box);
  std::sort(sides.begin(), sides.end());
  for (double q : qs) {
    std::vector<PcEstimate> row;
    for (int side : sides) {
      auto b = build_box(box.box_dimension(), side);
      auto batch = sample_thresholds(b, q, o.trials, point_seed(o.seed, tag, {q, double(side)}), o.workers);
      auto e = pc_from_batch(batch, q, side);
      e.box_sides = {side};
      row.push_back(std::move(e));
    }
    out.push_back(std::move(row));
  }
  return out;
}

void cmd_pc_curve(Run& run) {
  const auto& o = run.o;
  auto box = box_graph(o);
  require(o.trials > 0, "--trials must be positive");
  auto qs = probabilities(o.q, "q");
  if (o.base) qs.insert(qs.begin(), -1.0);
  write_pc_curve(run, pc_grid(o, box, qs, "pc-curve"));
}

void cmd_pc_mono(Run& run) {
  const auto& o = run.o;
  auto box = box_graph(o);
  require(o.trials > 0, "--trials must be positive");
  auto qs = probabilities(o.q, "q");
  qs.insert(qs.begin(), -1.0);
  auto grid = pc_grid(o, box, qs, "pc-mono");
  write_pc_curve(run, grid);
  const PcEstimate& base = grid.front().back();
  CsvWriter csv(run.file("pc_mono.csv"), {"q", "pc_base", "pc_lift", "difference", "pooled_stderr", "z"});
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const PcEstimate& lift = grid[i].back();
    csv.cell(lift.q).cell(base.pc_hat).cell(lift.pc_hat).cell(base.pc_hat - lift.pc_hat)
        .cell(std::hypot(base.stderr, lift.stderr)).cell(monotonicity_z(base, lift))
        .end_row();
  }
}

HolderParams holder_params(const Options& o) {
  HolderParams hp{single(o.q, "q"), single(o.r, "r"), 0};
  hp.a = o.a.empty() ? hp.q : single(o.a, "a");
  hp.validate();
  return hp;
}

void cmd_holder_verify(Run& run) {
  const auto& o = run.o;
  const HolderParams hp = holder_params(o);
  require(o.samples > 0, "--samples must be positive");
  const auto exact = exact_holder_joint(hp.q, hp.r, hp.a);
  const auto audit = holder_edge_audit(hp, o.samples, o.seed, o.workers);

  ordered_json j;
  j["parameters"] = {{"q", hp.q}, {"r", hp.r}, {"a", hp.a}, {"A", hp.A()}, {"p_plus", hp.p_plus()},
                     {"q_hat", hp.q_hat()}, {"samples", o.samples}, {"seed", o.seed}};
  ordered_json table = ordered_json::array();
  std::vector<std::uint64_t> observed;
  std::vector<double> expected;
  for (int wp = 0; wp < 2; ++wp)
    for (int wm = 0; wm < 2; ++wm)
      for (int hat = 0; hat < 2; ++hat)
        for (int bar = 0; bar < 2; ++bar) {
          const double pr = static_cast<double>(exact.prob[wp][wm][hat][bar]);
          const auto c = audit.counts[wp][wm][hat][bar];
          table.push_back({{"omega_plus", wp}, {"omega_minus", wm}, {"eta_hat", hat}, {"eta_bar", bar},
                           {"exact", pr}, {"count", c}});
          observed.push_back(c);
          expected.push_back(pr);
        }
  j["joint_table"] = table;

  auto marginal = [&](const char* name, int wp, int wm, int hat, int bar) {
    const double e = static_cast<double>(exact.marginal(wp, wm, hat, bar));
    std::uint64_t c = 0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int x = 0; x < 2; ++x)
          for (int y = 0; y < 2; ++y)
            if ((wp < 0 || a == wp) && (wm < 0 || b == wm) && (hat < 0 || x == hat) && (bar < 0 || y == bar))
              c += audit.counts[a][b][x][y];
    const double est = double(c) / double(audit.samples);
    const double se = binomial_stderr(e, audit.samples);
    return ordered_json{{"event", name}, {"exact", e}, {"estimate", est}, {"stderr", se},
                        {"z", se > 0 ? (est - e) / se : 0.0}};
  };
  j["marginals"] = ordered_json::array({
      marginal("omega_plus=1", 1, -1, -1, -1),
      marginal("omega_minus=1", -1, 1, -1, -1),
      marginal("omega_plus=omega_minus=1", 1, 1, -1, -1),
      marginal("eta_hat=1,omega_plus=omega_minus=1", 1, 1, 1, -1),
      marginal("eta_hat=1", -1, -1, 1, -1),
      marginal("eta_bar=1", -1, -1, -1, 1),
  });
  const auto chi = chi_square(observed, expected);
  j["chi_square"] = {{"statistic", chi.statistic}, {"dof", chi.dof}, {"p_value", chi.p_value}};
  j["coupling_violations"] = audit.violations;

  std::uint64_t violations = audit.violations;
  if (!o.graph.empty()) {
    auto box = box_graph(o);
    const double p = single(o.p, "p");
    check_probability(p, "p");
    require(o.trials > 0, "--trials must be positive");
    auto dom = downward_domination_check(box, p, hp, o.trials, o.seed, o.workers);
    j["domination"] = {{"graph", o.graph}, {"p", p}, {"trials", dom.trials}, {"hat_reach", dom.hat_reach},
                       {"bar_reach", dom.bar_reach}, {"violations", dom.violations},
                       {"subset_violations", dom.subset_violations}};
    violations += dom.violations + dom.subset_violations;
  }
  write_json(run.file("holder_verify.json"), j);
  if (violations) run.violation = std::to_string(violations) + " holder coupling violations";
}

void cmd_holder_curve_check(Run& run) {
  const auto& o = run.o;
  auto box = box_graph(o);
  require(o.trials > 0, "--trials must be positive");
  auto qs = probabilities(o.q, "q");
  require(qs.size() >= 2, "--q needs at least two grid points");
  const double alpha = o.alpha.empty() ? *std::min_element(qs.begin(), qs.end()) : single(o.alpha, "alpha");
  const double beta = o.beta.empty() ? *std::max_element(qs.begin(), qs.end()) : single(o.beta, "beta");
  const double constant = holder_constant(alpha, beta);
  auto grid = pc_grid(o, box, qs, "pc-curve");
  write_pc_curve(run, grid);
  std::vector<CurvePoint> curve;
  for (const auto& row : grid) curve.push_back({row.back().q, row.back().pc_hat, row.back().stderr});
  auto rep = holder_bound_check(curve, constant, o.k);
  std::sort(curve.begin(), curve.end(), [](auto& x, auto& y) { return x.q < y.q; });
  CsvWriter csv(run.file("holder_check.csv"), {"q_low", "q_high", "abs_dpc", "bound", "pooled_stderr", "margin"});
  for (std::size_t i = 0; i + 1 < curve.size(); ++i)
    csv.cell(curve[i].q).cell(curve[i + 1].q).cell(std::abs(curve[i + 1].pc_hat - curve[i].pc_hat))
        .cell(constant * std::sqrt(curve[i + 1].q - curve[i].q)).cell(std::hypot(curve[i].stderr, curve[i + 1].stderr))
        .cell(rep.margins[i])
        .end_row();
  std::size_t violations = 0;
  for (double m : rep.margins) violations += m > 0;
  write_json(run.file("holder_check.json"),
             {{"alpha", alpha}, {"beta", beta}, {"constant", constant}, {"k_stderr", o.k},
              {"max_margin", rep.max_violation}, {"violations", violations}});
}

void cmd_enhance_pc(Run& run) {
  const auto& o = run.o;
  auto box = box_graph(o);
  require(o.trials > 0, "--trials must be positive");
  require(o.radius >= 0, "--radius must be >= 0");
  const auto ss = probabilities(o.s, "s");
  CsvWriter csv(run.file("enhance_pc.csv"), {"s", "r", "trials", "pc_hat", "ci_low", "ci_high", "stderr"});
  // one seed for every s: alpha_u = [v_u < s] on shared uniforms
  for (double s : ss) {
    auto e = estimate_enhanced_pc(box, o.radius, s, o.trials, o.seed, o.workers);
    csv.cell(s).cell(e.r).cell(e.trials).cell(e.pc_hat).cell(e.ci_low).cell(e.ci_high).cell(e.stderr).end_row();
  }
}

void cmd_mono_coupling_audit(Run& run) {
  const auto& o = run.o;
  auto box = box_graph(o);
  const double p = single(o.p, "p"), q = single(o.q, "q");
  check_probability(p, "p");
  check_probability(q, "q");
  require(o.runs > 0, "--runs must be positive");
  auto part = build_cycle_partition(box);
  validate_partition(box, part);
  std::vector<CouplingTranscript> ts(o.runs);
  const Stream root = make_stream(o.seed, "mono-coupling-audit");
  parallel_for(o.runs, o.workers, [&](std::size_t i) {
    Stream rng = root.split(i);
    auto t = run_monotonicity_coupling(box, q, p, part, rng);
    // keep only what the audit reports
    t.kappa.clear();
    t.kappa.shrink_to_fit();
    ts[i] = std::move(t);
  });
  CsvWriter csv(run.file("mono_audit_runs.csv"),
                {"run", "actions", "odd_steps", "even_steps", "p_explored_edges", "s_explored_copies", "alpha_trials",
                 "alpha_successes", "base_reaches", "lift_reaches", "enhanced_matches", "violations"});
  std::uint64_t violations = 0, reach_failures = 0, mismatches = 0, lift_reach = 0, trials = 0, successes = 0;
  double expected = 0;
  ordered_json bad = ordered_json::array();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto& t = ts[i];
    csv.cell(std::uint64_t(i)).cell(t.actions).cell(t.odd_steps).cell(t.even_steps).cell(t.p_explored_edges)
        .cell(t.s_explored_copies).cell(t.alpha_trials).cell(t.alpha_successes).cell(int(t.base_reaches))
        .cell(int(t.lift_reaches)).cell(int(t.enhanced_matches)).cell(std::uint64_t(t.violations.size()))
        .end_row();
    violations += t.violations.size();
    lift_reach += t.lift_reaches;
    reach_failures += t.lift_reaches && !t.base_reaches;
    mismatches += !t.enhanced_matches;
    trials += t.alpha_trials;
    successes += t.alpha_successes;
    expected += t.alpha_expected;
    if (!t.violations.empty() || (t.lift_reaches && !t.base_reaches) || !t.enhanced_matches)
      bad.push_back({{"run", i}, {"violations", t.violations}, {"base_reaches", t.base_reaches},
                     {"lift_reaches", t.lift_reaches}, {"enhanced_matches", t.enhanced_matches},
                     {"alpha", t.alpha}, {"c_final", t.c_final}, {"c_prime_final", t.c_prime_final}});
  }
  ordered_json j;
  j["parameters"] = {{"graph", o.graph}, {"p", p}, {"q", q}, {"runs", o.runs}, {"seed", o.seed}};
  j["partition"] = {{"cycles", part.cycles.size()}, {"R", part.R}, {"L", part.L}, {"D", part.D}, {"r", part.r}};
  if (!ts.empty())
    j["coupling"] = {{"M", ts[0].M}, {"p_hat", ts[0].p_hat}, {"t", ts[0].t}, {"s_fill", ts[0].s_fill}};
  j["summary"] = {{"violations", violations},       {"lift_reaching_runs", lift_reach},
                  {"reach_failures", reach_failures}, {"enhanced_mismatches", mismatches},
                  {"alpha_trials", trials},         {"alpha_successes", successes},
                  {"alpha_expected", expected}};
  j["failed_runs"] = bad;
  write_json(run.file("mono_audit.json"), j);
  if (violations + reach_failures + mismatches)
    run.violation = std::to_string(bad.size()) + " coupling runs failed the audit";
}

void cmd_sharpness_verify(Run& run) {
  const auto& o = run.o;
  auto box = box_graph(o);
  const double p = single(o.p, "p"), h = single(o.h, "h");
  check_probability(p, "p");
  require(h > 0, "--h must be positive");
  require(o.trials > 0, "--trials must be positive");
  require(o.n_max >= 2, "--n-max must be >= 2");
  auto rep = verify_exp_inequality(box, p, h, o.trials, o.seed, o.workers, o.n_max);
  CsvWriter csv(run.file("sharpness_tail.csv"), {"n", "psi_p", "psi_s", "bound", "margin", "pooled_stderr"});
  for (const auto& r : rep.rows)
    csv.cell(r.n).cell(r.psi_p).cell(r.psi_s).cell(r.bound).cell(r.margin).cell(r.pooled_se).end_row();
  ordered_json j;
  j["parameters"] = {{"graph", o.graph}, {"p", p}, {"h", h}, {"q", rep.q}, {"trials", o.trials},
                     {"n_max", o.n_max}, {"seed", o.seed}};
  j["ghost"] = {{"m_hat", rep.ghost.m_hat}, {"stderr", rep.ghost.stderr}, {"hits", rep.ghost.hits},
                {"trials", rep.ghost.trials}};
  j["s_raw"] = rep.s_raw;
  j["s_hat"] = rep.s_hat;
  j["clamped"] = rep.clamped;
  j["max_margin"] = rep.max_margin;
  j["worst_sigma"] = rep.worst_sigma;
  j["k_sigma"] = o.k;
  j["within_k_sigma"] = rep.within(o.k);
  write_json(run.file("sharpness_report.json"), j);
}

ordered_json fit_json(const DecayFit& f) {
  return {{"c_hat", f.c_hat}, {"C_hat", f.C_hat}, {"n_low", f.n_low}, {"n_high", f.n_high},
          {"r_squared", f.r_squared}, {"degenerate", f.degenerate}, {"low_confidence", f.low_confidence}};
}

void cmd_quenched_tails(Run& run) {
  const auto& o = run.o;
  auto box = box_graph(o);
  const double p = single(o.p, "p"), q = single(o.q, "q");
  check_probability(p, "p");
  check_probability(q, "q");
  require(o.draws > 0 && o.trials > 0, "--draws and --trials must be positive");
  CsvWriter tails(run.file("quenched_tails.csv"), {"draw", "n", "psi_hat", "stderr"});
  CsvWriter fits(run.file("quenched_fits.csv"),
                 {"draw", "switching_edges", "c_hat", "C_hat", "n_low", "n_high", "r_squared", "low_confidence"});
  const Stream eta_root = make_stream(o.seed, "quenched-eta");
  for (std::uint64_t d = 0; d < o.draws; ++d) {
    Stream rng = eta_root.split(d);
    auto eta = sample_switch_config(box, q, rng);
    auto curve = quenched_tail(box, eta, p, o.n_max, o.trials, point_seed(o.seed, "quenched-tails", {double(d)}),
                               o.workers);
    for (int n = 1; n <= o.n_max; ++n) tails.cell(d).cell(n).cell(curve.psi[n]).cell(curve.stderr[n]).end_row();
    auto f = fit_decay(curve);
    fits.cell(d).cell(std::uint64_t(eta.switching_count())).cell(f.c_hat).cell(f.C_hat).cell(f.n_low).cell(f.n_high)
        .cell(f.r_squared).cell(int(f.low_confidence))
        .end_row();
  }
}

void cmd_decay_fit(Run& run) {
  const auto& o = run.o;
  auto box = box_graph(o);
  const double p = single(o.p, "p");
  const double q = o.base ? -1.0 : single(o.q, "q");
  check_probability(p, "p");
  if (!o.base) check_probability(q, "q");
  require(o.trials > 0, "--trials must be positive");
  auto curve = tail_psi(box, q, p, o.n_max, o.trials, o.seed, o.workers);
  CsvWriter csv(run.file("decay_psi.csv"), {"n", "psi_hat", "stderr"});
  for (int n = 1; n <= o.n_max; ++n) csv.cell(n).cell(curve.psi[n]).cell(curve.stderr[n]).end_row();
  auto f = fit_decay(curve);
  write_json(run.file("decay_fit.json"),
             {{"graph", o.graph}, {"p", p}, {"q", o.base ? ordered_json("base") : ordered_json(q)},
              {"trials", o.trials}, {"n_max", o.n_max}, {"fit", fit_json(f)}});
}

// ---- plumbing ----------------------------------------------------------------

struct Command {
  const char* name;
  const char* help;
  Handler handler;
  bool seeded;
};

ordered_json echo_config(CLI::App* sub) {
  ordered_json j;
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.rfind("help", 0) == 0 || name == "workers" || name == "out" || name.empty()) continue;
    if (opt->get_expected_max() == 0) {
      j[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      j[name] = opt->results().back();
    } else if (!opt->get_default_str().empty()) {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

std::string reproduce_line(const std::string& command, const ordered_json& config) {
  std::string line = "liftperc " + command;
  for (const auto& [k, v] : config.items()) {
    if (v.is_boolean()) {
      if (v.get<bool>()) line += " --" + k;
      continue;
    }
    line += " --" + k + " " + v.get<std::string>();
  }
  return line;
}

int write_error(const fs::path& dir, int code, const char* kind, const std::string& message) {
  ordered_json j{{"status", "error"}, {"kind", kind}, {"exit_code", code}, {"message", message}};
  std::cerr << "liftperc: " << kind << ": " << message << "\n";
  try {
    fs::create_directories(dir);
    write_json(dir / "error.json", j);
  } catch (const std::exception& e) {
    std::cerr << "liftperc: could not write error.json: " << e.what() << "\n";
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Command> commands{
      {"oracle-disconnect", "exact P(lift disconnected) at q = 1/2 against 2^(|V|-|E|-1)", cmd_oracle_disconnect,
       false},
      {"oracle-joint", "exact two-point values and cluster tail by (eta, omega) enumeration", cmd_oracle_joint, false},
      {"lift-sample", "sample switch configurations and count lift components", cmd_lift_sample, true},
      {"theta", "reach probability of the origin over a (q, p) grid", cmd_theta, true},
      {"pc-curve", "p_c estimates over a q grid", cmd_pc_curve, true},
      {"pc-mono", "base p_c against lifted p_c with z-scores", cmd_pc_mono, true},
      {"holder-verify", "holder coupling joint law, coupling property and domination", cmd_holder_verify, true},
      {"holder-curve-check", "adjacent-pair holder bound on a p_c curve", cmd_holder_curve_check, true},
      {"enhance-pc", "enhanced-percolation p_c over an s grid", cmd_enhance_pc, true},
      {"mono-coupling-audit", "invariant audit of the monotonicity coupling", cmd_mono_coupling_audit, true},
      {"sharpness-verify", "exponential-decay inequality with ghost field", cmd_sharpness_verify, true},
      {"quenched-tails", "cluster tails for fixed eta draws, with decay fits", cmd_quenched_tails, true},
      {"decay-fit", "annealed cluster tail and exponential fit", cmd_decay_fit, true},
  };

  CLI::App app{"liftperc: percolation on random 2-lifts"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_help_flag("--help", "print help");
  app.set_help_all_flag("--help-all");
  app.add_option("--config", "JSON file with option values; flags given on the command line win");

  std::deque<Options> opts;
  std::map<std::string, CLI::App*> subs;
  for (const auto& c : commands) {
    auto& o = opts.emplace_back();
    CLI::App* s = app.add_subcommand(c.name, c.help);
    subs[c.name] = s;
    const std::string n = c.name;
    auto graph = [&](const char* def) {
      auto* opt = s->add_option("--graph", o.graph, "box:d:L, cycle:N, tree:b:depth, complete:n, path:N or file:<path>");
      if (def) opt->default_val(def);
      else opt->required();
    };
    auto trials = [&](std::uint64_t def) { s->add_option("--trials", o.trials, "trials per estimate")->default_val(def); };
    auto grid = [&](const char* flag, std::string& field, const char* def, const char* what) {
      auto* opt = s->add_option(flag, field, what);
      if (def) opt->default_val(def);
      else opt->required();
    };
    if (c.seeded) {
      s->add_option("--seed", o.seed, "master seed (mandatory)")->required();
      s->add_option("--workers", o.workers, "worker threads; outputs do not depend on it")->default_val(1)
          ->check(CLI::Range(1u, 1024u));
    }
    s->add_option("--out", o.out, "output directory")->default_val(".");

    if (n == "oracle-disconnect") {
      graph(nullptr);
    } else if (n == "oracle-joint") {
      graph(nullptr);
      grid("--q", o.q, "1/2", "switch probability (rational, e.g. 1/3)");
      grid("--p", o.p, "1/2", "edge probability (rational)");
      s->add_option("--origin-level", o.origin_level, "level of the origin lift (base vertex 0)")->default_val(0)
          ->check(CLI::Range(0, 1));
    } else if (n == "lift-sample") {
      graph(nullptr);
      grid("--q", o.q, "0.5", "switch probability");
      s->add_option("--samples", o.samples, "number of lifts")->default_val(100);
    } else if (n == "theta") {
      graph("box:2:31");
      grid("--q", o.q, "0.5", "q grid");
      grid("--p", o.p, "0.5", "p grid");
      s->add_flag("--base", o.base, "add the base graph (written as q = base)");
      s->add_flag("--sandwich", o.sandwich, "also run the min/max projection sandwich check");
      trials(10000);
    } else if (n == "pc-curve" || n == "pc-mono" || n == "holder-curve-check") {
      graph("box:2:63");
      grid("--q", o.q, n == "pc-mono" ? "0.5" : "0.1:0.9:0.1", "q grid");
      s->add_option("--sides", o.sides, "box schedule, e.g. 15,31,63 (default: the graph's side)");
      trials(10000);
      if (n == "pc-curve") s->add_flag("--base", o.base, "add the base graph (written as q = base)");
      if (n == "holder-curve-check") {
        s->add_option("--alpha", o.alpha, "lower end of the q range for the constant (default: grid min)");
        s->add_option("--beta", o.beta, "upper end of the q range for the constant (default: grid max)");
        s->add_option("--k", o.k, "pooled-stderr multiplier")->default_val(2);
      }
    } else if (n == "holder-verify") {
      grid("--q", o.q, "0.4", "q");
      grid("--r", o.r, "0.09", "r");
      s->add_option("--a", o.a, "a in [q, q+r] (default q)");
      s->add_option("--samples", o.samples, "edge samples for the joint table")->default_val(1000000);
      s->add_option("--graph", o.graph, "box for the domination check (omit to skip)");
      grid("--p", o.p, "0.5", "p for the domination check");
      trials(2000);
    } else if (n == "enhance-pc") {
      graph("box:2:63");
      grid("--s", o.s, "0,1", "s grid");
      s->add_option("--radius", o.radius, "enhancement radius r")->default_val(1);
      trials(4000);
    } else if (n == "mono-coupling-audit") {
      graph("box:2:10");
      grid("--p", o.p, "0.5", "p");
      grid("--q", o.q, "0.5", "q");
      s->add_option("--runs", o.runs, "coupling runs")->default_val(1000);
    } else if (n == "sharpness-verify") {
      graph("box:2:41");
      grid("--p", o.p, "0.35", "p");
      grid("--h", o.h, "0.1", "ghost field intensity h");
      s->add_option("--n-max", o.n_max, "largest n in the tail")->default_val(30);
      s->add_option("--k", o.k, "sigma multiplier for the report flag")->default_val(3);
      trials(100000);
    } else if (n == "quenched-tails") {
      graph("box:2:41");
      grid("--p", o.p, "0.35", "p");
      grid("--q", o.q, "0.5", "q for the eta draws");
      s->add_option("--draws", o.draws, "fixed eta draws")->default_val(20);
      s->add_option("--n-max", o.n_max, "largest n in the tail")->default_val(60);
      trials(20000);
    } else if (n == "decay-fit") {
      graph("box:2:41");
      grid("--p", o.p, "0.35", "p");
      grid("--q", o.q, "0.5", "q");
      s->add_flag("--base", o.base, "use the base graph instead of the lift");
      s->add_option("--n-max", o.n_max, "largest n in the tail")->default_val(400);
      trials(100000);
    }
  }

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const ConfigError& e) {
    return write_error(".", 2, "config_error", e.what());
  }
  std::vector<char*> cargv;
  for (auto& a : args) cargv.push_back(a.data());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string dir = ".";
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
      if (args[i] == "--out") dir = args[i + 1];
    return write_error(dir, 2, "config_error", e.what());
  }

  std::size_t which = 0;
  for (; which < commands.size(); ++which)
    if (subs[commands[which].name]->parsed()) break;
  const Command& cmd = commands[which];
  const Options& o = opts[which];
  CLI::App* sub = subs[cmd.name];

  Run run{o, fs::path(o.out), {}, {}};
  try {
    fs::create_directories(run.dir);
    cmd.handler(run);

    ordered_json config = echo_config(sub);
    std::string inputs = config.dump();
    if (o.graph.rfind("file:", 0) == 0) {
      std::ifstream in(o.graph.substr(5), std::ios::binary);
      inputs += std::string(std::istreambuf_iterator<char>(in), {});
    }
    ordered_json manifest;
    manifest["tool"] = "liftperc";
    manifest["command"] = cmd.name;
    manifest["config"] = config;
    manifest["input_hash"] = git_blob_sha1(inputs);
    manifest["reproduce"] = reproduce_line(cmd.name, config);
    manifest["outputs"] = run.files;
    manifest["status"] = run.violation.empty() ? "ok" : "invariant_violation";
    write_json(run.dir / "manifest.json", manifest);
    if (!run.violation.empty()) return write_error(run.dir, 3, "invariant_violation", run.violation);
    return 0;
  } catch (const ConfigError& e) {
    return write_error(run.dir, 2, "config_error", e.what());
  } catch (const InvariantViolation& e) {
    return write_error(run.dir, 3, "invariant_violation", e.what());
  } catch (const SizeGuardError& e) {
    return write_error(run.dir, 4, "size_guard", e.what());
  } catch (const std::exception& e) {
    return write_error(run.dir, 1, "internal_error", e.what());
  }
}
