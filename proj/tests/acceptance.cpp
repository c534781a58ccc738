// Acceptance run: one PASS/FAIL line per criterion. Arguments select a subset
// by number (`acceptance 2 7`); no arguments runs all of them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/aggregate.hpp"
#include "oracles/grid_posterior.hpp"
#include "support/fleet_store.hpp"
#include "telerank/betamix/fit.hpp"
#include "telerank/tripclf/metrics.hpp"
#include "telerank/tripclf/shortlist.hpp"
#include "telerank/util/files.hpp"
#include "telerank/util/time.hpp"

using namespace telerank;
using namespace telerank::betamix;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<PolicyCounts> to_counts(const synth::CountProfile& p) {
  std::vector<PolicyCounts> out;
  for (std::size_t i = 0; i < p.x.size(); ++i) out.push_back({p.policy_ids[i], p.x[i], p.y[i]});
  return out;
}

// ---- 1: math-core properties

Outcome math_core() {
  Rng rng(1);
  std::vector<std::string> failed;

  double norm_err = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int x = uniform_int(rng, 0, 200);
    const double a = uniform(rng, 0.1, 50.0), b = uniform(rng, 0.1, 50.0);
    double total = 0.0;
    for (int y = 0; y <= x; ++y) total += std::exp(log_betabinomial(y, x, a, b));
    norm_err = std::max(norm_err, std::abs(total - 1.0));
  }
  if (norm_err > 1e-9) failed.push_back("normalization");

  double rt_err = 0.0;
  for (int t = 0; t < 5000; ++t) {
    const NaturalParams n{uniform(rng, 1e-3, 1 - 1e-3), uniform(rng, 1e-3, 1 - 1e-3), uniform(rng, 0.0, 60.0),
                          uniform(rng, 0.0, 60.0), uniform(rng, 0.0, 1.0)};
    const auto back = to_natural(from_natural(n));
    for (std::size_t i = 0; i < kParamCount; ++i) {
      rt_err = std::max(rt_err, std::abs(get(back, i) - get(n, i)) / std::max(1.0, std::abs(get(n, i))));
    }
  }
  if (rt_err > 1e-12) failed.push_back("round trip");

  CountHistogram h;
  for (int i = 0; i < 200; ++i) {
    const int x = uniform_int(rng, 0, 40);
    h.add(x, x == 0 ? 0 : uniform_int(rng, 0, x));
  }
  const Hyperpriors pri;
  auto f = [&](const Unconstrained& z) { return log_posterior_unconstrained(z, h, pri); };
  double grad_err = 0.0;
  for (int checked = 0; checked < 100;) {
    const Unconstrained z = {uniform(rng, -4.0, 3.0), uniform(rng, -3.0, 4.0), uniform(rng, -2.0, 3.5),
                             uniform(rng, -2.0, 3.5), uniform(rng, -6.0, 1.0)};
    const NaturalParams n = from_unconstrained(z);
    if (std::abs(n.mu0 - 0.5) < 1e-3 || std::abs(n.mu1 - 0.5) < 1e-3) continue;  // corner of tau
    std::array<double, kParamCount> g{};
    log_posterior_unconstrained(z, h, pri, g);
    for (std::size_t i = 0; i < kParamCount; ++i) {
      auto central = [&](double s) {
        Unconstrained a = z, b = z;
        a[i] += s;
        b[i] -= s;
        return (f(a) - f(b)) / (2 * s);
      };
      const double fd = (4 * central(5e-4) - central(1e-3)) / 3;
      grad_err = std::max(grad_err, std::abs(g[i] - fd) / std::max({std::abs(g[i]), std::abs(fd), 1e-2}));
    }
    ++checked;
  }
  if (grad_err > 1e-5) failed.push_back("gradient");

  MixtureParams m = from_natural({0.2, 0.8, 2.0, 5.0, 0.0});
  bool degen = responsibility(10, 8, m) == 0.0;
  m.theta = 1.0;
  degen = degen && responsibility(10, 8, m) == 1.0;
  const MixtureParams same{3.0, 7.0, 3.0, 7.0, 0.23};
  for (int x = 0; x <= 15; ++x) {
    for (int y = 0; y <= x; ++y) degen = degen && std::abs(responsibility(x, y, same) - 0.23) < 1e-13;
  }
  if (!degen) failed.push_back("degeneracies");

  bool anchors = true;
  for (double a : {1e-6, 0.004, 0.03, 0.2, 0.5, 0.9, 0.98}) {
    anchors = anchors && priority_score(0.99, a) == 3.0 && priority_score(a, a) == 0.0;
  }
  if (!anchors) failed.push_back("score anchors");

  LogDensity target;
  target.dim = kParamCount;
  target.eval = [&](std::span<const double> q, std::span<double> g) {
    Unconstrained z;
    std::copy(q.begin(), q.end(), z.begin());
    return log_posterior_unconstrained(z, h, pri, g);
  };
  double rev_err = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Unconstrained z0 = to_unconstrained({0.15, 0.7, 3.0, 8.0, 0.05});
    std::vector<double> q(z0.begin(), z0.end()), p(kParamCount), g(kParamCount);
    for (auto& v : q) v += uniform(rng, -0.3, 0.3);
    for (auto& v : p) v = normal(rng);
    double logp = target.eval(q, g);
    const auto q0 = q, p0 = p;
    bool ok = leapfrog(target, q, p, g, logp, 0.01, 32);
    for (auto& v : p) v = -v;
    ok = ok && leapfrog(target, q, p, g, logp, 0.01, 32);
    if (!ok) rev_err = INFINITY;
    for (std::size_t i = 0; i < kParamCount; ++i) {
      rev_err = std::max({rev_err, std::abs(q[i] - q0[i]), std::abs(p[i] + p0[i])});
    }
  }
  if (rev_err > 1e-8) failed.push_back("reversibility");

  std::string detail = fmt("norm %.1e, round trip %.1e, grad rel %.1e, reversibility %.1e", norm_err, rt_err,
                           grad_err, rev_err);
  for (const auto& s : failed) detail += "; failed: " + s;
  return {failed.empty(), detail};
}

// ---- 2/3/4: mixture fits

Outcome mcmc_vs_grid() {
  const NaturalParams truth{0.1, 0.7, 4.0, 8.0, 0.1};
  const MixtureParams shapes = from_natural(truth);
  synth::CountProfileConfig pc;
  pc.n_policies = 200;
  pc.minority_fraction = truth.theta;
  pc.min_trips = 5;
  pc.mean_extra_trips = 15.0;
  pc.majority_a = shapes.alpha0;
  pc.majority_b = shapes.beta0;
  pc.minority_a = shapes.alpha1;
  pc.minority_b = shapes.beta1;
  pc.seed = 2;
  const auto profile = synth::generate_count_profile(pc);
  const auto counts = to_counts(profile);

  const PosteriorSamples fit = hmc_sample(counts, Hyperpriors{}, HmcConfig{});
  const auto hmc = fit.posterior_mean();

  std::vector<std::pair<int, int>> xy;
  for (const auto& c : counts) xy.emplace_back(c.x, c.y);
  const auto grid = oracle::grid_posterior(xy, {}, 16, 4);

  bool ok = fit.chains == 4 && fit.max_rhat() < 1.05;
  std::string detail;
  for (std::size_t i = 0; i < kParamCount; ++i) {
    const bool relative = i == kR0 || i == kR1;
    const double d = relative ? std::abs(hmc[i] - grid.mean[i]) / grid.mean[i] : std::abs(hmc[i] - grid.mean[i]);
    ok = ok && d <= (relative ? 0.25 : 0.05);
    detail += fmt("%s hmc %.4f grid %.4f; ", std::string(kParamNames[i]).c_str(), hmc[i], grid.mean[i]);
  }
  detail += fmt("max R-hat %.4f", fit.max_rhat());
  return {ok, detail};
}

const PosteriorSamples& profile_fit() {
  static const PosteriorSamples fit = [] {
    const auto profile = synth::generate_count_profile(synth::CountProfileConfig{});
    return hmc_sample(to_counts(profile), Hyperpriors{}, HmcConfig{});
  }();
  return fit;
}

Outcome posterior_shape() {
  const auto& fit = profile_fit();
  const double mu0 = fit.posterior_mean()[kMu0];
  const double pp00 = posterior_predictive(0, 0, fit);
  return {mu0 >= 0.05 && mu0 <= 0.2 && pp00 <= 0.05,
          fmt("mu0 %.4f, pp(0,0) %.4f, max R-hat %.4f", mu0, pp00, fit.max_rhat())};
}

Outcome score_table_shape() {
  const auto& fit = profile_fit();
  const auto table = score_table(fit, 20, 20);
  const double p33 = *table.probability_at(3, 3), p2016 = *table.probability_at(20, 16);
  const double s33 = *table.score_at(3, 3);
  return {p33 < p2016 && s33 < 3.0,
          fmt("pp(3,3) %.4f, pp(20,16) %.4f, score(3,3) %.3f, score(20,16) %.3f", p33, p2016, s33,
              *table.score_at(20, 16))};
}

// ---- 5: trip classifier

Outcome trip_classifier() {
  const auto train = synth::generate_fleet(support::fleet_config(300, 0.2, 501));
  const auto test = synth::generate_fleet(support::fleet_config(300, 0.2, 502));
  const auto train_m = tripclf::FeatureMatrix::from_feature_rows(support::fleet_features(train), &train.truth.trip_label);
  const auto model = tripclf::train_forest(train_m);
  const auto test_m = tripclf::FeatureMatrix::from_feature_rows(support::fleet_features(test), &test.truth.trip_label);

  std::vector<double> scores;
  for (std::size_t i = 0; i < test_m.rows(); ++i) scores.push_back(model.predict_proba(test_m.row(i)));
  const auto auc = tripclf::roc_auc(scores, test_m.labels());
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  int hits = 0;
  for (std::size_t i = 0; i < std::min<std::size_t>(100, order.size()); ++i) hits += test_m.labels()[order[i]];
  const int positives = static_cast<int>(std::count(test_m.labels().begin(), test_m.labels().end(), 1));
  return {auc && *auc >= 0.95 && hits >= 90,
          fmt("test trips %zu (%d deliveries), AUC %.4f, top-100 deliveries %d", test_m.rows(), positives,
              auc.value_or(NAN), hits)};
}

// ---- 6: shortlisting

Outcome shortlisting() {
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed : {11, 12, 13, 14, 15}) {
    auto cfg = support::fleet_config(6, 0.5, seed);
    cfg.trips_min = 20;
    cfg.trips_max = 30;
    const auto fleet = synth::generate_fleet(cfg);
    const auto raw = tripclf::FeatureMatrix::from_feature_rows(support::fleet_features(fleet), &fleet.truth.trip_label);
    const auto res = tripclf::shortlist_clusters(tripclf::standardize(raw).matrix, 2, 0.0, 5);
    const int pick = tripclf::select_review_cluster(res.labels, raw);
    int deliveries = 0, caught = 0, members = 0;
    for (std::size_t i = 0; i < raw.rows(); ++i) {
      deliveries += raw.labels()[i];
      if (pick != tripclf::kNoise && res.labels[i] == pick) {
        ++members;
        caught += raw.labels()[i];
      }
    }
    const double frac = deliveries ? static_cast<double>(caught) / deliveries : 0.0;
    ok = ok && deliveries > 0 && frac >= 0.8;
    detail += fmt("seed %llu %d/%d (cluster size %d of %zu); ", static_cast<unsigned long long>(seed), caught,
                  deliveries, members, raw.rows());
  }
  return {ok, detail};
}

// ---- 7: end to end

Outcome end_to_end() {
  const fs::path dir = support::scratch_dir("acceptance_e2e");
  fs::remove_all(dir);
  fs::create_directories(dir / "input");
  const auto fleet = synth::generate_fleet(support::fleet_config(5000, 0.01, 701));
  {
    std::ofstream s(dir / "input" / "samples.jsonl"), h(dir / "input" / "homes.csv"), p(dir / "input" / "pois.csv");
    synth::write_samples_jsonl(s, fleet.samples);
    synth::write_homes_csv(h, fleet.homes);
    fleet.pois.write_csv(p);
  }
  std::ifstream s(dir / "input" / "samples.jsonl"), h(dir / "input" / "homes.csv");
  const auto parsed = ingest::parse_samples(s, true);
  const auto homes = synth::read_homes_csv(h);
  const auto pois = geo::PoiDatabase::read_csv_file(dir / "input" / "pois.csv");

  const pipeline::Store store(dir / "store");
  const auto train = synth::generate_fleet(support::fleet_config(300, 0.2, 702));
  store.install_tripclf(tripclf::train_forest(
      tripclf::FeatureMatrix::from_feature_rows(support::fleet_features(train), &train.truth.trip_label)));
  pipeline::ingest_to_store(store, parsed, pois, homes);

  pipeline::UpdateOptions opt;
  opt.now = parse_iso8601("2024-02-01T00:00:00Z");
  opt.window_days = 31;
  const auto result = pipeline::run_weekly_update(store, opt);
  const auto& ranked = result.snapshot.policies;
  const std::size_t top = (ranked.size() + 99) / 100;
  int hits = 0;
  for (std::size_t i = 0; i < top && i < ranked.size(); ++i) hits += fleet.truth.policy_class.at(ranked[i].policy_id);
  const double precision = top ? static_cast<double>(hits) / static_cast<double>(top) : 0.0;
  fs::remove_all(dir);
  return {top > 0 && precision >= 0.9, fmt("ranked %zu policies, top-%zu precision %.3f (%d delivery drivers)",
                                           ranked.size(), top, precision, hits)};
}

// ---- 8: determinism

Outcome determinism() {
  const fs::path dir = support::scratch_dir("acceptance_det");
  support::make_store(dir, 80, 0.1, 801);
  const pipeline::Store store(dir);
  pipeline::UpdateOptions opt;
  opt.now = parse_iso8601("2024-02-01T00:00:00Z");
  opt.window_days = 31;
  opt.hmc = support::quick_hmc(9);
  pipeline::run_weekly_update(store, opt);
  const std::string first = read_file(store.ranking_path("2024-02-01"));
  pipeline::run_weekly_update(store, opt);
  const std::string second = read_file(store.ranking_path("2024-02-01"));
  fs::remove_all(dir);

  Rng rng(808);
  std::vector<pipeline::PredictionRecord> recs;
  const UnixSeconds end = 1'706'745'600;
  const int days = 30;
  for (int i = 0; i < 10000; ++i) {
    pipeline::PredictionRecord r;
    r.policy_id = "P" + std::to_string(uniform_int(rng, 0, 500));
    r.trip_id = r.policy_id + "-" + std::to_string(uniform_int(rng, 0, 30));
    r.trip_end_time = end - uniform_int(rng, -3 * 86400, 40 * 86400);
    if (uniform(rng, 0, 1) < 0.05) r.trip_end_time = end - days * 86400L + uniform_int(rng, -1, 1);
    r.label = uniform_int(rng, 0, 1);
    r.probability = r.label ? 0.9 : 0.1;
    r.model = "0001";
    recs.push_back(r);
  }
  const auto got = pipeline::aggregate_counts(recs, end, days);
  const auto want = oracle::brute_force_counts(recs, end, days);
  bool same = got.size() == want.size();
  for (std::size_t i = 0; same && i < got.size(); ++i) {
    same = got[i].policy_id == want[i].policy_id && got[i].x == want[i].x && got[i].y == want[i].y;
  }
  return {!first.empty() && first == second && same,
          fmt("snapshot %zu bytes, identical %s; aggregate over %zu policies matches %s", first.size(),
              first == second ? "yes" : "no", want.size(), same ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0: no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "math-core properties", 30, math_core},
      {2, "HMC vs grid posterior", 300, mcmc_vs_grid},
      {3, "posterior shape", 0, posterior_shape},
      {4, "score table shape", 0, score_table_shape},
      {5, "trip classifier", 120, trip_classifier},
      {6, "shortlisting", 0, shortlisting},
      {7, "end to end", 600, end_to_end},
      {8, "pipeline determinism", 0, determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s budget", c.budget_s);
    }
    if (!o.pass) ++failures;
    std::printf("criterion %d %s: %s | %s [%.1f s]\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
