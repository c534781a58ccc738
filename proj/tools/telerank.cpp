// Command-line front end for the telerank library.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "telerank/betamix/fit.hpp"
#include "telerank/ingest.hpp"
#include "telerank/pipeline/store.hpp"
#include "telerank/pipeline/weekly_update.hpp"
#include "telerank/poi_database.hpp"
#include "telerank/service/http_api.hpp"
#include "telerank/synthgen.hpp"
#include "telerank/trip_features.hpp"
#include "telerank/tripclf/forest.hpp"
#include "telerank/tripclf/metrics.hpp"
#include "telerank/tripclf/shortlist.hpp"
#include "telerank/util/files.hpp"

// After Eigen: glibc's resolver header, pulled in here, defines a `_res`
// macro that clashes with Eigen internals.
#include "httplib.h"

namespace fs = std::filesystem;
using namespace telerank;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

// Writes to `path`, or stdout when it is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file_atomic(path, text);
  }
}

std::map<std::string, geo::LatLon> read_homes(const std::string& path) {
  auto in = open_in(path);
  return synth::read_homes_csv(in);
}

std::vector<geo::FeatureRow> read_features(const std::string& path) {
  auto in = open_in(path);
  return geo::read_feature_csv(in);
}

std::map<std::string, int> read_trip_labels(const std::string& path) {
  auto in = open_in(path);
  return synth::read_label_csv(in, "trip_id", "label");
}

std::vector<betamix::PolicyCounts> read_counts(const std::string& path) {
  auto in = open_in(path);
  return betamix::read_counts_csv(in);
}

betamix::PosteriorSamples read_fit(const std::string& path) {
  return betamix::PosteriorSamples::from_json(nlohmann::json::parse(read_file(path)));
}

struct HmcFlags {
  std::uint64_t seed = betamix::HmcConfig{}.seed;
  std::size_t chains = 4;
  std::size_t draws = 1250;
  std::size_t warmup = 1000;
  bool literal_theta_prior = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "sampler seed");
    cmd->add_option("--chains", chains, "number of chains")->check(CLI::PositiveNumber);
    cmd->add_option("--draws", draws, "post-warmup draws per chain")->check(CLI::PositiveNumber);
    cmd->add_option("--warmup", warmup, "warmup iterations per chain");
    cmd->add_flag("--literal-theta-prior", literal_theta_prior, "use theta ~ Beta(30, 1) for comparison runs");
  }
  betamix::HmcConfig config() const {
    betamix::HmcConfig c;
    c.seed = seed;
    c.chains = chains;
    c.draws_per_chain = draws;
    c.warmup = warmup;
    return c;
  }
  betamix::Hyperpriors priors() const {
    return literal_theta_prior ? betamix::Hyperpriors::literal_theta_prior() : betamix::Hyperpriors{};
  }
};

void print_diagnostics(const betamix::PosteriorSamples& s, std::ostream& out) {
  const auto mean = s.posterior_mean();
  char buf[160];
  out << "param      mean        rhat     ess\n";
  for (std::size_t i = 0; i < betamix::kParamCount; ++i) {
    std::snprintf(buf, sizeof buf, "%-8s %10.5f %9.4f %8.1f\n", std::string(betamix::kParamNames[i]).c_str(), mean[i],
                  s.rhat[i], s.ess[i]);
    out << buf;
  }
  for (std::size_t c = 0; c < s.chain_diagnostics.size(); ++c) {
    const auto& d = s.chain_diagnostics[c];
    std::snprintf(buf, sizeof buf, "chain %zu: accept %.3f step %.4f divergences %zu\n", c, d.accept_rate,
                  d.step_size, d.divergences);
    out << buf;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"telerank: delivery-driver triage from telematics trips"};
  app.require_subcommand(1);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic fleet");
  std::string synth_config, synth_out = "fleet";
  std::vector<std::string> synth_sets;
  synth_cmd->add_option("--config", synth_config, "key = value config file");
  synth_cmd->add_option("--set", synth_sets, "override a config key, e.g. --set n_policies=500");
  synth_cmd->add_option("--out", synth_out, "output directory");

  auto* counts_cmd = app.add_subcommand("synth-counts", "generate per-policy (x, y) counts without GPS traces");
  synth::CountProfileConfig count_cfg;
  std::string counts_out = "counts.csv", counts_truth;
  counts_cmd->add_option("--policies", count_cfg.n_policies);
  counts_cmd->add_option("--minority-fraction", count_cfg.minority_fraction);
  counts_cmd->add_option("--seed", count_cfg.seed);
  counts_cmd->add_option("--out", counts_out);
  counts_cmd->add_option("--truth", counts_truth, "optional policy_id,k output");

  // segment
  auto* segment_cmd = app.add_subcommand("segment", "split samples into trips and tag them with trip ids");
  std::string seg_samples, seg_out;
  double idle_minutes = ingest::kDefaultIdleWindowMinutes;
  bool strict = false;
  segment_cmd->add_option("--samples", seg_samples)->required();
  segment_cmd->add_option("--out", seg_out, "tagged samples (default stdout)");
  segment_cmd->add_option("--idle-minutes", idle_minutes)->check(CLI::PositiveNumber);
  segment_cmd->add_flag("--strict", strict, "fail on the first malformed line");

  // features
  auto* features_cmd = app.add_subcommand("features", "extract per-trip features");
  std::string feat_samples, feat_pois, feat_homes, feat_out;
  long utc_offset = 0;
  features_cmd->add_option("--samples", feat_samples)->required();
  features_cmd->add_option("--pois", feat_pois)->required();
  features_cmd->add_option("--homes", feat_homes)->required();
  features_cmd->add_option("--out", feat_out, "feature CSV (default stdout)");
  features_cmd->add_option("--utc-offset", utc_offset, "seconds added to UTC for the time-of-day encoding");
  features_cmd->add_option("--idle-minutes", idle_minutes)->check(CLI::PositiveNumber);

  // cluster
  auto* cluster_cmd = app.add_subcommand("cluster", "PCA + DBSCAN shortlisting of candidate delivery trips");
  std::string cl_features, cl_out;
  std::size_t pca_dims = 2, min_pts = 5;
  double eps = 0.0;
  cluster_cmd->add_option("--features", cl_features)->required();
  cluster_cmd->add_option("--out", cl_out, "trip_id,cluster CSV (default stdout)");
  cluster_cmd->add_option("--pca-dims", pca_dims);
  cluster_cmd->add_option("--eps", eps, "DBSCAN radius; 0 picks the most stable radius");
  cluster_cmd->add_option("--min-pts", min_pts);

  // train
  auto* train_cmd = app.add_subcommand("train", "train the trip classifier");
  std::string tr_features, tr_labels, tr_out, tr_store;
  tripclf::ForestParams forest;
  train_cmd->add_option("--features", tr_features)->required();
  train_cmd->add_option("--labels", tr_labels, "trip_id,label CSV")->required();
  train_cmd->add_option("--out", tr_out, "model JSON path");
  train_cmd->add_option("--store", tr_store, "also install the model into this store");
  train_cmd->add_option("--trees", forest.n_trees);
  train_cmd->add_option("--max-depth", forest.max_depth);
  train_cmd->add_option("--min-leaf", forest.min_leaf);
  train_cmd->add_option("--seed", forest.seed);

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "score trips with a trained classifier");
  std::string pr_model, pr_features, pr_out;
  predict_cmd->add_option("--model", pr_model)->required();
  predict_cmd->add_option("--features", pr_features)->required();
  predict_cmd->add_option("--out", pr_out, "trip_id,policy_id,probability,label CSV (default stdout)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "classifier metrics against labels");
  std::string ev_model, ev_features, ev_labels;
  eval_cmd->add_option("--model", ev_model)->required();
  eval_cmd->add_option("--features", ev_features)->required();
  eval_cmd->add_option("--labels", ev_labels)->required();

  // fit / score / table / diagnostics
  auto* fit_cmd = app.add_subcommand("fit", "fit the Beta-Binomial mixture with HMC");
  std::string fit_counts, fit_out = "fit.json";
  HmcFlags hmc;
  fit_cmd->add_option("--counts", fit_counts, "policy_id,x,y CSV")->required();
  fit_cmd->add_option("--out", fit_out);
  hmc.add(fit_cmd);

  auto* score_cmd = app.add_subcommand("score", "posterior probability and score per policy");
  std::string sc_fit, sc_counts, sc_out;
  score_cmd->add_option("--fit", sc_fit)->required();
  score_cmd->add_option("--counts", sc_counts)->required();
  score_cmd->add_option("--out", sc_out);

  auto* table_cmd = app.add_subcommand("table", "score lookup table");
  std::string tb_fit, tb_out;
  int x_max = pipeline::kScoreTableMax;
  table_cmd->add_option("--fit", tb_fit)->required();
  table_cmd->add_option("--x-max", x_max);
  table_cmd->add_option("--out", tb_out);

  auto* diag_cmd = app.add_subcommand("diagnostics", "sampler diagnostics of a fit");
  std::string dg_fit;
  diag_cmd->add_option("--fit", dg_fit)->required();

  // store workflow
  auto* ingest_cmd = app.add_subcommand("ingest", "add trips from a sample file to a store");
  std::string in_store, in_samples, in_pois, in_homes;
  ingest_cmd->add_option("--store", in_store)->required();
  ingest_cmd->add_option("--samples", in_samples)->required();
  ingest_cmd->add_option("--pois", in_pois)->required();
  ingest_cmd->add_option("--homes", in_homes)->required();
  ingest_cmd->add_option("--utc-offset", utc_offset);
  ingest_cmd->add_option("--idle-minutes", idle_minutes)->check(CLI::PositiveNumber);

  auto* update_cmd = app.add_subcommand("update", "weekly classification, fit and ranking");
  std::string up_store, up_now;
  int window_days = 30;
  bool freeze = false;
  update_cmd->add_option("--store", up_store)->required();
  update_cmd->add_option("--now", up_now, "ISO-8601 instant closing the window")->required();
  update_cmd->add_option("--window-days", window_days)->check(CLI::PositiveNumber);
  update_cmd->add_flag("--freeze-mixture", freeze, "reuse the newest stored mixture fit");
  HmcFlags up_hmc;
  up_hmc.add(update_cmd);

  auto* serve_cmd = app.add_subcommand("serve", "HTTP API for reviewers");
  std::string sv_store, sv_host = "127.0.0.1", sv_static;
  int sv_port = 8080;
  serve_cmd->add_option("--store", sv_store)->required();
  serve_cmd->add_option("--host", sv_host);
  serve_cmd->add_option("--port", sv_port);
  serve_cmd->add_option("--static", sv_static, "directory with the UI bundle");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) {
      synth::FleetConfig cfg;
      if (!synth_config.empty()) {
        auto in = open_in(synth_config);
        cfg = synth::FleetConfig::from_key_values(in);
      }
      for (const auto& kv : synth_sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      cfg.validate();
      const auto fleet = synth::generate_fleet(cfg);
      const fs::path dir(synth_out);
      fs::create_directories(dir);
      {
        auto out = open_out(dir / "samples.jsonl");
        synth::write_samples_jsonl(out, fleet.samples);
      }
      {
        auto out = open_out(dir / "pois.csv");
        fleet.pois.write_csv(out);
      }
      {
        auto out = open_out(dir / "homes.csv");
        synth::write_homes_csv(out, fleet.homes);
      }
      {
        auto out = open_out(dir / "policy_truth.csv");
        synth::write_policy_truth_csv(out, fleet.truth);
      }
      {
        auto out = open_out(dir / "trip_truth.csv");
        synth::write_trip_truth_csv(out, fleet.truth);
      }
      std::cerr << "wrote " << fleet.samples.size() << " samples, " << fleet.truth.trip_label.size() << " trips, "
                << fleet.homes.size() << " policies to " << dir << "\n";
    } else if (counts_cmd->parsed()) {
      const auto profile = synth::generate_count_profile(count_cfg);
      std::vector<betamix::PolicyCounts> counts;
      std::string truth = "policy_id,k\n";
      for (std::size_t i = 0; i < profile.policy_ids.size(); ++i) {
        counts.push_back({profile.policy_ids[i], profile.x[i], profile.y[i]});
        truth += profile.policy_ids[i] + "," + std::to_string(profile.k[i]) + "\n";
      }
      std::ostringstream out;
      betamix::write_counts_csv(out, counts);
      emit(counts_out, out.str());
      if (!counts_truth.empty()) write_file_atomic(counts_truth, truth);
    } else if (segment_cmd->parsed()) {
      auto in = open_in(seg_samples);
      const auto parsed = ingest::parse_samples(in, strict);
      for (const auto& e : parsed.errors) std::cerr << "line " << e.line << ": " << e.message << "\n";
      std::string text;
      std::size_t n_trips = 0;
      for (const auto& [policy, samples] : parsed.by_policy) {
        for (const auto& trip : ingest::segment_trips(samples, idle_minutes)) {
          ++n_trips;
          for (const auto& s : trip.samples) text += ingest::to_json_line(s) + "\n";
        }
      }
      emit(seg_out, text);
      std::cerr << n_trips << " trips\n";
    } else if (features_cmd->parsed()) {
      auto in = open_in(feat_samples);
      const auto parsed = ingest::parse_samples(in);
      for (const auto& e : parsed.errors) std::cerr << "line " << e.line << ": " << e.message << "\n";
      const auto pois = geo::PoiDatabase::read_csv_file(feat_pois);
      const auto homes = read_homes(feat_homes);
      std::vector<geo::FeatureRow> rows;
      for (const auto& [policy, samples] : parsed.by_policy) {
        const auto home = homes.find(policy);
        if (home == homes.end()) {
          std::cerr << "skipping " << policy << ": no home location\n";
          continue;
        }
        for (const auto& trip : ingest::segment_trips(samples, idle_minutes)) {
          rows.push_back({trip.trip_id, policy, geo::extract_features(trip, pois, home->second, utc_offset)});
        }
      }
      std::ostringstream out;
      geo::write_feature_csv(out, rows);
      emit(feat_out, out.str());
    } else if (cluster_cmd->parsed()) {
      const auto raw = tripclf::FeatureMatrix::from_feature_rows(read_features(cl_features));
      const auto std_m = tripclf::standardize(raw);
      const auto result = tripclf::shortlist_clusters(std_m.matrix, pca_dims, eps, min_pts);
      const int review = tripclf::select_review_cluster(result.labels, raw);
      std::string text = "trip_id,cluster,review\n";
      for (std::size_t i = 0; i < raw.rows(); ++i) {
        text += raw.ids()[i] + "," + std::to_string(result.labels[i]) + "," +
                (result.labels[i] == review && review != tripclf::kNoise ? "1" : "0") + "\n";
      }
      emit(cl_out, text);
      std::cerr << result.cluster_count << " clusters, eps " << result.eps << ", review cluster " << review << "\n";
    } else if (train_cmd->parsed()) {
      const auto labels = read_trip_labels(tr_labels);
      const auto m = tripclf::FeatureMatrix::from_feature_rows(read_features(tr_features), &labels);
      const auto model = tripclf::train_forest(m, forest);
      if (!tr_out.empty()) write_file_atomic(tr_out, model.to_json().dump() + "\n");
      if (!tr_store.empty()) {
        const auto version = pipeline::Store(tr_store).install_tripclf(model);
        std::cerr << "installed tripclf-" << version << "\n";
      }
      if (tr_out.empty() && tr_store.empty()) std::cout << model.to_json().dump() << "\n";
      std::cerr << "digest " << model.digest() << ", threshold " << model.decision_threshold << "\n";
    } else if (predict_cmd->parsed()) {
      const auto model = tripclf::ForestModel::from_json(nlohmann::json::parse(read_file(pr_model)));
      std::string text = "trip_id,policy_id,probability,label\n";
      char buf[64];
      for (const auto& row : read_features(pr_features)) {
        const auto p = tripclf::predict_trip(model, row.features);
        std::snprintf(buf, sizeof buf, ",%.6f,%d\n", p.probability, p.label);
        text += row.trip_id + "," + row.policy_id + buf;
      }
      emit(pr_out, text);
    } else if (eval_cmd->parsed()) {
      const auto model = tripclf::ForestModel::from_json(nlohmann::json::parse(read_file(ev_model)));
      const auto labels = read_trip_labels(ev_labels);
      const auto m = tripclf::FeatureMatrix::from_feature_rows(read_features(ev_features), &labels);
      const auto r = tripclf::evaluate_classifier(model, m);
      nlohmann::json j = {{"accuracy", r.accuracy},
                          {"precision", r.precision},
                          {"recall", r.recall},
                          {"f1", r.f1},
                          {"roc_auc", r.roc_auc ? nlohmann::json(*r.roc_auc) : nlohmann::json(nullptr)},
                          {"tp", r.confusion.tp},
                          {"fp", r.confusion.fp},
                          {"tn", r.confusion.tn},
                          {"fn", r.confusion.fn}};
      std::cout << j.dump(2) << "\n";
    } else if (fit_cmd->parsed()) {
      const auto counts = read_counts(fit_counts);
      const auto samples = betamix::hmc_sample(counts, hmc.priors(), hmc.config());
      pipeline::MixtureArtifact artifact{"", samples, betamix::score_table(samples, x_max, x_max)};
      write_file_atomic(fit_out, pipeline::mixture_artifact_json(artifact).dump() + "\n");
      print_diagnostics(samples, std::cerr);
    } else if (score_cmd->parsed()) {
      const auto samples = read_fit(sc_fit);
      const auto counts = read_counts(sc_counts);
      const auto ranked = pipeline::rank_counts(counts, samples, 0, 0);
      std::string text = "policy_id,x,y,probability,score\n";
      char buf[96];
      for (const auto& r : ranked) {
        std::snprintf(buf, sizeof buf, ",%d,%d,%.6f,%.4f\n", r.x, r.y, r.posterior_probability, r.score);
        text += r.policy_id + buf;
      }
      emit(sc_out, text);
    } else if (table_cmd->parsed()) {
      emit(tb_out, betamix::score_table(read_fit(tb_fit), x_max, x_max).render_csv());
    } else if (diag_cmd->parsed()) {
      print_diagnostics(read_fit(dg_fit), std::cout);
    } else if (ingest_cmd->parsed()) {
      auto in = open_in(in_samples);
      const auto parsed = ingest::parse_samples(in);
      for (const auto& e : parsed.errors) std::cerr << "line " << e.line << ": " << e.message << "\n";
      const pipeline::Store store(in_store);
      const auto report = pipeline::ingest_to_store(store, parsed, geo::PoiDatabase::read_csv_file(in_pois),
                                                    read_homes(in_homes), {idle_minutes, utc_offset});
      for (const auto& p : report.policies_without_home) std::cerr << "skipped " << p << ": no home location\n";
      std::cerr << report.samples << " samples, " << report.trips_added << " trips added, "
                << report.trips_already_stored << " already stored, " << report.trips_with_issues
                << " with validation issues\n";
    } else if (update_cmd->parsed()) {
      pipeline::UpdateOptions opts;
      opts.now = parse_iso8601(up_now);
      opts.window_days = window_days;
      opts.freeze_mixture = freeze;
      opts.priors = up_hmc.priors();
      opts.hmc = up_hmc.config();
      const pipeline::Store store(up_store);
      const auto result = pipeline::run_weekly_update(store, opts);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      std::cerr << result.new_predictions << " new predictions, " << result.snapshot.policies.size()
                << " ranked policies, mixture " << (result.refit ? "refit" : "reused") << " ("
                << result.snapshot.betamix_version << ")\n";
      std::cout << store.ranking_path(result.snapshot.date).string() << "\n";
    } else if (serve_cmd->parsed()) {
      service::ReviewService svc(sv_store);
      httplib::Server server;
      std::optional<fs::path> static_dir;
      if (!sv_static.empty()) static_dir = sv_static;
      service::register_routes(server, svc, static_dir);
      std::cerr << "listening on http://" << sv_host << ":" << sv_port << "\n";
      if (!server.listen(sv_host, sv_port)) throw std::runtime_error("cannot bind " + sv_host + ":" + std::to_string(sv_port));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
