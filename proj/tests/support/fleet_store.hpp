#pragma once

// Shared helpers: a synthetic fleet turned into features, a trained
// classifier, and a populated store.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "telerank/pipeline/store.hpp"
#include "telerank/pipeline/weekly_update.hpp"
#include "telerank/synthgen.hpp"
#include "telerank/trip_features.hpp"
#include "telerank/tripclf/feature_matrix.hpp"
#include "telerank/tripclf/forest.hpp"

namespace support {

inline std::map<std::string, telerank::geo::LatLon> home_map(const telerank::synth::Fleet& fleet) {
  std::map<std::string, telerank::geo::LatLon> homes;
  for (const auto& h : fleet.homes) homes[h.policy_id] = h.position;
  return homes;
}

inline telerank::ingest::ParseResult as_parsed(const telerank::synth::Fleet& fleet) {
  telerank::ingest::ParseResult parsed;
  for (const auto& s : fleet.samples) parsed.by_policy[s.policy_id].push_back(s);
  return parsed;
}

inline std::vector<telerank::geo::FeatureRow> fleet_features(const telerank::synth::Fleet& fleet) {
  const auto homes = home_map(fleet);
  std::vector<telerank::geo::FeatureRow> rows;
  for (const auto& [policy, samples] : as_parsed(fleet).by_policy) {
    for (const auto& trip : telerank::ingest::segment_trips(samples)) {
      rows.push_back({trip.trip_id, policy, telerank::geo::extract_features(trip, fleet.pois, homes.at(policy))});
    }
  }
  return rows;
}

inline telerank::tripclf::ForestModel train_on_fleet(const telerank::synth::Fleet& fleet, std::size_t n_trees = 60,
                                                     std::uint64_t seed = 1) {
  const auto m = telerank::tripclf::FeatureMatrix::from_feature_rows(fleet_features(fleet), &fleet.truth.trip_label);
  telerank::tripclf::ForestParams params;
  params.n_trees = n_trees;
  params.seed = seed;
  return telerank::tripclf::train_forest(m, params);
}

inline telerank::synth::FleetConfig fleet_config(std::size_t n, double fraction, std::uint64_t seed) {
  telerank::synth::FleetConfig c;
  c.n_policies = n;
  c.delivery_fraction = fraction;
  c.seed = seed;
  return c;
}

inline telerank::betamix::HmcConfig quick_hmc(std::uint64_t seed = 3) {
  telerank::betamix::HmcConfig c;
  c.chains = 2;
  c.warmup = 200;
  c.draws_per_chain = 200;
  c.seed = seed;
  return c;
}

// Store holding an ingested fleet and an installed classifier.
struct PopulatedStore {
  std::filesystem::path root;
  telerank::synth::Fleet fleet;
};

inline PopulatedStore make_store(const std::filesystem::path& root, std::size_t n_policies = 60,
                                 double fraction = 0.1, std::uint64_t seed = 21) {
  std::filesystem::remove_all(root);
  PopulatedStore out{root, telerank::synth::generate_fleet(fleet_config(n_policies, fraction, seed))};
  const telerank::pipeline::Store store(root);
  const auto train = telerank::synth::generate_fleet(fleet_config(80, 0.25, seed + 1000));
  store.install_tripclf(train_on_fleet(train));
  telerank::pipeline::ingest_to_store(store, as_parsed(out.fleet), out.fleet.pois, home_map(out.fleet));
  return out;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("telerank_test_" + name);
}

}  // namespace support
