#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <unordered_map>
#include <vector>

#include "telerank/geo.hpp"

namespace telerank::geo {

enum class PoiKind { Commercial };

struct Poi {
  LatLon position;
  PoiKind kind = PoiKind::Commercial;
};

// Read-only collection of points of interest with a lat/lon grid index.
// Radius queries return exactly the entries whose haversine distance to the
// query point is <= radius, including across the antimeridian and near the
// poles.
class PoiDatabase {
 public:
  PoiDatabase() : PoiDatabase(std::vector<Poi>{}) {}
  explicit PoiDatabase(std::vector<Poi> entries, double cell_deg = 0.01);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::span<const Poi> entries() const noexcept { return entries_; }

  // Indices into entries(), ascending.
  std::vector<std::size_t> within_radius(LatLon center, double radius_m) const;
  std::size_t count_within(LatLon center, double radius_m) const;

  // CSV with header `lat,lon,kind`; kind is "commercial".
  static PoiDatabase read_csv(std::istream& in);
  static PoiDatabase read_csv_file(const std::filesystem::path& path);
  void write_csv(std::ostream& out) const;

 private:
  template <typename Visit>
  void for_each_candidate(LatLon center, double radius_m, Visit&& visit) const;

  std::int64_t cell_key(int lat_cell, int lon_cell) const noexcept;

  std::vector<Poi> entries_;
  double cell_deg_;
  int lat_cells_;
  int lon_cells_;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> cells_;
};

}  // namespace telerank::geo
