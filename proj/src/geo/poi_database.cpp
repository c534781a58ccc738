#include "telerank/poi_database.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "telerank/util/csv.hpp"

namespace telerank::geo {
namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kDegToRad = std::numbers::pi / 180.0;

int clamp_index(double v, int n) { return std::clamp(static_cast<int>(std::floor(v)), 0, n - 1); }

}  // namespace

PoiDatabase::PoiDatabase(std::vector<Poi> entries, double cell_deg) : entries_(std::move(entries)) {
  if (!(cell_deg > 0.0) || cell_deg > 90.0) throw std::invalid_argument("cell size must be in (0, 90] degrees");
  lat_cells_ = std::max(1, static_cast<int>(std::lround(180.0 / cell_deg)));
  lon_cells_ = std::max(1, static_cast<int>(std::lround(360.0 / cell_deg)));
  cell_deg_ = 360.0 / lon_cells_;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const LatLon p = entries_[i].position;
    if (!in_range(p)) throw std::invalid_argument("POI coordinate out of range");
    const int la = clamp_index((p.lat + 90.0) / (180.0 / lat_cells_), lat_cells_);
    const int lo = clamp_index((p.lon + 180.0) / cell_deg_, lon_cells_);
    cells_[cell_key(la, lo)].push_back(i);
  }
}

std::int64_t PoiDatabase::cell_key(int lat_cell, int lon_cell) const noexcept {
  return static_cast<std::int64_t>(lat_cell) * lon_cells_ + lon_cell;
}

template <typename Visit>
void PoiDatabase::for_each_candidate(LatLon center, double radius_m, Visit&& visit) const {
  const double delta = radius_m / kEarthRadiusM;  // angular radius, rad
  auto scan_all = [&] {
    for (std::size_t i = 0; i < entries_.size(); ++i) visit(i);
  };
  if (entries_.empty()) return;
  if (delta >= std::numbers::pi) return scan_all();

  const double lat_step = 180.0 / lat_cells_;
  const double dlat = delta * kRadToDeg * (1.0 + 1e-9) + 1e-9;
  const double lat_lo = center.lat - dlat;
  const double lat_hi = center.lat + dlat;
  bool full_lon = lat_lo <= -90.0 || lat_hi >= 90.0;
  double dlon = 180.0;
  if (!full_lon) {
    const double ratio = std::sin(delta) / std::cos(center.lat * kDegToRad);
    if (ratio >= 1.0) {
      full_lon = true;
    } else {
      dlon = std::asin(ratio) * kRadToDeg * (1.0 + 1e-9) + 1e-9;
      full_lon = 2.0 * dlon >= 360.0;
    }
  }
  const int la0 = clamp_index((lat_lo + 90.0) / lat_step, lat_cells_);
  const int la1 = clamp_index((lat_hi + 90.0) / lat_step, lat_cells_);
  const long long lon_span =
      full_lon ? lon_cells_
               : static_cast<long long>(std::floor((center.lon + dlon + 180.0) / cell_deg_)) -
                     static_cast<long long>(std::floor((center.lon - dlon + 180.0) / cell_deg_)) + 1;
  // Fall back to a linear scan when the index would touch more cells than
  // there are entries.
  if (static_cast<long long>(la1 - la0 + 1) * lon_span > static_cast<long long>(entries_.size())) return scan_all();

  const long long lo0 = static_cast<long long>(std::floor((center.lon - dlon + 180.0) / cell_deg_));
  for (int la = la0; la <= la1; ++la) {
    for (long long k = 0; k < lon_span; ++k) {
      const int lo = static_cast<int>(((lo0 + k) % lon_cells_ + lon_cells_) % lon_cells_);
      const auto it = cells_.find(cell_key(la, lo));
      if (it == cells_.end()) continue;
      for (std::size_t i : it->second) visit(i);
    }
  }
}

std::vector<std::size_t> PoiDatabase::within_radius(LatLon center, double radius_m) const {
  std::vector<std::size_t> out;
  if (radius_m < 0.0) return out;
  for_each_candidate(center, radius_m, [&](std::size_t i) {
    if (haversine_m(center, entries_[i].position) <= radius_m) out.push_back(i);
  });
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t PoiDatabase::count_within(LatLon center, double radius_m) const {
  std::size_t n = 0;
  if (radius_m < 0.0) return n;
  for_each_candidate(center, radius_m, [&](std::size_t i) {
    if (haversine_m(center, entries_[i].position) <= radius_m) ++n;
  });
  return n;
}

PoiDatabase PoiDatabase::read_csv(std::istream& in) {
  const CsvTable table = CsvTable::read(in);
  const std::size_t lat = table.column("lat");
  const std::size_t lon = table.column("lon");
  const std::size_t kind = table.column("kind");
  std::vector<Poi> entries;
  entries.reserve(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    std::string k = table.cell(r, kind);
    std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (k != "commercial") throw CsvError("unsupported POI kind '" + table.cell(r, kind) + "'");
    entries.push_back({{table.number(r, lat), table.number(r, lon)}, PoiKind::Commercial});
  }
  return PoiDatabase(std::move(entries));
}

PoiDatabase PoiDatabase::read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_csv(in);
}

void PoiDatabase::write_csv(std::ostream& out) const {
  out << "lat,lon,kind\n";
  char buf[64];
  for (const Poi& p : entries_) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,commercial\n", p.position.lat, p.position.lon);
    out << buf;
  }
}

}  // namespace telerank::geo
