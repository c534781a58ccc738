#include <filesystem>
#include <set>
#include <sstream>

#include "doctest.h"
#include "telerank/util/csv.hpp"
#include "telerank/util/files.hpp"
#include "telerank/util/random.hpp"
#include "telerank/util/time.hpp"

using namespace telerank;

TEST_CASE("ISO-8601 parsing and formatting") {
  CHECK(parse_iso8601("1970-01-01") == 0);
  CHECK(parse_iso8601("2024-02-01T00:00:00Z") == 1706745600);
  CHECK(parse_iso8601("2024-02-01T01:00:00+01:00") == 1706745600);
  CHECK(parse_iso8601("2024-01-31T19:30:00-04:30") == 1706745600);
  CHECK(parse_iso8601("2024-02-29T12:00:00") == 1709208000);
  CHECK(format_iso8601(1706745600) == "2024-02-01T00:00:00Z");
  CHECK(format_date(1706745600 + 86399) == "2024-02-01");
  CHECK(format_date(-1) == "1969-12-31");
  for (UnixSeconds t : {0LL, 951782400LL, 1706745599LL, 4102444800LL}) CHECK(parse_iso8601(format_iso8601(t)) == t);
  CHECK_THROWS_AS(parse_iso8601("2024-13-01"), std::invalid_argument);
  CHECK_THROWS_AS(parse_iso8601("2023-02-29"), std::invalid_argument);
  CHECK_THROWS_AS(parse_iso8601("yesterday"), std::invalid_argument);
  CHECK_THROWS_AS(parse_iso8601("2024-02-01T25:00:00Z"), std::invalid_argument);
}

TEST_CASE("CSV reader") {
  std::istringstream in("a,b,c\n1,2.5,x\n\n3,-4,y\n");
  const auto t = CsvTable::read(in);
  CHECK(t.rows() == 2);
  CHECK(t.column("b") == 1);
  CHECK(t.has_column("c"));
  CHECK_FALSE(t.has_column("d"));
  CHECK(t.number(0, 1) == 2.5);
  CHECK(t.integer(1, 0) == 3);
  CHECK(t.cell(1, 2) == "y");
  CHECK_THROWS(t.column("d"));
  CHECK_THROWS(t.integer(0, 2));

  std::istringstream ragged("a,b\n1\n");
  CHECK_THROWS_AS(CsvTable::read(ragged), CsvError);
  CHECK(split_csv_line("x,,z") == std::vector<std::string>{"x", "", "z"});
}

TEST_CASE("atomic file writes replace content") {
  const auto dir = std::filesystem::temp_directory_path() / "telerank_util_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto path = dir / "f.txt";
  write_file_atomic(path, "first");
  write_file_atomic(path, "second\n");
  CHECK(read_file(path) == "second\n");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++entries;
  CHECK(entries == 1);
  CHECK_THROWS(read_file(dir / "missing"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("derived seeds are distinct and stable") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(42, s));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(42, "policy-1") == derive_seed(42, "policy-1"));
  CHECK(derive_seed(42, "policy-1") != derive_seed(43, "policy-1"));
  Rng a(derive_seed(9, 3)), b(derive_seed(9, 3));
  for (int i = 0; i < 10; ++i) CHECK(a() == b());
}
