#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace telerank::pipeline {

class JournalError : public std::runtime_error {
 public:
  JournalError(const std::filesystem::path& file, std::uint64_t offset, const std::string& message);
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

struct JournalLoad {
  std::vector<nlohmann::json> records;
  std::uint64_t truncated_bytes = 0;  // torn tail removed from disk
  std::string warning;
};

// Append-only JSON-lines file. Each record is written as one line with a
// single write call. On load, an incomplete or unparsable final line is
// treated as a torn append and cut off; damage anywhere else is fatal.
class Journal {
 public:
  explicit Journal(std::filesystem::path path) : path_(std::move(path)) {}

  const std::filesystem::path& path() const noexcept { return path_; }

  // A missing file is an empty journal. With `repair` false a torn tail is
  // skipped but left on disk, which is what concurrent readers need.
  JournalLoad load(bool repair = true) const;

  void append(const nlohmann::json& record) const;
  void append_all(std::span<const nlohmann::json> records) const;

  std::uint64_t size_bytes() const;

 private:
  std::filesystem::path path_;
};

}  // namespace telerank::pipeline
