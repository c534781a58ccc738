#include "telerank/pipeline/journal.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <system_error>

#include "telerank/util/files.hpp"

namespace telerank::pipeline {
namespace {

void write_all(const std::filesystem::path& path, const std::string& data) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw std::system_error(errno, std::generic_category(), "open " + path.string());
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw std::system_error(err, std::generic_category(), "append " + path.string());
    }
    done += static_cast<std::size_t>(n);
  }
  if (::close(fd) != 0) throw std::system_error(errno, std::generic_category(), "close " + path.string());
}

}  // namespace

JournalError::JournalError(const std::filesystem::path& file, std::uint64_t offset, const std::string& message)
    : std::runtime_error(file.string() + ": corrupt record at byte offset " + std::to_string(offset) + ": " +
                         message),
      offset_(offset) {}

JournalLoad Journal::load(bool repair) const {
  JournalLoad out;
  if (!std::filesystem::exists(path_)) return out;
  const std::string data = read_file(path_);

  std::size_t pos = 0;
  while (pos < data.size()) {
    const std::size_t nl = data.find('\n', pos);
    const bool last = nl == std::string::npos || data.find_first_not_of(" \t\r\n", nl + 1) == std::string::npos;
    const std::size_t end = nl == std::string::npos ? data.size() : nl;
    const std::string_view line(data.data() + pos, end - pos);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (nl == std::string::npos) break;
      pos = nl + 1;
      continue;
    }
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    const bool torn = nl == std::string::npos;
    if (record.is_discarded() || !record.is_object() || torn) {
      if (!last) {
        throw JournalError(path_, pos, record.is_discarded() ? "unparsable JSON" : "record is not an object");
      }
      out.truncated_bytes = data.size() - pos;
      out.warning = path_.string() + ": " + (repair ? "dropped " : "ignoring ") +
                    std::to_string(out.truncated_bytes) + " bytes of incomplete trailing record at offset " +
                    std::to_string(pos);
      if (repair) std::filesystem::resize_file(path_, pos);
      break;
    }
    out.records.push_back(std::move(record));
    pos = nl + 1;
  }
  return out;
}

void Journal::append(const nlohmann::json& record) const { append_all(std::span<const nlohmann::json>(&record, 1)); }

void Journal::append_all(std::span<const nlohmann::json> records) const {
  if (records.empty()) return;
  std::string buf;
  for (const auto& r : records) {
    buf += r.dump();
    buf += '\n';
  }
  write_all(path_, buf);
}

std::uint64_t Journal::size_bytes() const {
  std::error_code ec;
  const auto n = std::filesystem::file_size(path_, ec);
  return ec ? 0 : n;
}

}  // namespace telerank::pipeline
