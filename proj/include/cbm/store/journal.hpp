#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "cbm/store/store.hpp"

namespace cbm::store {

/// Append-only line journal. Each entry is one line; the position of a
/// line (0-based) is its cursor.
class Journal {
  public:
    Journal(std::filesystem::path path, Durability durability = Durability::fsync);
    ~Journal();
    Journal(const Journal&) = delete;
    Journal& operator=(const Journal&) = delete;

    /// Appends one line (must not contain a newline) and returns its cursor.
    std::uint64_t append(const std::string& line);
    std::uint64_t size() const { return lines_.size(); }
    const std::vector<std::string>& lines() const { return lines_; }
    const std::filesystem::path& path() const { return path_; }
    void sync();

  private:
    std::filesystem::path path_;
    Durability durability_;
    std::FILE* file_ = nullptr;
    std::vector<std::string> lines_;
};

}  // namespace cbm::store
