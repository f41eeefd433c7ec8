#include "cbm/store/journal.hpp"

#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

namespace cbm::store {

Journal::Journal(std::filesystem::path path, Durability durability)
    : path_(std::move(path)), durability_(durability) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    {
        std::ifstream in(path_);
        std::string line;
        while (std::getline(in, line)) {
            if (!in.eof()) lines_.push_back(line);
        }
    }
    file_ = std::fopen(path_.c_str(), "ab");
    if (!file_) throw IoFailure("cannot open journal " + path_.string() + ": " + std::strerror(errno));
}

Journal::~Journal() {
    if (file_) {
        std::fflush(file_);
        ::fsync(fileno(file_));
        std::fclose(file_);
    }
}

std::uint64_t Journal::append(const std::string& line) {
    if (line.find('\n') != std::string::npos) throw IoFailure("journal entries are single lines");
    const std::string out = line + "\n";
    if (std::fwrite(out.data(), 1, out.size(), file_) != out.size() || std::fflush(file_) != 0) {
        throw IoFailure("write to " + path_.string() + " failed: " + std::strerror(errno));
    }
    if (durability_ == Durability::fsync && ::fsync(fileno(file_)) != 0) {
        throw IoFailure("fsync of " + path_.string() + " failed: " + std::strerror(errno));
    }
    lines_.push_back(line);
    return lines_.size() - 1;
}

void Journal::sync() {
    std::fflush(file_);
    ::fsync(fileno(file_));
}

}  // namespace cbm::store
