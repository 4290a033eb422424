#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

// Scratch directory helpers for tests that touch the filesystem.
namespace testsupport {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        base_ = std::filesystem::temp_directory_path() /
                ("sentifuse_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(base_);
        std::filesystem::create_directories(base_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(base_, ec);
    }
    std::string path(const std::string& name) const {
        return (base_ / name).string();
    }
    std::string root() const { return base_.string(); }

private:
    std::filesystem::path base_;
};

inline std::string write_file(const TempDir& dir, const std::string& name,
                              const std::string& content) {
    const std::string path = dir.path(name);
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

} // namespace testsupport
