#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "catembed/tabular.hpp"

namespace testutil {

// Scratch directory, removed on scope exit. Unique per instance so test
// cases never share files even when run in one process.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        const unsigned id = counter.fetch_add(1);
        path_ = std::filesystem::temp_directory_path() /
                ("catembed-test-" + std::to_string(::getpid()) + "-" + std::to_string(id));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline catembed::tabular::Column numeric_column(std::vector<double> values,
                                                std::vector<char> missing = {}) {
    catembed::tabular::Column col;
    col.type = catembed::tabular::Column::Type::Numeric;
    col.numeric = std::move(values);
    col.missing = missing.empty() ? std::vector<char>(col.numeric.size(), 0) : std::move(missing);
    return col;
}

inline catembed::tabular::Column category_column(std::vector<std::string> values,
                                                 std::vector<char> missing = {}) {
    catembed::tabular::Column col;
    col.type = catembed::tabular::Column::Type::Categorical;
    col.categories = std::move(values);
    col.missing =
        missing.empty() ? std::vector<char>(col.categories.size(), 0) : std::move(missing);
    return col;
}

}  // namespace testutil
