#pragma once

// Fixture benchmarks are checked in with their databases as SQL scripts.
// materialize() copies a fixture into a scratch directory and turns every
// `<dir>/<db>.sql` into `<dir>/<db>/<db>.sqlite`, the distributed layout.

#include <sqlite3.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <unistd.h>

namespace nl2sql360::test_support {

namespace fs = std::filesystem;

inline fs::path fixture_dir(const std::string& name) { return fs::path(NL2SQL360_FIXTURE_DIR) / name; }

/// Scratch directory removed on destruction.
class TempDir {
  public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("nl2sql360-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

  private:
    fs::path path_;
};

inline void build_sqlite(const fs::path& script, const fs::path& db_path) {
    std::ifstream in(script);
    std::stringstream ss;
    ss << in.rdbuf();
    fs::create_directories(db_path.parent_path());
    fs::remove(db_path);
    sqlite3* db = nullptr;
    if (sqlite3_open(db_path.c_str(), &db) != SQLITE_OK) throw std::runtime_error("cannot create " + db_path.string());
    char* err = nullptr;
    const int rc = sqlite3_exec(db, ss.str().c_str(), nullptr, nullptr, &err);
    const std::string message = err ? err : "";
    sqlite3_free(err);
    sqlite3_close(db);
    if (rc != SQLITE_OK) throw std::runtime_error(script.string() + ": " + message);
}

inline void materialize(const fs::path& source, const fs::path& dest) {
    for (const auto& entry : fs::recursive_directory_iterator(source)) {
        const fs::path rel = fs::relative(entry.path(), source);
        if (entry.is_directory()) {
            fs::create_directories(dest / rel);
        } else if (entry.path().extension() == ".sql") {
            const std::string db = entry.path().stem().string();
            build_sqlite(entry.path(), dest / rel.parent_path() / db / (db + ".sqlite"));
        } else {
            fs::create_directories((dest / rel).parent_path());
            fs::copy_file(entry.path(), dest / rel, fs::copy_options::overwrite_existing);
        }
    }
}

/// The 20-sample, 3-database benchmark in a fresh scratch directory.
class MiniBenchmark {
  public:
    explicit MiniBenchmark(const std::string& name = "mini") { materialize(fixture_dir(name), dir_.path()); }
    const fs::path& root() const { return dir_.path(); }

  private:
    TempDir dir_;
};

}  // namespace nl2sql360::test_support
