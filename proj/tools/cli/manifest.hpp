#pragma once

// Output directory bookkeeping. Every file goes through OutputDir so the
// manifest (written last) lists each one with its SHA-256.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "benjamin/io.hpp"

namespace benjamin::cli {

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string sha256_hex(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw OutputError("cannot read '" + file.string() + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw OutputError("sha256 init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount())) != 1)
      throw OutputError("sha256 update failed");
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) throw OutputError("sha256 final failed");
  std::string hex;
  char two[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(two, sizeof two, "%02x", md[i]);
    hex += two;
  }
  return hex;
}

inline constexpr const char* manifest_name = "manifest.json";

class OutputDir {
 public:
  /// Creates the directory. Files listed by the manifest of an earlier run
  /// are removed; any other existing file is an error.
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw OutputError("cannot create output directory '" + root_.string() + "': " + ec.message());
    std::set<std::string> previous;
    const auto old = root_ / manifest_name;
    if (fs::exists(old)) {
      try {
        std::ifstream in(old);
        const auto j = nlohmann::json::parse(in);
        for (const auto& f : j.at("files")) previous.insert(f.at("path").get<std::string>());
      } catch (const std::exception& e) {
        throw OutputError("unreadable manifest in '" + root_.string() + "': " + e.what());
      }
      previous.insert(manifest_name);
    }
    for (const auto& e : fs::recursive_directory_iterator(root_)) {
      if (!e.is_regular_file()) continue;
      const auto rel = fs::relative(e.path(), root_).generic_string();
      if (!previous.count(rel))
        throw OutputError("output directory '" + root_.string() + "' holds '" + rel +
                          "', which no earlier run produced; choose another directory");
    }
    for (const auto& rel : previous) fs::remove(root_ / rel, ec);
  }

  const std::filesystem::path& root() const noexcept { return root_; }

  /// Writes root/rel through the callback and registers it.
  void write(const std::string& rel, const std::function<void(std::ostream&)>& body) {
    const auto path = root_ / rel;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OutputError("cannot write '" + path.string() + "'");
    body(out);
    out.flush();
    if (!out) throw OutputError("write to '" + path.string() + "' failed");
    files_.push_back(rel);
  }

  void write_json(const std::string& rel, const nlohmann::json& j) {
    write(rel, [&](std::ostream& os) {
      io::write_json(os, j);
      os << '\n';
    });
  }

  const std::vector<std::string>& files() const noexcept { return files_; }

 private:
  std::filesystem::path root_;
  std::vector<std::string> files_;
};

struct RunManifest {
  std::string command;
  std::string config_path;
  std::map<std::string, std::string> config_echo;
  nlohmann::json statistics = nlohmann::json::object();
  std::vector<std::pair<std::string, double>> timings;  // seconds per phase
  std::vector<std::string> warnings;
  bool partial = false;
  int exit_code = 0;
  std::string message;

  void time(const std::string& phase, double seconds) { timings.emplace_back(phase, seconds); }

  /// Hashes every registered file and writes the manifest.
  void finalize(OutputDir& dir) const {
    nlohmann::json j;
    j["format"] = "benjamin-manifest 1";
    j["command"] = command;
    j["config"] = {{"path", config_path}, {"values", config_echo}};
    j["partial"] = partial;
    j["exit_code"] = exit_code;
    if (!message.empty()) j["message"] = message;
    j["warnings"] = warnings;
    j["statistics"] = statistics;
    nlohmann::json t = nlohmann::json::object();
    for (const auto& [k, v] : timings) t[k] = v;
    j["timings_seconds"] = t;
    nlohmann::json files = nlohmann::json::array();
    for (const auto& rel : dir.files()) {
      const auto path = dir.root() / rel;
      files.push_back({{"path", rel},
                       {"sha256", sha256_hex(path)},
                       {"bytes", static_cast<std::uintmax_t>(std::filesystem::file_size(path))}});
    }
    j["files"] = files;
    const auto path = dir.root() / manifest_name;
    std::ofstream out(path);
    if (!out) throw OutputError("cannot write manifest '" + path.string() + "'");
    io::write_json(out, j);
    out << '\n';
  }
};

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace benjamin::cli
