#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace sbrsf::cli {

constexpr const char* kToolVersion = "0.1.0";

// Everything needed to reproduce a run plus an inventory of what it wrote.
class RunManifest {
public:
  RunManifest(std::string command, std::uint64_t seed, unsigned workers)
      : command_(std::move(command)), seed_(seed), workers_(workers) {}

  void set_resolved_spec(const std::string& text) { resolved_spec_ = text; }
  void note(const std::string& key, const nlohmann::json& value) { extra_[key] = value; }

  void add_output(const std::filesystem::path& staged, const std::string& final_name) {
    nlohmann::json o;
    o["file"] = final_name;
    o["bytes"] = std::filesystem::exists(staged)
                     ? static_cast<std::uint64_t>(std::filesystem::file_size(staged))
                     : 0;
    outputs_.push_back(o);
  }

  void stage_done(const std::string& name, double ms) {
    nlohmann::json s;
    s["name"] = name;
    s["ms"] = ms;
    stages_.push_back(s);
  }

  void set_error(const std::string& stage, const std::string& message) {
    error_ = nlohmann::json{{"stage", stage}, {"message", message}};
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["tool"] = "sbrsf";
    j["version"] = kToolVersion;
    j["command"] = command_;
    j["seed"] = seed_;
    j["workers"] = workers_;
    j["resolved_spec"] = resolved_spec_;
    j["stages"] = stages_;
    j["outputs"] = outputs_;
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    if (!error_.is_null()) j["error"] = error_;
    return j;
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path);
    out << to_json().dump(2) << "\n";
  }

private:
  std::string command_;
  std::uint64_t seed_;
  unsigned workers_;
  std::string resolved_spec_;
  nlohmann::json stages_ = nlohmann::json::array();
  nlohmann::json outputs_ = nlohmann::json::array();
  nlohmann::json extra_ = nlohmann::json::object();
  nlohmann::json error_;
};

class StageTimer {
public:
  StageTimer() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace sbrsf::cli
