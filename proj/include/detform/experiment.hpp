#pragma once

// Experiment orchestration: builds module inputs from a configuration, runs
// one experiment, writes its outputs and a manifest with content digests.

#include <cstdint>
#include <string>
#include <vector>

#include "detform/config.hpp"
#include "detform/nse.hpp"

namespace detform {

const char* version_string();

// Flow from the [flow] and [constants] sections; force files are read here.
FlowConfig build_flow(const ExperimentConfig& cfg);

struct OutputFile {
  std::string name;    // relative to the output directory
  std::string sha256;  // lowercase hex
  std::uintmax_t bytes = 0;
};

struct Assertion {
  std::string name;
  double value = 0;
  std::string relation;  // "<=", "<", ">="
  double threshold = 0;
  bool pass = false;
};

struct RunManifest {
  std::string name;
  std::string kind;
  std::string version;
  std::string started_utc;
  double wall_seconds = 0;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::string> defaulted;
  std::vector<OutputFile> outputs;
  std::vector<Assertion> assertions;
  std::vector<std::string> notes;
  std::string output_dir;

  bool passed() const;
  // One "PASS name: value relation threshold" line per assertion.
  std::string summary() const;
  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

// Runs the configured experiment and writes <output_dir>/manifest.json.
// Module errors are rethrown with the experiment name and kind prefixed.
RunManifest run_experiment(const ExperimentConfig& cfg);

struct ManifestCheck {
  bool ok = false;
  std::vector<std::string> problems;
};

// Recomputes every listed digest relative to the manifest's directory.
ManifestCheck verify_manifest(const std::string& manifest_path);

}  // namespace detform
