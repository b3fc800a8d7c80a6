// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chem/molgraph.hpp"
#include "sampler/sampler.hpp"
#include "trainer/trainer.hpp"

namespace molswap::pipeline {

using nlohmann::json;

// Plain-text configuration: "[section]" headers and "key = value" lines,
// '#' comments. Parsed into {section: {key: value-string}}; keys before the
// first header go to "pipeline". Throws kSyntax with the line number.
json parse_config(std::string_view text);
json load_config(const std::filesystem::path& path);
inline constexpr const char* kConfigEnv = "MOLSWAP_CONFIG";

// Typed readers accepting numbers, booleans or their string forms. Unknown
// keys raise kInvalidArgument so typos do not pass silently.
train::TrainConfig train_config_from(const json& section, train::TrainConfig base = {});
sample::SampleConfig sample_config_from(const json& section, sample::SampleConfig base = {});

struct AdmissionRules {
  int min_atoms = 5;
  int max_atoms = 70;

  void validate() const;  // range within [2, 200]
};
AdmissionRules admission_from(const json& section, AdmissionRules base = {});

struct Rejection {
  std::size_t line = 0;
  std::string reason;  // parse, unsupported, valence, disconnected, size, duplicate
  std::string message;
};

struct IngestResult {
  std::vector<std::string> admitted;  // canonical SMILES, input order
  std::vector<chem::MolGraph> graphs;
  std::size_t input_lines = 0;
  std::map<std::string, std::size_t> rejected;
  std::vector<Rejection> rejections;

  json report() const;
};

// Each dataset line is a SMILES optionally followed by whitespace and a name.
IngestResult ingest_lines(const std::vector<std::string>& lines, const AdmissionRules& rules);
IngestResult ingest_file(const std::filesystem::path& path, const AdmissionRules& rules);

// First whitespace-separated field of every dataset line.
std::vector<std::string> read_smiles_column(const std::filesystem::path& path);
// Parses every line as an admitted molecule; throws with the line number on
// the first failure.
std::vector<chem::MolGraph> read_molecules(const std::filesystem::path& path);

}  // namespace molswap::pipeline
