// SPDX-License-Identifier: Apache-2.0
#include "pipeline/pipeline.hpp"

#include <charconv>
#include <set>

#include "chem/canon.hpp"
#include "chem/smiles.hpp"
#include "common/error.hpp"
#include "common/io.hpp"

namespace molswap::pipeline {

namespace {

[[noreturn]] void bad_key(const std::string& section, const std::string& key) {
  fail(ErrorCode::kInvalidArgument, "unknown configuration key " + section + "." + key);
}

double to_double(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    try {
      std::size_t used = 0;
      const double d = std::stod(s, &used);
      if (used == s.size()) return d;
    } catch (const std::exception&) {
    }
  }
  fail(ErrorCode::kInvalidArgument, key + ": expected a number");
}

std::int64_t to_int(const json& v, const std::string& key) {
  const double d = to_double(v, key);
  if (d != static_cast<double>(static_cast<std::int64_t>(d))) fail(ErrorCode::kInvalidArgument, key + ": expected an integer");
  return static_cast<std::int64_t>(d);
}

std::uint64_t to_seed(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    std::uint64_t x = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec == std::errc() && p == s.data() + s.size()) return x;
  }
  const std::int64_t i = to_int(v, key);
  if (i < 0) fail(ErrorCode::kInvalidArgument, key + ": expected a non-negative integer");
  return static_cast<std::uint64_t>(i);
}

bool to_bool(const json& v, const std::string& key) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
  }
  if (v.is_number()) return v.get<double>() != 0.0;
  fail(ErrorCode::kInvalidArgument, key + ": expected a boolean");
}

std::string to_string_value(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

nn::Variant to_variant(const json& v, const std::string& key) {
  const std::string s = to_string_value(v);
  if (s == "BASE" || s == "base") return nn::Variant::kBase;
  if (s == "FPS" || s == "fps") return nn::Variant::kFps;
  fail(ErrorCode::kInvalidArgument, key + ": expected BASE or FPS");
}

std::string reason_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::kUnsupportedFeature:
      return "unsupported";
    case ErrorCode::kValence:
      return "valence";
    case ErrorCode::kNotConnected:
      return "disconnected";
    default:
      return "parse";
  }
}

std::string first_field(const std::string& line) {
  const auto end = line.find_first_of(" \t");
  return end == std::string::npos ? line : line.substr(0, end);
}

}  // namespace

json parse_config(std::string_view text) {
  json out = json::object();
  std::string section = "pipeline";
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = io::trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw Error(ErrorCode::kSyntax, "config line " + std::to_string(line_no) + ": bad section header", line_no);
      }
      section = io::trim(std::string_view(line).substr(1, line.size() - 2));
      if (!out.contains(section)) out[section] = json::object();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kSyntax, "config line " + std::to_string(line_no) + ": expected key = value", line_no);
    }
    const std::string key = io::trim(std::string_view(line).substr(0, eq));
    const std::string value = io::trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::kSyntax, "config line " + std::to_string(line_no) + ": empty key", line_no);
    out[section][key] = value;
    if (end == text.size()) break;
  }
  return out;
}

json load_config(const std::filesystem::path& path) { return parse_config(io::read_file(path)); }

train::TrainConfig train_config_from(const json& section, train::TrainConfig c) {
  if (section.is_null()) return c;
  for (const auto& [key, v] : section.items()) {
    if (key == "slice_size") c.slice_size = static_cast<int>(to_int(v, key));
    else if (key == "train_fraction") c.train_fraction = to_double(v, key);
    else if (key == "batch_size") c.batch_size = static_cast<int>(to_int(v, key));
    else if (key == "epochs") c.epochs = static_cast<int>(to_int(v, key));
    else if (key == "lr") c.lr = to_double(v, key);
    else if (key == "lr_pretrained") c.lr_pretrained = to_double(v, key);
    else if (key == "lr_fingerprint") c.lr_fingerprint = to_double(v, key);
    else if (key == "loss_des") c.loss_weights.des = to_double(v, key);
    else if (key == "loss_form") c.loss_weights.form = to_double(v, key);
    else if (key == "loss_break") c.loss_weights.brk = to_double(v, key);
    else if (key == "checkpoint_interval") c.checkpoint_interval = static_cast<int>(to_int(v, key));
    else if (key == "workers") c.workers = static_cast<int>(to_int(v, key));
    else if (key == "seed") c.seed = to_seed(v, key);
    else if (key == "variant") c.variant = to_variant(v, key);
    else if (key == "steps_factor") c.steps_factor = to_double(v, key);
    else if (key == "checkpoint") c.checkpoint_path = to_string_value(v);
    else if (key == "metrics") c.metrics_path = to_string_value(v);
    else if (key == "summary") c.summary_path = to_string_value(v);
    else if (key == "resume") c.resume = to_bool(v, key);
    else if (key == "resample_trajectories") c.resample_trajectories = to_bool(v, key);
    else if (key == "stop_after_steps") c.stop_after_steps = to_int(v, key);
    else bad_key("train", key);
  }
  c.validate();
  return c;
}

sample::SampleConfig sample_config_from(const json& section, sample::SampleConfig c) {
  if (section.is_null()) return c;
  for (const auto& [key, v] : section.items()) {
    if (key == "steps_factor") c.steps_factor = to_double(v, key);
    else if (key == "threshold_start") c.threshold_start = to_double(v, key);
    else if (key == "threshold_decrement") c.threshold_decrement = to_double(v, key);
    else if (key == "randomization_factor") c.randomization_factor = to_double(v, key);
    else if (key == "seed") c.seed = to_seed(v, key);
    else if (key == "uniform_candidates") c.uniform_candidates = to_bool(v, key);
    else if (key == "workers") c.workers = static_cast<int>(to_int(v, key));
    else bad_key("sample", key);
  }
  c.validate();
  return c;
}

void AdmissionRules::validate() const {
  if (min_atoms < 2 || max_atoms > 200 || min_atoms > max_atoms) {
    fail(ErrorCode::kInvalidArgument, "admission atom range must lie within [2, 200]");
  }
}

AdmissionRules admission_from(const json& section, AdmissionRules r) {
  if (section.is_null()) return r;
  for (const auto& [key, v] : section.items()) {
    if (key == "min_atoms") r.min_atoms = static_cast<int>(to_int(v, key));
    else if (key == "max_atoms") r.max_atoms = static_cast<int>(to_int(v, key));
    else bad_key("admission", key);
  }
  r.validate();
  return r;
}

json IngestResult::report() const {
  json rej = json::object();
  for (const auto& [reason, n] : rejected) rej[reason] = n;
  json lines = json::array();
  for (const auto& r : rejections) lines.push_back({{"line", r.line}, {"reason", r.reason}, {"message", r.message}});
  return {{"input", input_lines}, {"admitted", admitted.size()}, {"rejected", rej}, {"rejections", lines}};
}

IngestResult ingest_lines(const std::vector<std::string>& lines, const AdmissionRules& rules) {
  rules.validate();
  IngestResult res;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string text = io::trim(lines[i]);
    if (text.empty() || text.front() == '#') continue;
    ++res.input_lines;
    auto reject = [&](std::string reason, std::string message) {
      ++res.rejected[reason];
      res.rejections.push_back({i + 1, std::move(reason), std::move(message)});
    };
    chem::MolGraph g;
    try {
      g = chem::parse_smiles(first_field(text));
    } catch (const Error& e) {
      reject(reason_for(e.code()), e.what());
      continue;
    }
    if (g.atom_count() < rules.min_atoms || g.atom_count() > rules.max_atoms) {
      reject("size", std::to_string(g.atom_count()) + " atoms");
      continue;
    }
    const auto sig = chem::canonical_signature(g).text;
    if (!seen.insert(sig).second) {
      reject("duplicate", "same molecule as an earlier line");
      continue;
    }
    res.admitted.push_back(chem::write_smiles(g));
    res.graphs.push_back(std::move(g));
  }
  return res;
}

IngestResult ingest_file(const std::filesystem::path& path, const AdmissionRules& rules) {
  const std::string text = io::read_file(path);
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    lines.emplace_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  return ingest_lines(lines, rules);
}

std::vector<std::string> read_smiles_column(const std::filesystem::path& path) {
  std::vector<std::string> out;
  for (const auto& l : io::read_dataset_lines(path)) out.push_back(first_field(l.text));
  return out;
}

std::vector<chem::MolGraph> read_molecules(const std::filesystem::path& path) {
  std::vector<chem::MolGraph> out;
  for (const auto& l : io::read_dataset_lines(path)) {
    try {
      out.push_back(chem::parse_smiles(first_field(l.text)));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(l.line_number) + ": " + e.what(), e.position());
    }
  }
  return out;
}

}  // namespace molswap::pipeline
