// SPDX-License-Identifier: Apache-2.0
#include "molswap/molswap.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <set>
#include <string>

#include <json.hpp>

#include "chem/canon.hpp"
#include "chem/smiles.hpp"
#include "common/error.hpp"
#include "common/io.hpp"
#include "diffusion/des.hpp"
#include "evaluate/evaluate.hpp"
#include "featurize/features.hpp"
#include "neural/model.hpp"
#include "pipeline/pipeline.hpp"
#include "sampler/sampler.hpp"
#include "trainer/trainer.hpp"
#include "turing/turing.hpp"

using namespace molswap;
using nlohmann::json;
namespace fs = std::filesystem;

struct msw_molecule {
  chem::MolGraph graph;
};

struct msw_weights {
  nn::ModelWeights weights;
};

struct msw_server {
  std::unique_ptr<turing::Service> service;
  std::unique_ptr<turing::HttpServer> http;
  int port = -1;
};

namespace {

static_assert(static_cast<int>(ErrorCode::kInternal) + 1 == MSW_ERR_INTERNAL, "status table out of sync");

thread_local std::string g_last_error;
thread_local std::size_t g_last_position = Error::kNoPosition;

msw_status set_error(msw_status s, std::string message, std::size_t position = Error::kNoPosition) {
  g_last_error = std::move(message);
  g_last_position = position;
  return s;
}

template <class F>
msw_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    g_last_position = Error::kNoPosition;
    return MSW_OK;
  } catch (const Error& e) {
    return set_error(static_cast<msw_status>(static_cast<int>(e.code()) + 1), e.what(), e.position());
  } catch (const fs::filesystem_error& e) {
    return set_error(MSW_ERR_IO, e.what());
  } catch (const json::exception& e) {
    return set_error(MSW_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return set_error(MSW_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(MSW_ERR_INTERNAL, "unknown failure");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) fail(ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

json parse_config_json(const char* text) {
  if (!text || !*text) return json::object();
  json j = json::parse(text);
  if (!j.is_object()) fail(ErrorCode::kInvalidArgument, "configuration must be a JSON object");
  return j;
}

json section(const json& cfg, const char* name) { return cfg.contains(name) ? cfg.at(name) : json(); }

int workers_from(const json& cfg) {
  const json p = section(cfg, "pipeline");
  if (p.is_object() && p.contains("workers")) {
    const json& v = p.at("workers");
    const int w = v.is_number() ? v.get<int>() : std::stoi(v.get<std::string>());
    if (w <= 0) fail(ErrorCode::kInvalidArgument, "workers must be positive");
    return w;
  }
  return 1;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json train_summary(const train::TrainResult& r) {
  json epochs = json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"validation_loss", e.validation_loss},
                      {"train_items", e.train_items},
                      {"validation_items", e.validation_items},
                      {"optimizer_steps", e.optimizer_steps}});
  }
  return {{"kind", nn::kind_name(r.weights.kind())},
          {"variant", nn::variant_name(r.weights.variant())},
          {"parameters", r.weights.parameter_count()},
          {"optimizer_steps", r.optimizer_steps},
          {"skipped_molecules", r.skipped_molecules},
          {"completed", r.completed},
          {"epochs", std::move(epochs)}};
}

std::vector<chem::MolFormula> read_formulas(const fs::path& path, const std::string& source) {
  bool smiles = path.extension() == ".smi";
  if (source == "smiles") smiles = true;
  else if (source == "formulas") smiles = false;
  else if (source != "auto") fail(ErrorCode::kInvalidArgument, "formula_source must be auto, smiles or formulas");
  std::vector<chem::MolFormula> out;
  for (const auto& l : io::read_dataset_lines(path)) {
    const std::string field = l.text.substr(0, l.text.find_first_of(" \t"));
    try {
      out.push_back(smiles ? chem::formula_of(chem::parse_smiles(field)) : chem::MolFormula::parse(field));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(l.line_number) + ": " + e.what());
    }
  }
  return out;
}

std::set<std::string> read_training_signatures(const fs::path& path) {
  std::set<std::string> out;
  for (const auto& l : io::read_dataset_lines(path)) {
    const std::string field = l.text.substr(0, l.text.find_first_of(" \t"));
    if (field.find('|') != std::string::npos) {
      out.insert(field);
      continue;
    }
    try {
      out.insert(chem::canonical_signature(chem::parse_smiles(field)).text);
    } catch (const Error&) {
    }
  }
  return out;
}

}  // namespace

extern "C" {

const char* msw_version(void) { return "0.4.0"; }

const char* msw_status_name(msw_status status) {
  if (status == MSW_OK) return "Ok";
  if (status < MSW_OK || status > MSW_ERR_INTERNAL) return "Unknown";
  static thread_local std::string name;
  name = std::string(error_code_name(static_cast<ErrorCode>(static_cast<int>(status) - 1)));
  return name.c_str();
}

const char* msw_last_error(void) { return g_last_error.c_str(); }
size_t msw_last_error_position(void) { return g_last_position; }
void msw_string_free(char* s) { std::free(s); }

msw_status msw_molecule_parse(const char* smiles, msw_molecule** out) {
  return guard([&] {
    require(smiles, "smiles");
    require(out, "out");
    *out = nullptr;
    auto m = std::make_unique<msw_molecule>();
    m->graph = chem::parse_smiles(smiles);
    *out = m.release();
  });
}

void msw_molecule_free(msw_molecule* m) { delete m; }
int msw_molecule_atom_count(const msw_molecule* m) { return m ? m->graph.atom_count() : -1; }
int msw_molecule_bond_count(const msw_molecule* m) { return m ? m->graph.bond_count() : -1; }

msw_status msw_molecule_smiles(const msw_molecule* m, char** out) {
  return guard([&] {
    require(m, "molecule");
    require(out, "out");
    *out = dup_string(chem::write_smiles(m->graph));
  });
}

msw_status msw_molecule_signature(const msw_molecule* m, char** out) {
  return guard([&] {
    require(m, "molecule");
    require(out, "out");
    *out = dup_string(chem::canonical_signature(m->graph).text);
  });
}

msw_status msw_molecule_formula(const msw_molecule* m, char** out) {
  return guard([&] {
    require(m, "molecule");
    require(out, "out");
    *out = dup_string(chem::formula_of(m->graph).to_string());
  });
}

msw_status msw_molecule_fingerprint(const msw_molecule* m, unsigned char bits[MSW_FINGERPRINT_BYTES]) {
  return guard([&] {
    require(m, "molecule");
    require(bits, "bits");
    const auto fp = feat::fingerprint(m->graph);
    std::memset(bits, 0, MSW_FINGERPRINT_BYTES);
    for (std::size_t i = 0; i < fp.size(); ++i) {
      if (fp[i]) bits[i / 8] = static_cast<unsigned char>(bits[i / 8] | (1u << (i % 8)));
    }
  });
}

msw_status msw_tanimoto(const msw_molecule* a, const msw_molecule* b, double* out) {
  return guard([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    *out = feat::tanimoto(feat::fingerprint(a->graph), feat::fingerprint(b->graph));
  });
}

msw_status msw_molecule_descriptors(const msw_molecule* m, char** out) {
  return guard([&] {
    require(m, "molecule");
    require(out, "out");
    const auto d = eval::descriptors(m->graph);
    nlohmann::ordered_json j;
    for (int i = 0; i < eval::kDescriptorCount; ++i) {
      if (i == eval::kInternalSimilarity) continue;
      j[std::string(eval::kDescriptorIds[static_cast<std::size_t>(i)])] = d.values[static_cast<std::size_t>(i)];
    }
    *out = dup_string(j.dump());
  });
}

msw_status msw_molecule_features(const msw_molecule* m, double t, char** out) {
  return guard([&] {
    require(m, "molecule");
    require(out, "out");
    const auto f = feat::featurize(m->graph, t);
    json bonds = json::array();
    for (const auto& [a, b] : f.bonds) bonds.push_back({a, b, m->graph.multiplicity(a, b)});
    json g = json::array();
    for (Eigen::Index i = 0; i < f.g.size(); ++i) g.push_back(f.g(i));
    nlohmann::ordered_json j;
    j["n"] = f.n;
    j["t"] = f.t;
    j["bonds"] = bonds;
    j["X"] = matrix_json(f.X);
    j["E_bonded"] = matrix_json(f.E);
    j["g"] = g;
    *out = dup_string(j.dump());
  });
}

msw_status msw_molecule_noise(const msw_molecule* m, int steps, uint64_t seed, double steps_factor, char** out) {
  return guard([&] {
    require(m, "molecule");
    require(out, "out");
    if (!(steps_factor > 0.0)) fail(ErrorCode::kInvalidArgument, "steps_factor must be positive");
    std::optional<int> s;
    if (steps > 0) s = steps;
    const auto tr = diffusion::noise_trajectory(m->graph, s, seed, steps_factor);
    json states = json::array();
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
      states.push_back({{"step", k},
                        {"t", tr.times[k]},
                        {"smiles", chem::write_smiles(tr.states[k])},
                        {"signature", chem::canonical_signature(tr.states[k]).text}});
    }
    json moves = json::array();
    for (const auto& mv : tr.moves) moves.push_back({mv.i, mv.j, mv.k, mv.l});
    nlohmann::ordered_json j;
    j["planned_steps"] = tr.planned_steps;
    j["truncated"] = tr.truncated;
    j["states"] = states;
    j["moves"] = moves;
    *out = dup_string(j.dump());
  });
}

msw_status msw_weights_init(msw_model_kind kind, msw_variant variant, uint64_t seed, msw_weights** out) {
  return guard([&] {
    require(out, "out");
    const auto v = variant == MSW_VARIANT_FPS ? nn::Variant::kFps : nn::Variant::kBase;
    auto w = std::make_unique<msw_weights>();
    w->weights = kind == MSW_MODEL_TIME ? nn::init_time(v, seed) : nn::init_diffusion(v, seed);
    *out = w.release();
  });
}

msw_status msw_weights_load(const char* path, msw_weights** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto w = std::make_unique<msw_weights>();
    w->weights = nn::load_weights(path);
    *out = w.release();
  });
}

msw_status msw_weights_save(const msw_weights* w, const char* path) {
  return guard([&] {
    require(w, "weights");
    require(path, "path");
    nn::save_weights(w->weights, path);
  });
}

void msw_weights_free(msw_weights* w) { delete w; }

msw_model_kind msw_weights_kind(const msw_weights* w) {
  return w && w->weights.kind() == nn::ModelKind::kTime ? MSW_MODEL_TIME : MSW_MODEL_DIFFUSION;
}

msw_variant msw_weights_variant(const msw_weights* w) {
  return w && w->weights.variant() == nn::Variant::kFps ? MSW_VARIANT_FPS : MSW_VARIANT_BASE;
}

size_t msw_weights_parameter_count(const msw_weights* w) { return w ? w->weights.parameter_count() : 0; }

msw_status msw_config_load(const char* path, char** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = dup_string(pipeline::load_config(path).dump());
  });
}

msw_status msw_ingest(const char* in_path, const char* out_path, const char* config_json, char** report_json) {
  return guard([&] {
    require(in_path, "in_path");
    require(out_path, "out_path");
    const json cfg = parse_config_json(config_json);
    const auto rules = pipeline::admission_from(section(cfg, "admission"));
    const auto res = pipeline::ingest_file(in_path, rules);
    std::string text;
    for (const auto& s : res.admitted) text += s + "\n";
    io::write_file_atomic(out_path, text);
    if (report_json) *report_json = dup_string(res.report().dump());
  });
}

msw_status msw_train(msw_model_kind kind, const char* dataset_path, const char* config_json, const char* weights_out,
                     char** summary_json) {
  return guard([&] {
    require(dataset_path, "dataset_path");
    require(weights_out, "weights_out");
    const json cfg = parse_config_json(config_json);
    const auto tc = pipeline::train_config_from(section(cfg, "train"));
    const auto data = pipeline::read_molecules(dataset_path);
    const auto res = kind == MSW_MODEL_TIME ? train::train_time(data, tc) : train::train_diffusion(data, tc);
    if (res.completed) nn::save_weights(res.weights, weights_out);
    if (summary_json) *summary_json = dup_string(train_summary(res).dump());
  });
}

msw_status msw_finetune_fps(const char* base_weights_path, const char* dataset_path, const char* config_json,
                            const char* weights_out, char** summary_json) {
  return guard([&] {
    require(base_weights_path, "base_weights_path");
    require(dataset_path, "dataset_path");
    require(weights_out, "weights_out");
    const json cfg = parse_config_json(config_json);
    const auto tc = pipeline::train_config_from(section(cfg, "train"));
    const auto base = nn::load_weights(base_weights_path);
    const auto data = pipeline::read_molecules(dataset_path);
    const auto res = train::finetune_fps(base, data, tc);
    if (res.completed) nn::save_weights(res.weights, weights_out);
    if (summary_json) *summary_json = dup_string(train_summary(res).dump());
  });
}

msw_status msw_sample(const char* formulas_path, size_t count, const char* diffusion_weights_path,
                      const char* time_weights_path, const char* config_json, const char* out_path,
                      const char* report_path, char** summary_json) {
  return guard([&] {
    require(formulas_path, "formulas_path");
    require(diffusion_weights_path, "diffusion_weights_path");
    require(time_weights_path, "time_weights_path");
    require(out_path, "out_path");
    json cfg = parse_config_json(config_json);
    json sec = section(cfg, "sample");
    std::string source = "auto";
    if (sec.is_object() && sec.contains("formula_source")) {
      source = sec["formula_source"].get<std::string>();
      sec.erase("formula_source");
    }
    if (!sec.is_object() || !sec.contains("workers")) {
      if (!sec.is_object()) sec = json::object();
      sec["workers"] = workers_from(cfg);
    }
    const auto sc = pipeline::sample_config_from(sec);
    const auto lines = read_formulas(formulas_path, source);
    std::vector<chem::MolFormula> formulas;
    const std::size_t n = count == 0 ? lines.size() : count;
    if (!lines.empty()) {
      for (std::size_t i = 0; i < n; ++i) formulas.push_back(lines[i % lines.size()]);
    }
    auto dw = nn::load_weights(diffusion_weights_path);
    auto tw = nn::load_weights(time_weights_path);
    if (dw.kind() != nn::ModelKind::kDiffusion) fail(ErrorCode::kVersionMismatch, "expected diffusion weights");
    if (tw.kind() != nn::ModelKind::kTime) fail(ErrorCode::kVersionMismatch, "expected time weights");
    const auto rep = sample::generate_batch(formulas, dw, tw, sc);
    std::string smiles, rows;
    for (const auto& it : rep.items) {
      if (it.smiles) smiles += *it.smiles + "\n";
      json row = {{"index", it.index},      {"formula", it.formula},   {"steps", it.steps},
                  {"stalled", it.stalled},  {"seconds", it.seconds}};
      if (it.smiles) {
        row["smiles"] = *it.smiles;
        row["signature"] = it.signature;
        row["best_t_pred"] = it.best_t_pred;
      } else {
        row["error"] = it.error;
      }
      rows += row.dump() + "\n";
    }
    io::write_file_atomic(out_path, smiles);
    if (report_path) io::write_file_atomic(report_path, rows);
    if (summary_json) {
      *summary_json = dup_string(json{{"requested", formulas.size()},
                                      {"generated", rep.generated},
                                      {"failed", rep.failed},
                                      {"stalled", rep.stalled},
                                      {"duplicate_fraction", rep.duplicate_fraction},
                                      {"seconds", rep.seconds}}
                                     .dump());
    }
  });
}

msw_status msw_eval(const char* reference_path, const char* generated_path, const char* training_path,
                    const char* second_path, const char* config_json, char** report_json, char** plot_json) {
  return guard([&] {
    require(reference_path, "reference_path");
    require(generated_path, "generated_path");
    require(report_json, "report_json");
    const json cfg = parse_config_json(config_json);
    const int workers = workers_from(cfg);
    eval::NamedSet ref{fs::path(reference_path).filename().string(), pipeline::read_smiles_column(reference_path)};
    eval::NamedSet gen{fs::path(generated_path).filename().string(), pipeline::read_smiles_column(generated_path)};
    std::set<std::string> training;
    if (training_path) training = read_training_signatures(training_path);
    std::optional<eval::NamedSet> second;
    if (second_path) second = eval::NamedSet{fs::path(second_path).filename().string(), pipeline::read_smiles_column(second_path)};
    const std::string text = eval::compare_report(ref, gen, training, second, plot_json != nullptr, workers);
    if (plot_json) {
      auto j = nlohmann::ordered_json::parse(text);
      *plot_json = dup_string(j["plot_data"].dump(2) + "\n");
      j.erase("plot_data");
      *report_json = dup_string(j.dump(2) + "\n");
    } else {
      *report_json = dup_string(text);
    }
  });
}

msw_status msw_turing_report(const char* log_path, uint64_t seed, char** out) {
  return guard([&] {
    require(log_path, "log_path");
    require(out, "out");
    const auto sessions = turing::replay_log(log_path);
    *out = dup_string(turing::turing_report(sessions, seed).dump(2) + "\n");
  });
}

msw_status msw_server_create(const char* config_json, msw_server** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    const json cfg = parse_config_json(config_json);
    const json sec = section(cfg, "serve");
    auto get = [&](const char* key, std::string def) {
      if (!sec.is_object() || !sec.contains(key)) return def;
      const json& v = sec.at(key);
      return v.is_string() ? v.get<std::string>() : v.dump();
    };
    const std::string originals = get("originals", "");
    const std::string generated = get("generated", "");
    if (originals.empty() || generated.empty()) {
      fail(ErrorCode::kInvalidArgument, "serve needs originals and generated datasets");
    }
    auto pool = turing::build_pair_pool(pipeline::read_smiles_column(originals), pipeline::read_smiles_column(generated));
    if (pool.empty()) fail(ErrorCode::kEmptyDataset, "no generated molecule shares a formula with an original");
    turing::ServiceConfig sc;
    sc.seed = std::stoull(get("seed", "0"));
    sc.log_path = get("log", "turing-log.jsonl");
    turing::ServerConfig srv;
    srv.host = get("host", "127.0.0.1");
    srv.port = std::stoi(get("port", "8080"));
    srv.allowed_origin = get("origin", "");
    srv.static_dir = get("static", "");
    auto s = std::make_unique<msw_server>();
    s->service = std::make_unique<turing::Service>(std::move(pool), sc);
    s->http = std::make_unique<turing::HttpServer>(*s->service, srv);
    *out = s.release();
  });
}

int msw_server_port(const msw_server* s) { return s ? s->port : -1; }

msw_status msw_server_bind(msw_server* s) {
  return guard([&] {
    require(s, "server");
    s->port = s->http->bind();
    if (s->port < 0) fail(ErrorCode::kIo, "cannot bind the HTTP listener");
  });
}

msw_status msw_server_run(msw_server* s) {
  return guard([&] {
    require(s, "server");
    if (s->port < 0) {
      s->port = s->http->bind();
      if (s->port < 0) fail(ErrorCode::kIo, "cannot bind the HTTP listener");
    }
    s->http->serve();
  });
}

void msw_server_stop(msw_server* s) {
  if (s && s->http) s->http->stop();
}

void msw_server_free(msw_server* s) { delete s; }

}  // extern "C"
