// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "molswap/molswap.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct StageFailure {
  std::string stage;
  msw_status status;
  std::string message;
};

int exit_code_for(msw_status s) {
  switch (s) {
    case MSW_OK:
      return kExitOk;
    case MSW_ERR_INVALID_ARGUMENT:
      return kExitUsage;
    case MSW_ERR_INTERNAL:
      return kExitInternal;
    default:
      return kExitData;
  }
}

void check(const std::string& stage, msw_status s) {
  if (s != MSW_OK) throw StageFailure{stage, s, msw_last_error()};
}

// Takes ownership of a string returned by the C API.
std::string take(char* s) {
  if (!s) return {};
  std::string out(s);
  msw_string_free(s);
  return out;
}

void write_atomic(const std::string& stage, const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f << text;
    f.flush();
    if (!f) throw StageFailure{stage, MSW_ERR_IO, "cannot write " + tmp.string()};
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw StageFailure{stage, MSW_ERR_IO, "cannot rename " + tmp.string() + ": " + ec.message()};
}

void emit(const std::string& stage, const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    write_atomic(stage, out_path, text);
  }
}

struct DatasetLine {
  int line = 0;
  std::string field;
};

std::vector<DatasetLine> read_lines(const std::string& stage, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw StageFailure{stage, MSW_ERR_IO, "cannot open " + path};
  std::vector<DatasetLine> out;
  std::string line;
  int n = 0;
  while (std::getline(f, line)) {
    ++n;
    const auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    const auto end = line.find_first_of(" \t\r", start);
    out.push_back({n, line.substr(start, end == std::string::npos ? std::string::npos : end - start)});
  }
  return out;
}

struct Molecule {
  msw_molecule* m = nullptr;
  ~Molecule() { msw_molecule_free(m); }
};

void parse_molecule(const std::string& stage, const std::string& where, const std::string& smiles, Molecule& out) {
  const msw_status s = msw_molecule_parse(smiles.c_str(), &out.m);
  if (s != MSW_OK) throw StageFailure{stage, s, where + ": " + msw_last_error()};
}

// Configuration: file sections merged with flag overrides; flags win.
struct Config {
  std::string path;
  std::vector<std::string> sets;
  json doc = json::object();

  void load() {
    std::string p = path;
    if (p.empty()) {
      if (const char* env = std::getenv("MOLSWAP_CONFIG")) p = env;
    }
    if (!p.empty()) {
      char* text = nullptr;
      check("config", msw_config_load(p.c_str(), &text));
      doc = json::parse(take(text));
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      const auto dot = s.find('.');
      if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
        throw StageFailure{"config", MSW_ERR_INVALID_ARGUMENT, "--set expects section.key=value, got '" + s + "'"};
      }
      doc[s.substr(0, dot)][s.substr(dot + 1, eq - dot - 1)] = s.substr(eq + 1);
    }
  }

  template <class T>
  void override_value(const char* sec, const char* key, const std::optional<T>& v) {
    if (!v) return;
    std::ostringstream os;
    os.precision(17);
    os << *v;
    doc[sec][key] = os.str();
  }

  std::string text() const { return doc.dump(); }
};

struct TrainFlags {
  std::string dataset, out, summary;
  std::optional<int> epochs, batch_size, workers;
  std::optional<int64_t> checkpoint_interval, slice_size, stop_after_steps;
  std::optional<double> lr, lr_pretrained, lr_fingerprint, train_fraction, steps_factor;
  std::optional<uint64_t> seed;
  std::optional<std::string> variant, checkpoint, metrics;
  bool no_resume = false;

  void add(CLI::App* c, bool finetune) {
    c->add_option("--dataset", dataset, "Admitted SMILES dataset")->required();
    c->add_option("--out", out, "Weights output path")->required();
    c->add_option("--summary", summary, "Write the training summary JSON here (default stdout)");
    c->add_option("--epochs", epochs);
    c->add_option("--batch-size", batch_size);
    c->add_option("--workers", workers);
    c->add_option("--lr", lr);
    if (finetune) {
      c->add_option("--lr-pretrained", lr_pretrained);
      c->add_option("--lr-fingerprint", lr_fingerprint);
    } else {
      c->add_option("--variant", variant, "base or fps");
    }
    c->add_option("--train-fraction", train_fraction);
    c->add_option("--steps-factor", steps_factor);
    c->add_option("--slice-size", slice_size);
    c->add_option("--checkpoint-interval", checkpoint_interval);
    c->add_option("--stop-after-steps", stop_after_steps);
    c->add_option("--seed", seed);
    c->add_option("--checkpoint", checkpoint, "Checkpoint path for resumable training");
    c->add_option("--metrics", metrics, "Per-item metrics log (JSONL)");
    c->add_flag("--no-resume", no_resume, "Ignore an existing checkpoint");
  }

  void apply(Config& cfg) const {
    cfg.override_value("train", "epochs", epochs);
    cfg.override_value("train", "batch_size", batch_size);
    cfg.override_value("train", "workers", workers);
    cfg.override_value("train", "lr", lr);
    cfg.override_value("train", "lr_pretrained", lr_pretrained);
    cfg.override_value("train", "lr_fingerprint", lr_fingerprint);
    cfg.override_value("train", "train_fraction", train_fraction);
    cfg.override_value("train", "steps_factor", steps_factor);
    cfg.override_value("train", "slice_size", slice_size);
    cfg.override_value("train", "checkpoint_interval", checkpoint_interval);
    cfg.override_value("train", "stop_after_steps", stop_after_steps);
    cfg.override_value("train", "seed", seed);
    cfg.override_value("train", "variant", variant);
    cfg.override_value("train", "checkpoint", checkpoint);
    cfg.override_value("train", "metrics", metrics);
    if (no_resume) cfg.doc["train"]["resume"] = "false";
  }
};

std::atomic<bool> g_interrupted{false};
extern "C" void on_signal(int) { g_interrupted = true; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"molswap: molecular graph generation by degree-preserving edge-swap diffusion"};
  app.require_subcommand(1);
  Config cfg;
  app.add_option("--config", cfg.path, "Configuration file (overrides MOLSWAP_CONFIG)");
  app.add_option("--set", cfg.sets, "Override a configuration value: section.key=value");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse, canonicalize, deduplicate and filter a SMILES dataset");
  std::string ingest_in, ingest_out, ingest_report;
  std::optional<int> min_atoms, max_atoms;
  ingest->add_option("input", ingest_in)->required();
  ingest->add_option("output", ingest_out)->required();
  ingest->add_option("--report", ingest_report, "Write the admission report here (default stdout)");
  ingest->add_option("--min-atoms", min_atoms);
  ingest->add_option("--max-atoms", max_atoms);

  // noise
  auto* noise = app.add_subcommand("noise", "Emit forward noising trajectories as JSONL");
  std::string noise_in, noise_out;
  double noise_factor = 0.25;
  uint64_t noise_seed = 0;
  int noise_steps = 0;
  noise->add_option("input", noise_in)->required();
  noise->add_option("--steps-factor", noise_factor);
  noise->add_option("--steps", noise_steps, "Fixed step count (default: steps factor times bond count)");
  noise->add_option("--seed", noise_seed);
  noise->add_option("--out", noise_out);

  // featurize
  auto* featurize = app.add_subcommand("featurize", "Emit node, bond and graph features as JSONL");
  std::string feat_in, feat_out;
  double feat_t = 0.0;
  featurize->add_option("input", feat_in)->required();
  featurize->add_option("--t", feat_t, "Diffusion time in [0,1]");
  featurize->add_option("--out", feat_out);

  // training
  auto* train_diff = app.add_subcommand("train-diffusion", "Train the edge-swap denoising model");
  TrainFlags diff_flags;
  diff_flags.add(train_diff, false);
  auto* train_time = app.add_subcommand("train-time", "Train the diffusion-time regressor");
  TrainFlags time_flags;
  time_flags.add(train_time, false);
  auto* finetune = app.add_subcommand("finetune-fps", "Upgrade BASE weights to FPS and fine-tune");
  TrainFlags ft_flags;
  std::string ft_base;
  finetune->add_option("--base", ft_base, "BASE weights to upgrade")->required();
  ft_flags.add(finetune, true);

  // sample
  auto* sample = app.add_subcommand("sample", "Generate molecules for given formulas");
  std::string s_formulas, s_weights, s_time, s_out, s_report, s_summary;
  std::size_t s_count = 0;
  std::optional<uint64_t> s_seed;
  std::optional<int> s_workers;
  std::optional<std::string> s_source;
  sample->add_option("--formulas", s_formulas, "Formula list, or a .smi dataset whose formulas are used")->required();
  sample->add_option("--count", s_count, "Molecules to generate (default: one per formula line)");
  sample->add_option("--weights", s_weights, "Diffusion weights")->required();
  sample->add_option("--time-weights", s_time, "Time weights")->required();
  sample->add_option("--seed", s_seed);
  sample->add_option("--workers", s_workers);
  sample->add_option("--formula-source", s_source, "auto, smiles or formulas");
  sample->add_option("--out", s_out, "Generated SMILES output")->required();
  sample->add_option("--report", s_report, "Per-molecule generation report (JSONL)");
  sample->add_option("--summary", s_summary, "Write the summary JSON here (default stdout)");

  // eval
  auto* evalc = app.add_subcommand("eval", "Compare generated molecules against a reference set");
  std::string e_ref, e_gen, e_train, e_second, e_out, e_plot;
  std::optional<int> e_workers;
  evalc->add_option("--reference", e_ref)->required();
  evalc->add_option("--generated", e_gen)->required();
  evalc->add_option("--training-signatures", e_train, "Training set (SMILES or signatures) for novelty");
  evalc->add_option("--second", e_second, "Second generated set for a side-by-side comparison");
  evalc->add_option("--out", e_out, "Report path (default stdout)");
  evalc->add_option("--plot-data", e_plot, "Write per-descriptor histogram arrays here");
  evalc->add_option("--workers", e_workers);

  // canon
  auto* canon = app.add_subcommand("canon", "Print canonical SMILES and signature");
  std::vector<std::string> canon_in;
  std::string canon_file;
  canon->add_option("smiles", canon_in);
  canon->add_option("--file", canon_file, "Dataset file instead of arguments");

  // fingerprint
  auto* fingerprint = app.add_subcommand("fingerprint", "Print circular fingerprints as hex, or a Tanimoto similarity");
  std::vector<std::string> fp_in;
  bool fp_tanimoto = false;
  fingerprint->add_option("smiles", fp_in)->required();
  fingerprint->add_flag("--tanimoto", fp_tanimoto, "Print the similarity of exactly two molecules");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the Turing-test HTTP service");
  std::optional<std::string> sv_orig, sv_gen, sv_log, sv_host, sv_origin, sv_static;
  std::optional<int> sv_port;
  std::optional<uint64_t> sv_seed;
  serve->add_option("--originals", sv_orig);
  serve->add_option("--generated", sv_gen);
  serve->add_option("--log", sv_log);
  serve->add_option("--host", sv_host);
  serve->add_option("--port", sv_port);
  serve->add_option("--origin", sv_origin, "Permitted UI origin for CORS");
  serve->add_option("--static", sv_static, "Directory of UI assets");
  serve->add_option("--seed", sv_seed);

  // turing-report
  auto* treport = app.add_subcommand("turing-report", "Analyse a Turing-test session log");
  std::string tr_log, tr_out;
  uint64_t tr_seed = 0;
  treport->add_option("--log", tr_log)->required();
  treport->add_option("--seed", tr_seed);
  treport->add_option("--out", tr_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    cfg.load();

    if (*ingest) {
      cfg.override_value("admission", "min_atoms", min_atoms);
      cfg.override_value("admission", "max_atoms", max_atoms);
      char* report = nullptr;
      check("ingest", msw_ingest(ingest_in.c_str(), ingest_out.c_str(), cfg.text().c_str(), &report));
      emit("ingest", ingest_report, json::parse(take(report)).dump(2) + "\n");
    } else if (*noise) {
      std::string out;
      for (const auto& l : read_lines("noise", noise_in)) {
        Molecule m;
        parse_molecule("noise", noise_in + ":" + std::to_string(l.line), l.field, m);
        char* text = nullptr;
        const uint64_t seed = noise_seed ^ (0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(l.line));
        check("noise", msw_molecule_noise(m.m, noise_steps, seed, noise_factor, &text));
        json row = {{"line", l.line}, {"smiles", l.field}};
        row.update(json::parse(take(text)));
        out += row.dump() + "\n";
      }
      emit("noise", noise_out, out);
    } else if (*featurize) {
      std::string out;
      for (const auto& l : read_lines("featurize", feat_in)) {
        Molecule m;
        parse_molecule("featurize", feat_in + ":" + std::to_string(l.line), l.field, m);
        char* text = nullptr;
        check("featurize", msw_molecule_features(m.m, feat_t, &text));
        json row = {{"line", l.line}, {"smiles", l.field}};
        row.update(json::parse(take(text)));
        out += row.dump() + "\n";
      }
      emit("featurize", feat_out, out);
    } else if (*train_diff || *train_time) {
      const bool diff = train_diff->parsed();
      const TrainFlags& f = diff ? diff_flags : time_flags;
      const std::string stage = diff ? "train-diffusion" : "train-time";
      f.apply(cfg);
      char* summary = nullptr;
      check(stage, msw_train(diff ? MSW_MODEL_DIFFUSION : MSW_MODEL_TIME, f.dataset.c_str(), cfg.text().c_str(),
                             f.out.c_str(), &summary));
      emit(stage, f.summary, json::parse(take(summary)).dump(2) + "\n");
    } else if (*finetune) {
      ft_flags.apply(cfg);
      char* summary = nullptr;
      check("finetune-fps", msw_finetune_fps(ft_base.c_str(), ft_flags.dataset.c_str(), cfg.text().c_str(),
                                             ft_flags.out.c_str(), &summary));
      emit("finetune-fps", ft_flags.summary, json::parse(take(summary)).dump(2) + "\n");
    } else if (*sample) {
      cfg.override_value("sample", "seed", s_seed);
      cfg.override_value("sample", "workers", s_workers);
      cfg.override_value("sample", "formula_source", s_source);
      char* summary = nullptr;
      check("sample", msw_sample(s_formulas.c_str(), s_count, s_weights.c_str(), s_time.c_str(), cfg.text().c_str(),
                                 s_out.c_str(), s_report.empty() ? nullptr : s_report.c_str(), &summary));
      emit("sample", s_summary, json::parse(take(summary)).dump(2) + "\n");
    } else if (*evalc) {
      cfg.override_value("pipeline", "workers", e_workers);
      char* report = nullptr;
      char* plot = nullptr;
      check("eval", msw_eval(e_ref.c_str(), e_gen.c_str(), e_train.empty() ? nullptr : e_train.c_str(),
                             e_second.empty() ? nullptr : e_second.c_str(), cfg.text().c_str(), &report,
                             e_plot.empty() ? nullptr : &plot));
      const std::string report_text = take(report);
      const std::string plot_text = take(plot);
      emit("eval", e_out, report_text);
      if (!e_plot.empty()) write_atomic("eval", e_plot, plot_text);
    } else if (*canon) {
      std::vector<std::pair<std::string, std::string>> items;
      for (const auto& s : canon_in) items.emplace_back("argument", s);
      if (!canon_file.empty()) {
        for (const auto& l : read_lines("canon", canon_file)) {
          items.emplace_back(canon_file + ":" + std::to_string(l.line), l.field);
        }
      }
      if (items.empty()) throw StageFailure{"canon", MSW_ERR_INVALID_ARGUMENT, "no input molecules"};
      for (const auto& [where, smi] : items) {
        Molecule m;
        parse_molecule("canon", where, smi, m);
        char* c = nullptr;
        char* sig = nullptr;
        check("canon", msw_molecule_smiles(m.m, &c));
        const std::string cs = take(c);
        check("canon", msw_molecule_signature(m.m, &sig));
        std::cout << cs << '\t' << take(sig) << '\n';
      }
    } else if (*fingerprint) {
      if (fp_tanimoto) {
        if (fp_in.size() != 2) throw StageFailure{"fingerprint", MSW_ERR_INVALID_ARGUMENT, "--tanimoto needs two molecules"};
        Molecule a, b;
        parse_molecule("fingerprint", "argument 1", fp_in[0], a);
        parse_molecule("fingerprint", "argument 2", fp_in[1], b);
        double t = 0.0;
        check("fingerprint", msw_tanimoto(a.m, b.m, &t));
        std::printf("%.6f\n", t);
      } else {
        for (std::size_t i = 0; i < fp_in.size(); ++i) {
          Molecule m;
          parse_molecule("fingerprint", "argument " + std::to_string(i + 1), fp_in[i], m);
          unsigned char bits[MSW_FINGERPRINT_BYTES];
          check("fingerprint", msw_molecule_fingerprint(m.m, bits));
          std::string hex;
          char buf[3];
          for (unsigned char b : bits) {
            std::snprintf(buf, sizeof buf, "%02x", b);
            hex += buf;
          }
          std::cout << hex << '\n';
        }
      }
    } else if (*serve) {
      cfg.override_value("serve", "originals", sv_orig);
      cfg.override_value("serve", "generated", sv_gen);
      cfg.override_value("serve", "log", sv_log);
      cfg.override_value("serve", "host", sv_host);
      cfg.override_value("serve", "port", sv_port);
      cfg.override_value("serve", "origin", sv_origin);
      cfg.override_value("serve", "static", sv_static);
      cfg.override_value("serve", "seed", sv_seed);
      msw_server* server = nullptr;
      check("serve", msw_server_create(cfg.text().c_str(), &server));
      std::unique_ptr<msw_server, void (*)(msw_server*)> owner(server, msw_server_free);
      check("serve", msw_server_bind(server));
      std::cerr << "listening on port " << msw_server_port(server) << std::endl;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      msw_status run_status = MSW_OK;
      std::thread runner([&] { run_status = msw_server_run(server); });
      while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      msw_server_stop(server);
      runner.join();
      check("serve", run_status);
    } else if (*treport) {
      char* text = nullptr;
      check("turing-report", msw_turing_report(tr_log.c_str(), tr_seed, &text));
      emit("turing-report", tr_out, take(text));
    }
  } catch (const StageFailure& f) {
    std::cerr << "molswap: " << f.stage << " failed: " << msw_status_name(f.status) << ": " << f.message << '\n';
    return exit_code_for(f.status);
  } catch (const json::exception& e) {
    std::cerr << "molswap: malformed JSON from the library: " << e.what() << '\n';
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "molswap: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}
