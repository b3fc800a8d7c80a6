// SPDX-License-Identifier: Apache-2.0
// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails.
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "chem/canon.hpp"
#include "chem/smiles.hpp"
#include "common/io.hpp"
#include "common/rng.hpp"
#include "diffusion/des.hpp"
#include "evaluate/evaluate.hpp"
#include "neural/model.hpp"
#include "pipeline/pipeline.hpp"
#include "sampler/sampler.hpp"
#include "topo/topo.hpp"
#include "trainer/trainer.hpp"
#include "turing/turing.hpp"
#include "../unit/oracles.hpp"
#include "../unit/test_util.hpp"

namespace molswap {
namespace {

namespace fs = std::filesystem;
using chem::MolGraph;
using json = nlohmann::json;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Options {
  std::string cli;
  std::string fixture;
  std::string only;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool audit(const MolGraph& g) {
  if (!g.is_saturated() || !topo::is_connected(g)) return false;
  for (const auto& b : g.bonds()) {
    if (b.order > 3) return false;
  }
  return true;
}

std::vector<MolGraph> load(const std::string& path) {
  return pipeline::ingest_file(path, pipeline::AdmissionRules{2, 200}).graphs;
}

Outcome validity(const Options& o) {
  const auto data = load(o.fixture);
  train::TrainConfig tc;
  tc.epochs = 2;
  tc.seed = 1;
  tc.workers = 1;
  auto diff = train::train_diffusion(data, tc).weights;
  auto time = train::train_time(data, tc).weights;
  std::vector<chem::MolFormula> formulas;
  for (std::size_t i = 0; i < 1000; ++i) formulas.push_back(chem::formula_of(data[i % data.size()]));
  sample::SampleConfig sc;
  sc.seed = 11;
  sc.workers = 1;
  const auto rep = sample::generate_batch(formulas, diff, time, sc);
  std::size_t valid = 0;
  for (std::size_t i = 0; i < rep.items.size(); ++i) {
    const auto& item = rep.items[i];
    if (!item.smiles) continue;
    const MolGraph g = chem::parse_smiles(*item.smiles);
    if (audit(g) && chem::formula_of(g) == formulas[i] && chem::canonical_signature(g).text == item.signature) ++valid;
  }
  return {valid == formulas.size(),
          fmt("%zu/%zu valid, %zu stalled, duplicate fraction %.3f", valid, formulas.size(), rep.stalled,
              rep.duplicate_fraction)};
}

Outcome chain(const Options&) {
  MolGraph g(std::vector<chem::Element>(4, chem::Element::O));
  for (int a = 0; a < 4; ++a) g.add_bond(a, (a + 1) % 4);
  Rng rng(5);
  std::map<std::string, int> visits;
  const int steps = 100000;
  for (int s = 0; s < steps; ++s) {
    g = diffusion::noise_step(g, rng).graph;
    std::string key;
    for (int a = 0; a < 4; ++a) {
      for (int b = a + 1; b < 4; ++b) key += static_cast<char>('0' + g.multiplicity(a, b));
    }
    visits[key]++;
  }
  double tv = 0.0;
  for (const auto& [k, v] : visits) tv += std::abs(v / static_cast<double>(steps) - 1.0 / 3.0);
  tv = visits.size() == 3 ? tv / 2.0 : 1.0;

  Rng mrng(123);
  int matched = 0;
  for (int k = 0; k < 50; ++k) {
    const MolGraph m = testing::random_small_molecule(mrng);
    std::size_t ordered = 0;
    const auto oracle = testing::brute_force_keys(m, &ordered);
    const auto moves = diffusion::enumerate_feasible(m);
    std::set<std::array<int, 4>> got;
    for (const auto& mv : moves) got.insert(mv.canonical_key());
    if (m.atom_count() <= 12 && got == oracle && got.size() == moves.size() && moves.size() * 4 == ordered) ++matched;
  }
  return {tv < 0.05 && matched == 50,
          fmt("stationary TV %.4f over %zu states; enumeration matches oracle on %d/50", tv, visits.size(), matched)};
}

std::vector<int> degree_sequence(const MolGraph& g) {
  std::vector<int> d;
  for (int a = 0; a < g.atom_count(); ++a) d.push_back(g.degree(a));
  return d;
}

Outcome conservation(const Options&) {
  std::vector<MolGraph> corpus;
  for (const auto& s : testing::read_smiles("corpus.smi")) corpus.push_back(chem::parse_smiles(s));
  std::size_t states = 0, broken = 0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    const MolGraph& g0 = corpus[t % corpus.size()];
    const auto deg = degree_sequence(g0);
    const auto formula = chem::formula_of(g0);
    const auto tr = diffusion::noise_trajectory(g0, std::nullopt, t, 1.0);
    for (const auto& g : tr.states) {
      ++states;
      if (degree_sequence(g) != deg || chem::formula_of(g) != formula || g.bond_units() != g0.bond_units() ||
          !audit(g)) {
        ++broken;
      }
    }
  }
  return {broken == 0, fmt("1000 trajectories, %zu states, %zu violations", states, broken)};
}

Outcome gradients(const Options&) {
  const auto e = testing::six_atom_example();
  double worst = 0.0;
  for (nn::Variant v : {nn::Variant::kBase, nn::Variant::kFps}) {
    const bool fps = v == nn::Variant::kFps;
    auto d = nn::init_diffusion(v, 5);
    testing::perturb(d, 9);
    worst = std::max(worst, testing::worst_gradient_error(d, e, fps));
    auto t = nn::init_time(v, 5);
    testing::perturb(t, 9);
    worst = std::max(worst, testing::worst_gradient_error(t, e, fps));
  }
  return {e.g0.atom_count() == 6 && worst < 1e-4,
          fmt("worst relative error %.2e over every tensor, BASE and FPS, both models", worst)};
}

Outcome parameters(const Options&) {
  struct Row {
    const char* name;
    std::size_t count;
    double target;
  };
  const Row rows[] = {
      {"diffusion BASE", nn::init_diffusion(nn::Variant::kBase, 0).parameter_count(), 471e3},
      {"time BASE", nn::init_time(nn::Variant::kBase, 0).parameter_count(), 63e3},
      {"diffusion FPS", nn::init_diffusion(nn::Variant::kFps, 0).parameter_count(), 3.1e6},
      {"time FPS", nn::init_time(nn::Variant::kFps, 0).parameter_count(), 1.3e6},
  };
  bool ok = true;
  std::string detail;
  for (const auto& r : rows) {
    const double dev = static_cast<double>(r.count) / r.target - 1.0;
    ok = ok && std::abs(dev) <= 0.10;
    detail += fmt("%s%s %zu (%+.1f%%)", detail.empty() ? "" : "; ", r.name, r.count, 100.0 * dev);
  }
  return {ok, detail};
}

// Fixed trajectories make "loss on training states" well defined: the same
// states are visited every epoch and scored again after training.
Outcome overfit(const Options&) {
  std::vector<MolGraph> data;
  for (const auto& s : testing::read_smiles("overfit50.smi")) data.push_back(chem::parse_smiles(s));
  train::TrainConfig cfg;
  cfg.epochs = 30;
  cfg.lr = 1e-3;
  cfg.seed = 7;
  cfg.workers = 1;
  cfg.resample_trajectories = false;
  const auto [train_idx, val_idx] = train::split_indices(data.size(), cfg.train_fraction, cfg.seed);

  const auto diff = train::train_diffusion(data, cfg);
  auto dw = diff.weights;
  const double first = diff.epochs.front().train_loss;
  const double last = train::evaluate_loss(dw, data, train_idx, cfg, train::kTrajectoryStream);
  const double ratio = last / first;

  auto untrained = nn::init_time(nn::Variant::kBase, cfg.seed);
  const double baseline = train::evaluate_loss(untrained, data, train_idx, cfg, train::kTrajectoryStream);
  const auto time = train::train_time(data, cfg);
  auto tw = time.weights;
  const double mse = train::evaluate_loss(tw, data, train_idx, cfg, train::kTrajectoryStream);
  return {ratio < 0.5 && mse < 0.02,
          fmt("diffusion loss %.4f -> %.4f (ratio %.3f, need < 0.5); time MSE %.4f (need < 0.02), untrained %.4f",
              first, last, ratio, mse, baseline)};
}

Outcome metrics(const Options&) {
  std::vector<MolGraph> mols;
  for (const auto& s : testing::read_smiles("corpus.smi")) mols.push_back(chem::parse_smiles(s));
  const auto samples = eval::descriptor_samples(mols);
  const double self = eval::kl_score(samples, samples);
  const double typical = eval::score_from_divergences(std::vector<double>(eval::kDescriptorCount, 0.033));
  const double js0 = eval::js_distance({0, 1, 1, 2}, {0, 1, 1, 2});
  const double js1 = eval::js_distance({0, 0, 1}, {5, 6});
  const double js2 = eval::js_distance_dist({0.5, 0.5}, {0.9, 0.1});
  const bool ok = self == 100.0 && std::abs(typical - 96.75) <= 0.01 && js0 == 0.0 && std::abs(js1 - 1.0) < 1e-12 &&
                  std::abs(js2 - 0.3832) <= 1e-3;
  return {ok, fmt("self score %.6f; KL 0.033 -> %.4f; JS %.4f / %.4f / %.4f", self, typical, js0, js1, js2)};
}

Outcome descriptors(const Options&) {
  std::ifstream in(testing::data_path("descriptor_golden.json"));
  const json golden = json::parse(in);
  std::size_t checked = 0, bad = 0;
  std::string first_bad;
  for (const auto& m : golden["molecules"]) {
    const auto d = eval::descriptors(chem::parse_smiles(m["smiles"].get<std::string>()));
    for (const auto& [id, value] : m["descriptors"].items()) {
      ++checked;
      const double want = value.get<double>();
      if (std::abs(d.get(id) - want) > std::max(1e-9, 1e-3 * std::abs(want))) {
        if (bad++ == 0) first_bad = m["name"].get<std::string>() + "/" + id;
      }
    }
  }
  return {bad == 0 && golden["molecules"].size() == 12,
          fmt("%zu molecules, %zu values, %zu mismatches%s%s", golden["molecules"].size(), checked, bad,
              bad ? ", first " : "", first_bad.c_str())};
}

Outcome canonicalization(const Options&) {
  const auto lines = testing::read_smiles("corpus.smi");
  Rng rng(31);
  std::set<std::string> all;
  std::size_t unstable = 0;
  for (const auto& s : lines) {
    const MolGraph g = chem::parse_smiles(s);
    const auto sig = chem::canonical_signature(g).text;
    all.insert(sig);
    for (int p = 0; p < 100; ++p) {
      if (chem::canonical_signature(g.permuted(testing::random_permutation(g.atom_count(), rng))).text != sig) {
        ++unstable;
        break;
      }
    }
  }
  // Small molecules: equal signatures exactly when the oracle finds an isomorphism.
  Rng mrng(77);
  std::vector<MolGraph> small;
  while (small.size() < 300) {
    MolGraph g = testing::random_small_molecule(mrng);
    if (g.atom_count() <= 10) small.push_back(std::move(g));
  }
  std::vector<std::string> sigs;
  for (const auto& g : small) sigs.push_back(chem::canonical_signature(g).text);
  std::size_t pairs = 0, disagree = 0;
  for (std::size_t i = 0; i < small.size(); ++i) {
    for (std::size_t j = i + 1; j < small.size(); ++j) {
      if (chem::formula_of(small[i]) != chem::formula_of(small[j])) continue;
      ++pairs;
      if ((sigs[i] == sigs[j]) != testing::isomorphic(small[i], small[j])) ++disagree;
    }
  }
  return {unstable == 0 && all.size() == lines.size() && disagree == 0,
          fmt("%zu molecules x 100 permutations, %zu unstable, %zu distinct signatures; %zu same-formula pairs vs "
              "isomorphism oracle, %zu disagreements",
              lines.size(), unstable, all.size(), pairs, disagree)};
}

Outcome turing_ci(const Options&) {
  int covered = 0;
  double mean_acc = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    Rng rng(mix_seed({0x636f696e, static_cast<std::uint64_t>(rep)}));
    std::vector<std::pair<int, int>> participants;
    for (int p = 0; p < 100; ++p) {
      int correct = 0;
      for (int r = 0; r < turing::kRounds; ++r) correct += rng.below(2) == 0 ? 1 : 0;
      participants.emplace_back(correct, turing::kRounds);
    }
    const auto iv = turing::bootstrap_accuracy(participants, static_cast<std::uint64_t>(rep));
    mean_acc += iv.accuracy / 100.0;
    if (iv.low <= 0.5 && 0.5 <= iv.high) ++covered;
  }
  return {covered >= 93, fmt("95%% CI covers 0.5 in %d/100 repeats, mean accuracy %.4f", covered, mean_acc)};
}

int run(const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); }

Outcome end_to_end(const Options& o) {
  const fs::path root = fs::temp_directory_path() / fmt("molswap_acceptance_%d", static_cast<int>(::getpid()));
  fs::remove_all(root);
  std::string failed_stage;
  auto pipeline = [&](const fs::path& d) {
    fs::create_directories(d);
    const std::string c = "'" + o.cli + "'";
    const std::string p = d.string() + "/";
    const std::vector<std::pair<std::string, std::string>> stages = {
        {"ingest", c + " ingest '" + o.fixture + "' " + p + "data.smi --min-atoms 2"},
        {"noise", c + " noise " + p + "data.smi --seed 1 --out " + p + "noise.jsonl"},
        {"train-diffusion",
         c + " train-diffusion --dataset " + p + "data.smi --out " + p + "d.json --epochs 2 --seed 1"},
        {"train-time", c + " train-time --dataset " + p + "data.smi --out " + p + "t.json --epochs 2 --seed 1"},
        {"sample", c + " sample --formulas " + p + "data.smi --count 20 --weights " + p + "d.json --time-weights " +
                       p + "t.json --seed 7 --out " + p + "gen.smi"},
        {"eval", c + " eval --reference " + p + "data.smi --generated " + p + "gen.smi --training-signatures " + p +
                     "data.smi --out " + p + "report.json"},
    };
    for (const auto& [name, cmd] : stages) {
      if (run(cmd) != 0) {
        failed_stage = name;
        return false;
      }
    }
    return true;
  };
  Outcome out;
  if (!pipeline(root / "a") || !pipeline(root / "b")) {
    out.detail = "stage " + failed_stage + " failed";
  } else {
    const std::string a = io::read_file(root / "a" / "report.json");
    const bool same = a == io::read_file(root / "b" / "report.json");
    const json report = json::parse(a);
    const double validity = report["aggregate"]["validity"];
    out.pass = same && validity == 100.0 && report["descriptors"].size() == eval::kDescriptorCount;
    out.detail = fmt("eval reports %s, validity %.1f, %zu descriptor rows", same ? "byte-identical" : "differ",
                     validity, report["descriptors"].size());
  }
  fs::remove_all(root);
  return out;
}

struct Criterion {
  const char* name;
  double budget_seconds;
  Outcome (*check)(const Options&);
};

}  // namespace
}  // namespace molswap

int main(int argc, char** argv) {
  using namespace molswap;
  CLI::App app{"molswap acceptance checks"};
  Options o;
  app.add_option("--cli", o.cli, "molswap executable")->required();
  app.add_option("--fixture", o.fixture, "Bundled fixture dataset")->required();
  app.add_option("--only", o.only, "Run only the named criterion");
  CLI11_PARSE(app, argc, argv);

  const Criterion criteria[] = {
      {"validity", 30 * 60, validity},
      {"chain", 5 * 60, chain},
      {"conservation", 5 * 60, conservation},
      {"gradients", 5 * 60, gradients},
      {"parameters", 60, parameters},
      {"overfit", 2 * 3600, overfit},
      {"metrics", 60, metrics},
      {"descriptors", 60, descriptors},
      {"canonicalization", 10 * 60, canonicalization},
      {"turing", 5 * 60, turing_ci},
      {"end-to-end", 10 * 60, end_to_end},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (!o.only.empty() && o.only != c.name) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = c.check(o);
    } catch (const std::exception& e) {
      r = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = r.pass && secs <= c.budget_seconds;
    if (!pass) ++failures;
    std::cout << (pass ? "PASS " : "FAIL ") << c.name << ": " << r.detail
              << fmt(" (%.1f s of %.0f s)", secs, c.budget_seconds) << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
