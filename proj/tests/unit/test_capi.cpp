// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <thread>

#include "molswap/molswap.h"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Takes ownership of a returned string.
std::string take(char* s) {
  std::string out = s ? s : "";
  msw_string_free(s);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

msw_molecule* parse(const char* smiles) {
  msw_molecule* m = nullptr;
  EXPECT_EQ(msw_molecule_parse(smiles, &m), MSW_OK) << msw_last_error();
  return m;
}

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(msw_version(), "0.4.0");
  EXPECT_STREQ(msw_status_name(MSW_OK), "Ok");
  EXPECT_STREQ(msw_status_name(MSW_ERR_VALENCE), "ValenceError");
  EXPECT_STREQ(msw_status_name(static_cast<msw_status>(99)), "Unknown");
}

TEST(CApi, MoleculeBasics) {
  msw_molecule* m = parse("OCC");
  EXPECT_EQ(msw_molecule_atom_count(m), 9);
  EXPECT_EQ(msw_molecule_bond_count(m), 8);
  char* s = nullptr;
  ASSERT_EQ(msw_molecule_formula(m, &s), MSW_OK);
  EXPECT_EQ(take(s), "C2H6O");
  ASSERT_EQ(msw_molecule_signature(m, &s), MSW_OK);
  const std::string sig = take(s);
  msw_molecule* n = parse("CCO");
  ASSERT_EQ(msw_molecule_signature(n, &s), MSW_OK);
  EXPECT_EQ(take(s), sig);
  ASSERT_EQ(msw_molecule_smiles(m, &s), MSW_OK);
  msw_molecule* back = parse(take(s).c_str());
  ASSERT_EQ(msw_molecule_signature(back, &s), MSW_OK);
  EXPECT_EQ(take(s), sig);
  double sim = 0.0;
  ASSERT_EQ(msw_tanimoto(m, n, &sim), MSW_OK);
  EXPECT_EQ(sim, 1.0);
  unsigned char bits[MSW_FINGERPRINT_BYTES] = {};
  ASSERT_EQ(msw_molecule_fingerprint(m, bits), MSW_OK);
  int set = 0;
  for (unsigned char b : bits) set += __builtin_popcount(b);
  EXPECT_GT(set, 0);
  ASSERT_EQ(msw_molecule_descriptors(m, &s), MSW_OK);
  EXPECT_EQ(json::parse(take(s))["heavy_atom_count"], 3);
  msw_molecule_free(back);
  msw_molecule_free(n);
  msw_molecule_free(m);
  msw_molecule_free(nullptr);
}

TEST(CApi, ErrorsAreReported) {
  msw_molecule* m = nullptr;
  EXPECT_EQ(msw_molecule_parse("C(C", &m), MSW_ERR_SYNTAX);
  EXPECT_EQ(m, nullptr);
  EXPECT_NE(std::string(msw_last_error()), "");
  EXPECT_EQ(msw_last_error_position(), 1u);  // the unclosed branch
  EXPECT_EQ(msw_molecule_parse("[NH4+]", &m), MSW_ERR_UNSUPPORTED_FEATURE);
  EXPECT_EQ(msw_molecule_parse("O=O=O", &m), MSW_ERR_VALENCE);
  EXPECT_EQ(msw_last_error_position(), 2u);
  msw_weights* none = nullptr;
  EXPECT_EQ(msw_weights_init(MSW_MODEL_TIME, MSW_VARIANT_BASE, 0, &none), MSW_OK);
  EXPECT_EQ(msw_last_error_position(), static_cast<size_t>(-1));
  msw_weights_free(none);
  EXPECT_EQ(msw_molecule_parse(nullptr, &m), MSW_ERR_INVALID_ARGUMENT);
  msw_molecule* ok = parse("CCO");
  char* s = nullptr;
  EXPECT_EQ(msw_molecule_features(ok, 1.5, &s), MSW_ERR_TIME_OUT_OF_RANGE);
  EXPECT_EQ(s, nullptr);
  msw_weights* w = nullptr;
  EXPECT_EQ(msw_weights_load("/nonexistent/w.json", &w), MSW_ERR_CORRUPT_FILE);
  msw_molecule_free(ok);
}

TEST(CApi, FeaturesAndNoise) {
  msw_molecule* m = parse("CC=O");
  char* s = nullptr;
  ASSERT_EQ(msw_molecule_features(m, 0.3, &s), MSW_OK);
  const auto f = json::parse(take(s));
  EXPECT_EQ(f["n"], 7);
  EXPECT_EQ(f["t"], 0.3);
  EXPECT_EQ(f["X"].size(), 7u);
  ASSERT_EQ(msw_molecule_noise(m, 3, 5, 0.25, &s), MSW_OK);
  const auto tr = json::parse(take(s));
  EXPECT_EQ(tr["planned_steps"], 3);
  EXPECT_EQ(tr["states"].size(), 4u);
  ASSERT_EQ(msw_molecule_noise(m, 3, 5, 0.25, &s), MSW_OK);
  EXPECT_EQ(json::parse(take(s)), tr);
  msw_molecule_free(m);
}

class CApiFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("molswap_capi_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const char* name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST_F(CApiFiles, WeightsRoundTrip) {
  msw_weights* w = nullptr;
  ASSERT_EQ(msw_weights_init(MSW_MODEL_TIME, MSW_VARIANT_BASE, 3, &w), MSW_OK);
  EXPECT_EQ(msw_weights_kind(w), MSW_MODEL_TIME);
  EXPECT_EQ(msw_weights_variant(w), MSW_VARIANT_BASE);
  EXPECT_EQ(msw_weights_parameter_count(w), 59001u);
  ASSERT_EQ(msw_weights_save(w, path("t.json").c_str()), MSW_OK);
  msw_weights* back = nullptr;
  ASSERT_EQ(msw_weights_load(path("t.json").c_str(), &back), MSW_OK);
  EXPECT_EQ(msw_weights_parameter_count(back), 59001u);
  std::ofstream(path("bad.json")) << "{\"format\":";
  msw_weights* bad = nullptr;
  EXPECT_EQ(msw_weights_load(path("bad.json").c_str(), &bad), MSW_ERR_CORRUPT_FILE);
  msw_weights_free(back);
  msw_weights_free(w);
}

TEST_F(CApiFiles, PipelineStages) {
  std::ofstream(path("raw.smi")) << "CCO\nOCC\nCCCO\nCC(C)O\nCCOC\nCC=O\nCCC=O\nCCN\nC(C\nCCCN\nOCCO\n";
  char* s = nullptr;
  ASSERT_EQ(msw_ingest(path("raw.smi").c_str(), path("data.smi").c_str(), nullptr, &s), MSW_OK) << msw_last_error();
  const auto ingest = json::parse(take(s));
  EXPECT_EQ(ingest["admitted"], 9);

  const char* cfg = R"({"train": {"epochs": "1", "seed": "2"}, "sample": {"seed": "4"}, "pipeline": {"workers": 1}})";
  ASSERT_EQ(msw_train(MSW_MODEL_DIFFUSION, path("data.smi").c_str(), cfg, path("d.json").c_str(), &s), MSW_OK)
      << msw_last_error();
  const auto sum = json::parse(take(s));
  EXPECT_EQ(sum["kind"], "diffusion");
  EXPECT_TRUE(sum["completed"].get<bool>());
  ASSERT_EQ(msw_train(MSW_MODEL_TIME, path("data.smi").c_str(), cfg, path("t.json").c_str(), &s), MSW_OK);
  take(s);
  ASSERT_EQ(msw_train(MSW_MODEL_TIME, path("missing.smi").c_str(), cfg, path("x.json").c_str(), &s), MSW_ERR_IO);
  EXPECT_EQ(msw_train(MSW_MODEL_TIME, path("data.smi").c_str(), "{\"train\": {\"epochs\": \"x\"}}", path("x.json").c_str(), &s),
            MSW_ERR_INVALID_ARGUMENT);

  std::ofstream(path("formulas.txt")) << "C2H6O\nC3H8O\n";
  ASSERT_EQ(msw_sample(path("formulas.txt").c_str(), 4, path("d.json").c_str(), path("t.json").c_str(), cfg,
                       path("gen.smi").c_str(), path("gen.jsonl").c_str(), &s),
            MSW_OK)
      << msw_last_error();
  const auto sample = json::parse(take(s));
  EXPECT_EQ(sample["requested"], 4);
  EXPECT_EQ(sample["generated"], 4);
  const std::string generated = slurp(path("gen.smi"));
  ASSERT_EQ(msw_sample(path("formulas.txt").c_str(), 4, path("d.json").c_str(), path("t.json").c_str(), cfg,
                       path("gen2.smi").c_str(), nullptr, &s),
            MSW_OK);
  take(s);
  EXPECT_EQ(slurp(path("gen2.smi")), generated);
  // Swapped weights are refused.
  EXPECT_EQ(msw_sample(path("formulas.txt").c_str(), 4, path("t.json").c_str(), path("d.json").c_str(), cfg,
                       path("gen3.smi").c_str(), nullptr, &s),
            MSW_ERR_VERSION_MISMATCH);

  char* plot = nullptr;
  ASSERT_EQ(msw_eval(path("data.smi").c_str(), path("gen.smi").c_str(), path("data.smi").c_str(), nullptr, cfg, &s, &plot),
            MSW_OK)
      << msw_last_error();
  const auto report = json::parse(take(s));
  EXPECT_EQ(report["aggregate"]["validity"], 100.0);
  EXPECT_EQ(report["descriptors"].size(), 22u);
  EXPECT_FALSE(report.contains("plot_data"));
  EXPECT_EQ(json::parse(take(plot)).size(), 22u);
}

TEST_F(CApiFiles, ServerLifecycle) {
  std::ofstream(path("orig.smi")) << "CCO\nCCCO\n";
  std::ofstream(path("gen.smi")) << "COC\nCCOC\n";
  const json cfg = {{"serve",
                     {{"originals", path("orig.smi")},
                      {"generated", path("gen.smi")},
                      {"log", path("log.jsonl")},
                      {"port", "0"}}}};
  msw_server* srv = nullptr;
  ASSERT_EQ(msw_server_create(cfg.dump().c_str(), &srv), MSW_OK) << msw_last_error();
  EXPECT_EQ(msw_server_port(srv), -1);
  ASSERT_EQ(msw_server_bind(srv), MSW_OK);
  EXPECT_GT(msw_server_port(srv), 0);
  std::thread runner([srv] { msw_server_run(srv); });
  msw_server_stop(srv);
  runner.join();
  msw_server_free(srv);
  char* s = nullptr;
  EXPECT_EQ(msw_turing_report(path("missing.jsonl").c_str(), 1, &s), MSW_ERR_IO);
  std::ofstream(path("empty.jsonl")).flush();
  EXPECT_EQ(msw_turing_report(path("empty.jsonl").c_str(), 1, &s), MSW_ERR_EMPTY_LOG);
}

}  // namespace
