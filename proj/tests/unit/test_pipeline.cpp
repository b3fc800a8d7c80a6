// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>

#include "chem/smiles.hpp"
#include "common/error.hpp"
#include "common/io.hpp"
#include "pipeline/pipeline.hpp"
#include "test_util.hpp"

namespace molswap {
namespace {

using namespace pipeline;
namespace fs = std::filesystem;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

TEST(Config, SectionsAndComments) {
  const auto c = parse_config(
      "workers = 2\n"
      "# comment\n"
      "[train]\n"
      "epochs = 3   # trailing\n"
      "lr=0.002\n"
      "\n"
      "[sample]\n"
      "seed = 9\n");
  EXPECT_EQ(c["pipeline"]["workers"], "2");
  EXPECT_EQ(c["train"]["epochs"], "3");
  EXPECT_EQ(c["train"]["lr"], "0.002");
  const auto t = train_config_from(c["train"]);
  EXPECT_EQ(t.epochs, 3);
  EXPECT_DOUBLE_EQ(t.lr, 0.002);
  EXPECT_EQ(sample_config_from(c["sample"]).seed, 9u);
}

TEST(Config, ErrorsCarryLineNumbers) {
  try {
    parse_config("[train]\nepochs 3\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSyntax);
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
  EXPECT_EQ(code_of([] { parse_config("[train\n"); }), ErrorCode::kSyntax);
}

TEST(Config, TypedReadersRejectUnknownAndMalformed) {
  EXPECT_EQ(code_of([] { train_config_from({{"epoch", "3"}}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { train_config_from({{"epochs", "three"}}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { sample_config_from({{"threshold_start", "0"}}); }), ErrorCode::kInvalidArgument);
  EXPECT_FALSE(train_config_from({{"resample_trajectories", "false"}}).resample_trajectories);
  EXPECT_TRUE(sample_config_from({{"uniform_candidates", true}}).uniform_candidates);
}

TEST(Admission, RangeValidation) {
  EXPECT_NO_THROW(admission_from({{"min_atoms", "2"}, {"max_atoms", "200"}}));
  EXPECT_EQ(code_of([] { admission_from({{"min_atoms", "1"}}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { admission_from({{"max_atoms", "201"}}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { admission_from({{"min_atoms", "30"}, {"max_atoms", "10"}}); }), ErrorCode::kInvalidArgument);
  const auto r = admission_from({});
  EXPECT_EQ(r.min_atoms, 5);
  EXPECT_EQ(r.max_atoms, 70);
}

TEST(Ingest, RejectionReasons) {
  const std::string big(26, 'C');  // C26H54: 80 atoms with hydrogens
  const auto r = ingest_lines({"CCO ethanol", "OCC", "C(C", "[NH4+]", "O=O=O", big, "C", "CCCN"}, AdmissionRules{});
  EXPECT_EQ(r.input_lines, 8u);
  ASSERT_EQ(r.admitted.size(), 3u);  // methane has 5 atoms, the floor
  EXPECT_EQ(r.graphs.size(), 3u);
  EXPECT_EQ(r.rejected.at("duplicate"), 1u);
  EXPECT_EQ(r.rejected.at("parse"), 1u);
  EXPECT_EQ(r.rejected.at("unsupported"), 1u);
  EXPECT_EQ(r.rejected.at("valence"), 1u);
  EXPECT_EQ(r.rejected.at("size"), 1u);
  ASSERT_EQ(r.rejections.size(), 5u);
  EXPECT_EQ(r.rejections[0].line, 2u);
  EXPECT_EQ(r.rejections[0].reason, "duplicate");
  const auto rep = r.report();
  EXPECT_EQ(rep["admitted"], 3);
}

TEST(Ingest, AdmittedLinesRoundTrip) {
  const auto lines = testing::read_smiles("corpus.smi");
  const auto r = ingest_lines(lines, AdmissionRules{});
  std::size_t rejected = 0;
  for (const auto& [reason, n] : r.rejected) rejected += n;
  EXPECT_EQ(r.admitted.size() + rejected, lines.size());
  EXPECT_EQ(r.rejected.count("duplicate"), 0u);
  for (std::size_t i = 0; i < r.admitted.size(); ++i) EXPECT_EQ(chem::write_smiles(chem::parse_smiles(r.admitted[i])), r.admitted[i]);
}

TEST(Ingest, ReadMoleculesReportsLine) {
  const auto dir = fs::temp_directory_path() / "molswap_pipeline";
  fs::create_directories(dir);
  io::write_file_atomic(dir / "ok.smi", "CCO a\n# comment\nCCN b\n");
  EXPECT_EQ(read_molecules(dir / "ok.smi").size(), 2u);
  EXPECT_EQ(read_smiles_column(dir / "ok.smi"), (std::vector<std::string>{"CCO", "CCN"}));
  io::write_file_atomic(dir / "bad.smi", "CCO\nC(C\n");
  try {
    read_molecules(dir / "bad.smi");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSyntax);
    EXPECT_NE(std::string(e.what()).find("bad.smi:2:"), std::string::npos) << e.what();
  }
  EXPECT_EQ(code_of([&] { read_molecules(dir / "missing.smi"); }), ErrorCode::kIo);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace molswap
