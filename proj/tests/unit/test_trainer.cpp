// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "chem/smiles.hpp"
#include "common/error.hpp"
#include "common/io.hpp"
#include "neural/optimizer.hpp"
#include "trainer/trainer.hpp"
#include "test_util.hpp"

namespace molswap {
namespace {

namespace fs = std::filesystem;
using namespace train;

std::vector<chem::MolGraph> corpus(std::size_t count) {
  std::vector<chem::MolGraph> out;
  for (const auto& s : testing::read_smiles("corpus.smi")) {
    if (out.size() == count) break;
    out.push_back(chem::parse_smiles(s));
  }
  return out;
}

class TrainerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("molswap_trainer_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  TrainConfig base_config() const {
    TrainConfig c;
    c.workers = 1;
    c.seed = 3;
    c.lr = 1e-3;
    return c;
  }
  fs::path dir_;
};

TEST(Split, PartitionsDeterministically) {
  const auto [train, val] = split_indices(50, 0.8, 9);
  EXPECT_EQ(train.size(), 40u);
  EXPECT_EQ(val.size(), 10u);
  std::set<int> all(train.begin(), train.end());
  all.insert(val.begin(), val.end());
  EXPECT_EQ(all.size(), 50u);
  EXPECT_EQ(split_indices(50, 0.8, 9), split_indices(50, 0.8, 9));
  EXPECT_NE(split_indices(50, 0.8, 9).first, split_indices(50, 0.8, 10).first);
}

TEST_F(TrainerTest, BatchSizeTwelveDeterminesStepsAndMetricsRows) {
  auto cfg = base_config();
  cfg.metrics_path = dir_ / "m.jsonl";
  const auto data = corpus(20);
  const auto r = train_diffusion(data, cfg);
  ASSERT_TRUE(r.completed);
  ASSERT_EQ(r.epochs.size(), 1u);
  const auto& e = r.epochs[0];
  EXPECT_GT(e.train_items, 12);
  EXPECT_EQ(e.optimizer_steps, (e.train_items + 11) / 12);
  EXPECT_EQ(r.optimizer_steps, e.optimizer_steps);
  const auto rows = io::split_dataset_lines(io::read_file(cfg.metrics_path));
  EXPECT_EQ(static_cast<std::int64_t>(rows.size()), e.train_items);
}

TEST_F(TrainerTest, SlicesEachRoundUpTheirLastBatch) {
  auto cfg = base_config();
  cfg.slice_size = 5;
  const auto data = corpus(20);
  const auto r = train_time(data, cfg);
  // 16 training molecules in slices of 5: each slice rounds up separately.
  EXPECT_GE(r.optimizer_steps, (r.epochs[0].train_items + 11) / 12);
  EXPECT_LE(r.optimizer_steps, (r.epochs[0].train_items + 11) / 12 + 3);
}

TEST_F(TrainerTest, ResumeReproducesMetricStreamAndWeights) {
  const auto data = corpus(16);
  auto cfg = base_config();
  cfg.epochs = 2;
  cfg.checkpoint_interval = 2;
  cfg.metrics_path = dir_ / "full.jsonl";
  cfg.checkpoint_path = dir_ / "full.ckpt";
  const auto full = train_time(data, cfg);
  ASSERT_TRUE(full.completed);
  ASSERT_GT(full.optimizer_steps, 4);

  cfg.metrics_path = dir_ / "part.jsonl";
  cfg.checkpoint_path = dir_ / "part.ckpt";
  cfg.stop_after_steps = 3;
  const auto first = train_time(data, cfg);
  EXPECT_FALSE(first.completed);
  cfg.stop_after_steps.reset();
  const auto resumed = train_time(data, cfg);
  ASSERT_TRUE(resumed.completed);
  EXPECT_EQ(io::read_file(dir_ / "part.jsonl"), io::read_file(dir_ / "full.jsonl"));
  EXPECT_EQ(nn::weights_to_json(resumed.weights), nn::weights_to_json(full.weights));
  EXPECT_EQ(resumed.optimizer_steps, full.optimizer_steps);
}

TEST_F(TrainerTest, CorruptCheckpointIsReported) {
  auto cfg = base_config();
  cfg.checkpoint_path = dir_ / "bad.ckpt";
  io::write_file_atomic(cfg.checkpoint_path, "not a checkpoint");
  try {
    train_time(corpus(8), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCorruptFile);
  }
}

TEST_F(TrainerTest, EmptyDatasetAndBadConfig) {
  try {
    train_time({}, base_config());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDataset);
  }
  auto cfg = base_config();
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(FineTune, PretrainedGroupStepsTenTimesSmaller) {
  auto w = nn::upgrade_to_fps(nn::init_time(nn::Variant::kBase, 1), 2);
  std::vector<nn::Mat> before;
  for (auto& p : w.params()) {
    before.push_back(p.value);
    p.grad.setConstant(0.25);
  }
  nn::AdamState st;
  nn::AdamConfig cfg;
  cfg.lr = {1e-5, 1e-4};
  nn::adam_step(w, st, cfg);
  double pre = 0.0, fresh = 0.0;
  std::size_t k = 0;
  for (auto& p : w.params()) {
    const double step = (p.value - before[k++]).cwiseAbs().maxCoeff();
    (p.group == nn::kGroupBase ? pre : fresh) = std::max(p.group == nn::kGroupBase ? pre : fresh, step);
  }
  EXPECT_GT(fresh, 0.0);
  EXPECT_LE(pre, 0.1 * fresh * 1.01);  // float32 storage rounding
}

TEST_F(TrainerTest, FineTuneProducesFpsWithoutLosingFit) {
  const auto data = corpus(16);
  auto cfg = base_config();
  cfg.epochs = 2;
  cfg.resample_trajectories = false;
  const auto base = train_time(data, cfg);
  const auto [tr, va] = split_indices(data.size(), cfg.train_fraction, cfg.seed);
  auto bw = base.weights;
  const double base_loss = evaluate_loss(bw, data, tr, cfg, kTrajectoryStream);
  auto ft_cfg = cfg;
  ft_cfg.epochs = 1;
  ft_cfg.lr_pretrained = 1e-4;
  ft_cfg.lr_fingerprint = 1e-3;
  const auto ft = finetune_fps(base.weights, data, ft_cfg);
  EXPECT_EQ(ft.weights.variant(), nn::Variant::kFps);
  auto fw = ft.weights;
  const double ft_loss = evaluate_loss(fw, data, tr, cfg, kTrajectoryStream);
  EXPECT_LE(ft_loss, 1.1 * base_loss);
  try {
    finetune_fps(ft.weights, data, ft_cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVersionMismatch);
  }
}

TEST(TimeBaseline, UntrainedMatchesUniformVariance) {
  // Long trajectories make t close to uniform on [0, 1].
  std::vector<chem::MolGraph> data;
  for (const auto& s : testing::read_smiles("overfit50.smi")) data.push_back(chem::parse_smiles(s));
  data.resize(12);
  TrainConfig cfg;
  cfg.workers = 1;
  cfg.steps_factor = 1.0;
  auto w = nn::init_time(nn::Variant::kBase, 0);
  std::vector<int> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  EXPECT_NEAR(evaluate_loss(w, data, all, cfg, kValidationStream), 1.0 / 12.0, 0.03);
}

}  // namespace
}  // namespace molswap
