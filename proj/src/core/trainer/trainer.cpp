// SPDX-License-Identifier: Apache-2.0
#include "trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "common/error.hpp"
#include "common/io.hpp"
#include "common/parallel.hpp"
#include "common/rng.hpp"
#include "diffusion/des.hpp"
#include "featurize/features.hpp"

namespace molswap::train {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kOrderStream = 0x6f72646572;
constexpr char kCheckpointMagic[8] = {'M', 'S', 'W', 'C', 'K', 'P', 'T', '1'};

struct PairRef {
  int mol;   // dataset index
  int slot;  // position in the slice trajectory table
  int step;  // state index within the trajectory
};

// One prepared training item: the state G_s and what the losses need.
struct Item {
  PairRef ref;
  feat::FeatureBundle features;
  feat::Fingerprint fp;
  std::vector<diffusion::DesMove> feasible;
  diffusion::DesMove reverse;
  double t = 0.0;
};

struct Cursor {
  int epoch = 0;
  int slice = 0;
  std::int64_t batch = 0;
};

struct RunState {
  Cursor cursor;
  nn::AdamState adam;
  std::int64_t optimizer_steps = 0;
  std::int64_t skipped = 0;
  double train_sum = 0.0;
  std::int64_t train_count = 0;
  std::int64_t epoch_steps = 0;
  std::vector<EpochSummary> epochs;
  std::uintmax_t metrics_offset = 0;
};

json summary_json(const EpochSummary& s) {
  return {{"epoch", s.epoch},
          {"train_loss", s.train_loss},
          {"validation_loss", s.validation_loss},
          {"train_items", s.train_items},
          {"validation_items", s.validation_items},
          {"optimizer_steps", s.optimizer_steps}};
}

EpochSummary summary_from(const json& j) {
  EpochSummary s;
  s.epoch = j.at("epoch").get<int>();
  s.train_loss = j.at("train_loss").get<double>();
  s.validation_loss = j.at("validation_loss").get<double>();
  s.train_items = j.at("train_items").get<std::int64_t>();
  s.validation_items = j.at("validation_items").get<std::int64_t>();
  s.optimizer_steps = j.at("optimizer_steps").get<std::int64_t>();
  return s;
}

void put_matrix(std::string& out, const nn::Mat& m) {
  out.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
}

void get_matrix(std::string_view& in, nn::Mat& m) {
  const std::size_t bytes = static_cast<std::size_t>(m.size()) * sizeof(double);
  if (in.size() < bytes) fail(ErrorCode::kCorruptFile, "checkpoint truncated");
  std::memcpy(m.data(), in.data(), bytes);
  in.remove_prefix(bytes);
}

// Layout: magic, 8-byte little-endian metadata length, metadata JSON, then
// value, m and v of every parameter as raw doubles in parameter order.
void save_checkpoint(const fs::path& path, const nn::ModelWeights& w, const RunState& st, std::uint64_t seed) {
  json meta = {{"kind", nn::kind_name(w.kind())},
               {"variant", nn::variant_name(w.variant())},
               {"seed", seed},
               {"epoch", st.cursor.epoch},
               {"slice", st.cursor.slice},
               {"batch", st.cursor.batch},
               {"adam_step", st.adam.step},
               {"optimizer_steps", st.optimizer_steps},
               {"skipped", st.skipped},
               {"train_sum", st.train_sum},
               {"train_count", st.train_count},
               {"epoch_steps", st.epoch_steps},
               {"metrics_offset", st.metrics_offset},
               {"parameters", w.params().size()}};
  json epochs = json::array();
  for (const auto& e : st.epochs) epochs.push_back(summary_json(e));
  meta["epochs"] = std::move(epochs);
  const std::string text = meta.dump();

  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  std::uint64_t len = text.size();
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((len >> (8 * b)) & 0xff));
  out += text;
  for (const auto& p : w.params()) {
    put_matrix(out, p.value);
    put_matrix(out, p.m);
    put_matrix(out, p.v);
  }
  io::write_file_atomic(path, out);
}

// Fills w (already shaped from its template) and st. Throws kCorruptFile or
// kVersionMismatch.
void load_checkpoint(const fs::path& path, nn::ModelWeights& w, RunState& st, std::uint64_t seed) {
  const std::string data = io::read_file(path);
  std::string_view in(data);
  if (in.size() < 16 || std::memcmp(in.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
    fail(ErrorCode::kCorruptFile, "not a checkpoint: " + path.string());
  }
  in.remove_prefix(8);
  std::uint64_t len = 0;
  for (int b = 0; b < 8; ++b) len |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[b])) << (8 * b);
  in.remove_prefix(8);
  if (in.size() < len) fail(ErrorCode::kCorruptFile, "checkpoint truncated");
  json meta;
  try {
    meta = json::parse(in.substr(0, len));
    in.remove_prefix(len);
    if (meta.at("kind").get<std::string>() != nn::kind_name(w.kind()) ||
        meta.at("variant").get<std::string>() != nn::variant_name(w.variant())) {
      fail(ErrorCode::kVersionMismatch, "checkpoint model kind or variant differs from the run");
    }
    if (meta.at("seed").get<std::uint64_t>() != seed) {
      fail(ErrorCode::kVersionMismatch, "checkpoint was written with a different seed");
    }
    if (meta.at("parameters").get<std::size_t>() != w.params().size()) {
      fail(ErrorCode::kCorruptFile, "checkpoint parameter count differs");
    }
    st.cursor = {meta.at("epoch").get<int>(), meta.at("slice").get<int>(), meta.at("batch").get<std::int64_t>()};
    st.adam.step = meta.at("adam_step").get<std::int64_t>();
    st.optimizer_steps = meta.at("optimizer_steps").get<std::int64_t>();
    st.skipped = meta.at("skipped").get<std::int64_t>();
    st.train_sum = meta.at("train_sum").get<double>();
    st.train_count = meta.at("train_count").get<std::int64_t>();
    st.epoch_steps = meta.at("epoch_steps").get<std::int64_t>();
    st.metrics_offset = meta.at("metrics_offset").get<std::uintmax_t>();
    st.epochs.clear();
    for (const auto& e : meta.at("epochs")) st.epochs.push_back(summary_from(e));
  } catch (const json::exception& e) {
    fail(ErrorCode::kCorruptFile, std::string("checkpoint metadata: ") + e.what());
  }
  for (auto& p : w.params()) {
    get_matrix(in, p.value);
    get_matrix(in, p.m);
    get_matrix(in, p.v);
  }
  if (!in.empty()) fail(ErrorCode::kCorruptFile, "trailing bytes in checkpoint");
}

class Runner {
 public:
  Runner(const std::vector<MolGraph>& dataset, const TrainConfig& cfg, nn::ModelWeights weights,
         std::array<double, 2> lr)
      : data_(dataset), cfg_(cfg), w_(std::move(weights)) {
    adam_.lr = lr;
    workers_ = default_workers(static_cast<std::size_t>(cfg.workers));
  }

  TrainResult run() {
    if (data_.empty()) fail(ErrorCode::kEmptyDataset, "training dataset is empty");
    cfg_.validate();
    auto [train, validation] = split_indices(data_.size(), cfg_.train_fraction, cfg_.seed);
    if (train.empty()) fail(ErrorCode::kEmptyDataset, "training split is empty");

    RunState st;
    const bool have_ckpt = !cfg_.checkpoint_path.empty() && cfg_.resume && fs::exists(cfg_.checkpoint_path);
    if (have_ckpt) {
      load_checkpoint(cfg_.checkpoint_path, w_, st, cfg_.seed);
      if (!cfg_.metrics_path.empty() && fs::exists(cfg_.metrics_path)) {
        fs::resize_file(cfg_.metrics_path, st.metrics_offset);
      }
    } else if (!cfg_.metrics_path.empty()) {
      io::write_file_atomic(cfg_.metrics_path, "");
    }

    const int slice_size = cfg_.slice_size;
    const int slices = static_cast<int>((train.size() + static_cast<std::size_t>(slice_size) - 1) /
                                        static_cast<std::size_t>(slice_size));
    TrainResult result;
    for (int epoch = st.cursor.epoch; epoch < cfg_.epochs; ++epoch) {
      std::vector<int> order = train;
      Rng order_rng(mix_seed({cfg_.seed, kOrderStream, static_cast<std::uint64_t>(epoch)}));
      order_rng.shuffle(order);
      const int first_slice = epoch == st.cursor.epoch ? st.cursor.slice : 0;
      for (int slice = first_slice; slice < slices; ++slice) {
        const std::int64_t first_batch =
            (epoch == st.cursor.epoch && slice == st.cursor.slice) ? st.cursor.batch : 0;
        const auto begin = order.begin() + static_cast<std::ptrdiff_t>(slice) * slice_size;
        const auto end = order.begin() + std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(order.size()),
                                                                  (slice + 1) * static_cast<std::ptrdiff_t>(slice_size));
        std::vector<int> mols(begin, end);
        build_slice(mols, epoch, kTrajectoryStream);
        if (first_batch == 0) st.skipped += slice_skipped_;

        const std::int64_t bs = cfg_.batch_size;
        const std::int64_t batches = (static_cast<std::int64_t>(refs_.size()) + bs - 1) / bs;
        for (std::int64_t b = first_batch; b < batches; ++b) {
          const std::size_t lo = static_cast<std::size_t>(b * bs);
          const std::size_t hi = std::min(refs_.size(), static_cast<std::size_t>((b + 1) * bs));
          run_batch(lo, hi, epoch, slice, b, st);
          ++st.optimizer_steps;
          ++st.epoch_steps;
          if (st.optimizer_steps % cfg_.checkpoint_interval == 0) checkpoint(st, {epoch, slice, b + 1});
          if (cfg_.stop_after_steps && st.optimizer_steps >= *cfg_.stop_after_steps) {
            return finish(std::move(result), st, false);
          }
        }
        checkpoint(st, {epoch, slice + 1, 0});
      }

      EpochSummary sum;
      sum.epoch = epoch;
      sum.train_items = st.train_count;
      sum.train_loss = st.train_count ? st.train_sum / static_cast<double>(st.train_count) : 0.0;
      sum.optimizer_steps = st.epoch_steps;
      std::int64_t vcount = 0;
      sum.validation_loss = mean_loss(validation, static_cast<std::uint64_t>(epoch), kValidationStream, &vcount);
      sum.validation_items = vcount;
      st.epochs.push_back(sum);
      st.train_sum = 0.0;
      st.train_count = 0;
      st.epoch_steps = 0;
      write_summaries(st);
      checkpoint(st, {epoch + 1, 0, 0});
    }
    return finish(std::move(result), st, true);
  }

  double mean_loss(const std::vector<int>& indices, std::uint64_t epoch, std::uint64_t stream, std::int64_t* count) {
    build_slice(indices, static_cast<int>(epoch), stream);
    double total = 0.0;
    const std::size_t chunk = 64;
    for (std::size_t lo = 0; lo < refs_.size(); lo += chunk) {
      const std::size_t hi = std::min(refs_.size(), lo + chunk);
      auto items = prepare(lo, hi);
      for (auto& it : items) total += forward_only(it);
    }
    if (count) *count = static_cast<std::int64_t>(refs_.size());
    return refs_.empty() ? 0.0 : total / static_cast<double>(refs_.size());
  }

  nn::ModelWeights& weights() { return w_; }

 private:
  bool is_time() const { return w_.kind() == nn::ModelKind::kTime; }
  bool is_fps() const { return w_.variant() == nn::Variant::kFps; }

  // Trajectories for the given molecules, redrawn each epoch unless
  // resample_trajectories is off. Fills refs_ with every
  // training item in order.
  void build_slice(const std::vector<int>& mols, int epoch, std::uint64_t stream) {
    trajectories_.assign(mols.size(), {});
    slice_skipped_ = 0;
    parallel_for(mols.size(), workers_, [&](std::size_t k) {
      const std::uint64_t round = cfg_.resample_trajectories ? static_cast<std::uint64_t>(epoch) : 0;
      const std::uint64_t seed = mix_seed({cfg_.seed, stream, round,
                                           static_cast<std::uint64_t>(mols[k])});
      auto traj = diffusion::noise_trajectory(data_[static_cast<std::size_t>(mols[k])], std::nullopt, seed,
                                              cfg_.steps_factor);
      trajectories_[k].moves = std::move(traj.moves);
      trajectories_[k].planned = traj.planned_steps;
    });
    refs_.clear();
    for (std::size_t k = 0; k < mols.size(); ++k) {
      const int steps = static_cast<int>(trajectories_[k].moves.size());
      if (steps == 0) {
        ++slice_skipped_;
        continue;
      }
      const int first = is_time() ? 0 : 1;
      for (int s = first; s <= steps; ++s) refs_.push_back({mols[k], static_cast<int>(k), s});
    }
  }

  std::vector<Item> prepare(std::size_t lo, std::size_t hi) {
    std::vector<Item> items(hi - lo);
    parallel_for(items.size(), workers_, [&](std::size_t k) {
      const PairRef& r = refs_[lo + k];
      const auto& tr = trajectories_[static_cast<std::size_t>(r.slot)];
      MolGraph g = data_[static_cast<std::size_t>(r.mol)];
      for (int s = 0; s < r.step; ++s) g = diffusion::apply(g, tr.moves[static_cast<std::size_t>(s)]);
      Item& it = items[k];
      it.ref = r;
      it.t = static_cast<double>(r.step) / static_cast<double>(tr.planned);
      it.features = feat::featurize(g, it.t);
      if (is_fps()) it.fp = feat::fingerprint(g);
      if (!is_time()) {
        it.feasible = diffusion::enumerate_feasible(g);
        it.reverse = tr.moves[static_cast<std::size_t>(r.step - 1)].reversed();
      }
    });
    return items;
  }

  struct Forward {
    nn::Tape::Var loss = -1;
    nn::LossBreakdown parts;
    double t_pred = 0.0;
  };

  Forward forward(nn::Tape& tape, const Item& it) {
    Forward out;
    const feat::Fingerprint* fp = is_fps() ? &it.fp : nullptr;
    if (is_time()) {
      auto pred = nn::time_forward(tape, it.features, w_, fp);
      out.t_pred = tape.scalar(pred);
      out.loss = nn::time_loss(tape, pred, it.t);
      out.parts.total = tape.scalar(out.loss);
    } else {
      auto scores = nn::diffusion_forward(tape, it.features, w_, fp);
      out.loss = nn::diffusion_loss(tape, scores, it.features, data_[static_cast<std::size_t>(it.ref.mol)],
                                    it.feasible, it.reverse, cfg_.loss_weights, &out.parts);
    }
    return out;
  }

  double forward_only(const Item& it) {
    nn::Tape tape;
    return forward(tape, it).parts.total;
  }

  void run_batch(std::size_t lo, std::size_t hi, int epoch, int slice, std::int64_t batch, RunState& st) {
    auto items = prepare(lo, hi);
    w_.zero_grad();
    const double norm = 1.0 / static_cast<double>(items.size());
    std::string rows;
    for (const auto& it : items) {
      nn::Tape tape;
      Forward f = forward(tape, it);
      tape.backward(tape.scale(f.loss, norm));
      st.train_sum += f.parts.total;
      ++st.train_count;
      if (!cfg_.metrics_path.empty()) {
        json row = {{"epoch", epoch}, {"slice", slice}, {"batch", batch}, {"mol", it.ref.mol},
                    {"step", it.ref.step}, {"t", it.t}};
        if (is_time()) {
          row["t_pred"] = f.t_pred;
          row["mse"] = f.parts.total;
        } else {
          row["l_des"] = f.parts.l_des;
          row["l_form"] = f.parts.l_form;
          row["l_break"] = f.parts.l_break;
          row["total"] = f.parts.total;
          row["des_masked"] = f.parts.des_masked;
        }
        rows += row.dump();
        rows += '\n';
      }
    }
    nn::adam_step(w_, st.adam, adam_);
    if (!rows.empty()) {
      std::ofstream out(cfg_.metrics_path, std::ios::app | std::ios::binary);
      out << rows;
      if (!out) fail(ErrorCode::kIo, "cannot append metrics to " + cfg_.metrics_path.string());
    }
  }

  void checkpoint(RunState& st, Cursor c) {
    if (cfg_.checkpoint_path.empty()) return;
    st.cursor = c;
    st.metrics_offset = (!cfg_.metrics_path.empty() && fs::exists(cfg_.metrics_path))
                            ? fs::file_size(cfg_.metrics_path)
                            : 0;
    save_checkpoint(cfg_.checkpoint_path, w_, st, cfg_.seed);
  }

  void write_summaries(const RunState& st) {
    if (cfg_.summary_path.empty()) return;
    std::string text;
    for (const auto& e : st.epochs) text += summary_json(e).dump() + "\n";
    io::write_file_atomic(cfg_.summary_path, text);
  }

  TrainResult finish(TrainResult r, const RunState& st, bool completed) {
    r.weights = w_;
    r.epochs = st.epochs;
    r.optimizer_steps = st.optimizer_steps;
    r.skipped_molecules = st.skipped;
    r.completed = completed;
    return r;
  }

  struct SliceTrajectory {
    std::vector<diffusion::DesMove> moves;
    int planned = 1;
  };

  const std::vector<MolGraph>& data_;
  TrainConfig cfg_;
  nn::ModelWeights w_;
  nn::AdamConfig adam_;
  std::size_t workers_ = 1;
  std::vector<SliceTrajectory> trajectories_;
  std::vector<PairRef> refs_;
  std::int64_t slice_skipped_ = 0;
};

}  // namespace

void TrainConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::kInvalidArgument, m); };
  if (slice_size <= 0) bad("slice_size must be positive");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) bad("train_fraction must lie in (0, 1)");
  if (batch_size <= 0) bad("batch_size must be positive");
  if (epochs <= 0) bad("epochs must be positive");
  if (!(lr > 0.0) || !(lr_pretrained > 0.0) || !(lr_fingerprint > 0.0)) bad("learning rates must be positive");
  if (loss_weights.des < 0.0 || loss_weights.form < 0.0 || loss_weights.brk < 0.0) {
    bad("loss weights must be non-negative");
  }
  if (checkpoint_interval <= 0) bad("checkpoint_interval must be positive");
  if (workers <= 0) bad("workers must be positive");
  if (!(steps_factor > 0.0)) bad("steps_factor must be positive");
}

std::pair<std::vector<int>, std::vector<int>> split_indices(std::size_t count, double train_fraction,
                                                            std::uint64_t seed) {
  std::vector<int> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = static_cast<int>(i);
  Rng rng(mix_seed({seed, 0x73706c6974}));
  rng.shuffle(idx);
  std::size_t n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(count)));
  if (count > 0) n_train = std::clamp<std::size_t>(n_train, 1, count);
  std::vector<int> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<int> validation(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(train.begin(), train.end());
  std::sort(validation.begin(), validation.end());
  return {train, validation};
}

TrainResult train_diffusion(const std::vector<MolGraph>& dataset, const TrainConfig& cfg) {
  Runner r(dataset, cfg, nn::init_diffusion(cfg.variant, cfg.seed), {cfg.lr, cfg.lr});
  return r.run();
}

TrainResult train_time(const std::vector<MolGraph>& dataset, const TrainConfig& cfg) {
  Runner r(dataset, cfg, nn::init_time(cfg.variant, cfg.seed), {cfg.lr, cfg.lr});
  return r.run();
}

TrainResult finetune_fps(const nn::ModelWeights& base, const std::vector<MolGraph>& dataset, const TrainConfig& cfg) {
  if (base.variant() != nn::Variant::kBase) {
    fail(ErrorCode::kVersionMismatch, "fine-tuning needs BASE weights");
  }
  Runner r(dataset, cfg, nn::upgrade_to_fps(base, cfg.seed), {cfg.lr_pretrained, cfg.lr_fingerprint});
  return r.run();
}

double evaluate_loss(nn::ModelWeights& w, const std::vector<MolGraph>& dataset, const std::vector<int>& indices,
                     const TrainConfig& cfg, std::uint64_t stream) {
  Runner r(dataset, cfg, w, {cfg.lr, cfg.lr});
  return r.mean_loss(indices, 0, stream, nullptr);
}

}  // namespace molswap::train
