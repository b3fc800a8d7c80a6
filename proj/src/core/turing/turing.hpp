// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chem/molgraph.hpp"

namespace molswap::turing {

using chem::MolGraph;
using nlohmann::json;

inline constexpr int kRounds = 20;

struct Pair {
  std::string pair_id;
  std::string formula;
  std::string real_smiles;
  std::string generated_smiles;
};

// Every generated molecule is paired with an original of the same formula;
// generated molecules identical to every candidate original, or without one,
// are dropped. Originals are taken in file order, round-robin per formula.
std::vector<Pair> build_pair_pool(const std::vector<std::string>& originals, const std::vector<std::string>& generated);

enum class Side { kLeft, kRight };
std::string_view side_name(Side s);
std::optional<Side> parse_side(std::string_view s);

inline constexpr std::array<std::string_view, 3> kExpertise = {"high_school", "undergraduate", "postgraduate"};
bool valid_expertise(std::string_view e);

struct RoundRecord {
  Pair pair;
  Side real_position = Side::kLeft;
  std::optional<Side> choice;
  std::optional<bool> correct;
  std::int64_t served_at = 0;
  std::int64_t answered_at = 0;
};

struct Session {
  std::string id;
  std::string expertise;
  std::int64_t created_at = 0;
  std::vector<RoundRecord> rounds;  // exactly kRounds, pre-drawn

  int answered() const;
  bool complete() const { return answered() == kRounds; }
};

// Client-facing half of a pair: heavy atoms (all atoms when there is none)
// with layout positions and attached hydrogen counts.
json molecule_payload(const MolGraph& g);

struct Response {
  int status = 200;
  json body;
};

struct ServiceConfig {
  std::uint64_t seed = 0;
  std::filesystem::path log_path;  // empty: in-memory only
  std::function<std::int64_t()> clock;  // milliseconds; defaults to the system clock
};

// Session logic independent of HTTP. Thread-safe; state changes are
// appended to the log before they become visible.
class Service {
 public:
  Service(std::vector<Pair> pool, ServiceConfig cfg);

  Response create_session(const json& body);
  Response get_round(const std::string& id);
  Response post_round(const std::string& id, const json& body);
  Response get_result(const std::string& id);
  Response get_status(const std::string& id);

  std::size_t session_count() const;
  std::optional<Session> session(const std::string& id) const;

 private:
  void replay();
  void append(const json& event);
  std::int64_t now() const;

  std::vector<Pair> pool_;
  ServiceConfig cfg_;
  mutable std::mutex mutex_;
  std::map<std::string, Session> sessions_;
  std::uint64_t created_ = 0;
};

// Sessions reconstructed from a response log. Throws kCorruptFile.
std::vector<Session> replay_log(const std::filesystem::path& path);
std::vector<Session> replay_log_text(std::string_view text);

inline constexpr int kBootstrapResamples = 1000;

struct Interval {
  double accuracy = 0.0;
  double low = 0.0;
  double high = 0.0;
  std::size_t participants = 0;
  std::size_t answers = 0;
};

// Accuracy with a percentile bootstrap CI over participants. Each
// participant contributes (correct, answered) counts.
Interval bootstrap_accuracy(const std::vector<std::pair<int, int>>& per_participant, std::uint64_t seed,
                            int resamples = kBootstrapResamples);

// Overall and stratified accuracy over every answered round. Strata use the
// real molecule of each pair. Throws kEmptyLog.
json turing_report(const std::vector<Session>& sessions, std::uint64_t seed, int resamples = kBootstrapResamples);

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string allowed_origin;  // CORS origin for the UI, empty: none
  std::filesystem::path static_dir;  // UI assets, empty: none
};

// Blocking HTTP server over a Service.
class HttpServer {
 public:
  HttpServer(Service& service, ServerConfig cfg);
  ~HttpServer();

  // Binds, then serves until stop(). Returns false when binding fails.
  bool listen();
  // Binds only; returns the bound port or -1. Call serve() afterwards.
  int bind();
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace molswap::turing
