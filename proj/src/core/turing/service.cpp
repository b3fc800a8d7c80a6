// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <cmath>
#include <cstdio>

#include "chem/canon.hpp"
#include "chem/smiles.hpp"
#include "common/error.hpp"
#include "common/io.hpp"
#include "common/rng.hpp"
#include "topo/topo.hpp"
#include "turing/turing.hpp"

namespace molswap::turing {

namespace {

json error_body(std::string message) { return {{"error", std::move(message)}}; }

double round4(double x) { return std::round(x * 1e4) / 1e4; }

std::string hex_id(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

json session_event(const Session& s) {
  json rounds = json::array();
  for (const auto& r : s.rounds) {
    rounds.push_back({{"pair_id", r.pair.pair_id},
                      {"formula", r.pair.formula},
                      {"real_smiles", r.pair.real_smiles},
                      {"generated_smiles", r.pair.generated_smiles},
                      {"real_position", side_name(r.real_position)}});
  }
  return {{"event", "session"},
          {"id", s.id},
          {"expertise", s.expertise},
          {"created_at", s.created_at},
          {"rounds", std::move(rounds)}};
}

void apply_event(std::map<std::string, Session>& sessions, const json& ev) {
  const std::string kind = ev.at("event").get<std::string>();
  if (kind == "session") {
    Session s;
    s.id = ev.at("id").get<std::string>();
    s.expertise = ev.at("expertise").get<std::string>();
    s.created_at = ev.at("created_at").get<std::int64_t>();
    for (const auto& r : ev.at("rounds")) {
      RoundRecord rec;
      rec.pair = {r.at("pair_id").get<std::string>(), r.at("formula").get<std::string>(),
                  r.at("real_smiles").get<std::string>(), r.at("generated_smiles").get<std::string>()};
      const auto side = parse_side(r.at("real_position").get<std::string>());
      if (!side) fail(ErrorCode::kCorruptFile, "bad real_position in log");
      rec.real_position = *side;
      s.rounds.push_back(std::move(rec));
    }
    if (s.rounds.size() != static_cast<std::size_t>(kRounds)) fail(ErrorCode::kCorruptFile, "session without 20 rounds");
    sessions[s.id] = std::move(s);
    return;
  }
  auto it = sessions.find(ev.at("id").get<std::string>());
  if (it == sessions.end()) fail(ErrorCode::kCorruptFile, "log event for an unknown session");
  const int round = ev.at("round").get<int>();
  if (round < 1 || round > kRounds) fail(ErrorCode::kCorruptFile, "round index out of range in log");
  RoundRecord& rec = it->second.rounds[static_cast<std::size_t>(round - 1)];
  if (kind == "served") {
    rec.served_at = ev.at("at").get<std::int64_t>();
  } else if (kind == "answer") {
    const auto side = parse_side(ev.at("choice").get<std::string>());
    if (!side) fail(ErrorCode::kCorruptFile, "bad choice in log");
    rec.choice = side;
    rec.correct = *side == rec.real_position;
    rec.answered_at = ev.at("at").get<std::int64_t>();
  } else {
    fail(ErrorCode::kCorruptFile, "unknown log event " + kind);
  }
}

}  // namespace

std::string_view side_name(Side s) { return s == Side::kLeft ? "left" : "right"; }

std::optional<Side> parse_side(std::string_view s) {
  if (s == "left") return Side::kLeft;
  if (s == "right") return Side::kRight;
  return std::nullopt;
}

bool valid_expertise(std::string_view e) {
  for (auto x : kExpertise) {
    if (x == e) return true;
  }
  return false;
}

int Session::answered() const {
  int n = 0;
  for (const auto& r : rounds) n += r.choice ? 1 : 0;
  return n;
}

std::vector<Pair> build_pair_pool(const std::vector<std::string>& originals, const std::vector<std::string>& generated) {
  struct Original {
    std::string smiles;
    std::string signature;
  };
  std::map<std::string, std::vector<Original>> by_formula;
  for (const auto& s : originals) {
    try {
      const auto g = chem::parse_smiles(s);
      by_formula[chem::formula_of(g).to_string()].push_back({s, chem::canonical_signature(g).text});
    } catch (const Error&) {
    }
  }
  std::map<std::string, std::size_t> next;
  std::vector<Pair> pool;
  for (const auto& s : generated) {
    MolGraph g;
    try {
      g = chem::parse_smiles(s);
    } catch (const Error&) {
      continue;
    }
    const std::string formula = chem::formula_of(g).to_string();
    auto it = by_formula.find(formula);
    if (it == by_formula.end()) continue;
    const std::string sig = chem::canonical_signature(g).text;
    const auto& cands = it->second;
    std::size_t& cursor = next[formula];
    for (std::size_t k = 0; k < cands.size(); ++k) {
      const Original& o = cands[(cursor + k) % cands.size()];
      if (o.signature == sig) continue;
      pool.push_back({"p" + std::to_string(pool.size()), formula, o.smiles, s});
      cursor = (cursor + k + 1) % cands.size();
      break;
    }
  }
  return pool;
}

json molecule_payload(const MolGraph& g) {
  const auto layout = topo::layout_2d(g);
  std::vector<int> shown;
  for (int a = 0; a < g.atom_count(); ++a) {
    if (!g.is_hydrogen(a)) shown.push_back(a);
  }
  const bool all = shown.empty();
  if (all) {
    for (int a = 0; a < g.atom_count(); ++a) shown.push_back(a);
  }
  std::vector<int> index(static_cast<std::size_t>(g.atom_count()), -1);
  json atoms = json::array();
  for (std::size_t k = 0; k < shown.size(); ++k) {
    const int a = shown[k];
    index[static_cast<std::size_t>(a)] = static_cast<int>(k);
    const auto& p = layout.positions[static_cast<std::size_t>(a)];
    atoms.push_back({{"element", chem::symbol(g.element(a))},
                     {"x", round4(p.x)},
                     {"y", round4(p.y)},
                     {"hydrogens", all ? 0 : g.hydrogen_count(a)}});
  }
  json bonds = json::array();
  for (const auto& b : g.bonds()) {
    const int x = index[static_cast<std::size_t>(b.a)], y = index[static_cast<std::size_t>(b.b)];
    if (x < 0 || y < 0) continue;
    bonds.push_back({{"a", x}, {"b", y}, {"order", b.order}});
  }
  return {{"atoms", std::move(atoms)}, {"bonds", std::move(bonds)}};
}

Service::Service(std::vector<Pair> pool, ServiceConfig cfg) : pool_(std::move(pool)), cfg_(std::move(cfg)) {
  if (!cfg_.clock) {
    cfg_.clock = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
  replay();
}

std::int64_t Service::now() const { return cfg_.clock(); }

void Service::replay() {
  if (cfg_.log_path.empty() || !std::filesystem::exists(cfg_.log_path)) return;
  for (auto& s : replay_log(cfg_.log_path)) sessions_[s.id] = std::move(s);
  created_ = sessions_.size();
}

void Service::append(const json& event) {
  if (!cfg_.log_path.empty()) io::append_line(cfg_.log_path, event.dump());
}

std::size_t Service::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::optional<Session> Service::session(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

Response Service::create_session(const json& body) {
  if (!body.is_object() || !body.contains("expertise") || !body["expertise"].is_string() ||
      !valid_expertise(body["expertise"].get<std::string>())) {
    return {400, error_body("expertise must be one of high_school, undergraduate, postgraduate")};
  }
  std::lock_guard lock(mutex_);
  if (pool_.empty()) return {503, error_body("pair pool is empty")};
  Session s;
  std::uint64_t counter = created_;
  do {
    s.id = hex_id(mix_seed({cfg_.seed, 0x73657373, counter++}));
  } while (sessions_.count(s.id));
  Rng rng(mix_seed({cfg_.seed, 0x64726177, created_}));
  std::vector<std::size_t> order;
  while (order.size() < static_cast<std::size_t>(kRounds)) {
    std::vector<std::size_t> block(pool_.size());
    for (std::size_t i = 0; i < block.size(); ++i) block[i] = i;
    rng.shuffle(block);
    order.insert(order.end(), block.begin(), block.end());
  }
  s.expertise = body["expertise"].get<std::string>();
  s.created_at = now();
  for (int r = 0; r < kRounds; ++r) {
    RoundRecord rec;
    rec.pair = pool_[order[static_cast<std::size_t>(r)]];
    rec.real_position = rng.below(2) == 0 ? Side::kLeft : Side::kRight;
    s.rounds.push_back(std::move(rec));
  }
  append(session_event(s));
  ++created_;
  const std::string id = s.id;
  sessions_[id] = std::move(s);
  return {201, {{"session_id", id}}};
}

Response Service::get_round(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return {404, error_body("unknown session")};
  Session& s = it->second;
  const int k = s.answered();
  if (k == kRounds) return {409, error_body("session complete")};
  RoundRecord& rec = s.rounds[static_cast<std::size_t>(k)];
  if (rec.served_at == 0) {
    rec.served_at = now();
    append({{"event", "served"}, {"id", id}, {"round", k + 1}, {"at", rec.served_at}});
  }
  json real, generated;
  try {
    real = molecule_payload(chem::parse_smiles(rec.pair.real_smiles));
    generated = molecule_payload(chem::parse_smiles(rec.pair.generated_smiles));
  } catch (const Error& e) {
    return {500, error_body(std::string("cannot render pair: ") + e.what())};
  }
  const bool real_left = rec.real_position == Side::kLeft;
  return {200,
          {{"session_id", id},
           {"round", k + 1},
           {"rounds", kRounds},
           {"progress", {{"current", k + 1}, {"total", kRounds}}},
           {"pair_id", rec.pair.pair_id},
           {"formula", rec.pair.formula},
           {"left", real_left ? real : generated},
           {"right", real_left ? generated : real}}};
}

Response Service::post_round(const std::string& id, const json& body) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return {404, error_body("unknown session")};
  if (!body.is_object() || !body.contains("pair_id") || !body["pair_id"].is_string() || !body.contains("choice") ||
      !body["choice"].is_string()) {
    return {400, error_body("body needs pair_id and choice")};
  }
  const auto choice = parse_side(body["choice"].get<std::string>());
  if (!choice) return {400, error_body("choice must be left or right")};
  Session& s = it->second;
  const int k = s.answered();
  if (k == kRounds) return {409, error_body("session complete")};
  RoundRecord& rec = s.rounds[static_cast<std::size_t>(k)];
  if (body["pair_id"].get<std::string>() != rec.pair.pair_id) {
    return {409, error_body("pair_id is not the current round")};
  }
  const std::int64_t at = now();
  append({{"event", "answer"}, {"id", id}, {"round", k + 1}, {"pair_id", rec.pair.pair_id},
          {"choice", side_name(*choice)}, {"at", at}});
  rec.choice = choice;
  rec.correct = *choice == rec.real_position;
  rec.answered_at = at;
  return {200, {{"accepted", true}, {"answered", k + 1}, {"rounds", kRounds}}};
}

Response Service::get_result(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return {404, error_body("unknown session")};
  const Session& s = it->second;
  if (!s.complete()) return {409, error_body("session incomplete")};
  json rounds = json::array();
  int correct = 0;
  for (std::size_t r = 0; r < s.rounds.size(); ++r) {
    const auto& rec = s.rounds[r];
    correct += *rec.correct ? 1 : 0;
    rounds.push_back({{"round", r + 1},
                      {"pair_id", rec.pair.pair_id},
                      {"choice", side_name(*rec.choice)},
                      {"real_position", side_name(rec.real_position)},
                      {"correct", *rec.correct}});
  }
  return {200,
          {{"session_id", id},
           {"accuracy", static_cast<double>(correct) / kRounds},
           {"correct", correct},
           {"rounds", std::move(rounds)}}};
}

Response Service::get_status(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return {404, error_body("unknown session")};
  const Session& s = it->second;
  return {200,
          {{"session_id", id},
           {"expertise", s.expertise},
           {"answered", s.answered()},
           {"rounds", kRounds},
           {"complete", s.complete()}}};
}

std::vector<Session> replay_log_text(std::string_view text) {
  std::map<std::string, Session> sessions;
  std::vector<std::string> order;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = io::trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const json ev = json::parse(line);
      const bool is_new = ev.at("event") == "session";
      apply_event(sessions, ev);
      if (is_new) order.push_back(ev.at("id").get<std::string>());
    } catch (const json::exception& e) {
      fail(ErrorCode::kCorruptFile, "log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::vector<Session> out;
  for (const auto& id : order) out.push_back(sessions.at(id));
  return out;
}

std::vector<Session> replay_log(const std::filesystem::path& path) { return replay_log_text(io::read_file(path)); }

}  // namespace molswap::turing
