// SPDX-License-Identifier: Apache-2.0
#include "chem/smiles.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <vector>

#include "chem/canon.hpp"
#include "common/error.hpp"

namespace molswap::chem {

namespace {

struct RingOpen {
  int atom;
  int order;  // 0 when no bond symbol was given at the opening
  std::size_t pos;
};

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  MolGraph run() {
    if (s_.empty()) throw Error(ErrorCode::kSyntax, "empty SMILES", 0);
    parse_chain();
    if (i_ != s_.size()) {
      if (s_[i_] == ')') syntax("unbalanced ')'");
      syntax(std::string("unexpected character '") + s_[i_] + "'");
    }
    if (!rings_.empty()) {
      const auto& [num, open] = *rings_.begin();
      throw Error(ErrorCode::kSyntax, "unclosed ring " + std::to_string(num), open.pos);
    }
    return finish();
  }

 private:
  [[noreturn]] void syntax(const std::string& msg) const { throw Error(ErrorCode::kSyntax, msg, i_); }
  [[noreturn]] void unsupported(const std::string& msg) const {
    throw Error(ErrorCode::kUnsupportedFeature, msg, i_);
  }

  bool at_end() const { return i_ >= s_.size(); }
  char peek() const { return s_[i_]; }

  // chain := atom { [bond] ( atom | ring ) | '(' [bond] chain ')' }
  void parse_chain() {
    if (at_end()) syntax("expected atom");
    continue_chain(parse_atom());
  }

  // Everything after the first atom of a chain.
  void continue_chain(int first) {
    int prev = first;
    for (;;) {
      if (at_end()) return;
      const char c = peek();
      if (c == ')') return;
      if (c == '(') {
        const std::size_t open_pos = i_;
        ++i_;
        const int bond = parse_bond_symbol();
        if (at_end() || peek() == ')') syntax("empty branch");
        const int child = parse_atom();
        connect(prev, child, bond == 0 ? 1 : bond);
        continue_chain(child);
        if (at_end() || peek() != ')') throw Error(ErrorCode::kSyntax, "unclosed branch", open_pos);
        ++i_;
        continue;
      }
      const std::size_t bond_pos = i_;
      const int bond = parse_bond_symbol();
      if (at_end()) syntax("dangling bond");
      if (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '%') {
        ring_bond(prev, bond, bond_pos);
        continue;
      }
      if (peek() == '(' || peek() == ')') syntax("bond symbol before branch");
      const int next = parse_atom();
      connect(prev, next, bond == 0 ? 1 : bond);
      prev = next;
    }
  }

  int parse_bond_symbol() {
    if (at_end()) return 0;
    switch (peek()) {
      case '-': ++i_; return 1;
      case '=': ++i_; return 2;
      case '#': ++i_; return 3;
      case '$': unsupported("quadruple bond");
      case ':': unsupported("aromatic bond");
      case '/':
      case '\\': unsupported("bond stereo mark");
      case '.': unsupported("disconnected input ('.')");
      default: return 0;
    }
  }

  void ring_bond(int atom, int bond, std::size_t bond_pos) {
    const std::size_t pos = i_;
    int num;
    if (peek() == '%') {
      if (i_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[i_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(s_[i_ + 2]))) {
        syntax("'%' must be followed by two digits");
      }
      num = (s_[i_ + 1] - '0') * 10 + (s_[i_ + 2] - '0');
      i_ += 3;
    } else {
      num = peek() - '0';
      ++i_;
    }
    auto it = rings_.find(num);
    if (it == rings_.end()) {
      rings_.emplace(num, RingOpen{atom, bond, pos});
      return;
    }
    const RingOpen open = it->second;
    rings_.erase(it);
    if (open.order != 0 && bond != 0 && open.order != bond) {
      throw Error(ErrorCode::kSyntax, "conflicting bond symbols on ring " + std::to_string(num), bond_pos);
    }
    if (open.atom == atom) throw Error(ErrorCode::kSyntax, "ring closure to the same atom", pos);
    const int order = bond != 0 ? bond : (open.order != 0 ? open.order : 1);
    if (bonds_.count(key(open.atom, atom))) {
      throw Error(ErrorCode::kSyntax, "ring closure duplicates an existing bond", pos);
    }
    connect(open.atom, atom, order);
  }

  int parse_atom() {
    const char c = peek();
    if (c == '[') return parse_bracket_atom();
    if (std::islower(static_cast<unsigned char>(c))) {
      if (c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p' || c == 's') {
        unsupported(std::string("aromatic atom '") + c + "'");
      }
      syntax(std::string("unexpected character '") + c + "'");
    }
    if (c == '@') unsupported("stereo mark");
    if (c == '*') unsupported("wildcard atom");
    if (c == '.') unsupported("disconnected input ('.')");
    if (s_.substr(i_, 2) == "Cl") return add_atom(Element::Cl, true, 2);
    if (s_.substr(i_, 2) == "Br") return add_atom(Element::Br, true, 2);
    switch (c) {
      case 'B': return add_atom(Element::B, true, 1);
      case 'C': return add_atom(Element::C, true, 1);
      case 'N': return add_atom(Element::N, true, 1);
      case 'O': return add_atom(Element::O, true, 1);
      case 'F': return add_atom(Element::F, true, 1);
      case 'P': return add_atom(Element::P, true, 1);
      case 'S': return add_atom(Element::S, true, 1);
      case 'I': return add_atom(Element::I, true, 1);
      default: break;
    }
    if (std::isupper(static_cast<unsigned char>(c))) {
      unsupported(std::string("element '") + c + "' outside the organic subset");
    }
    syntax(std::string("expected atom, found '") + c + "'");
  }

  int parse_bracket_atom() {
    const std::size_t open = i_;
    const auto close = s_.find(']', i_);
    if (close == std::string_view::npos) syntax("unclosed '['");
    const std::string_view body = s_.substr(i_ + 1, close - i_ - 1);
    if (body.empty()) syntax("empty bracket atom");
    for (char ch : body) {
      if (ch == '+' || ch == '-') unsupported("formal charge");
      if (ch == '@') unsupported("stereo mark");
      if (ch == ':') unsupported("atom class");
    }
    if (std::isdigit(static_cast<unsigned char>(body[0]))) unsupported("isotope label");
    if (std::islower(static_cast<unsigned char>(body[0]))) unsupported("aromatic atom");
    static const std::map<std::string_view, Element, std::less<>> kAllowed = {
        {"Na", Element::Na}, {"K", Element::K}, {"Ca", Element::Ca}, {"Mg", Element::Mg}, {"H", Element::H}};
    auto it = kAllowed.find(body);
    if (it == kAllowed.end()) {
      throw Error(ErrorCode::kUnsupportedFeature, "unsupported bracket atom [" + std::string(body) + "]", open);
    }
    return add_atom(it->second, false, close - i_ + 1);
  }

  int add_atom(Element e, bool organic, std::size_t width) {
    const int idx = static_cast<int>(atoms_.size());
    atoms_.push_back(e);
    organic_.push_back(organic);
    positions_.push_back(i_);
    i_ += width;
    return idx;
  }

  static std::pair<int, int> key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

  void connect(int a, int b, int order) {
    auto [it, inserted] = bonds_.emplace(key(a, b), order);
    if (!inserted) throw Error(ErrorCode::kSyntax, "duplicate bond", i_);
  }

  MolGraph finish() {
    const int heavy = static_cast<int>(atoms_.size());
    std::vector<int> degree(static_cast<std::size_t>(heavy), 0);
    for (const auto& [ab, order] : bonds_) {
      degree[static_cast<std::size_t>(ab.first)] += order;
      degree[static_cast<std::size_t>(ab.second)] += order;
    }
    std::vector<int> implicit(static_cast<std::size_t>(heavy), 0);
    for (int a = 0; a < heavy; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const int valence = standard_valence(atoms_[ua]);
      if (degree[ua] > valence) {
        throw Error(ErrorCode::kValence,
                    std::string(symbol(atoms_[ua])) + " atom has " + std::to_string(degree[ua]) +
                        " bonds, valence is " + std::to_string(valence),
                    positions_[ua]);
      }
      if (organic_[ua]) {
        implicit[ua] = valence - degree[ua];
      } else if (degree[ua] < valence) {
        throw Error(ErrorCode::kValence,
                    "[" + std::string(symbol(atoms_[ua])) + "] needs " + std::to_string(valence) +
                        " explicit bonds, has " + std::to_string(degree[ua]),
                    positions_[ua]);
      }
    }
    std::vector<Element> atoms = atoms_;
    for (int a = 0; a < heavy; ++a) {
      atoms.insert(atoms.end(), static_cast<std::size_t>(implicit[static_cast<std::size_t>(a)]), Element::H);
    }
    MolGraph g(std::move(atoms));
    for (const auto& [ab, order] : bonds_) g.set_multiplicity(ab.first, ab.second, order);
    int next_h = heavy;
    for (int a = 0; a < heavy; ++a) {
      for (int k = 0; k < implicit[static_cast<std::size_t>(a)]; ++k) g.set_multiplicity(a, next_h++, 1);
    }
    if (component_count(g) > 1) fail(ErrorCode::kUnsupportedFeature, "disconnected input");
    return g;
  }

  std::string_view s_;
  std::size_t i_ = 0;
  std::vector<Element> atoms_;
  std::vector<bool> organic_;
  std::vector<std::size_t> positions_;
  std::map<std::pair<int, int>, int> bonds_;
  std::map<int, RingOpen> rings_;
};

std::string_view bond_text(int order) {
  switch (order) {
    case 2: return "=";
    case 3: return "#";
    default: return "";
  }
}

class Writer {
 public:
  explicit Writer(const MolGraph& g) : g_(g), form_(canonical_form(g)) {
    const int n = g.atom_count();
    written_.assign(static_cast<std::size_t>(n), true);
    for (int a = 0; a < n; ++a) {
      if (!g.is_hydrogen(a) || g.neighbors(a).size() != 1) continue;
      const int nb = g.neighbors(a).front();
      if (info(g.element(nb)).organic_subset) written_[static_cast<std::size_t>(a)] = false;
    }
  }

  std::string run() {
    const int n = g_.atom_count();
    int start = -1;
    for (int p = 0; p < n; ++p) {
      const int a = form_.order[static_cast<std::size_t>(p)];
      if (written_[static_cast<std::size_t>(a)]) {
        start = a;
        break;
      }
    }
    visited_.assign(static_cast<std::size_t>(n), false);
    parent_.assign(static_cast<std::size_t>(n), -1);
    closures_.assign(static_cast<std::size_t>(n), {});
    children_.assign(static_cast<std::size_t>(n), {});
    plan(start);
    emit(start);
    return out_;
  }

 private:
  std::vector<int> ordered_neighbors(int a) const {
    std::vector<int> nbs;
    for (int b : g_.neighbors(a)) {
      if (written_[static_cast<std::size_t>(b)]) nbs.push_back(b);
    }
    std::sort(nbs.begin(), nbs.end(), [this](int x, int y) { return rank(x) < rank(y); });
    return nbs;
  }

  int rank(int a) const { return form_.rank[static_cast<std::size_t>(a)]; }

  // Depth-first spanning tree; non-tree bonds become ring closures, recorded
  // at both endpoints.
  void plan(int a) {
    visited_[static_cast<std::size_t>(a)] = true;
    for (int b : ordered_neighbors(a)) {
      if (b == parent_[static_cast<std::size_t>(a)]) continue;
      if (visited_[static_cast<std::size_t>(b)]) {
        if (!closed_.count({std::min(a, b), std::max(a, b)})) {
          closed_.insert({std::min(a, b), std::max(a, b)});
          closures_[static_cast<std::size_t>(b)].push_back(a);
          closures_[static_cast<std::size_t>(a)].push_back(b);
        }
        continue;
      }
      parent_[static_cast<std::size_t>(b)] = a;
      children_[static_cast<std::size_t>(a)].push_back(b);
      plan(b);
    }
  }

  void emit(int a) {
    const Element e = g_.element(a);
    if (info(e).organic_subset) {
      out_ += symbol(e);
    } else {
      out_ += '[';
      out_ += symbol(e);
      out_ += ']';
    }
    // Closings first, in partner-rank order, then openings.
    auto& cl = closures_[static_cast<std::size_t>(a)];
    std::sort(cl.begin(), cl.end(), [this](int x, int y) { return rank(x) < rank(y); });
    std::vector<int> opening;
    for (int b : cl) {
      auto it = ring_number_.find({std::min(a, b), std::max(a, b)});
      if (it != ring_number_.end()) {
        write_ring_number(it->second);
        free_numbers_.push_back(it->second);
        std::sort(free_numbers_.begin(), free_numbers_.end());
        ring_number_.erase(it);
      } else {
        opening.push_back(b);
      }
    }
    for (int b : opening) {
      int num;
      if (!free_numbers_.empty()) {
        num = free_numbers_.front();
        free_numbers_.erase(free_numbers_.begin());
      } else {
        num = ++max_number_;
      }
      if (num > 99) fail(ErrorCode::kInvalidArgument, "more than 99 simultaneous ring closures");
      ring_number_[{std::min(a, b), std::max(a, b)}] = num;
      out_ += bond_text(g_.multiplicity(a, b));
      write_ring_number(num);
    }
    const auto& kids = children_[static_cast<std::size_t>(a)];
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const bool branch = k + 1 < kids.size();
      if (branch) out_ += '(';
      out_ += bond_text(g_.multiplicity(a, kids[k]));
      emit(kids[k]);
      if (branch) out_ += ')';
    }
  }

  void write_ring_number(int num) {
    if (num < 10) {
      out_ += static_cast<char>('0' + num);
    } else {
      out_ += '%';
      out_ += std::to_string(num);
    }
  }

  const MolGraph& g_;
  CanonicalForm form_;
  std::vector<bool> written_;
  std::vector<bool> visited_;
  std::vector<int> parent_;
  std::vector<std::vector<int>> closures_;
  std::vector<std::vector<int>> children_;
  std::set<std::pair<int, int>> closed_;
  std::map<std::pair<int, int>, int> ring_number_;
  std::vector<int> free_numbers_;
  int max_number_ = 0;
  std::string out_;
};

}  // namespace

MolGraph parse_smiles(std::string_view text) { return Parser(text).run(); }

std::string write_smiles(const MolGraph& g) {
  if (g.empty()) fail(ErrorCode::kInvalidArgument, "cannot write an empty graph");
  if (component_count(g) != 1) fail(ErrorCode::kNotConnected, "graph has more than one component");
  return Writer(g).run();
}

}  // namespace molswap::chem
