// SPDX-License-Identifier: Apache-2.0
#include "chem/molgraph.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "common/error.hpp"

namespace molswap::chem {

MolGraph::MolGraph(std::vector<Element> atoms)
    : atoms_(std::move(atoms)),
      mult_(atoms_.size() * atoms_.size(), 0),
      adj_(atoms_.size()),
      degree_(atoms_.size(), 0) {}

MolGraph::MolGraph(std::vector<Element> atoms, std::span<const Bond> bonds)
    : MolGraph(std::move(atoms)) {
  for (const Bond& b : bonds) {
    check_index(b.a);
    check_index(b.b);
    if (b.a == b.b) fail(ErrorCode::kInvalidArgument, "self-loop on atom " + std::to_string(b.a));
    if (bonded(b.a, b.b)) {
      fail(ErrorCode::kInvalidArgument, "duplicate bond record " + std::to_string(b.a) + "-" + std::to_string(b.b));
    }
    set_multiplicity(b.a, b.b, b.order);
  }
}

void MolGraph::check_index(int atom) const {
  if (atom < 0 || atom >= atom_count()) {
    fail(ErrorCode::kInvalidArgument, "atom index " + std::to_string(atom) + " out of range");
  }
}

int MolGraph::add_atom(Element e) {
  const std::size_t n = atoms_.size();
  std::vector<std::uint8_t> grown((n + 1) * (n + 1), 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(mult_.begin() + static_cast<std::ptrdiff_t>(i * n), n,
                grown.begin() + static_cast<std::ptrdiff_t>(i * (n + 1)));
  }
  mult_ = std::move(grown);
  atoms_.push_back(e);
  adj_.emplace_back();
  degree_.push_back(0);
  return static_cast<int>(n);
}

void MolGraph::set_multiplicity(int a, int b, int order) {
  check_index(a);
  check_index(b);
  if (a == b) fail(ErrorCode::kInvalidArgument, "self-loop on atom " + std::to_string(a));
  if (order < 0 || order > kMaxMultiplicity) {
    fail(ErrorCode::kInvalidArgument, "bond order " + std::to_string(order) + " outside 0..3");
  }
  const int old = multiplicity(a, b);
  if (old == order) return;
  const std::size_t n = atoms_.size();
  mult_[static_cast<std::size_t>(a) * n + static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(order);
  mult_[static_cast<std::size_t>(b) * n + static_cast<std::size_t>(a)] = static_cast<std::uint8_t>(order);
  degree_[static_cast<std::size_t>(a)] += order - old;
  degree_[static_cast<std::size_t>(b)] += order - old;
  bond_units_ += order - old;
  auto link = [this](int u, int v) {
    auto& list = adj_[static_cast<std::size_t>(u)];
    list.insert(std::lower_bound(list.begin(), list.end(), v), v);
  };
  auto unlink = [this](int u, int v) {
    auto& list = adj_[static_cast<std::size_t>(u)];
    list.erase(std::lower_bound(list.begin(), list.end(), v));
  };
  if (old == 0) {
    link(a, b);
    link(b, a);
    ++bond_records_;
  } else if (order == 0) {
    unlink(a, b);
    unlink(b, a);
    --bond_records_;
  }
}

void MolGraph::add_bond(int a, int b, int order) {
  check_index(a);
  check_index(b);
  set_multiplicity(a, b, multiplicity(a, b) + order);
}

std::vector<Bond> MolGraph::bonds() const {
  std::vector<Bond> out;
  out.reserve(static_cast<std::size_t>(bond_records_));
  for (int a = 0; a < atom_count(); ++a) {
    for (int b : neighbors(a)) {
      if (b > a) out.push_back({a, b, multiplicity(a, b)});
    }
  }
  return out;
}

int MolGraph::hydrogen_count(int atom) const {
  int h = 0;
  for (int nb : neighbors(atom)) {
    if (element(nb) == Element::H) ++h;
  }
  return h;
}

int MolGraph::heavy_neighbor_count(int atom) const {
  return static_cast<int>(neighbors(atom).size()) - hydrogen_count(atom);
}

bool MolGraph::is_saturated() const {
  for (int a = 0; a < atom_count(); ++a) {
    if (!is_saturated(a)) return false;
  }
  return true;
}

MolGraph MolGraph::permuted(std::span<const int> perm) const {
  if (static_cast<int>(perm.size()) != atom_count()) {
    fail(ErrorCode::kInvalidArgument, "permutation size mismatch");
  }
  std::vector<Element> atoms(atoms_.size());
  for (int i = 0; i < atom_count(); ++i) atoms[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = atoms_[static_cast<std::size_t>(i)];
  MolGraph out(std::move(atoms));
  for (const Bond& b : bonds()) {
    out.set_multiplicity(perm[static_cast<std::size_t>(b.a)], perm[static_cast<std::size_t>(b.b)], b.order);
  }
  out.provenance_ = provenance_;
  return out;
}

int MolFormula::total() const {
  int t = 0;
  for (int c : counts) t += c;
  return t;
}

std::string MolFormula::to_string() const {
  std::vector<std::pair<std::string_view, int>> parts;
  const bool has_carbon = count(Element::C) > 0;
  for (Element e : all_elements()) {
    if (count(e) == 0) continue;
    if (has_carbon && (e == Element::C || e == Element::H)) continue;
    parts.emplace_back(symbol(e), count(e));
  }
  std::sort(parts.begin(), parts.end());
  std::string out;
  auto emit = [&out](std::string_view sym, int n) {
    out += sym;
    if (n > 1) out += std::to_string(n);
  };
  if (has_carbon) {
    emit("C", count(Element::C));
    if (count(Element::H) > 0) emit("H", count(Element::H));
  }
  for (const auto& [sym, n] : parts) emit(sym, n);
  return out;
}

MolFormula MolFormula::parse(std::string_view text) {
  MolFormula f;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isupper(static_cast<unsigned char>(text[i]))) {
      throw Error(ErrorCode::kSyntax, "bad formula '" + std::string(text) + "'", i);
    }
    std::size_t j = i + 1;
    if (j < text.size() && std::islower(static_cast<unsigned char>(text[j]))) ++j;
    auto e = element_from_symbol(text.substr(i, j - i));
    if (!e) {
      fail(ErrorCode::kUnsupportedFeature, "unsupported element '" + std::string(text.substr(i, j - i)) + "' in formula");
    }
    std::size_t k = j;
    int n = 0;
    while (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) {
      n = n * 10 + (text[k] - '0');
      ++k;
    }
    if (k == j) n = 1;
    f.counts[static_cast<std::size_t>(index_of(*e))] += n;
    i = k;
  }
  return f;
}

MolFormula formula_of(const MolGraph& g) {
  MolFormula f;
  for (Element e : g.atoms()) ++f.counts[static_cast<std::size_t>(index_of(e))];
  return f;
}

int component_count(const MolGraph& g) {
  const int n = g.atom_count();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<int> stack;
  int components = 0;
  for (int s = 0; s < n; ++s) {
    if (seen[static_cast<std::size_t>(s)]) continue;
    ++components;
    seen[static_cast<std::size_t>(s)] = true;
    stack.push_back(s);
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int u : g.neighbors(v)) {
        if (!seen[static_cast<std::size_t>(u)]) {
          seen[static_cast<std::size_t>(u)] = true;
          stack.push_back(u);
        }
      }
    }
  }
  return components;
}

}  // namespace molswap::chem
