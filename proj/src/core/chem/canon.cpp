// SPDX-License-Identifier: Apache-2.0
#include "chem/canon.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "common/rng.hpp"

namespace molswap::chem {

namespace {

using Colors = std::vector<int>;
using Code = std::vector<std::uint32_t>;

constexpr std::size_t kMaxGenerators = 64;

Colors initial_colors(const MolGraph& g) {
  const int n = g.atom_count();
  std::vector<std::vector<int>> keys(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    auto& k = keys[static_cast<std::size_t>(v)];
    k.push_back(index_of(g.element(v)));
    k.push_back(static_cast<int>(g.neighbors(v).size()));
    k.push_back(g.hydrogen_count(v));
    std::vector<int> mults;
    for (int u : g.neighbors(v)) mults.push_back(g.multiplicity(v, u));
    std::sort(mults.begin(), mults.end());
    k.insert(k.end(), mults.begin(), mults.end());
  }
  std::vector<std::vector<int>> distinct = keys;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  Colors colors(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    colors[static_cast<std::size_t>(v)] = static_cast<int>(
        std::lower_bound(distinct.begin(), distinct.end(), keys[static_cast<std::size_t>(v)]) - distinct.begin());
  }
  return colors;
}

int count_colors(const Colors& colors) {
  int mx = -1;
  for (int c : colors) mx = std::max(mx, c);
  return mx + 1;
}

// Equitable refinement. New colors are ordered first by the old color, so
// every cell splits in place and the cell order stays labeling-invariant.
void refine(const MolGraph& g, Colors& colors) {
  const int n = g.atom_count();
  int k = count_colors(colors);
  std::vector<std::vector<std::uint32_t>> sig(static_cast<std::size_t>(n));
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (;;) {
    for (int v = 0; v < n; ++v) {
      auto& s = sig[static_cast<std::size_t>(v)];
      s.clear();
      s.push_back(static_cast<std::uint32_t>(colors[static_cast<std::size_t>(v)]));
      for (int u : g.neighbors(v)) {
        s.push_back(static_cast<std::uint32_t>(colors[static_cast<std::size_t>(u)]) * 4u +
                    static_cast<std::uint32_t>(g.multiplicity(v, u)));
      }
      std::sort(s.begin() + 1, s.end());
    }
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      return sig[static_cast<std::size_t>(a)] < sig[static_cast<std::size_t>(b)];
    });
    int next = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (i > 0 && sig[static_cast<std::size_t>(idx[i])] != sig[static_cast<std::size_t>(idx[i - 1])]) ++next;
      colors[static_cast<std::size_t>(idx[i])] = next;
    }
    const int k2 = n == 0 ? 0 : next + 1;
    if (k2 == k) return;
    k = k2;
  }
}

Colors individualize(const Colors& colors, int v) {
  const int c = colors[static_cast<std::size_t>(v)];
  Colors out(colors.size());
  for (std::size_t u = 0; u < colors.size(); ++u) {
    out[u] = 2 * colors[u] + ((colors[u] == c && static_cast<int>(u) != v) ? 1 : 0);
  }
  std::vector<int> distinct(out);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (auto& x : out) x = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), x) - distinct.begin());
  return out;
}

Code leaf_code(const MolGraph& g, const Colors& pos) {
  const auto n = static_cast<std::uint32_t>(g.atom_count());
  Code code;
  code.reserve(static_cast<std::size_t>(g.bond_count()));
  for (const Bond& b : g.bonds()) {
    auto pa = static_cast<std::uint32_t>(pos[static_cast<std::size_t>(b.a)]);
    auto pb = static_cast<std::uint32_t>(pos[static_cast<std::size_t>(b.b)]);
    if (pa > pb) std::swap(pa, pb);
    code.push_back((pa * n + pb) * 4u + static_cast<std::uint32_t>(b.order));
  }
  std::sort(code.begin(), code.end());
  return code;
}

std::vector<int> twin_classes(const MolGraph& g) {
  const int n = g.atom_count();
  std::map<std::vector<int>, int> ids;
  std::vector<int> out(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    std::vector<int> key{index_of(g.element(v))};
    for (int u : g.neighbors(v)) {
      key.push_back(u);
      key.push_back(g.multiplicity(v, u));
    }
    auto [it, _] = ids.emplace(std::move(key), static_cast<int>(ids.size()));
    out[static_cast<std::size_t>(v)] = it->second;
  }
  return out;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
};

class Search {
 public:
  explicit Search(const MolGraph& g) : g_(g), twins_(twin_classes(g)) {}

  void run() {
    Colors colors = initial_colors(g_);
    std::vector<int> prefix;
    descend(std::move(colors), prefix);
  }

  const Colors& best_positions() const { return best_pos_; }
  std::size_t leaves() const { return leaves_; }

 private:
  void descend(Colors colors, std::vector<int>& prefix) {
    refine(g_, colors);
    const int n = g_.atom_count();
    const int k = count_colors(colors);
    if (k == n) {
      on_leaf(colors);
      return;
    }
    // Target cell: the first non-singleton cell in cell order.
    std::vector<int> size(static_cast<std::size_t>(k), 0);
    for (int c : colors) ++size[static_cast<std::size_t>(c)];
    int target = 0;
    while (size[static_cast<std::size_t>(target)] == 1) ++target;
    std::vector<int> cell;
    for (int v = 0; v < n; ++v) {
      if (colors[static_cast<std::size_t>(v)] == target) cell.push_back(v);
    }
    std::vector<int> explored;
    std::vector<int> explored_twins;
    for (int v : cell) {
      const int tw = twins_[static_cast<std::size_t>(v)];
      if (std::find(explored_twins.begin(), explored_twins.end(), tw) != explored_twins.end()) continue;
      if (!explored.empty() && in_explored_orbit(v, explored, prefix)) continue;
      explored.push_back(v);
      explored_twins.push_back(tw);
      prefix.push_back(v);
      descend(individualize(colors, v), prefix);
      prefix.pop_back();
    }
  }

  bool in_explored_orbit(int v, const std::vector<int>& explored, const std::vector<int>& prefix) {
    UnionFind uf(g_.atom_count());
    bool any = false;
    for (const auto& gen : generators_) {
      bool fixes = true;
      for (int p : prefix) {
        if (gen[static_cast<std::size_t>(p)] != p) {
          fixes = false;
          break;
        }
      }
      if (!fixes) continue;
      any = true;
      for (int x = 0; x < g_.atom_count(); ++x) uf.unite(x, gen[static_cast<std::size_t>(x)]);
    }
    if (!any) return false;
    const int root = uf.find(v);
    for (int u : explored) {
      if (uf.find(u) == root) return true;
    }
    return false;
  }

  void on_leaf(const Colors& pos) {
    ++leaves_;
    Code code = leaf_code(g_, pos);
    if (leaves_ == 1) {
      first_code_ = code;
      first_pos_ = pos;
      best_code_ = std::move(code);
      best_pos_ = pos;
      return;
    }
    if (code == first_code_) record_automorphism(first_pos_, pos);
    if (code == best_code_) {
      record_automorphism(best_pos_, pos);
    } else if (code < best_code_) {
      best_code_ = std::move(code);
      best_pos_ = pos;
    }
  }

  void record_automorphism(const Colors& ref_pos, const Colors& pos) {
    if (generators_.size() >= kMaxGenerators) return;
    const int n = g_.atom_count();
    std::vector<int> ref_order(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) ref_order[static_cast<std::size_t>(ref_pos[static_cast<std::size_t>(v)])] = v;
    std::vector<int> gen(static_cast<std::size_t>(n));
    bool identity = true;
    for (int v = 0; v < n; ++v) {
      gen[static_cast<std::size_t>(v)] = ref_order[static_cast<std::size_t>(pos[static_cast<std::size_t>(v)])];
      identity = identity && gen[static_cast<std::size_t>(v)] == v;
    }
    if (!identity) generators_.push_back(std::move(gen));
  }

  const MolGraph& g_;
  std::vector<int> twins_;
  std::vector<std::vector<int>> generators_;
  Code first_code_, best_code_;
  Colors first_pos_, best_pos_;
  std::size_t leaves_ = 0;
};

std::string bond_symbol(int order) {
  switch (order) {
    case 2: return "=";
    case 3: return "#";
    default: return "-";
  }
}

}  // namespace

CanonicalForm canonical_form(const MolGraph& g) {
  CanonicalForm out;
  const int n = g.atom_count();
  if (n == 0) {
    out.signature.text = "|";
    return out;
  }
  Search search(g);
  search.run();
  out.rank = search.best_positions();
  out.order.assign(static_cast<std::size_t>(n), 0);
  for (int v = 0; v < n; ++v) out.order[static_cast<std::size_t>(out.rank[static_cast<std::size_t>(v)])] = v;
  out.leaves_visited = search.leaves();

  std::string text;
  for (int p = 0; p < n; ++p) text += symbol(g.element(out.order[static_cast<std::size_t>(p)]));
  text += '|';
  std::vector<Bond> bonds;
  for (const Bond& b : g.bonds()) {
    int pa = out.rank[static_cast<std::size_t>(b.a)];
    int pb = out.rank[static_cast<std::size_t>(b.b)];
    if (pa > pb) std::swap(pa, pb);
    bonds.push_back({pa, pb, b.order});
  }
  std::sort(bonds.begin(), bonds.end(), [](const Bond& x, const Bond& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    if (i) text += ',';
    text += std::to_string(bonds[i].a);
    text += bond_symbol(bonds[i].order);
    text += std::to_string(bonds[i].b);
  }
  out.signature.text = std::move(text);
  return out;
}

std::vector<std::uint64_t> refined_atom_classes(const MolGraph& g) {
  Colors colors = initial_colors(g);
  refine(g, colors);
  // Colors are ranks inside this graph; fold in the element so the values are
  // also comparable across graphs with the same formula.
  std::vector<std::uint64_t> out(colors.size());
  for (std::size_t v = 0; v < colors.size(); ++v) {
    out[v] = mix_seed({static_cast<std::uint64_t>(colors[v]),
                       static_cast<std::uint64_t>(index_of(g.element(static_cast<int>(v))))});
  }
  return out;
}

}  // namespace molswap::chem
