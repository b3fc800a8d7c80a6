// SPDX-License-Identifier: Apache-2.0
#include "topo/topo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <functional>
#include <set>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/boyer_myrvold_planar_test.hpp>

#include "chem/canon.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"

namespace molswap::topo {

SimpleGraph SimpleGraph::from_edges(int n, std::vector<std::pair<int, int>> edges) {
  SimpleGraph s;
  s.n = n;
  s.adj.assign(static_cast<std::size_t>(n), {});
  for (auto& [a, b] : edges) {
    if (a > b) std::swap(a, b);
  }
  s.edges = std::move(edges);
  for (std::size_t e = 0; e < s.edges.size(); ++e) {
    const auto [a, b] = s.edges[e];
    s.adj[static_cast<std::size_t>(a)].emplace_back(b, static_cast<int>(e));
    s.adj[static_cast<std::size_t>(b)].emplace_back(a, static_cast<int>(e));
  }
  return s;
}

SimpleGraph SimpleGraph::from_mol(const MolGraph& g) {
  std::vector<std::pair<int, int>> edges;
  for (const auto& b : g.bonds()) edges.emplace_back(b.a, b.b);
  return from_edges(g.atom_count(), std::move(edges));
}

int SimpleGraph::edge_id(int a, int b) const {
  for (const auto& [u, e] : adj[static_cast<std::size_t>(a)]) {
    if (u == b) return e;
  }
  return -1;
}

int connected_components(const SimpleGraph& g) {
  std::vector<bool> seen(static_cast<std::size_t>(g.n), false);
  int comps = 0;
  std::vector<int> stack;
  for (int s = 0; s < g.n; ++s) {
    if (seen[static_cast<std::size_t>(s)]) continue;
    ++comps;
    seen[static_cast<std::size_t>(s)] = true;
    stack.push_back(s);
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const auto& [u, e] : g.adj[static_cast<std::size_t>(v)]) {
        if (!seen[static_cast<std::size_t>(u)]) {
          seen[static_cast<std::size_t>(u)] = true;
          stack.push_back(u);
        }
      }
    }
  }
  return comps;
}

bool is_connected(const MolGraph& g) { return !g.empty() && chem::component_count(g) == 1; }

namespace {

void require_connected(const MolGraph& g, const char* what) {
  if (!is_connected(g)) fail(ErrorCode::kNotConnected, std::string(what) + " requires a connected graph");
}

}  // namespace

std::vector<bool> simple_bridges(const SimpleGraph& g) {
  std::vector<bool> out(g.edges.size(), false);
  std::vector<int> disc(static_cast<std::size_t>(g.n), -1), low(static_cast<std::size_t>(g.n), 0);
  int timer = 0;
  std::function<void(int, int)> dfs = [&](int v, int parent_edge) {
    disc[static_cast<std::size_t>(v)] = low[static_cast<std::size_t>(v)] = timer++;
    for (const auto& [u, e] : g.adj[static_cast<std::size_t>(v)]) {
      if (e == parent_edge) continue;
      if (disc[static_cast<std::size_t>(u)] >= 0) {
        low[static_cast<std::size_t>(v)] = std::min(low[static_cast<std::size_t>(v)], disc[static_cast<std::size_t>(u)]);
      } else {
        dfs(u, e);
        low[static_cast<std::size_t>(v)] = std::min(low[static_cast<std::size_t>(v)], low[static_cast<std::size_t>(u)]);
        if (low[static_cast<std::size_t>(u)] > disc[static_cast<std::size_t>(v)]) out[static_cast<std::size_t>(e)] = true;
      }
    }
  };
  for (int v = 0; v < g.n; ++v) {
    if (disc[static_cast<std::size_t>(v)] < 0) dfs(v, -1);
  }
  return out;
}

int BridgeSets::multigraph_count() const {
  return static_cast<int>(std::count(multigraph.begin(), multigraph.end(), true));
}

int BridgeSets::simplified_count() const {
  return static_cast<int>(std::count(simplified.begin(), simplified.end(), true));
}

BridgeSets bridges(const MolGraph& g) {
  require_connected(g, "bridges");
  const SimpleGraph s = SimpleGraph::from_mol(g);
  BridgeSets out;
  out.simplified = simple_bridges(s);
  out.multigraph = out.simplified;
  for (std::size_t e = 0; e < s.edges.size(); ++e) {
    if (g.multiplicity(s.edges[e].first, s.edges[e].second) > 1) out.multigraph[e] = false;
  }
  return out;
}

namespace {

using Bits = std::vector<std::uint64_t>;

struct Candidate {
  int length;
  std::vector<std::uint64_t> key;
  Bits bits;
  std::vector<int> edges;
};

int highest_bit(const Bits& b) {
  for (std::size_t w = b.size(); w-- > 0;) {
    if (b[w]) return static_cast<int>(w * 64 + 63 - static_cast<std::size_t>(std::countl_zero(b[w])));
  }
  return -1;
}

}  // namespace

CycleSet min_cycle_basis(const MolGraph& g) {
  CycleSet out;
  out.node_membership.assign(static_cast<std::size_t>(g.atom_count()), {});
  out.edge_membership.assign(static_cast<std::size_t>(g.bond_count()), {});
  if (g.empty()) return out;
  require_connected(g, "min_cycle_basis");
  const SimpleGraph s = SimpleGraph::from_mol(g);
  const int m = static_cast<int>(s.edges.size());
  const int mu = m - s.n + 1;
  if (mu <= 0) return out;

  const auto classes = chem::refined_atom_classes(g);
  const auto bridge = simple_bridges(s);
  const std::size_t words = static_cast<std::size_t>((m + 63) / 64);

  // Neighbor order by (class, index) keeps BFS trees as labeling-independent
  // as the refinement allows.
  std::vector<std::vector<std::pair<int, int>>> adj = s.adj;
  for (auto& list : adj) {
    std::sort(list.begin(), list.end(), [&](const auto& x, const auto& y) {
      return std::tie(classes[static_cast<std::size_t>(x.first)], x.first) <
             std::tie(classes[static_cast<std::size_t>(y.first)], y.first);
    });
  }

  std::vector<Candidate> cands;
  std::set<Bits> seen;
  std::vector<int> dist(static_cast<std::size_t>(s.n)), parent_edge(static_cast<std::size_t>(s.n));
  std::vector<int> parent(static_cast<std::size_t>(s.n));
  std::vector<int> mark(static_cast<std::size_t>(s.n), -1);
  for (int v = 0; v < s.n; ++v) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[static_cast<std::size_t>(v)] = 0;
    parent[static_cast<std::size_t>(v)] = -1;
    parent_edge[static_cast<std::size_t>(v)] = -1;
    std::deque<int> queue{v};
    while (!queue.empty()) {
      const int x = queue.front();
      queue.pop_front();
      for (const auto& [y, e] : adj[static_cast<std::size_t>(x)]) {
        if (bridge[static_cast<std::size_t>(e)] || dist[static_cast<std::size_t>(y)] >= 0) continue;
        dist[static_cast<std::size_t>(y)] = dist[static_cast<std::size_t>(x)] + 1;
        parent[static_cast<std::size_t>(y)] = x;
        parent_edge[static_cast<std::size_t>(y)] = e;
        queue.push_back(y);
      }
    }
    for (int e = 0; e < m; ++e) {
      if (bridge[static_cast<std::size_t>(e)]) continue;
      const auto [x, y] = s.edges[static_cast<std::size_t>(e)];
      if (dist[static_cast<std::size_t>(x)] < 0 || dist[static_cast<std::size_t>(y)] < 0) continue;
      if (parent_edge[static_cast<std::size_t>(x)] == e || parent_edge[static_cast<std::size_t>(y)] == e) continue;
      // Paths v->x and v->y must share only v.
      bool disjoint = true;
      for (int a = x; a != -1; a = parent[static_cast<std::size_t>(a)]) mark[static_cast<std::size_t>(a)] = e + v * m;
      for (int b = y; b != -1; b = parent[static_cast<std::size_t>(b)]) {
        if (b != v && mark[static_cast<std::size_t>(b)] == e + v * m) {
          disjoint = false;
          break;
        }
      }
      if (!disjoint) continue;
      Candidate c;
      c.length = dist[static_cast<std::size_t>(x)] + dist[static_cast<std::size_t>(y)] + 1;
      c.bits.assign(words, 0);
      auto add_edge = [&](int id) {
        c.bits[static_cast<std::size_t>(id / 64)] |= std::uint64_t{1} << (id % 64);
        c.edges.push_back(id);
      };
      add_edge(e);
      std::vector<int> nodes;
      for (int a = x; a != v; a = parent[static_cast<std::size_t>(a)]) {
        add_edge(parent_edge[static_cast<std::size_t>(a)]);
        nodes.push_back(a);
      }
      for (int b = y; b != v; b = parent[static_cast<std::size_t>(b)]) {
        add_edge(parent_edge[static_cast<std::size_t>(b)]);
        nodes.push_back(b);
      }
      nodes.push_back(v);
      if (!seen.insert(c.bits).second) continue;
      for (int a : nodes) c.key.push_back(classes[static_cast<std::size_t>(a)]);
      std::sort(c.key.begin(), c.key.end());
      std::sort(c.edges.begin(), c.edges.end());
      cands.push_back(std::move(c));
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.length, a.key, a.bits) < std::tie(b.length, b.key, b.bits);
  });

  std::vector<Bits> pivot_rows(static_cast<std::size_t>(m));
  std::vector<bool> has_pivot(static_cast<std::size_t>(m), false);
  for (const Candidate& c : cands) {
    if (static_cast<int>(out.cycles.size()) == mu) break;
    Bits r = c.bits;
    int p = highest_bit(r);
    while (p >= 0 && has_pivot[static_cast<std::size_t>(p)]) {
      const Bits& row = pivot_rows[static_cast<std::size_t>(p)];
      for (std::size_t w = 0; w < words; ++w) r[w] ^= row[w];
      p = highest_bit(r);
    }
    if (p < 0) continue;
    has_pivot[static_cast<std::size_t>(p)] = true;
    pivot_rows[static_cast<std::size_t>(p)] = std::move(r);
    out.cycles.push_back(c.edges);
  }
  if (static_cast<int>(out.cycles.size()) != mu) {
    fail(ErrorCode::kInternal, "cycle basis incomplete: " + std::to_string(out.cycles.size()) + " of " + std::to_string(mu));
  }
  for (const auto& cyc : out.cycles) {
    const int size = static_cast<int>(cyc.size());
    ++out.histogram[static_cast<std::size_t>(cycle_bucket(size))];
    std::set<int> nodes;
    for (int e : cyc) {
      out.edge_membership[static_cast<std::size_t>(e)].push_back(size);
      nodes.insert(s.edges[static_cast<std::size_t>(e)].first);
      nodes.insert(s.edges[static_cast<std::size_t>(e)].second);
    }
    for (int a : nodes) out.node_membership[static_cast<std::size_t>(a)].push_back(size);
  }
  for (auto& v : out.node_membership) std::sort(v.begin(), v.end());
  for (auto& v : out.edge_membership) std::sort(v.begin(), v.end());
  return out;
}

bool is_planar(const SimpleGraph& g) {
  const auto m = static_cast<long>(g.edges.size());
  if (g.n >= 3 && m > 3L * g.n - 6) return false;
  if (g.n <= 4) return true;
  using BoostGraph = boost::adjacency_list<boost::vecS, boost::vecS, boost::undirectedS>;
  BoostGraph bg(static_cast<std::size_t>(g.n));
  for (const auto& [a, b] : g.edges) boost::add_edge(static_cast<std::size_t>(a), static_cast<std::size_t>(b), bg);
  return boost::boyer_myrvold_planarity_test(bg);
}

bool is_planar(const MolGraph& g) { return is_planar(SimpleGraph::from_mol(g)); }

int local_edge_connectivity(const SimpleGraph& g, int a, int b, int cap) {
  // Unit-capacity max flow with BFS augmenting paths. flow[e] is +1 when the
  // edge carries flow from its first to its second endpoint, -1 for reverse.
  std::vector<int> flow(g.edges.size(), 0);
  auto residual = [&](int e, int from) {
    const int dir = g.edges[static_cast<std::size_t>(e)].first == from ? 1 : -1;
    return flow[static_cast<std::size_t>(e)] * dir < 1;
  };
  int total = 0;
  std::vector<int> via(static_cast<std::size_t>(g.n));
  std::vector<int> prev(static_cast<std::size_t>(g.n));
  while (total < cap) {
    std::fill(prev.begin(), prev.end(), -2);
    prev[static_cast<std::size_t>(a)] = -1;
    std::deque<int> queue{a};
    while (!queue.empty() && prev[static_cast<std::size_t>(b)] == -2) {
      const int x = queue.front();
      queue.pop_front();
      for (const auto& [y, e] : g.adj[static_cast<std::size_t>(x)]) {
        if (prev[static_cast<std::size_t>(y)] != -2 || !residual(e, x)) continue;
        prev[static_cast<std::size_t>(y)] = x;
        via[static_cast<std::size_t>(y)] = e;
        queue.push_back(y);
      }
    }
    if (prev[static_cast<std::size_t>(b)] == -2) break;
    for (int y = b; y != a; y = prev[static_cast<std::size_t>(y)]) {
      const int e = via[static_cast<std::size_t>(y)];
      const int x = prev[static_cast<std::size_t>(y)];
      flow[static_cast<std::size_t>(e)] += g.edges[static_cast<std::size_t>(e)].first == x ? 1 : -1;
    }
    ++total;
  }
  return total;
}

int local_edge_connectivity(const MolGraph& g, int a, int b) {
  if (a < 0 || b < 0 || a >= g.atom_count() || b >= g.atom_count() || a == b || !g.bonded(a, b)) {
    fail(ErrorCode::kNotBonded, "atoms " + std::to_string(a) + " and " + std::to_string(b) + " are not bonded");
  }
  return local_edge_connectivity(SimpleGraph::from_mol(g), a, b, kPathCountCap);
}

double Layout2D::distance(int a, int b) const {
  const Point& p = positions[static_cast<std::size_t>(a)];
  const Point& q = positions[static_cast<std::size_t>(b)];
  return std::hypot(p.x - q.x, p.y - q.y);
}

Layout2D layout_2d(const MolGraph& g) {
  require_connected(g, "layout_2d");
  const int n = g.atom_count();
  const auto form = chem::canonical_form(g);
  Rng rng(hash_string(form.signature.text));
  const double side = std::sqrt(static_cast<double>(n));
  std::vector<Point> pos(static_cast<std::size_t>(n));
  // Everything below walks atoms in canonical order so that relabeling the
  // input permutes the output without changing any value.
  for (int p = 0; p < n; ++p) {
    auto& pt = pos[static_cast<std::size_t>(form.order[static_cast<std::size_t>(p)])];
    pt.x = rng.uniform(-side, side);
    pt.y = rng.uniform(-side, side);
  }
  std::vector<std::pair<int, int>> bonds;
  for (const auto& b : g.bonds()) {
    int ra = form.rank[static_cast<std::size_t>(b.a)], rb = form.rank[static_cast<std::size_t>(b.b)];
    if (ra > rb) std::swap(ra, rb);
    bonds.emplace_back(ra, rb);
  }
  std::sort(bonds.begin(), bonds.end());

  constexpr double k = 1.0;
  const double t0 = 0.2 * side + 0.1;
  std::vector<Point> disp(static_cast<std::size_t>(n));
  auto at = [&](int rank) -> Point& { return pos[static_cast<std::size_t>(form.order[static_cast<std::size_t>(rank)])]; };
  for (int it = 0; it < kLayoutIterations; ++it) {
    std::fill(disp.begin(), disp.end(), Point{});
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double dx = at(p).x - at(q).x, dy = at(p).y - at(q).y;
        const double d = std::max(std::hypot(dx, dy), 1e-9);
        const double f = k * k / d;
        disp[static_cast<std::size_t>(p)].x += dx / d * f;
        disp[static_cast<std::size_t>(p)].y += dy / d * f;
        disp[static_cast<std::size_t>(q)].x -= dx / d * f;
        disp[static_cast<std::size_t>(q)].y -= dy / d * f;
      }
    }
    for (const auto& [p, q] : bonds) {
      const double dx = at(p).x - at(q).x, dy = at(p).y - at(q).y;
      const double d = std::max(std::hypot(dx, dy), 1e-9);
      const double f = d * d / k;
      disp[static_cast<std::size_t>(p)].x -= dx / d * f;
      disp[static_cast<std::size_t>(p)].y -= dy / d * f;
      disp[static_cast<std::size_t>(q)].x += dx / d * f;
      disp[static_cast<std::size_t>(q)].y += dy / d * f;
    }
    const double temp = t0 * (1.0 - static_cast<double>(it) / kLayoutIterations);
    for (int p = 0; p < n; ++p) {
      const Point& dp = disp[static_cast<std::size_t>(p)];
      const double len = std::hypot(dp.x, dp.y);
      if (len <= 0.0) continue;
      const double step = std::min(len, temp);
      at(p).x += dp.x / len * step;
      at(p).y += dp.y / len * step;
    }
  }

  if (!bonds.empty()) {
    std::vector<double> lengths;
    for (const auto& [p, q] : bonds) lengths.push_back(std::hypot(at(p).x - at(q).x, at(p).y - at(q).y));
    std::sort(lengths.begin(), lengths.end());
    const std::size_t mid = lengths.size() / 2;
    const double median = lengths.size() % 2 ? lengths[mid] : 0.5 * (lengths[mid - 1] + lengths[mid]);
    if (median > 0.0) {
      for (auto& pt : pos) {
        pt.x /= median;
        pt.y /= median;
      }
    }
  }
  double cx = 0.0, cy = 0.0;
  for (int p = 0; p < n; ++p) {
    cx += at(p).x;
    cy += at(p).y;
  }
  cx /= n;
  cy /= n;
  for (auto& pt : pos) {
    pt.x -= cx;
    pt.y -= cy;
  }
  return Layout2D{std::move(pos)};
}

}  // namespace molswap::topo
