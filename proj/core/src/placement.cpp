#include "dsse/placement.hpp"

#include <algorithm>
#include <atomic>
#include <climits>
#include <deque>
#include <numeric>
#include <thread>

namespace dsse {

TopologyGraph::TopologyGraph(std::vector<int> node_ids,
                             std::vector<std::pair<int, int>> edges) {
  ids_ = std::move(node_ids);
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  adj_.assign(ids_.size(), {});
  for (auto [a, b] : edges) {
    int ia = index_of(a), ib = index_of(b);
    adj_[ia].push_back(ib);
    adj_[ib].push_back(ia);
  }
  for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
}

TopologyGraph TopologyGraph::from_feeder(const Feeder& feeder) {
  std::vector<int> ids;
  for (const Bus& b : feeder.buses()) ids.push_back(b.id);
  std::vector<std::pair<int, int>> edges;
  for (const Line& l : feeder.lines()) edges.emplace_back(l.from, l.to);
  return TopologyGraph(std::move(ids), std::move(edges));
}

TopologyGraph TopologyGraph::path(int n) {
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return TopologyGraph(std::move(ids), std::move(edges));
}

int TopologyGraph::index_of(int id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id)
    throw DataError("unknown node id " + std::to_string(id));
  return static_cast<int>(it - ids_.begin());
}

namespace {

// BFS over the whole graph; returns distances (-1 unreached).
std::vector<int> bfs_all(const std::vector<std::vector<int>>& adj, int start) {
  std::vector<int> dist(adj.size(), -1);
  std::deque<int> q{start};
  dist[start] = 0;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (int w : adj[u])
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        q.push_back(w);
      }
  }
  return dist;
}

int farthest(const std::vector<int>& dist) {
  int best = 0;
  for (size_t i = 1; i < dist.size(); ++i)
    if (dist[i] > dist[best]) best = static_cast<int>(i);  // ties: smallest i
  return best;
}

}  // namespace

int TopologyGraph::eccentricity(int node_id) const {
  auto d = bfs_all(adj_, index_of(node_id));
  int m = 0;
  for (int v : d) {
    if (v < 0) throw DataError("graph is disconnected");
    m = std::max(m, v);
  }
  return m;
}

std::tuple<int, int, int> TopologyGraph::diameter_path() const {
  if (ids_.empty()) throw DataError("empty graph");
  auto d0 = bfs_all(adj_, 0);
  for (int v : d0)
    if (v < 0) throw DataError("graph is disconnected");
  int a = farthest(d0);
  auto d1 = bfs_all(adj_, a);
  int b = farthest(d1);
  return {d1[b], ids_[a], ids_[b]};
}

int TopologyGraph::diameter() const { return std::get<0>(diameter_path()); }

namespace {

// Cut-partition machinery in index space with reusable scratch vectors,
// so greedy placement stays O(K*N) with no per-step allocation churn.
// A cut vertex adjacent to a component is a pendant replica of it; an edge
// joining two cut vertices forms its own 2-node partition.

// Flattened adjacency (CSR layout); a fraction of the footprint of the
// nested vectors, which matters once graphs outgrow the L2 cache.
struct FlatAdj {
  std::vector<int> off, nbr;

  explicit FlatAdj(const std::vector<std::vector<int>>& adj) {
    off.resize(adj.size() + 1);
    off[0] = 0;
    for (size_t u = 0; u < adj.size(); ++u)
      off[u + 1] = off[u] + static_cast<int>(adj[u].size());
    nbr.resize(off.back());
    int* p = nbr.data();
    for (const auto& row : adj) p = std::copy(row.begin(), row.end(), p);
  }
};

struct CutScratch {
  std::vector<int> comp;    // component id per non-cut index, -1 otherwise
  std::vector<int> repl;    // last component a cut replica was attached to
  std::vector<int> dist;
  std::vector<int> mark;    // dist/parent valid when mark[u] == epoch
  std::vector<int> parent;
  std::vector<int> queue;
  int epoch = 0;

  void reset(size_t n) {
    comp.assign(n, -1);
    repl.assign(n, -1);
    if (mark.size() != n) {
      mark.assign(n, -1);
      dist.assign(n, 0);
      parent.assign(n, -1);
      epoch = 0;
    }
  }
};

struct CompStats {
  int min_idx = -1;   // smallest member index (ids sorted, so smallest id)
  int a = -1, b = -1; // diameter endpoint indices
  int diameter = 0;
};

// BFS inside component c from start. Traversal may pass through a cut
// replica only via its in-component edges, never between two cut vertices.
// Returns the farthest member (smallest index on ties) and its distance.
std::pair<int, int> comp_far(const FlatAdj& adj, const std::vector<char>& cut,
                             const std::vector<int>& comp, int c, int start,
                             CutScratch& sc, bool fill_parent) {
  ++sc.epoch;
  sc.queue.clear();
  sc.queue.push_back(start);
  sc.mark[start] = sc.epoch;
  sc.dist[start] = 0;
  if (fill_parent) sc.parent[start] = start;
  int best = start, bestd = 0;
  for (size_t head = 0; head < sc.queue.size(); ++head) {
    int u = sc.queue[head];
    for (int e = adj.off[u]; e < adj.off[u + 1]; ++e) {
      int w = adj.nbr[e];
      bool member = cut[w] ? !cut[u] : comp[w] == c;
      if (!member || sc.mark[w] == sc.epoch) continue;
      sc.mark[w] = sc.epoch;
      int d = sc.dist[u] + 1;
      sc.dist[w] = d;
      if (fill_parent) sc.parent[w] = u;
      if (d > bestd || (d == bestd && w < best)) {
        bestd = d;
        best = w;
      }
      sc.queue.push_back(w);
    }
  }
  return {best, bestd};
}

// Labels sc.comp with component ids and returns per-component diameter
// stats, components ordered by their smallest non-cut seed index.
std::vector<CompStats> analyze_cut(const FlatAdj& adj,
                                   const std::vector<char>& cut,
                                   CutScratch& sc) {
  const int n = static_cast<int>(adj.off.size()) - 1;
  sc.reset(n);
  std::vector<CompStats> out;
  for (int s = 0; s < n; ++s) {
    if (cut[s] || sc.comp[s] >= 0) continue;
    int c = static_cast<int>(out.size());
    sc.queue.clear();
    sc.queue.push_back(s);
    sc.comp[s] = c;
    int min_idx = s;
    for (size_t head = 0; head < sc.queue.size(); ++head) {
      int u = sc.queue[head];
      for (int e = adj.off[u]; e < adj.off[u + 1]; ++e) {
        int w = adj.nbr[e];
        if (cut[w]) {
          if (sc.repl[w] != c) {
            sc.repl[w] = c;
            min_idx = std::min(min_idx, w);
          }
        } else if (sc.comp[w] < 0) {
          sc.comp[w] = c;
          min_idx = std::min(min_idx, w);
          sc.queue.push_back(w);
        }
      }
    }
    CompStats st;
    st.min_idx = min_idx;
    auto [a, da] = comp_far(adj, cut, sc.comp, c, min_idx, sc, false);
    auto [b, db] = comp_far(adj, cut, sc.comp, c, a, sc, false);
    st.a = a;
    st.b = b;
    st.diameter = db;
    out.push_back(st);
  }
  return out;
}

// Max diameter over the already analyzed components plus any 2-node
// cut/cut partitions (diameter 1).
int max_cut_diameter(const FlatAdj& adj, const std::vector<char>& cut,
                     const std::vector<int>& cut_indices,
                     const std::vector<CompStats>& comps) {
  int dia = 0;
  for (const CompStats& st : comps) dia = std::max(dia, st.diameter);
  for (int u : cut_indices)
    for (int e = adj.off[u]; e < adj.off[u + 1]; ++e)
      if (cut[adj.nbr[e]]) return std::max(dia, 1);
  return dia;
}

}  // namespace

std::vector<Partition> vertex_cut_partitions(const TopologyGraph& graph,
                                             const std::vector<int>& cut_ids) {
  const int n = graph.size();
  const auto& adj = graph.adjacency();
  std::vector<char> cut(n, 0);
  for (int id : cut_ids) cut[graph.index_of(id)] = 1;

  FlatAdj fadj(adj);
  CutScratch sc;
  auto comps = analyze_cut(fadj, cut, sc);

  std::vector<Partition> out(comps.size());
  for (size_t c = 0; c < comps.size(); ++c) out[c].diameter = comps[c].diameter;
  for (int u = 0; u < n; ++u) {
    if (cut[u]) continue;
    int c = sc.comp[u];
    int uid = graph.id_of(u);
    out[c].nodes.push_back(uid);
    for (int w : adj[u]) {
      int wid = graph.id_of(w);
      if (cut[w]) {
        out[c].nodes.push_back(wid);  // replica, deduped below
        out[c].edges.emplace_back(std::min(uid, wid), std::max(uid, wid));
      } else if (w > u) {
        out[c].edges.emplace_back(std::min(uid, wid), std::max(uid, wid));
      }
    }
  }
  for (Partition& p : out) {
    std::sort(p.nodes.begin(), p.nodes.end());
    p.nodes.erase(std::unique(p.nodes.begin(), p.nodes.end()), p.nodes.end());
    std::sort(p.edges.begin(), p.edges.end());
  }
  // an edge joining two cut vertices is its own partition
  for (int u = 0; u < n; ++u) {
    if (!cut[u]) continue;
    for (int w : adj[u]) {
      if (!cut[w] || w <= u) continue;
      Partition p;
      p.nodes = {graph.id_of(u), graph.id_of(w)};
      std::sort(p.nodes.begin(), p.nodes.end());
      p.edges = {{p.nodes[0], p.nodes[1]}};
      p.diameter = 1;
      out.push_back(std::move(p));
    }
  }
  return out;
}

int partitioned_diameter(const TopologyGraph& graph,
                         const std::vector<int>& cut_ids) {
  std::vector<char> cut(graph.size(), 0);
  std::vector<int> cut_idx;
  cut_idx.reserve(cut_ids.size());
  for (int id : cut_ids) {
    int i = graph.index_of(id);
    cut[i] = 1;
    cut_idx.push_back(i);
  }
  FlatAdj fadj(graph.adjacency());
  CutScratch sc;
  return max_cut_diameter(fadj, cut, cut_idx, analyze_cut(fadj, cut, sc));
}

PlacementResult greedy_place(const TopologyGraph& graph, int k) {
  if (k < 1 || k > graph.size())
    throw ConfigError("greedy placement count out of range");
  const int n = graph.size();
  FlatAdj adj(graph.adjacency());
  std::vector<char> cut(n, 0);
  std::vector<int> cut_idx;
  CutScratch sc;
  PlacementResult res;
  std::vector<int> path;
  auto comps = analyze_cut(adj, cut, sc);
  for (int step = 0; step < k; ++step) {
    // widest partition; ties toward the smallest contained node id.
    // 2-node cut/cut partitions (diameter 1) compete like any other.
    int ci = -1;
    int pair_a = -1, pair_b = -1;
    for (size_t i = 0; i < comps.size(); ++i)
      if (ci < 0 || comps[i].diameter > comps[ci].diameter ||
          (comps[i].diameter == comps[ci].diameter &&
           comps[i].min_idx < comps[ci].min_idx))
        ci = static_cast<int>(i);
    for (int u : cut_idx)
      for (int e = adj.off[u]; e < adj.off[u + 1]; ++e) {
        int w = adj.nbr[e];
        if (!cut[w] || w <= u) continue;
        if (ci < 0 || 1 > comps[ci].diameter ||
            (1 == comps[ci].diameter && u < comps[ci].min_idx))
          if (pair_a < 0 || u < pair_a || (u == pair_a && w < pair_b)) {
            pair_a = u;
            pair_b = w;
          }
      }
    bool use_pair =
        pair_a >= 0 &&
        (ci < 0 || 1 > comps[ci].diameter ||
         (1 == comps[ci].diameter && pair_a < comps[ci].min_idx));
    path.clear();
    if (use_pair) {
      path = {pair_a, pair_b};
    } else {
      int a = comps[ci].a, b = comps[ci].b;
      if (b < a) std::swap(a, b);
      comp_far(adj, cut, sc.comp, ci, a, sc, true);
      for (int u = b; u != a; u = sc.parent[u]) path.push_back(u);
      path.push_back(a);
      std::reverse(path.begin(), path.end());
    }
    int len = static_cast<int>(path.size()) - 1;
    int idx = len / 2;
    int v = path[idx];
    if (cut[v]) {
      // nearest unplaced path vertex, preferring the longer side (toward b)
      v = -1;
      for (int off = 1; off <= len && v < 0; ++off) {
        if (idx + off <= len && !cut[path[idx + off]])
          v = path[idx + off];
        else if (idx - off >= 0 && !cut[path[idx - off]])
          v = path[idx - off];
      }
      if (v < 0) throw ConfigError("no unplaced vertex left on longest path");
    }
    cut[v] = 1;
    cut_idx.push_back(v);
    res.placed.push_back(graph.id_of(v));
    // the analysis for the next step also yields this step's dia value
    comps = analyze_cut(adj, cut, sc);
    res.dia_trace.push_back(max_cut_diameter(adj, cut, cut_idx, comps));
  }
  return res;
}

namespace {

// Fast max-partition-diameter for exhaustive search: trees only, scratch
// reused across calls. Cut replicas are pendant leaves (unique in a tree).
struct DiaScratch {
  std::vector<int> dist, stamp, parent, queue;
  int epoch = 0;
};

int max_partition_dia(const std::vector<std::vector<int>>& adj,
                      const std::vector<char>& cut, DiaScratch& sc) {
  const int n = static_cast<int>(adj.size());
  if (sc.stamp.size() != adj.size()) {
    sc.dist.assign(n, 0);
    sc.stamp.assign(n, 0);
    sc.parent.assign(n, -1);
    sc.queue.resize(n + 8);
  }
  int dia = 0;
  // cut-cut edges
  for (int u = 0; u < n; ++u)
    if (cut[u])
      for (int w : adj[u])
        if (cut[w] && w > u) dia = std::max(dia, 1);

  auto bfs = [&](int start, int forced_first) {
    // returns index of farthest node; distances left in sc.dist
    ++sc.epoch;
    int head = 0, tail = 0;
    sc.queue[tail++] = start;
    sc.stamp[start] = sc.epoch;
    sc.dist[start] = 0;
    int best = start;
    while (head < tail) {
      int u = sc.queue[head++];
      if (cut[u] && u != start) continue;  // pendant replica, don't expand
      for (int w : adj[u]) {
        if (u == start && forced_first >= 0 && w != forced_first) continue;
        if (sc.stamp[w] == sc.epoch) continue;
        sc.stamp[w] = sc.epoch;
        sc.dist[w] = sc.dist[u] + 1;
        sc.queue[tail++] = w;
        if (sc.dist[w] > sc.dist[best]) best = w;
      }
    }
    return best;
  };

  ++sc.epoch;
  const int visited_epoch = sc.epoch;
  std::vector<int>& comp_mark = sc.parent;  // reuse as visited marker
  for (int s = 0; s < n; ++s) {
    if (cut[s] || comp_mark[s] == visited_epoch) continue;
    // discover component of s (non-cut core)
    int head = 0, tail = 0;
    sc.queue[tail++] = s;
    comp_mark[s] = visited_epoch;
    while (head < tail) {
      int u = sc.queue[head++];
      for (int w : adj[u])
        if (!cut[w] && comp_mark[w] != visited_epoch) {
          comp_mark[w] = visited_epoch;
          sc.queue[tail++] = w;
        }
    }
    int x = bfs(s, -1);
    int forced = -1;
    if (cut[x]) {
      // second sweep must stay inside this component: step back through the
      // unique attachment (x's only neighbor at distance dist[x]-1)
      for (int w : adj[x])
        if (sc.stamp[w] == sc.epoch && sc.dist[w] == sc.dist[x] - 1 &&
            !cut[w]) {
          forced = w;
          break;
        }
    }
    int y = bfs(x, forced);
    dia = std::max(dia, sc.dist[y]);
  }
  return dia;
}

}  // namespace

PlacementResult exhaustive_place(const TopologyGraph& graph, int k) {
  const int n = graph.size();
  if (k < 1 || k > n) throw ConfigError("placement count out of range");
  const auto& adj = graph.adjacency();

  struct Best {
    int dia = INT_MAX;
    std::vector<int> set;
  };
  // chunk by the first chosen index; combine deterministically afterwards
  unsigned hw = std::thread::hardware_concurrency();
  int n_threads = std::max(1u, std::min(hw, 16u));
  std::vector<Best> bests(n - k + 1);

  auto scan_first = [&](int first) {
    DiaScratch sc;
    std::vector<char> cut(n, 0);
    std::vector<int> idx(k);
    idx[0] = first;
    cut[first] = 1;
    Best& best = bests[first];
    // iterative lexicographic enumeration of the remaining k-1 indices
    int depth = 1;
    if (k == 1) {
      int d = max_partition_dia(adj, cut, sc);
      if (d < best.dia) best = {d, {idx.begin(), idx.end()}};
      return;
    }
    idx[1] = first;  // will be incremented
    while (depth >= 1) {
      ++idx[depth];
      if (idx[depth] > n - (k - depth)) {
        --depth;
        if (depth >= 1) cut[idx[depth]] = 0;
        continue;
      }
      if (depth == k - 1) {
        cut[idx[depth]] = 1;
        int d = max_partition_dia(adj, cut, sc);
        cut[idx[depth]] = 0;
        if (d < best.dia) {
          best.dia = d;
          best.set.assign(idx.begin(), idx.end());
        }
      } else {
        cut[idx[depth]] = 1;
        ++depth;
        idx[depth] = idx[depth - 1];
      }
    }
  };

  std::vector<std::thread> pool;
  std::atomic<int> next_first{0};
  for (int t = 0; t < n_threads; ++t)
    pool.emplace_back([&]() {
      for (;;) {
        int f = next_first.fetch_add(1);
        if (f > n - k) return;
        scan_first(f);
      }
    });
  for (auto& th : pool) th.join();

  Best best;
  for (const Best& b : bests)
    if (b.dia < best.dia) best = b;  // first-index order = lexicographic

  PlacementResult res;
  for (int i : best.set) res.placed.push_back(graph.id_of(i));
  res.dia_trace = {best.dia};
  return res;
}

}  // namespace dsse
