#pragma once

#include <tuple>
#include <vector>

#include "dsse/feeder.hpp"

namespace dsse {

// Undirected graph over integer node ids. Works for feeder topologies and
// for synthetic graphs (paths, stars) alike; only hop counts matter here.
class TopologyGraph {
 public:
  TopologyGraph() = default;
  TopologyGraph(std::vector<int> node_ids,
                std::vector<std::pair<int, int>> edges);
  static TopologyGraph from_feeder(const Feeder& feeder);
  static TopologyGraph path(int n);  // ids 0..n-1 in a chain

  int size() const { return static_cast<int>(ids_.size()); }
  const std::vector<int>& node_ids() const { return ids_; }
  int index_of(int id) const;
  int id_of(int index) const { return ids_[index]; }
  const std::vector<std::vector<int>>& adjacency() const { return adj_; }

  // Max hop distance from the node to any other (graph must be connected).
  int eccentricity(int node_id) const;
  int diameter() const;
  // Double-sweep BFS; returns (length, endpoint ids). Tree input required.
  std::tuple<int, int, int> diameter_path() const;

 private:
  std::vector<int> ids_;                 // sorted
  std::vector<std::vector<int>> adj_;    // by index
};

// One partition produced by removing the cut vertices: a connected component
// of the remaining graph plus replicas of every adjacent cut vertex. An edge
// joining two cut vertices forms its own two-node partition.
struct Partition {
  std::vector<int> nodes;                       // node ids, sorted
  std::vector<std::pair<int, int>> edges;       // node ids
  int diameter = 0;
};

std::vector<Partition> vertex_cut_partitions(const TopologyGraph& graph,
                                             const std::vector<int>& cut_ids);

// dia(P): max partition diameter for the given cut set (whole-graph diameter
// when the set is empty).
int partitioned_diameter(const TopologyGraph& graph,
                         const std::vector<int>& cut_ids);

struct PlacementResult {
  std::vector<int> placed;     // bus ids in placement order (greedy) or sorted
  std::vector<int> dia_trace;  // dia after 1..K placements
};

// Greedy: repeatedly split the partition with the largest diameter at the
// midpoint of one of its longest shortest paths. Ties resolve toward the
// partition containing the smallest node id; the path is taken between the
// lexicographically smaller endpoint pair and the midpoint rounds down from
// the smaller-id endpoint; if the midpoint is already placed, the nearest
// unplaced node along the path is used, preferring the longer side.
PlacementResult greedy_place(const TopologyGraph& graph, int k);

// Exhaustive search over all k-subsets, minimizing dia(P); among minimizers
// the lexicographically smallest id set is returned.
PlacementResult exhaustive_place(const TopologyGraph& graph, int k);

}  // namespace dsse
