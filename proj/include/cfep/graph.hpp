#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace cfep {

/// Undirected AP interconnect, stored as sorted adjacency lists.
class ApGraph {
 public:
  ApGraph() = default;
  explicit ApGraph(int numNodes) : adj_(static_cast<std::size_t>(numNodes)) {}

  void addEdge(int a, int b);

  int size() const { return static_cast<int>(adj_.size()); }
  const std::vector<int>& neighbors(int node) const { return adj_[static_cast<std::size_t>(node)]; }
  bool hasEdge(int a, int b) const;
  /// Each undirected edge once, as (low, high).
  std::vector<std::pair<int, int>> edges() const;
  std::size_t edgeCount() const;

  bool connected() const;
  bool isTree() const { return connected() && edgeCount() + 1 == static_cast<std::size_t>(size()); }
  /// Longest shortest path in hops; requires a connected graph.
  int diameter() const;

 private:
  std::vector<std::vector<int>> adj_;
};

/// BFS spanning tree rooted at `root`. Throws ContractError when disconnected.
ApGraph spanningTree(const ApGraph& graph, int root);

/// Spanning tree from a randomized BFS (random root, shuffled neighbor order).
ApGraph randomSpanningTree(const ApGraph& graph, std::uint64_t seed);

}  // namespace cfep
