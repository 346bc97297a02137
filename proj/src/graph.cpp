#include "cfep/graph.hpp"

#include <algorithm>
#include <queue>
#include <random>

#include "cfep/types.hpp"

namespace cfep {

namespace {

std::vector<int> bfsDistances(const ApGraph& g, int root) {
  std::vector<int> dist(static_cast<std::size_t>(g.size()), -1);
  std::queue<int> q;
  dist[static_cast<std::size_t>(root)] = 0;
  q.push(root);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : g.neighbors(u)) {
      if (dist[static_cast<std::size_t>(v)] >= 0) continue;
      dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
      q.push(v);
    }
  }
  return dist;
}

ApGraph bfsTree(const ApGraph& g, int root, std::mt19937_64* rng) {
  if (root < 0 || root >= g.size()) throw ContractError("spanningTree: root out of range");
  if (!g.connected()) throw ContractError("spanningTree: graph is disconnected");
  ApGraph tree(g.size());
  std::vector<bool> seen(static_cast<std::size_t>(g.size()), false);
  std::queue<int> q;
  seen[static_cast<std::size_t>(root)] = true;
  q.push(root);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    std::vector<int> next = g.neighbors(u);
    if (rng) std::shuffle(next.begin(), next.end(), *rng);
    for (int v : next) {
      if (seen[static_cast<std::size_t>(v)]) continue;
      seen[static_cast<std::size_t>(v)] = true;
      tree.addEdge(u, v);
      q.push(v);
    }
  }
  return tree;
}

}  // namespace

void ApGraph::addEdge(int a, int b) {
  if (a == b || a < 0 || b < 0 || a >= size() || b >= size()) throw ContractError("ApGraph: invalid edge");
  auto insert = [](std::vector<int>& list, int v) {
    auto it = std::lower_bound(list.begin(), list.end(), v);
    if (it == list.end() || *it != v) list.insert(it, v);
  };
  insert(adj_[static_cast<std::size_t>(a)], b);
  insert(adj_[static_cast<std::size_t>(b)], a);
}

bool ApGraph::hasEdge(int a, int b) const {
  const auto& list = neighbors(a);
  return std::binary_search(list.begin(), list.end(), b);
}

std::vector<std::pair<int, int>> ApGraph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int u = 0; u < size(); ++u)
    for (int v : neighbors(u))
      if (u < v) out.emplace_back(u, v);
  return out;
}

std::size_t ApGraph::edgeCount() const {
  std::size_t twice = 0;
  for (const auto& list : adj_) twice += list.size();
  return twice / 2;
}

bool ApGraph::connected() const {
  if (size() == 0) return false;
  const auto dist = bfsDistances(*this, 0);
  return std::none_of(dist.begin(), dist.end(), [](int d) { return d < 0; });
}

int ApGraph::diameter() const {
  if (!connected()) throw ContractError("diameter: graph is disconnected");
  int best = 0;
  for (int u = 0; u < size(); ++u) {
    const auto dist = bfsDistances(*this, u);
    best = std::max(best, *std::max_element(dist.begin(), dist.end()));
  }
  return best;
}

ApGraph spanningTree(const ApGraph& graph, int root) { return bfsTree(graph, root, nullptr); }

ApGraph randomSpanningTree(const ApGraph& graph, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, graph.size() - 1);
  const int root = pick(rng);
  return bfsTree(graph, root, &rng);
}

}  // namespace cfep
