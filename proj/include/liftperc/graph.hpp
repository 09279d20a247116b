#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace liftperc {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

enum class GraphKind { Box, Cycle, Tree, Complete, Custom };

// Generator that produced a graph, e.g. box:2:63 or cycle:4.
struct GraphDescriptor {
  GraphKind kind = GraphKind::Custom;
  std::vector<int> params;

  std::string to_string() const;
};

// Endpoints are stored with u < v.
struct Edge {
  VertexId u;
  VertexId v;

  VertexId other(VertexId x) const { return x == u ? v : u; }
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Incidence {
  EdgeId edge;
  VertexId neighbor;
};

// Finite, simple, connected base graph with dense ids. Vertex and edge ids
// follow generator order, which is the well-ordering every exploration uses
// when it takes "the smallest" element. Immutable after construction.
class BaseGraph {
 public:
  // Validates simplicity and connectivity; endpoints are normalized to u < v
  // but the edge order is kept.
  static BaseGraph from_edges(std::size_t vertex_count, std::vector<Edge> edges,
                              GraphDescriptor descriptor = {});

  std::size_t vertex_count() const { return adjacency_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const Edge& edge(EdgeId e) const { return edges_[e]; }
  const std::vector<Edge>& edges() const { return edges_; }
  // Incidences of v sorted by edge id.
  std::span<const Incidence> incident(VertexId v) const { return adjacency_[v]; }
  std::size_t degree(VertexId v) const { return adjacency_[v].size(); }
  template <class Fn>
  void for_each_incident(VertexId v, Fn&& fn) const {
    for (const auto& inc : adjacency_[v]) fn(inc.edge, inc.neighbor);
  }
  // Edge id joining x and y, if any.
  std::optional<EdgeId> find_edge(VertexId x, VertexId y) const;

  const GraphDescriptor& descriptor() const { return descriptor_; }
  // 0/1 color per vertex when the graph is bipartite (vertex 0 gets color 0).
  const std::optional<std::vector<std::uint8_t>>& bipartition() const { return bipartition_; }
  bool is_bipartite() const { return bipartition_.has_value(); }

  // Box-only helpers (throw ConfigError on other kinds).
  int box_dimension() const;
  int box_side() const;
  std::vector<int> coordinates(VertexId v) const;
  VertexId vertex_at(std::span<const int> coords) const;
  VertexId box_center() const;
  // Vertices with some coordinate equal to 0 or side-1.
  std::vector<std::uint8_t> box_boundary_mask() const;

 private:
  std::vector<Edge> edges_;
  std::vector<std::vector<Incidence>> adjacency_;
  GraphDescriptor descriptor_;
  std::optional<std::vector<std::uint8_t>> bipartition_;
};

BaseGraph build_box(int dimension, int side);
BaseGraph build_cycle(int n);
// Complete `branching`-ary tree of the given depth, vertices in BFS order.
BaseGraph build_tree(int branching, int depth);
BaseGraph build_complete(int n);
BaseGraph build_custom(std::size_t vertex_count, const std::vector<Edge>& edges);

// Plain-text edge list: first line "V E", then E lines "u v" (0-based).
BaseGraph read_edge_list(std::istream& in);
void write_edge_list(std::ostream& out, const BaseGraph& g);

// Parses "box:d:L", "cycle:N", "tree:b:depth", "complete:n", "path:N" or
// "file:<path>".
BaseGraph graph_from_descriptor(const std::string& text);

// ---- metric utilities -------------------------------------------------------

inline constexpr int kUnreached = -1;

// BFS distances from a set of sources; kUnreached where not reachable.
std::vector<int> distances_from(const BaseGraph& g, std::span<const VertexId> sources);
std::vector<int> distances_from(const BaseGraph& g, VertexId source);
int distance(const BaseGraph& g, VertexId x, VertexId y);

struct Ball {
  VertexId center;
  int radius;
  std::vector<VertexId> members;  // sorted
};

Ball ball(const BaseGraph& g, VertexId x, int radius);
// Vertices at distance exactly R.
std::vector<VertexId> sphere(const BaseGraph& g, VertexId x, int radius);
// Edges with one endpoint at distance R and the other at distance R+1.
std::vector<EdgeId> sphere_edges(const BaseGraph& g, VertexId x, int radius);
// Vertices within distance R of a set.
std::vector<VertexId> ball_of_set(const BaseGraph& g, std::span<const VertexId> set, int radius);

// Length of a shortest cycle, or 0 for forests.
int girth(const BaseGraph& g);
bool is_connected(std::size_t vertex_count, const std::vector<Edge>& edges);

}  // namespace liftperc
