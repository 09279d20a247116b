#include "liftperc/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "liftperc/errors.hpp"

namespace liftperc {

namespace {

std::optional<std::vector<std::uint8_t>> two_coloring(
    const std::vector<std::vector<Incidence>>& adj) {
  std::vector<std::uint8_t> color(adj.size(), 2);
  if (adj.empty()) return color;
  std::deque<VertexId> queue{0};
  color[0] = 0;
  while (!queue.empty()) {
    const VertexId x = queue.front();
    queue.pop_front();
    for (const auto& inc : adj[x]) {
      if (color[inc.neighbor] == 2) {
        color[inc.neighbor] = color[x] ^ 1;
        queue.push_back(inc.neighbor);
      } else if (color[inc.neighbor] == color[x]) {
        return std::nullopt;
      }
    }
  }
  return color;
}

const char* kind_name(GraphKind k) {
  switch (k) {
    case GraphKind::Box: return "box";
    case GraphKind::Cycle: return "cycle";
    case GraphKind::Tree: return "tree";
    case GraphKind::Complete: return "complete";
    case GraphKind::Custom: return "custom";
  }
  return "custom";
}

}  // namespace

std::string GraphDescriptor::to_string() const {
  std::string s = kind_name(kind);
  for (int p : params) s += ":" + std::to_string(p);
  return s;
}

bool is_connected(std::size_t vertex_count, const std::vector<Edge>& edges) {
  if (vertex_count == 0) return false;
  std::vector<std::vector<VertexId>> adj(vertex_count);
  for (const auto& e : edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  std::vector<char> seen(vertex_count, 0);
  std::vector<VertexId> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const VertexId x = stack.back();
    stack.pop_back();
    for (VertexId y : adj[x]) {
      if (!seen[y]) {
        seen[y] = 1;
        ++count;
        stack.push_back(y);
      }
    }
  }
  return count == vertex_count;
}

BaseGraph BaseGraph::from_edges(std::size_t vertex_count, std::vector<Edge> edges,
                                GraphDescriptor descriptor) {
  require(vertex_count > 0, "graph must have at least one vertex");
  require(vertex_count < (1u << 30), "graph too large");
  std::set<std::pair<VertexId, VertexId>> seen;
  for (auto& e : edges) {
    require(e.u < vertex_count && e.v < vertex_count, "edge endpoint out of range");
    require(e.u != e.v, "self-loop in edge list");
    if (e.u > e.v) std::swap(e.u, e.v);
    require(seen.insert({e.u, e.v}).second, "parallel edge in edge list");
  }
  require(is_connected(vertex_count, edges), "graph is not connected");

  BaseGraph g;
  g.edges_ = std::move(edges);
  g.adjacency_.resize(vertex_count);
  for (EdgeId id = 0; id < g.edges_.size(); ++id) {
    const auto& e = g.edges_[id];
    g.adjacency_[e.u].push_back({id, e.v});
    g.adjacency_[e.v].push_back({id, e.u});
  }
  g.descriptor_ = std::move(descriptor);
  g.bipartition_ = two_coloring(g.adjacency_);
  return g;
}

std::optional<EdgeId> BaseGraph::find_edge(VertexId x, VertexId y) const {
  for (const auto& inc : adjacency_[x])
    if (inc.neighbor == y) return inc.edge;
  return std::nullopt;
}

int BaseGraph::box_dimension() const {
  require(descriptor_.kind == GraphKind::Box, "not a box graph");
  return descriptor_.params.at(0);
}

int BaseGraph::box_side() const {
  require(descriptor_.kind == GraphKind::Box, "not a box graph");
  return descriptor_.params.at(1);
}

std::vector<int> BaseGraph::coordinates(VertexId v) const {
  const int d = box_dimension();
  const int side = box_side();
  std::vector<int> c(d);
  for (int i = d - 1; i >= 0; --i) {
    c[i] = static_cast<int>(v % side);
    v /= side;
  }
  return c;
}

VertexId BaseGraph::vertex_at(std::span<const int> coords) const {
  const int side = box_side();
  require(static_cast<int>(coords.size()) == box_dimension(), "coordinate arity mismatch");
  VertexId id = 0;
  for (int c : coords) {
    require(c >= 0 && c < side, "coordinate outside box");
    id = id * side + c;
  }
  return id;
}

VertexId BaseGraph::box_center() const {
  std::vector<int> c(box_dimension(), (box_side() - 1) / 2);
  return vertex_at(c);
}

std::vector<std::uint8_t> BaseGraph::box_boundary_mask() const {
  const int side = box_side();
  std::vector<std::uint8_t> mask(vertex_count(), 0);
  for (VertexId v = 0; v < vertex_count(); ++v) {
    for (int c : coordinates(v))
      if (c == 0 || c == side - 1) mask[v] = 1;
  }
  return mask;
}

BaseGraph build_box(int dimension, int side) {
  require(dimension >= 1, "box dimension must be >= 1");
  require(side >= 1, "box side must be >= 1");
  std::size_t n = 1;
  for (int i = 0; i < dimension; ++i) {
    n *= static_cast<std::size_t>(side);
    require(n < (1u << 26), "box too large");
  }
  // Stride of coordinate i in the lexicographic id.
  std::vector<std::size_t> stride(dimension, 1);
  for (int i = dimension - 2; i >= 0; --i) stride[i] = stride[i + 1] * side;

  std::vector<Edge> edges;
  edges.reserve(n * dimension);
  std::vector<int> coord(dimension, 0);
  for (std::size_t v = 0; v < n; ++v) {
    std::size_t rest = v;
    for (int i = 0; i < dimension; ++i) {
      coord[i] = static_cast<int>(rest / stride[i]);
      rest %= stride[i];
    }
    for (int i = 0; i < dimension; ++i) {
      if (coord[i] + 1 < side)
        edges.push_back({static_cast<VertexId>(v), static_cast<VertexId>(v + stride[i])});
    }
  }
  return BaseGraph::from_edges(n, std::move(edges), {GraphKind::Box, {dimension, side}});
}

BaseGraph build_cycle(int n) {
  require(n >= 3, "cycle needs at least 3 vertices");
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i)
    edges.push_back({static_cast<VertexId>(i), static_cast<VertexId>(i + 1)});
  edges.push_back({0, static_cast<VertexId>(n - 1)});
  return BaseGraph::from_edges(n, std::move(edges), {GraphKind::Cycle, {n}});
}

BaseGraph build_tree(int branching, int depth) {
  require(branching >= 1, "tree branching must be >= 1");
  require(depth >= 0, "tree depth must be >= 0");
  std::size_t n = 1, level = 1;
  for (int d = 0; d < depth; ++d) {
    level *= branching;
    n += level;
    require(n < (1u << 26), "tree too large");
  }
  std::vector<Edge> edges;
  for (std::size_t child = 1; child < n; ++child)
    edges.push_back({static_cast<VertexId>((child - 1) / branching), static_cast<VertexId>(child)});
  return BaseGraph::from_edges(n, std::move(edges), {GraphKind::Tree, {branching, depth}});
}

BaseGraph build_complete(int n) {
  require(n >= 1, "complete graph needs at least 1 vertex");
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      edges.push_back({static_cast<VertexId>(i), static_cast<VertexId>(j)});
  return BaseGraph::from_edges(n, std::move(edges), {GraphKind::Complete, {n}});
}

BaseGraph build_custom(std::size_t vertex_count, const std::vector<Edge>& edges) {
  return BaseGraph::from_edges(vertex_count, edges, {GraphKind::Custom, {}});
}

BaseGraph read_edge_list(std::istream& in) {
  long long v = 0, e = 0;
  require(static_cast<bool>(in >> v >> e), "edge list: missing 'V E' header");
  require(v > 0 && e >= 0, "edge list: bad header");
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(e));
  for (long long i = 0; i < e; ++i) {
    long long a = 0, b = 0;
    require(static_cast<bool>(in >> a >> b), "edge list: truncated at edge " + std::to_string(i));
    require(a >= 0 && b >= 0, "edge list: negative id");
    edges.push_back({static_cast<VertexId>(a), static_cast<VertexId>(b)});
  }
  return build_custom(static_cast<std::size_t>(v), edges);
}

void write_edge_list(std::ostream& out, const BaseGraph& g) {
  out << g.vertex_count() << ' ' << g.edge_count() << '\n';
  for (const auto& e : g.edges()) out << e.u << ' ' << e.v << '\n';
}

BaseGraph graph_from_descriptor(const std::string& text) {
  if (text.rfind("file:", 0) == 0) {
    std::ifstream in(text.substr(5));
    require(in.good(), "cannot open graph file " + text.substr(5));
    return read_edge_list(in);
  }
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  require(!parts.empty(), "empty graph descriptor");
  std::vector<int> args;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    try {
      std::size_t used = 0;
      args.push_back(std::stoi(parts[i], &used));
      require(used == parts[i].size(), "bad graph parameter '" + parts[i] + "'");
    } catch (const std::logic_error&) {
      throw ConfigError("bad graph parameter '" + parts[i] + "' in " + text);
    }
  }
  const auto& kind = parts[0];
  auto want = [&](std::size_t k) {
    require(args.size() == k, "graph descriptor '" + text + "' expects " + std::to_string(k) +
                                  " parameter(s)");
  };
  if (kind == "box") { want(2); return build_box(args[0], args[1]); }
  if (kind == "path") { want(1); return build_box(1, args[0]); }
  if (kind == "cycle") { want(1); return build_cycle(args[0]); }
  if (kind == "tree") { want(2); return build_tree(args[0], args[1]); }
  if (kind == "complete") { want(1); return build_complete(args[0]); }
  throw ConfigError("unknown graph kind '" + kind + "'");
}

// ---- metric ----------------------------------------------------------------

std::vector<int> distances_from(const BaseGraph& g, std::span<const VertexId> sources) {
  std::vector<int> dist(g.vertex_count(), kUnreached);
  std::deque<VertexId> queue;
  for (VertexId s : sources) {
    if (dist.at(s) != 0) {
      dist[s] = 0;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const VertexId x = queue.front();
    queue.pop_front();
    for (const auto& inc : g.incident(x)) {
      if (dist[inc.neighbor] == kUnreached) {
        dist[inc.neighbor] = dist[x] + 1;
        queue.push_back(inc.neighbor);
      }
    }
  }
  return dist;
}

std::vector<int> distances_from(const BaseGraph& g, VertexId source) {
  const VertexId s[] = {source};
  return distances_from(g, s);
}

int distance(const BaseGraph& g, VertexId x, VertexId y) {
  require(x < g.vertex_count() && y < g.vertex_count(), "vertex id out of range");
  return distances_from(g, x)[y];
}

Ball ball(const BaseGraph& g, VertexId x, int radius) {
  require(x < g.vertex_count(), "vertex id out of range");
  require(radius >= 0, "radius must be >= 0");
  const auto dist = distances_from(g, x);
  Ball b{x, radius, {}};
  for (VertexId v = 0; v < g.vertex_count(); ++v)
    if (dist[v] != kUnreached && dist[v] <= radius) b.members.push_back(v);
  return b;
}

std::vector<VertexId> sphere(const BaseGraph& g, VertexId x, int radius) {
  require(x < g.vertex_count(), "vertex id out of range");
  const auto dist = distances_from(g, x);
  std::vector<VertexId> out;
  for (VertexId v = 0; v < g.vertex_count(); ++v)
    if (dist[v] == radius) out.push_back(v);
  return out;
}

std::vector<EdgeId> sphere_edges(const BaseGraph& g, VertexId x, int radius) {
  require(x < g.vertex_count(), "vertex id out of range");
  const auto dist = distances_from(g, x);
  std::vector<EdgeId> out;
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const int a = dist[g.edge(e).u], b = dist[g.edge(e).v];
    if (std::min(a, b) == radius && std::max(a, b) == radius + 1) out.push_back(e);
  }
  return out;
}

std::vector<VertexId> ball_of_set(const BaseGraph& g, std::span<const VertexId> set, int radius) {
  const auto dist = distances_from(g, set);
  std::vector<VertexId> out;
  for (VertexId v = 0; v < g.vertex_count(); ++v)
    if (dist[v] != kUnreached && dist[v] <= radius) out.push_back(v);
  return out;
}

int girth(const BaseGraph& g) {
  int best = 0;
  const std::size_t n = g.vertex_count();
  std::vector<int> dist(n);
  std::vector<VertexId> parent(n);
  for (VertexId s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), kUnreached);
    std::deque<VertexId> queue{s};
    dist[s] = 0;
    parent[s] = s;
    while (!queue.empty()) {
      const VertexId x = queue.front();
      queue.pop_front();
      for (const auto& inc : g.incident(x)) {
        const VertexId y = inc.neighbor;
        if (dist[y] == kUnreached) {
          dist[y] = dist[x] + 1;
          parent[y] = x;
          queue.push_back(y);
        } else if (parent[x] != y) {
          const int len = dist[x] + dist[y] + 1;
          if (best == 0 || len < best) best = len;
        }
      }
    }
  }
  return best;
}

}  // namespace liftperc
