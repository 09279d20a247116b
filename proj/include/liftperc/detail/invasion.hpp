#pragma once

#include <functional>
#include <limits>
#include <queue>
#include <utility>

namespace liftperc {

template <class Host>
double reach_threshold(const Host& host, std::span<const double> uniforms, VertexId origin,
                       std::span<const std::uint8_t> boundary) {
  if (boundary[origin]) return -std::numeric_limits<double>::infinity();
  using Item = std::pair<double, VertexId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> frontier;
  std::vector<std::uint8_t> seen(host.vertex_count(), 0);
  seen[origin] = 1;
  auto push = [&](VertexId x) {
    host.for_each_incident(x, [&](EdgeId e, VertexId y) {
      if (!seen[y]) frontier.emplace(uniforms[e], y);
    });
  };
  push(origin);
  double level = 0.0;
  while (!frontier.empty()) {
    const auto [u, y] = frontier.top();
    frontier.pop();
    if (seen[y]) continue;
    seen[y] = 1;
    level = std::max(level, u);
    if (boundary[y]) return level;
    push(y);
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace liftperc
