#include "lsg/graph.hpp"

#include <algorithm>

#include "lsg/kernels.hpp"

namespace lsg {

void Graph::finalize() {
    std::vector<std::int32_t> degree(node_count, 0);
    for (std::int32_t j : adjacency) ++degree[j];
    in_offsets.assign(node_count + 1, 0);
    for (int j = 0; j < node_count; ++j) in_offsets[j + 1] = in_offsets[j] + degree[j];
    in_sources.assign(adjacency.size(), 0);
    std::vector<std::int32_t> cursor(in_offsets.begin(), in_offsets.end() - 1);
    // Source loop is ascending, so each in-edge list comes out sorted.
    for (int i = 0; i < node_count; ++i) {
        for (int q = 0; q < k; ++q) {
            const std::int32_t j = adjacency[static_cast<std::size_t>(i) * k + q];
            in_sources[cursor[j]++] = i;
        }
    }
}

bool Graph::valid() const {
    if (node_count != height * width) return false;
    if (adjacency.size() != static_cast<std::size_t>(node_count) * k) return false;
    for (int i = 0; i < node_count; ++i) {
        for (int q = 0; q < k; ++q) {
            const std::int32_t j = adjacency[static_cast<std::size_t>(i) * k + q];
            if (j < 0 || j >= node_count || j == i) return false;
            for (int p = 0; p < q; ++p)
                if (adjacency[static_cast<std::size_t>(i) * k + p] == j) return false;
        }
    }
    return true;
}

template <class T>
Graph build_knn_graph(const Tensor<T>& f, int k) {
    std::vector<int> s = f.shape;
    if (s.size() == 4 && s[0] == 1) s.erase(s.begin());
    if (s.size() != 3)
        throw ShapeError("build_knn_graph: expected [C,H,W] feature map, got " +
                         shape_string(f.shape));
    const int c = s[0], h = s[1], w = s[2];
    const int nodes = h * w;
    if (k < 1 || k >= nodes)
        throw ValidationError("build_knn_graph: k must be in [1, " + std::to_string(nodes - 1) +
                              "], got " + std::to_string(k));

    // Transpose [C,H,W] -> [nodes, C] so distance loops stream contiguously.
    std::vector<T> feat(static_cast<std::size_t>(nodes) * c);
    for (int cc = 0; cc < c; ++cc) {
        const T* plane = f.ptr() + static_cast<std::size_t>(cc) * nodes;
        for (int i = 0; i < nodes; ++i) feat[static_cast<std::size_t>(i) * c + cc] = plane[i];
    }

    Graph g;
    g.node_count = nodes;
    g.k = k;
    g.height = h;
    g.width = w;
    g.adjacency.resize(static_cast<std::size_t>(nodes) * k);
    kernels::knn_adjacency(g.adjacency.data(), feat.data(), nodes, c, k);
    g.finalize();
    return g;
}

template Graph build_knn_graph<float>(const Tensor<float>&, int);
template Graph build_knn_graph<double>(const Tensor<double>&, int);

} // namespace lsg
