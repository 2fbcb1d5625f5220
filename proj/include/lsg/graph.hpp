#pragma once

#include <cstdint>
#include <vector>

#include "lsg/tensor.hpp"

namespace lsg {

// Feature-space k-NN graph over the spatial locations of a feature map.
// Node index = y * width + x (row-major raster order). Adjacency rows are
// ordered by ascending (squared distance, node index); edges are directed and
// never include the node itself.
struct Graph {
    int node_count = 0;
    int k = 0;
    int height = 0;
    int width = 0;
    std::vector<std::int32_t> adjacency; // node_count * k

    // Reverse adjacency in CSR form (built by finalize); in_src holds, for
    // each target node, the ascending list of source nodes pointing at it.
    std::vector<std::int32_t> in_offsets;
    std::vector<std::int32_t> in_sources;

    void finalize();
    bool valid() const;
};

// f has shape [C,H,W] or [1,C,H,W]; requires 0 < k < H*W.
template <class T>
Graph build_knn_graph(const Tensor<T>& f, int k);

} // namespace lsg
