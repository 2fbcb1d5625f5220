#pragma once

#include <cstdint>
#include <optional>

#include "lsg/autodiff.hpp"
#include "lsg/checkpoint.hpp"
#include "lsg/graph.hpp"
#include "lsg/image.hpp"

namespace lsg {

struct UNetConfig {
    int levels = 3;          // L encoder blocks
    int base_channels = 8;
    int input_size = 128;    // square inputs
    bool gnn_enabled = false;
    int gnn_layers = 2;      // T
    int k_neighbors = 8;
    double threshold = 0.5;
    bool rebuild_graph_per_layer = false;

    int bottleneck_channels() const { return base_channels << levels; }
    int bottleneck_size() const { return input_size >> levels; }
    void validate() const;
};

// Per-node update h^t = relu(sum_{j in kNN(i)} W h_j^{t-1} + b): unnormalized
// sum over the fixed neighbour set, bias added once, no self term. h is
// [nodes, C] node-major, W is [C, C], b is [C].
template <class T>
Tensor<T> graph_conv(const Graph& graph, const Tensor<T>& h, const Tensor<T>& weight,
                     const Tensor<T>& bias);

// Encoder-decoder segmentation network; with gnn_enabled a k-NN graph stack
// runs on the deepest feature map before decoding. With gnn_layers == 0 the
// forward pass and parameter set reduce exactly to the plain U-Net.
template <class T>
class SegModel {
public:
    SegModel(const UNetConfig& cfg, std::uint64_t init_seed);
    SegModel(const UNetConfig& cfg, ParamStore<T> loaded);

    const UNetConfig& config() const { return cfg_; }
    ParamStore<T>& params() { return store_; }
    const ParamStore<T>& params() const { return store_; }

    // Builds the forward graph on the given tape and returns the probability
    // map node ([1,1,H,W], values in (0,1)). fixed_graph, when provided,
    // bypasses k-NN graph construction (used for gradient checks).
    int forward_on(Tape<T>& tape, int input, const Graph* fixed_graph = nullptr) const;

    // Inference helper: image [1,1,H,W] -> probability map tensor.
    Tensor<T> forward(const Tensor<T>& image) const;

    // The adjacency the model would use for the given image's deepest
    // features (diagnostics and tests).
    Graph bottleneck_graph(const Tensor<T>& image) const;

private:
    UNetConfig cfg_;
    ParamStore<T> store_;

    void build_params(std::uint64_t seed);
    void check_store() const;
};

// Scales an image into the [0,1] input tensor [1,1,H,W].
template <class T>
Tensor<T> image_to_tensor(const Image& img);
template <class T>
Tensor<T> mask_to_tensor(const Mask& mask);

// Foreground iff probability >= threshold.
template <class T>
Mask predict_mask(const Tensor<T>& prob_map, double threshold);

} // namespace lsg
