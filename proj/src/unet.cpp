#include "lsg/unet.hpp"

#include <cmath>

#include "lsg/kernels.hpp"
#include "lsg/rng.hpp"

namespace lsg {

void UNetConfig::validate() const {
    if (levels < 1) throw ValidationError("UNetConfig: levels must be >= 1");
    if (base_channels < 1) throw ValidationError("UNetConfig: base_channels must be >= 1");
    if (input_size < 1 || input_size % (1 << levels) != 0)
        throw ValidationError("UNetConfig: input_size " + std::to_string(input_size) +
                              " must be divisible by 2^levels = " + std::to_string(1 << levels));
    if (gnn_layers < 0) throw ValidationError("UNetConfig: gnn_layers must be >= 0");
    const int nodes = bottleneck_size() * bottleneck_size();
    if (gnn_enabled && (k_neighbors < 1 || k_neighbors >= nodes))
        throw ValidationError("UNetConfig: k_neighbors must be in [1, " +
                              std::to_string(nodes - 1) + "]");
    if (!(threshold > 0.0 && threshold < 1.0))
        throw ValidationError("UNetConfig: threshold must be in (0,1)");
}

template <class T>
Tensor<T> graph_conv(const Graph& graph, const Tensor<T>& h, const Tensor<T>& weight,
                     const Tensor<T>& bias) {
    if (h.rank() != 2 || h.dim(0) != graph.node_count)
        throw ShapeError("graph_conv: features must be [nodes,C], got " + shape_string(h.shape));
    const int c = h.dim(1);
    if (weight.rank() != 2 || weight.dim(0) != c || weight.dim(1) != c)
        throw ShapeError("graph_conv: weight must be [C,C] with C=" + std::to_string(c) +
                         ", got " + shape_string(weight.shape));
    if (bias.rank() != 1 || bias.dim(0) != c)
        throw ShapeError("graph_conv: bias must be [C], got " + shape_string(bias.shape));

    Tensor<T> s(h.shape);
    kernels::neighbor_sum_forward(s.ptr(), h.ptr(), graph.adjacency.data(), graph.node_count,
                                  graph.k, c);
    Tensor<T> out(h.shape);
    kernels::linear_forward(out.ptr(), s.ptr(), weight.ptr(), bias.ptr(), graph.node_count, c, c);
    kernels::relu_forward(out.ptr(), out.ptr(), out.numel());
    return out;
}

template Tensor<float> graph_conv<float>(const Graph&, const Tensor<float>&,
                                         const Tensor<float>&, const Tensor<float>&);
template Tensor<double> graph_conv<double>(const Graph&, const Tensor<double>&,
                                           const Tensor<double>&, const Tensor<double>&);

namespace {

// Parameter names double as init stream keys, so initialization does not
// depend on registration order.
template <class T>
void add_conv(ParamStore<T>& store, const std::string& name, int oc, int ic, int k,
              std::uint64_t seed) {
    Rng rng(combine_keys(seed, fnv1a64(name)));
    Tensor<T> w({oc, ic, k, k});
    const double std = std::sqrt(2.0 / (static_cast<double>(ic) * k * k));
    for (auto& v : w.data) v = static_cast<T>(std * rng.next_gaussian());
    store.add(name + ".w", std::move(w));
    store.add(name + ".b", Tensor<T>({oc}));
}

template <class T>
void add_tconv(ParamStore<T>& store, const std::string& name, int ic, int oc,
               std::uint64_t seed) {
    Rng rng(combine_keys(seed, fnv1a64(name)));
    Tensor<T> w({ic, oc, 2, 2});
    const double std = std::sqrt(2.0 / (static_cast<double>(ic) * 4));
    for (auto& v : w.data) v = static_cast<T>(std * rng.next_gaussian());
    store.add(name + ".w", std::move(w));
    store.add(name + ".b", Tensor<T>({oc}));
}

template <class T>
void add_gnn(ParamStore<T>& store, const std::string& name, int c, int k, std::uint64_t seed) {
    Rng rng(combine_keys(seed, fnv1a64(name)));
    Tensor<T> w({c, c});
    // Aggregation sums k neighbours, so fan-in is effectively k*C.
    const double std = std::sqrt(2.0 / (static_cast<double>(k) * c));
    for (auto& v : w.data) v = static_cast<T>(std * rng.next_gaussian());
    store.add(name + ".w", std::move(w));
    store.add(name + ".b", Tensor<T>({c}));
}

} // namespace

template <class T>
SegModel<T>::SegModel(const UNetConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    build_params(init_seed);
}

template <class T>
SegModel<T>::SegModel(const UNetConfig& cfg, ParamStore<T> loaded)
    : cfg_(cfg), store_(std::move(loaded)) {
    cfg_.validate();
    check_store();
}

template <class T>
void SegModel<T>::build_params(std::uint64_t seed) {
    const int L = cfg_.levels, base = cfg_.base_channels;
    for (int i = 0; i < L; ++i) {
        const int in_c = (i == 0) ? 1 : (base << (i - 1));
        const int out_c = base << i;
        add_conv(store_, "enc" + std::to_string(i + 1) + ".conv1", out_c, in_c, 3, seed);
        add_conv(store_, "enc" + std::to_string(i + 1) + ".conv2", out_c, out_c, 3, seed);
    }
    const int bc = cfg_.bottleneck_channels();
    add_conv(store_, "bottleneck.conv1", bc, base << (L - 1), 3, seed);
    add_conv(store_, "bottleneck.conv2", bc, bc, 3, seed);
    if (cfg_.gnn_enabled) {
        for (int t = 0; t < cfg_.gnn_layers; ++t)
            add_gnn(store_, "gnn" + std::to_string(t + 1), bc, cfg_.k_neighbors, seed);
    }
    for (int i = L - 1; i >= 0; --i) {
        const int up_in = base << (i + 1);
        const int out_c = base << i;
        const std::string dec = "dec" + std::to_string(i + 1);
        add_tconv(store_, dec + ".up", up_in, out_c, seed);
        add_conv(store_, dec + ".conv1", out_c, up_in, 3, seed);
        add_conv(store_, dec + ".conv2", out_c, out_c, 3, seed);
    }
    add_conv(store_, "head", 1, base, 1, seed);
}

template <class T>
void SegModel<T>::check_store() const {
    SegModel<T> reference(cfg_, std::uint64_t(0));
    for (const auto& p : reference.store_.params) {
        const Parameter<T>* q = store_.find(p->name);
        if (!q)
            throw DataError("checkpoint missing parameter " + p->name + " for this config");
        if (q->value.shape != p->value.shape)
            throw ShapeError("checkpoint parameter " + p->name + " has shape " +
                             shape_string(q->value.shape) + ", expected " +
                             shape_string(p->value.shape));
    }
    if (store_.params.size() != reference.store_.params.size())
        throw DataError("checkpoint has extra parameters for this config");
}

template <class T>
int SegModel<T>::forward_on(Tape<T>& tape, int input, const Graph* fixed_graph) const {
    const Tensor<T>& xv = tape.value(input);
    if (xv.rank() != 4 || xv.dim(1) != 1 || xv.dim(2) != cfg_.input_size ||
        xv.dim(3) != cfg_.input_size)
        throw ShapeError("SegModel: input must be [N,1," + std::to_string(cfg_.input_size) + "," +
                         std::to_string(cfg_.input_size) + "], got " + shape_string(xv.shape));

    auto& store = const_cast<ParamStore<T>&>(store_);
    auto leaf = [&](const std::string& name) {
        Parameter<T>* p = store.find(name);
        if (!p) throw StateError("SegModel: missing parameter " + name);
        return tape.leaf(*p);
    };
    auto double_conv = [&](int x, const std::string& name) {
        x = ops::conv2d(tape, x, leaf(name + ".conv1.w"), leaf(name + ".conv1.b"), Padding::Same);
        x = ops::relu(tape, x);
        x = ops::conv2d(tape, x, leaf(name + ".conv2.w"), leaf(name + ".conv2.b"), Padding::Same);
        return ops::relu(tape, x);
    };

    const int L = cfg_.levels;
    int x = input;
    std::vector<int> skips;
    for (int i = 0; i < L; ++i) {
        x = double_conv(x, "enc" + std::to_string(i + 1));
        skips.push_back(x);
        x = ops::maxpool2(tape, x);
    }
    x = double_conv(x, "bottleneck");

    if (cfg_.gnn_enabled && cfg_.gnn_layers > 0) {
        const Tensor<T>& fl = tape.value(x);
        if (fl.dim(0) != 1)
            throw ShapeError("SegModel: the GNN bottleneck supports batch size 1, got " +
                             shape_string(fl.shape));
        const int c = fl.dim(1), hl = fl.dim(2), wl = fl.dim(3);
        // [1,C,HL,WL] -> [nodes, C], node index = y*WL + x.
        int h = ops::reshape(tape, x, {c, hl * wl});
        h = ops::transpose(tape, h);
        Graph graph;
        if (!fixed_graph) graph = build_knn_graph(fl, cfg_.k_neighbors);
        const Graph* g = fixed_graph ? fixed_graph : &graph;
        for (int t = 0; t < cfg_.gnn_layers; ++t) {
            if (cfg_.rebuild_graph_per_layer && !fixed_graph && t > 0) {
                Tensor<T> ht = tape.value(h); // [nodes, C] -> [C,HL,WL] view for knn
                Tensor<T> chw({c, hl, wl});
                for (int j = 0; j < hl * wl; ++j)
                    for (int cc = 0; cc < c; ++cc)
                        chw.data[static_cast<std::size_t>(cc) * hl * wl + j] =
                            ht.data[static_cast<std::size_t>(j) * c + cc];
                graph = build_knn_graph(chw, cfg_.k_neighbors);
            }
            const std::string name = "gnn" + std::to_string(t + 1);
            int s = ops::neighbor_sum(tape, h, *g);
            s = ops::linear(tape, s, leaf(name + ".w"), leaf(name + ".b"));
            h = ops::relu(tape, s);
        }
        h = ops::transpose(tape, h);
        x = ops::reshape(tape, h, {1, c, hl, wl});
    }

    for (int i = L - 1; i >= 0; --i) {
        const std::string dec = "dec" + std::to_string(i + 1);
        x = ops::tconv2(tape, x, leaf(dec + ".up.w"), leaf(dec + ".up.b"));
        x = ops::concat_channels(tape, x, skips[static_cast<std::size_t>(i)]);
        x = double_conv(x, dec);
    }
    x = ops::conv2d(tape, x, leaf("head.w"), leaf("head.b"), Padding::Same);
    return ops::sigmoid(tape, x);
}

template <class T>
Tensor<T> SegModel<T>::forward(const Tensor<T>& image) const {
    Tape<T> tape;
    const int input = tape.constant(image);
    const int out = forward_on(tape, input);
    return tape.value(out);
}

template <class T>
Graph SegModel<T>::bottleneck_graph(const Tensor<T>& image) const {
    Tape<T> tape;
    int x = tape.constant(image);
    auto& store = const_cast<ParamStore<T>&>(store_);
    auto leaf = [&](const std::string& name) { return tape.leaf(*store.find(name)); };
    auto double_conv = [&](int v, const std::string& name) {
        v = ops::conv2d(tape, v, leaf(name + ".conv1.w"), leaf(name + ".conv1.b"), Padding::Same);
        v = ops::relu(tape, v);
        v = ops::conv2d(tape, v, leaf(name + ".conv2.w"), leaf(name + ".conv2.b"), Padding::Same);
        return ops::relu(tape, v);
    };
    for (int i = 0; i < cfg_.levels; ++i) {
        x = double_conv(x, "enc" + std::to_string(i + 1));
        x = ops::maxpool2(tape, x);
    }
    x = double_conv(x, "bottleneck");
    return build_knn_graph(tape.value(x), cfg_.k_neighbors);
}

template <class T>
Tensor<T> image_to_tensor(const Image& img) {
    Tensor<T> t({1, 1, img.height, img.width});
    for (std::size_t i = 0; i < img.data.size(); ++i)
        t.data[i] = static_cast<T>(img.data[i]) / static_cast<T>(255);
    return t;
}

template <class T>
Tensor<T> mask_to_tensor(const Mask& mask) {
    Tensor<T> t({1, 1, mask.height, mask.width});
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        t.data[i] = mask.data[i] ? T(1) : T(0);
    return t;
}

template <class T>
Mask predict_mask(const Tensor<T>& prob_map, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw ValidationError("predict_mask: threshold must be in (0,1)");
    std::vector<int> s = prob_map.shape;
    while (s.size() > 2 && s.front() == 1) s.erase(s.begin());
    if (s.size() != 2)
        throw ShapeError("predict_mask: expected [H,W]-like map, got " +
                         shape_string(prob_map.shape));
    Mask mask(s[1], s[0]);
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        mask.data[i] = (static_cast<double>(prob_map.data[i]) >= threshold) ? 1 : 0;
    return mask;
}

template class SegModel<float>;
template class SegModel<double>;
template Tensor<float> image_to_tensor<float>(const Image&);
template Tensor<double> image_to_tensor<double>(const Image&);
template Tensor<float> mask_to_tensor<float>(const Mask&);
template Tensor<double> mask_to_tensor<double>(const Mask&);
template Mask predict_mask<float>(const Tensor<float>&, double);
template Mask predict_mask<double>(const Tensor<double>&, double);

} // namespace lsg
