#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lsg/graph.hpp"
#include "lsg/tensor.hpp"

namespace lsg {

// Trainable tensor living outside the tape; tapes bind leaves to it and
// accumulate into grad on backward.
template <class T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    bool trainable = true;

    // Adam state, managed by the optimizer.
    Tensor<T> adam_m, adam_v;

    Parameter() = default;
    Parameter(std::string n, Tensor<T> v)
        : name(std::move(n)), value(std::move(v)), grad(value.shape) {}
};

// Named parameter collection; names are unique within a store.
template <class T>
struct ParamStore {
    std::vector<std::unique_ptr<Parameter<T>>> params;

    Parameter<T>& add(const std::string& name, Tensor<T> value);
    Parameter<T>* find(const std::string& name);
    const Parameter<T>* find(const std::string& name) const;
    std::size_t total_elements() const;
    void zero_grad();

    template <class U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        for (const auto& p : params) {
            auto& q = out.add(p->name, p->value.template cast<U>());
            q.trainable = p->trainable;
        }
        return out;
    }
};

// Reverse-mode tape over whole-tensor operations. A forward pass records
// nodes; backward() walks them once in reverse. One backward per forward.
template <class T>
class Tape {
public:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad; // empty until touched by backward
        bool requires_grad = false;
        Parameter<T>* param = nullptr;
        std::function<void(Tape&, int self)> backprop; // empty for leaves
    };

    int constant(Tensor<T> value);
    int leaf(Parameter<T>& p);
    int make_node(Tensor<T> value, bool requires_grad,
                  std::function<void(Tape&, int)> backprop);

    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    const Tensor<T>& value(int id) const { return node(id).value; }
    Tensor<T>& grad(int id);
    bool has_grad(int id) const { return !node(id).grad.data.empty(); }
    void accumulate_grad(int id, const Tensor<T>& g);

    // Seeds d(loss)/d(loss) = 1 and back-propagates; accumulates into bound
    // parameters. Throws StateError on a second call without a new forward.
    void backward(int loss_id);

    void reset();
    std::size_t size() const { return nodes_.size(); }

private:
    std::vector<Node> nodes_;
    bool consumed_ = false;
};

enum class Padding { Same, Valid };

// Tensor ops. Inputs/outputs are node ids on the tape.
namespace ops {

template <class T>
int conv2d(Tape<T>& tape, int x, int w, int b, Padding pad);
template <class T>
int tconv2(Tape<T>& tape, int x, int w, int b);
template <class T>
int maxpool2(Tape<T>& tape, int x);
template <class T>
int relu(Tape<T>& tape, int x);
template <class T>
int sigmoid(Tape<T>& tape, int x);
template <class T>
int concat_channels(Tape<T>& tape, int a, int b);
template <class T>
int reshape(Tape<T>& tape, int x, std::vector<int> shape);
// 2-D matrix transpose.
template <class T>
int transpose(Tape<T>& tape, int x);
template <class T>
int bce_loss(Tape<T>& tape, int pred, const Tensor<T>& target);
// s_i = sum of h_j over the fixed adjacency of node i; the graph is a
// constant of the forward pass (neighbour selection is not differentiated).
template <class T>
int neighbor_sum(Tape<T>& tape, int h, const Graph& graph);
template <class T>
int linear(Tape<T>& tape, int x, int w, int b);

} // namespace ops

// Standard Adam with bias correction.
template <class T>
struct Adam {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step_count = 0;

    void step(ParamStore<T>& store);
};

inline constexpr double kProbEps = 1e-7; // sigmoid/BCE clamping

} // namespace lsg
