#include "lsg/autodiff.hpp"

#include <cmath>
#include <cstring>

#include "lsg/kernels.hpp"
#include "lsg/parallel.hpp"

namespace lsg {

template <class T>
Parameter<T>& ParamStore<T>::add(const std::string& name, Tensor<T> value) {
    if (find(name)) throw ValidationError("ParamStore: duplicate parameter name " + name);
    params.push_back(std::make_unique<Parameter<T>>(name, std::move(value)));
    return *params.back();
}

template <class T>
Parameter<T>* ParamStore<T>::find(const std::string& name) {
    for (auto& p : params)
        if (p->name == name) return p.get();
    return nullptr;
}

template <class T>
const Parameter<T>* ParamStore<T>::find(const std::string& name) const {
    for (const auto& p : params)
        if (p->name == name) return p.get();
    return nullptr;
}

template <class T>
std::size_t ParamStore<T>::total_elements() const {
    std::size_t n = 0;
    for (const auto& p : params) n += p->value.numel();
    return n;
}

template <class T>
void ParamStore<T>::zero_grad() {
    for (auto& p : params) p->grad.fill(T(0));
}

template <class T>
int Tape<T>::constant(Tensor<T> value) {
    return make_node(std::move(value), false, {});
}

template <class T>
int Tape<T>::leaf(Parameter<T>& p) {
    Node node;
    node.value = p.value;
    node.requires_grad = p.trainable;
    node.param = &p;
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
}

template <class T>
int Tape<T>::make_node(Tensor<T> value, bool requires_grad,
                       std::function<void(Tape&, int)> backprop) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    node.backprop = std::move(backprop);
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
}

template <class T>
Tensor<T>& Tape<T>::grad(int id) {
    Node& n = node(id);
    if (n.grad.data.empty()) n.grad = Tensor<T>(n.value.shape);
    return n.grad;
}

template <class T>
void Tape<T>::accumulate_grad(int id, const Tensor<T>& g) {
    Tensor<T>& dst = grad(id);
    require_same_shape(dst, g, "accumulate_grad");
    T* d = dst.ptr();
    const T* s = g.ptr();
    for (std::size_t i = 0; i < dst.numel(); ++i) d[i] += s[i];
}

template <class T>
void Tape<T>::backward(int loss_id) {
    if (consumed_) throw StateError("Tape::backward called twice without a new forward pass");
    consumed_ = true;
    Node& loss = node(loss_id);
    if (loss.value.numel() != 1)
        throw ShapeError("Tape::backward: loss must be scalar, got " +
                         shape_string(loss.value.shape));
    if (!loss.requires_grad) return;
    grad(loss_id).data[0] = T(1);
    for (int id = loss_id; id >= 0; --id) {
        Node& n = node(id);
        if (!n.requires_grad || n.grad.data.empty()) continue;
        if (n.backprop) n.backprop(*this, id);
        if (n.param && n.param->trainable) {
            T* pg = n.param->grad.ptr();
            const T* g = node(id).grad.ptr();
            for (std::size_t i = 0; i < node(id).grad.numel(); ++i) pg[i] += g[i];
        }
    }
}

template <class T>
void Tape<T>::reset() {
    nodes_.clear();
    consumed_ = false;
}

template <class T>
void Adam<T>::step(ParamStore<T>& store) {
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, step_count);
    const double bc2 = 1.0 - std::pow(beta2, step_count);
    for (auto& p : store.params) {
        if (!p->trainable) continue;
        if (p->adam_m.data.empty()) {
            p->adam_m = Tensor<T>(p->value.shape);
            p->adam_v = Tensor<T>(p->value.shape);
        }
        T* v = p->value.ptr();
        const T* g = p->grad.ptr();
        T* m = p->adam_m.ptr();
        T* s = p->adam_v.ptr();
        const std::size_t n = p->value.numel();
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = static_cast<T>(beta1 * m[i] + (1.0 - beta1) * g[i]);
            s[i] = static_cast<T>(beta2 * s[i] + (1.0 - beta2) * g[i] * g[i]);
            const double mh = m[i] / bc1;
            const double sh = s[i] / bc2;
            v[i] -= static_cast<T>(lr * mh / (std::sqrt(sh) + eps));
        }
    }
}

namespace ops {

namespace {

template <class T>
kernels::Conv2dDims conv_dims(const Tensor<T>& x, const Tensor<T>& w, Padding pad) {
    if (x.rank() != 4)
        throw ShapeError("conv2d: input must be NCHW, got " + shape_string(x.shape));
    if (w.rank() != 4)
        throw ShapeError("conv2d: weight must be [OC,IC,KH,KW], got " + shape_string(w.shape));
    kernels::Conv2dDims d;
    d.n = x.dim(0);
    d.c_in = x.dim(1);
    d.h = x.dim(2);
    d.w = x.dim(3);
    d.c_out = w.dim(0);
    d.kh = w.dim(2);
    d.kw = w.dim(3);
    if (w.dim(1) != d.c_in)
        throw ShapeError("conv2d: channel mismatch, input " + shape_string(x.shape) +
                         " vs weight " + shape_string(w.shape));
    if (pad == Padding::Same && (d.kh % 2 == 0 || d.kh != d.kw))
        throw ShapeError("conv2d: same padding requires square odd kernels");
    d.pad = (pad == Padding::Same) ? (d.kh - 1) / 2 : 0;
    if (d.out_h() < 1 || d.out_w() < 1)
        throw ShapeError("conv2d: kernel " + shape_string(w.shape) + " does not fit input " +
                         shape_string(x.shape));
    return d;
}

template <class T>
bool any_requires_grad(Tape<T>& tape, std::initializer_list<int> ids) {
    for (int id : ids)
        if (tape.node(id).requires_grad) return true;
    return false;
}

} // namespace

template <class T>
int conv2d(Tape<T>& tape, int x, int w, int b, Padding pad) {
    const Tensor<T>& xv = tape.value(x);
    const Tensor<T>& wv = tape.value(w);
    const Tensor<T>& bv = tape.value(b);
    const kernels::Conv2dDims d = conv_dims(xv, wv, pad);
    if (bv.rank() != 1 || bv.dim(0) != d.c_out)
        throw ShapeError("conv2d: bias must be [OC], got " + shape_string(bv.shape));

    Tensor<T> out({d.n, d.c_out, d.out_h(), d.out_w()});
    kernels::conv2d_forward(out.ptr(), xv.ptr(), wv.ptr(), bv.ptr(), d);

    return tape.make_node(std::move(out), any_requires_grad(tape, {x, w, b}),
                          [x, w, b, d](Tape<T>& t, int self) {
                              const Tensor<T>& g = t.grad(self);
                              if (t.node(x).requires_grad) {
                                  Tensor<T> dx(t.value(x).shape);
                                  kernels::conv2d_backward_input(dx.ptr(), g.ptr(),
                                                                 t.value(w).ptr(), d);
                                  t.accumulate_grad(x, dx);
                              }
                              if (t.node(w).requires_grad || t.node(b).requires_grad) {
                                  Tensor<T> dw(t.value(w).shape);
                                  Tensor<T> db(t.value(b).shape);
                                  kernels::conv2d_backward_weight(dw.ptr(), db.ptr(), g.ptr(),
                                                                  t.value(x).ptr(), d);
                                  if (t.node(w).requires_grad) t.accumulate_grad(w, dw);
                                  if (t.node(b).requires_grad) t.accumulate_grad(b, db);
                              }
                          });
}

template <class T>
int tconv2(Tape<T>& tape, int x, int w, int b) {
    const Tensor<T>& xv = tape.value(x);
    const Tensor<T>& wv = tape.value(w);
    const Tensor<T>& bv = tape.value(b);
    if (xv.rank() != 4)
        throw ShapeError("tconv2: input must be NCHW, got " + shape_string(xv.shape));
    if (wv.rank() != 4 || wv.dim(2) != 2 || wv.dim(3) != 2)
        throw ShapeError("tconv2: weight must be [IC,OC,2,2], got " + shape_string(wv.shape));
    if (wv.dim(0) != xv.dim(1))
        throw ShapeError("tconv2: channel mismatch, input " + shape_string(xv.shape) +
                         " vs weight " + shape_string(wv.shape));
    kernels::Tconv2Dims d;
    d.n = xv.dim(0);
    d.c_in = xv.dim(1);
    d.h = xv.dim(2);
    d.w = xv.dim(3);
    d.c_out = wv.dim(1);
    if (bv.rank() != 1 || bv.dim(0) != d.c_out)
        throw ShapeError("tconv2: bias must be [OC], got " + shape_string(bv.shape));

    Tensor<T> out({d.n, d.c_out, d.out_h(), d.out_w()});
    kernels::tconv2_forward(out.ptr(), xv.ptr(), wv.ptr(), bv.ptr(), d);

    return tape.make_node(std::move(out), any_requires_grad(tape, {x, w, b}),
                          [x, w, b, d](Tape<T>& t, int self) {
                              const Tensor<T>& g = t.grad(self);
                              if (t.node(x).requires_grad) {
                                  Tensor<T> dx(t.value(x).shape);
                                  kernels::tconv2_backward_input(dx.ptr(), g.ptr(),
                                                                 t.value(w).ptr(), d);
                                  t.accumulate_grad(x, dx);
                              }
                              if (t.node(w).requires_grad || t.node(b).requires_grad) {
                                  Tensor<T> dw(t.value(w).shape);
                                  Tensor<T> db(t.value(b).shape);
                                  kernels::tconv2_backward_weight(dw.ptr(), db.ptr(), g.ptr(),
                                                                  t.value(x).ptr(), d);
                                  if (t.node(w).requires_grad) t.accumulate_grad(w, dw);
                                  if (t.node(b).requires_grad) t.accumulate_grad(b, db);
                              }
                          });
}

template <class T>
int maxpool2(Tape<T>& tape, int x) {
    const Tensor<T>& xv = tape.value(x);
    if (xv.rank() != 4)
        throw ShapeError("maxpool2: input must be NCHW, got " + shape_string(xv.shape));
    const int h = xv.dim(2), w = xv.dim(3);
    if (h % 2 != 0 || w % 2 != 0)
        throw ShapeError("maxpool2: spatial dims must be even, got " + shape_string(xv.shape));
    const int planes = xv.dim(0) * xv.dim(1);

    Tensor<T> out({xv.dim(0), xv.dim(1), h / 2, w / 2});
    auto argmax = std::make_shared<std::vector<std::int32_t>>(out.numel());
    kernels::maxpool2_forward(out.ptr(), argmax->data(), xv.ptr(), planes, h, w);

    return tape.make_node(std::move(out), tape.node(x).requires_grad,
                          [x, argmax, planes, h, w](Tape<T>& t, int self) {
                              Tensor<T> dx(t.value(x).shape);
                              kernels::maxpool2_backward(dx.ptr(), t.grad(self).ptr(),
                                                         argmax->data(), planes, h, w);
                              t.accumulate_grad(x, dx);
                          });
}

template <class T>
int relu(Tape<T>& tape, int x) {
    const Tensor<T>& xv = tape.value(x);
    Tensor<T> out(xv.shape);
    kernels::relu_forward(out.ptr(), xv.ptr(), xv.numel());
    return tape.make_node(std::move(out), tape.node(x).requires_grad,
                          [x](Tape<T>& t, int self) {
                              Tensor<T> dx(t.value(x).shape);
                              kernels::relu_backward(dx.ptr(), t.grad(self).ptr(),
                                                     t.value(x).ptr(), dx.numel());
                              t.accumulate_grad(x, dx);
                          });
}

template <class T>
int sigmoid(Tape<T>& tape, int x) {
    const Tensor<T>& xv = tape.value(x);
    Tensor<T> out(xv.shape);
    kernels::sigmoid_forward(out.ptr(), xv.ptr(), xv.numel(), static_cast<T>(kProbEps));
    return tape.make_node(std::move(out), tape.node(x).requires_grad,
                          [x](Tape<T>& t, int self) {
                              Tensor<T> dx(t.value(x).shape);
                              kernels::sigmoid_backward(dx.ptr(), t.grad(self).ptr(),
                                                        t.value(self).ptr(), dx.numel());
                              t.accumulate_grad(x, dx);
                          });
}

template <class T>
int concat_channels(Tape<T>& tape, int a, int b) {
    const Tensor<T>& av = tape.value(a);
    const Tensor<T>& bv = tape.value(b);
    if (av.rank() != 4 || bv.rank() != 4 || av.dim(0) != bv.dim(0) || av.dim(2) != bv.dim(2) ||
        av.dim(3) != bv.dim(3))
        throw ShapeError("concat_channels: incompatible shapes " + shape_string(av.shape) +
                         " vs " + shape_string(bv.shape));
    const int n = av.dim(0), ca = av.dim(1), cb = bv.dim(1);
    const std::size_t plane = static_cast<std::size_t>(av.dim(2)) * av.dim(3);

    Tensor<T> out({n, ca + cb, av.dim(2), av.dim(3)});
    for (int i = 0; i < n; ++i) {
        std::memcpy(out.ptr() + (static_cast<std::size_t>(i) * (ca + cb)) * plane,
                    av.ptr() + static_cast<std::size_t>(i) * ca * plane,
                    sizeof(T) * ca * plane);
        std::memcpy(out.ptr() + (static_cast<std::size_t>(i) * (ca + cb) + ca) * plane,
                    bv.ptr() + static_cast<std::size_t>(i) * cb * plane,
                    sizeof(T) * cb * plane);
    }
    return tape.make_node(std::move(out), any_requires_grad(tape, {a, b}),
                          [a, b, n, ca, cb, plane](Tape<T>& t, int self) {
                              const Tensor<T>& g = t.grad(self);
                              if (t.node(a).requires_grad) {
                                  Tensor<T> da(t.value(a).shape);
                                  for (int i = 0; i < n; ++i)
                                      std::memcpy(
                                          da.ptr() + static_cast<std::size_t>(i) * ca * plane,
                                          g.ptr() + (static_cast<std::size_t>(i) * (ca + cb)) * plane,
                                          sizeof(T) * ca * plane);
                                  t.accumulate_grad(a, da);
                              }
                              if (t.node(b).requires_grad) {
                                  Tensor<T> db(t.value(b).shape);
                                  for (int i = 0; i < n; ++i)
                                      std::memcpy(db.ptr() + static_cast<std::size_t>(i) * cb * plane,
                                                  g.ptr() +
                                                      (static_cast<std::size_t>(i) * (ca + cb) + ca) *
                                                          plane,
                                                  sizeof(T) * cb * plane);
                                  t.accumulate_grad(b, db);
                              }
                          });
}

template <class T>
int reshape(Tape<T>& tape, int x, std::vector<int> shape) {
    const Tensor<T>& xv = tape.value(x);
    if (Tensor<T>::numel_of(shape) != xv.numel())
        throw ShapeError("reshape: cannot view " + shape_string(xv.shape) + " as " +
                         shape_string(shape));
    Tensor<T> out(shape, xv.data);
    return tape.make_node(std::move(out), tape.node(x).requires_grad,
                          [x](Tape<T>& t, int self) {
                              Tensor<T> dx(t.value(x).shape, t.grad(self).data);
                              t.accumulate_grad(x, dx);
                          });
}

template <class T>
int transpose(Tape<T>& tape, int x) {
    const Tensor<T>& xv = tape.value(x);
    if (xv.rank() != 2)
        throw ShapeError("transpose: expected 2-D tensor, got " + shape_string(xv.shape));
    const int r = xv.dim(0), c = xv.dim(1);
    Tensor<T> out({c, r});
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            out.data[static_cast<std::size_t>(j) * r + i] =
                xv.data[static_cast<std::size_t>(i) * c + j];
    return tape.make_node(std::move(out), tape.node(x).requires_grad,
                          [x, r, c](Tape<T>& t, int self) {
                              const Tensor<T>& g = t.grad(self); // [c,r]
                              Tensor<T> dx({r, c});
                              for (int j = 0; j < c; ++j)
                                  for (int i = 0; i < r; ++i)
                                      dx.data[static_cast<std::size_t>(i) * c + j] =
                                          g.data[static_cast<std::size_t>(j) * r + i];
                              t.accumulate_grad(x, dx);
                          });
}

template <class T>
int bce_loss(Tape<T>& tape, int pred, const Tensor<T>& target) {
    const Tensor<T>& pv = tape.value(pred);
    require_same_shape(pv, target, "bce_loss");
    if (pv.numel() == 0) throw ShapeError("bce_loss: empty prediction");
    const T eps = static_cast<T>(kProbEps);
    Tensor<T> out({1});
    out.data[0] = kernels::bce_forward(pv.ptr(), target.ptr(), pv.numel(), eps);
    auto tgt = std::make_shared<Tensor<T>>(target);
    return tape.make_node(std::move(out), tape.node(pred).requires_grad,
                          [pred, tgt, eps](Tape<T>& t, int self) {
                              const Tensor<T>& pv2 = t.value(pred);
                              Tensor<T> dp(pv2.shape);
                              kernels::bce_backward(dp.ptr(), pv2.ptr(), tgt->ptr(), pv2.numel(),
                                                    eps, t.grad(self).data[0]);
                              t.accumulate_grad(pred, dp);
                          });
}

template <class T>
int neighbor_sum(Tape<T>& tape, int h, const Graph& graph) {
    const Tensor<T>& hv = tape.value(h);
    if (hv.rank() != 2 || hv.dim(0) != graph.node_count)
        throw ShapeError("neighbor_sum: features must be [nodes,C] with nodes = " +
                         std::to_string(graph.node_count) + ", got " + shape_string(hv.shape));
    const int c = hv.dim(1);
    Tensor<T> out(hv.shape);
    kernels::neighbor_sum_forward(out.ptr(), hv.ptr(), graph.adjacency.data(), graph.node_count,
                                  graph.k, c);
    auto g = std::make_shared<Graph>(graph);
    return tape.make_node(std::move(out), tape.node(h).requires_grad,
                          [h, g, c](Tape<T>& t, int self) {
                              Tensor<T> dh(t.value(h).shape);
                              kernels::neighbor_sum_backward(dh.ptr(), t.grad(self).ptr(),
                                                             g->in_offsets.data(),
                                                             g->in_sources.data(), g->node_count,
                                                             c);
                              t.accumulate_grad(h, dh);
                          });
}

template <class T>
int linear(Tape<T>& tape, int x, int w, int b) {
    const Tensor<T>& xv = tape.value(x);
    const Tensor<T>& wv = tape.value(w);
    const Tensor<T>& bv = tape.value(b);
    if (xv.rank() != 2 || wv.rank() != 2 || xv.dim(1) != wv.dim(1))
        throw ShapeError("linear: x " + shape_string(xv.shape) + " vs W " +
                         shape_string(wv.shape));
    const int rows = xv.dim(0), k = xv.dim(1), m = wv.dim(0);
    if (bv.rank() != 1 || bv.dim(0) != m)
        throw ShapeError("linear: bias must be [M], got " + shape_string(bv.shape));
    Tensor<T> out({rows, m});
    kernels::linear_forward(out.ptr(), xv.ptr(), wv.ptr(), bv.ptr(), rows, k, m);
    return tape.make_node(
        std::move(out), any_requires_grad(tape, {x, w, b}),
        [x, w, b, rows, k, m](Tape<T>& t, int self) {
            const Tensor<T>& g = t.grad(self);
            if (t.node(x).requires_grad) {
                Tensor<T> dx(t.value(x).shape);
                kernels::linear_backward_input(dx.ptr(), g.ptr(), t.value(w).ptr(), rows, k, m);
                t.accumulate_grad(x, dx);
            }
            if (t.node(w).requires_grad || t.node(b).requires_grad) {
                Tensor<T> dw(t.value(w).shape);
                Tensor<T> db(t.value(b).shape);
                kernels::linear_backward_weight(dw.ptr(), db.ptr(), g.ptr(), t.value(x).ptr(),
                                                rows, k, m);
                if (t.node(w).requires_grad) t.accumulate_grad(w, dw);
                if (t.node(b).requires_grad) t.accumulate_grad(b, db);
            }
        });
}

#define LSG_INSTANTIATE_OPS(T)                                                       \
    template int conv2d<T>(Tape<T>&, int, int, int, Padding);                       \
    template int tconv2<T>(Tape<T>&, int, int, int);                                \
    template int maxpool2<T>(Tape<T>&, int);                                        \
    template int relu<T>(Tape<T>&, int);                                            \
    template int sigmoid<T>(Tape<T>&, int);                                         \
    template int concat_channels<T>(Tape<T>&, int, int);                            \
    template int reshape<T>(Tape<T>&, int, std::vector<int>);                       \
    template int transpose<T>(Tape<T>&, int);                                       \
    template int bce_loss<T>(Tape<T>&, int, const Tensor<T>&);                      \
    template int neighbor_sum<T>(Tape<T>&, int, const Graph&);                      \
    template int linear<T>(Tape<T>&, int, int, int);

LSG_INSTANTIATE_OPS(float)
LSG_INSTANTIATE_OPS(double)
#undef LSG_INSTANTIATE_OPS

} // namespace ops

template struct Parameter<float>;
template struct Parameter<double>;
template struct ParamStore<float>;
template struct ParamStore<double>;
template class Tape<float>;
template class Tape<double>;
template struct Adam<float>;
template struct Adam<double>;

} // namespace lsg
