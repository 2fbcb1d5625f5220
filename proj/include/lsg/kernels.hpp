#pragma once

#include <cstdint>
#include <vector>

#include "lsg/tensor.hpp"

// Low-level compute kernels behind the autodiff ops. Each kernel has a serial
// reference implementation and an OpenMP variant; the dispatching entry point
// picks one from lsg::exec_mode(). The parallel variants assign every output
// element to exactly one thread and keep inner accumulation order fixed, so
// both variants produce bit-identical results.
namespace lsg::kernels {

struct Conv2dDims {
    int n = 1, c_in = 0, h = 0, w = 0;
    int c_out = 0, kh = 0, kw = 0;
    int pad = 0; // symmetric zero padding; stride is always 1
    int out_h() const { return h + 2 * pad - kh + 1; }
    int out_w() const { return w + 2 * pad - kw + 1; }
};

template <class T>
void conv2d_forward(T* out, const T* in, const T* wgt, const T* bias, const Conv2dDims& d);
template <class T>
void conv2d_backward_input(T* din, const T* dout, const T* wgt, const Conv2dDims& d);
template <class T>
void conv2d_backward_weight(T* dwgt, T* dbias, const T* dout, const T* in, const Conv2dDims& d);

struct Tconv2Dims {
    int n = 1, c_in = 0, h = 0, w = 0, c_out = 0; // kernel 2, stride 2
    int out_h() const { return 2 * h; }
    int out_w() const { return 2 * w; }
};

template <class T>
void tconv2_forward(T* out, const T* in, const T* wgt, const T* bias, const Tconv2Dims& d);
template <class T>
void tconv2_backward_input(T* din, const T* dout, const T* wgt, const Tconv2Dims& d);
template <class T>
void tconv2_backward_weight(T* dwgt, T* dbias, const T* dout, const T* in, const Tconv2Dims& d);

// 2x2 max pooling, stride 2; argmax records the flat input offset per output.
template <class T>
void maxpool2_forward(T* out, std::int32_t* argmax, const T* in, int planes, int h, int w);
template <class T>
void maxpool2_backward(T* din, const T* dout, const std::int32_t* argmax, int planes, int h,
                       int w);

template <class T>
void relu_forward(T* out, const T* in, std::size_t n);
template <class T>
void relu_backward(T* din, const T* dout, const T* in, std::size_t n);

// Sigmoid with output clamped into [eps, 1-eps] so downstream logs are finite.
template <class T>
void sigmoid_forward(T* out, const T* in, std::size_t n, T eps);
template <class T>
void sigmoid_backward(T* din, const T* dout, const T* out, std::size_t n);

// out = x * W^T + b with x:[rows,K], W:[M,K], b:[M].
template <class T>
void linear_forward(T* out, const T* x, const T* wgt, const T* bias, int rows, int k, int m);
template <class T>
void linear_backward_input(T* dx, const T* dout, const T* wgt, int rows, int k, int m);
template <class T>
void linear_backward_weight(T* dwgt, T* dbias, const T* dout, const T* x, int rows, int k, int m);

// Mean binary cross-entropy with probability clamping at eps. The reduction
// uses a fixed chunk layout so it is independent of the thread count.
template <class T>
T bce_forward(const T* pred, const T* target, std::size_t n, T eps);
template <class T>
void bce_backward(T* dpred, const T* pred, const T* target, std::size_t n, T eps, T upstream);

// Deterministic ordered sum, same chunking as bce_forward.
template <class T>
T chunked_sum(const T* v, std::size_t n);

// k-nearest neighbours in feature space. features:[nodes, C] node-major.
// For each node: the k smallest (squared distance, index) pairs, self
// excluded, in ascending (distance, index) order.
void knn_adjacency(std::int32_t* adj, const float* features, int nodes, int channels, int k);
void knn_adjacency(std::int32_t* adj, const double* features, int nodes, int channels, int k);

// s[i] = sum of h[j] over the adjacency row of i. h:[nodes,C].
template <class T>
void neighbor_sum_forward(T* s, const T* h, const std::int32_t* adj, int nodes, int k, int c);
// dh[j] = sum of ds[i] over in-edges; in_off/in_src is the reverse adjacency
// in CSR form with sources in ascending order.
template <class T>
void neighbor_sum_backward(T* dh, const T* ds, const std::int32_t* in_off,
                           const std::int32_t* in_src, int nodes, int c);

} // namespace lsg::kernels
