#include "lsg/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "lsg/parallel.hpp"

namespace lsg::kernels {

namespace {

// Output row segment for which iw = ow + kw - pad stays inside [0, w).
inline void ow_bounds(int out_w, int w, int kw, int pad, int& lo, int& hi) {
    lo = std::max(0, pad - kw);
    hi = std::min(out_w, w + pad - kw);
}

template <class T>
void conv2d_forward_plane(T* out_plane, const T* in_n, const T* wgt, const T* bias, int oc,
                          const Conv2dDims& d) {
    const int oh_n = d.out_h(), ow_n = d.out_w();
    for (int i = 0; i < oh_n * ow_n; ++i) out_plane[i] = bias ? bias[oc] : T(0);
    for (int ic = 0; ic < d.c_in; ++ic) {
        const T* in_plane = in_n + static_cast<std::size_t>(ic) * d.h * d.w;
        for (int kh = 0; kh < d.kh; ++kh) {
            for (int kw = 0; kw < d.kw; ++kw) {
                const T wv = wgt[((static_cast<std::size_t>(oc) * d.c_in + ic) * d.kh + kh) * d.kw + kw];
                int lo, hi;
                ow_bounds(ow_n, d.w, kw, d.pad, lo, hi);
                for (int oh = 0; oh < oh_n; ++oh) {
                    const int ih = oh + kh - d.pad;
                    if (ih < 0 || ih >= d.h) continue;
                    const T* in_row = in_plane + static_cast<std::size_t>(ih) * d.w + (kw - d.pad);
                    T* out_row = out_plane + static_cast<std::size_t>(oh) * ow_n;
                    for (int ow = lo; ow < hi; ++ow) out_row[ow] += wv * in_row[ow];
                }
            }
        }
    }
}

} // namespace

template <class T>
void conv2d_forward(T* out, const T* in, const T* wgt, const T* bias, const Conv2dDims& d) {
    const std::size_t in_stride = static_cast<std::size_t>(d.c_in) * d.h * d.w;
    const std::size_t out_plane_sz = static_cast<std::size_t>(d.out_h()) * d.out_w();
    parallel_for(static_cast<long long>(d.n) * d.c_out, [&](long long idx) {
        const int n = static_cast<int>(idx / d.c_out);
        const int oc = static_cast<int>(idx % d.c_out);
        conv2d_forward_plane(out + (static_cast<std::size_t>(n) * d.c_out + oc) * out_plane_sz,
                             in + n * in_stride, wgt, bias, oc, d);
    });
}

template <class T>
void conv2d_backward_input(T* din, const T* dout, const T* wgt, const Conv2dDims& d) {
    const int oh_n = d.out_h(), ow_n = d.out_w();
    const std::size_t in_plane_sz = static_cast<std::size_t>(d.h) * d.w;
    const std::size_t out_plane_sz = static_cast<std::size_t>(oh_n) * ow_n;
    parallel_for(static_cast<long long>(d.n) * d.c_in, [&](long long idx) {
        const int n = static_cast<int>(idx / d.c_in);
        const int ic = static_cast<int>(idx % d.c_in);
        T* din_plane = din + (static_cast<std::size_t>(n) * d.c_in + ic) * in_plane_sz;
        for (std::size_t i = 0; i < in_plane_sz; ++i) din_plane[i] = T(0);
        for (int oc = 0; oc < d.c_out; ++oc) {
            const T* dout_plane =
                dout + (static_cast<std::size_t>(n) * d.c_out + oc) * out_plane_sz;
            for (int kh = 0; kh < d.kh; ++kh) {
                for (int kw = 0; kw < d.kw; ++kw) {
                    const T wv =
                        wgt[((static_cast<std::size_t>(oc) * d.c_in + ic) * d.kh + kh) * d.kw + kw];
                    int lo, hi;
                    ow_bounds(ow_n, d.w, kw, d.pad, lo, hi);
                    for (int oh = 0; oh < oh_n; ++oh) {
                        const int ih = oh + kh - d.pad;
                        if (ih < 0 || ih >= d.h) continue;
                        T* din_row = din_plane + static_cast<std::size_t>(ih) * d.w + (kw - d.pad);
                        const T* dout_row = dout_plane + static_cast<std::size_t>(oh) * ow_n;
                        for (int ow = lo; ow < hi; ++ow) din_row[ow] += wv * dout_row[ow];
                    }
                }
            }
        }
    });
}

template <class T>
void conv2d_backward_weight(T* dwgt, T* dbias, const T* dout, const T* in, const Conv2dDims& d) {
    const int oh_n = d.out_h(), ow_n = d.out_w();
    const std::size_t in_plane_sz = static_cast<std::size_t>(d.h) * d.w;
    const std::size_t out_plane_sz = static_cast<std::size_t>(oh_n) * ow_n;
    parallel_for(static_cast<long long>(d.c_out) * d.c_in, [&](long long idx) {
        const int oc = static_cast<int>(idx / d.c_in);
        const int ic = static_cast<int>(idx % d.c_in);
        // Row-buffer accumulation: elementwise products vectorize, and the
        // final fold is a fixed-order serial sum.
        std::vector<T> buf(static_cast<std::size_t>(ow_n));
        for (int kh = 0; kh < d.kh; ++kh) {
            for (int kw = 0; kw < d.kw; ++kw) {
                int lo, hi;
                ow_bounds(ow_n, d.w, kw, d.pad, lo, hi);
                std::fill(buf.begin(), buf.end(), T(0));
                for (int n = 0; n < d.n; ++n) {
                    const T* dout_plane =
                        dout + (static_cast<std::size_t>(n) * d.c_out + oc) * out_plane_sz;
                    const T* in_plane =
                        in + (static_cast<std::size_t>(n) * d.c_in + ic) * in_plane_sz;
                    for (int oh = 0; oh < oh_n; ++oh) {
                        const int ih = oh + kh - d.pad;
                        if (ih < 0 || ih >= d.h) continue;
                        const T* in_row = in_plane + static_cast<std::size_t>(ih) * d.w + (kw - d.pad);
                        const T* dout_row = dout_plane + static_cast<std::size_t>(oh) * ow_n;
                        for (int ow = lo; ow < hi; ++ow) buf[ow] += dout_row[ow] * in_row[ow];
                    }
                }
                T acc = T(0);
                for (int ow = 0; ow < ow_n; ++ow) acc += buf[ow];
                dwgt[((static_cast<std::size_t>(oc) * d.c_in + ic) * d.kh + kh) * d.kw + kw] = acc;
            }
        }
    });
    if (dbias) {
        parallel_for(d.c_out, [&](long long oc) {
            T acc = T(0);
            for (int n = 0; n < d.n; ++n) {
                const T* dout_plane =
                    dout + (static_cast<std::size_t>(n) * d.c_out + oc) * out_plane_sz;
                for (std::size_t i = 0; i < out_plane_sz; ++i) acc += dout_plane[i];
            }
            dbias[oc] = acc;
        });
    }
}

template <class T>
void tconv2_forward(T* out, const T* in, const T* wgt, const T* bias, const Tconv2Dims& d) {
    const int oh_n = d.out_h(), ow_n = d.out_w();
    const std::size_t in_plane_sz = static_cast<std::size_t>(d.h) * d.w;
    const std::size_t out_plane_sz = static_cast<std::size_t>(oh_n) * ow_n;
    parallel_for(static_cast<long long>(d.n) * d.c_out, [&](long long idx) {
        const int n = static_cast<int>(idx / d.c_out);
        const int oc = static_cast<int>(idx % d.c_out);
        T* out_plane = out + (static_cast<std::size_t>(n) * d.c_out + oc) * out_plane_sz;
        const T* in_n = in + static_cast<std::size_t>(n) * d.c_in * in_plane_sz;
        for (int oh = 0; oh < oh_n; ++oh) {
            const int ih = oh >> 1, dh = oh & 1;
            for (int ow = 0; ow < ow_n; ++ow) {
                const int iw = ow >> 1, dw = ow & 1;
                T acc = bias ? bias[oc] : T(0);
                for (int ic = 0; ic < d.c_in; ++ic) {
                    acc += in_n[static_cast<std::size_t>(ic) * in_plane_sz + ih * d.w + iw] *
                           wgt[((static_cast<std::size_t>(ic) * d.c_out + oc) * 2 + dh) * 2 + dw];
                }
                out_plane[static_cast<std::size_t>(oh) * ow_n + ow] = acc;
            }
        }
    });
}

template <class T>
void tconv2_backward_input(T* din, const T* dout, const T* wgt, const Tconv2Dims& d) {
    const int oh_n = d.out_h(), ow_n = d.out_w();
    const std::size_t in_plane_sz = static_cast<std::size_t>(d.h) * d.w;
    const std::size_t out_plane_sz = static_cast<std::size_t>(oh_n) * ow_n;
    parallel_for(static_cast<long long>(d.n) * d.c_in, [&](long long idx) {
        const int n = static_cast<int>(idx / d.c_in);
        const int ic = static_cast<int>(idx % d.c_in);
        T* din_plane = din + (static_cast<std::size_t>(n) * d.c_in + ic) * in_plane_sz;
        const T* dout_n = dout + static_cast<std::size_t>(n) * d.c_out * out_plane_sz;
        for (int ih = 0; ih < d.h; ++ih) {
            for (int iw = 0; iw < d.w; ++iw) {
                T acc = T(0);
                for (int oc = 0; oc < d.c_out; ++oc) {
                    const T* dout_plane = dout_n + static_cast<std::size_t>(oc) * out_plane_sz;
                    const T* wblock = wgt + ((static_cast<std::size_t>(ic) * d.c_out + oc) * 4);
                    for (int dh = 0; dh < 2; ++dh)
                        for (int dw = 0; dw < 2; ++dw)
                            acc += dout_plane[static_cast<std::size_t>(2 * ih + dh) * ow_n +
                                              (2 * iw + dw)] *
                                   wblock[dh * 2 + dw];
                }
                din_plane[static_cast<std::size_t>(ih) * d.w + iw] = acc;
            }
        }
    });
}

template <class T>
void tconv2_backward_weight(T* dwgt, T* dbias, const T* dout, const T* in, const Tconv2Dims& d) {
    const int oh_n = d.out_h(), ow_n = d.out_w();
    const std::size_t in_plane_sz = static_cast<std::size_t>(d.h) * d.w;
    const std::size_t out_plane_sz = static_cast<std::size_t>(oh_n) * ow_n;
    parallel_for(static_cast<long long>(d.c_in) * d.c_out, [&](long long idx) {
        const int ic = static_cast<int>(idx / d.c_out);
        const int oc = static_cast<int>(idx % d.c_out);
        T* wblock = dwgt + ((static_cast<std::size_t>(ic) * d.c_out + oc) * 4);
        std::vector<T> buf(static_cast<std::size_t>(d.w));
        for (int dh = 0; dh < 2; ++dh) {
            for (int dw = 0; dw < 2; ++dw) {
                std::fill(buf.begin(), buf.end(), T(0));
                for (int n = 0; n < d.n; ++n) {
                    const T* in_plane =
                        in + (static_cast<std::size_t>(n) * d.c_in + ic) * in_plane_sz;
                    const T* dout_plane =
                        dout + (static_cast<std::size_t>(n) * d.c_out + oc) * out_plane_sz;
                    for (int ih = 0; ih < d.h; ++ih) {
                        const T* in_row = in_plane + static_cast<std::size_t>(ih) * d.w;
                        const T* dout_row =
                            dout_plane + static_cast<std::size_t>(2 * ih + dh) * ow_n + dw;
                        for (int iw = 0; iw < d.w; ++iw) buf[iw] += in_row[iw] * dout_row[2 * iw];
                    }
                }
                T acc = T(0);
                for (int iw = 0; iw < d.w; ++iw) acc += buf[iw];
                wblock[dh * 2 + dw] = acc;
            }
        }
    });
    if (dbias) {
        parallel_for(d.c_out, [&](long long oc) {
            T acc = T(0);
            for (int n = 0; n < d.n; ++n) {
                const T* dout_plane =
                    dout + (static_cast<std::size_t>(n) * d.c_out + oc) * out_plane_sz;
                for (std::size_t i = 0; i < out_plane_sz; ++i) acc += dout_plane[i];
            }
            dbias[oc] = acc;
        });
    }
}

template <class T>
void maxpool2_forward(T* out, std::int32_t* argmax, const T* in, int planes, int h, int w) {
    const int oh_n = h / 2, ow_n = w / 2;
    const std::size_t in_plane_sz = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane_sz = static_cast<std::size_t>(oh_n) * ow_n;
    parallel_for(planes, [&](long long p) {
        const T* in_plane = in + p * in_plane_sz;
        T* out_plane = out + p * out_plane_sz;
        std::int32_t* am_plane = argmax + p * out_plane_sz;
        for (int oh = 0; oh < oh_n; ++oh) {
            for (int ow = 0; ow < ow_n; ++ow) {
                const int ih = 2 * oh, iw = 2 * ow;
                std::int32_t best_idx = ih * w + iw;
                T best = in_plane[best_idx];
                const int cand[3] = {ih * w + iw + 1, (ih + 1) * w + iw, (ih + 1) * w + iw + 1};
                for (int c : cand) {
                    if (in_plane[c] > best) {
                        best = in_plane[c];
                        best_idx = c;
                    }
                }
                out_plane[static_cast<std::size_t>(oh) * ow_n + ow] = best;
                am_plane[static_cast<std::size_t>(oh) * ow_n + ow] = best_idx;
            }
        }
    });
}

template <class T>
void maxpool2_backward(T* din, const T* dout, const std::int32_t* argmax, int planes, int h,
                       int w) {
    const int oh_n = h / 2, ow_n = w / 2;
    const std::size_t in_plane_sz = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane_sz = static_cast<std::size_t>(oh_n) * ow_n;
    parallel_for(planes, [&](long long p) {
        T* din_plane = din + p * in_plane_sz;
        const T* dout_plane = dout + p * out_plane_sz;
        const std::int32_t* am_plane = argmax + p * out_plane_sz;
        for (std::size_t i = 0; i < in_plane_sz; ++i) din_plane[i] = T(0);
        for (std::size_t i = 0; i < out_plane_sz; ++i) din_plane[am_plane[i]] += dout_plane[i];
    });
}

template <class T>
void relu_forward(T* out, const T* in, std::size_t n) {
    parallel_for(static_cast<long long>(n),
                 [&](long long i) { out[i] = in[i] > T(0) ? in[i] : T(0); });
}

template <class T>
void relu_backward(T* din, const T* dout, const T* in, std::size_t n) {
    parallel_for(static_cast<long long>(n),
                 [&](long long i) { din[i] = in[i] > T(0) ? dout[i] : T(0); });
}

template <class T>
void sigmoid_forward(T* out, const T* in, std::size_t n, T eps) {
    parallel_for(static_cast<long long>(n), [&](long long i) {
        T v = T(1) / (T(1) + std::exp(-in[i]));
        out[i] = std::clamp(v, eps, T(1) - eps);
    });
}

template <class T>
void sigmoid_backward(T* din, const T* dout, const T* out, std::size_t n) {
    parallel_for(static_cast<long long>(n),
                 [&](long long i) { din[i] = dout[i] * out[i] * (T(1) - out[i]); });
}

template <class T>
void linear_forward(T* out, const T* x, const T* wgt, const T* bias, int rows, int k, int m) {
    parallel_for(rows, [&](long long r) {
        const T* xr = x + r * k;
        T* outr = out + r * m;
        for (int j = 0; j < m; ++j) {
            T acc = bias ? bias[j] : T(0);
            const T* wj = wgt + static_cast<std::size_t>(j) * k;
            for (int kk = 0; kk < k; ++kk) acc += xr[kk] * wj[kk];
            outr[j] = acc;
        }
    });
}

template <class T>
void linear_backward_input(T* dx, const T* dout, const T* wgt, int rows, int k, int m) {
    parallel_for(rows, [&](long long r) {
        const T* doutr = dout + r * m;
        T* dxr = dx + r * k;
        for (int kk = 0; kk < k; ++kk) dxr[kk] = T(0);
        for (int j = 0; j < m; ++j) {
            const T g = doutr[j];
            const T* wj = wgt + static_cast<std::size_t>(j) * k;
            for (int kk = 0; kk < k; ++kk) dxr[kk] += g * wj[kk];
        }
    });
}

template <class T>
void linear_backward_weight(T* dwgt, T* dbias, const T* dout, const T* x, int rows, int k, int m) {
    parallel_for(m, [&](long long j) {
        T* wj = dwgt + j * k;
        for (int kk = 0; kk < k; ++kk) wj[kk] = T(0);
        T bacc = T(0);
        for (int r = 0; r < rows; ++r) {
            const T g = dout[static_cast<std::size_t>(r) * m + j];
            bacc += g;
            const T* xr = x + static_cast<std::size_t>(r) * k;
            for (int kk = 0; kk < k; ++kk) wj[kk] += g * xr[kk];
        }
        if (dbias) dbias[j] = bacc;
    });
}

template <class T>
T chunked_sum(const T* v, std::size_t n) {
    if (n == 0) return T(0);
    const int chunks = kReductionChunks;
    T partial[kReductionChunks];
    parallel_for(chunks, [&](long long c) {
        const std::size_t lo = n * c / chunks;
        const std::size_t hi = n * (c + 1) / chunks;
        T acc = T(0);
        for (std::size_t i = lo; i < hi; ++i) acc += v[i];
        partial[c] = acc;
    });
    T total = T(0);
    for (int c = 0; c < chunks; ++c) total += partial[c];
    return total;
}

template <class T>
T bce_forward(const T* pred, const T* target, std::size_t n, T eps) {
    const int chunks = kReductionChunks;
    T partial[kReductionChunks];
    parallel_for(chunks, [&](long long c) {
        const std::size_t lo = n * c / chunks;
        const std::size_t hi = n * (c + 1) / chunks;
        T acc = T(0);
        for (std::size_t i = lo; i < hi; ++i) {
            const T p = std::clamp(pred[i], eps, T(1) - eps);
            const T t = target[i];
            acc += -(t * std::log(p) + (T(1) - t) * std::log(T(1) - p));
        }
        partial[c] = acc;
    });
    T total = T(0);
    for (int c = 0; c < chunks; ++c) total += partial[c];
    return total / static_cast<T>(n);
}

template <class T>
void bce_backward(T* dpred, const T* pred, const T* target, std::size_t n, T eps, T upstream) {
    const T scale = upstream / static_cast<T>(n);
    parallel_for(static_cast<long long>(n), [&](long long i) {
        const T p = pred[i];
        if (p <= eps || p >= T(1) - eps) {
            dpred[i] = T(0); // clamped region, locally constant
            return;
        }
        dpred[i] = scale * (-target[i] / p + (T(1) - target[i]) / (T(1) - p));
    });
}

namespace {

template <class T>
void knn_adjacency_impl(std::int32_t* adj, const T* features, int nodes, int channels, int k) {
    parallel_for(nodes, [&](long long i) {
        const T* fi = features + i * channels;
        // Insertion into a small sorted buffer of (distance^2, index).
        std::vector<std::pair<T, std::int32_t>> best;
        best.reserve(k + 1);
        for (int j = 0; j < nodes; ++j) {
            if (j == i) continue;
            const T* fj = features + static_cast<std::size_t>(j) * channels;
            T d2 = T(0);
            for (int c = 0; c < channels; ++c) {
                const T diff = fi[c] - fj[c];
                d2 += diff * diff;
            }
            if (static_cast<int>(best.size()) == k && !(d2 < best.back().first)) continue;
            std::pair<T, std::int32_t> cand{d2, j};
            auto pos = std::lower_bound(best.begin(), best.end(), cand);
            best.insert(pos, cand);
            if (static_cast<int>(best.size()) > k) best.pop_back();
        }
        for (int q = 0; q < k; ++q) adj[i * k + q] = best[q].second;
    });
}

} // namespace

void knn_adjacency(std::int32_t* adj, const float* features, int nodes, int channels, int k) {
    knn_adjacency_impl(adj, features, nodes, channels, k);
}
void knn_adjacency(std::int32_t* adj, const double* features, int nodes, int channels, int k) {
    knn_adjacency_impl(adj, features, nodes, channels, k);
}

template <class T>
void neighbor_sum_forward(T* s, const T* h, const std::int32_t* adj, int nodes, int k, int c) {
    parallel_for(nodes, [&](long long i) {
        T* si = s + i * c;
        for (int q = 0; q < c; ++q) si[q] = T(0);
        for (int q = 0; q < k; ++q) {
            const T* hj = h + static_cast<std::size_t>(adj[i * k + q]) * c;
            for (int cc = 0; cc < c; ++cc) si[cc] += hj[cc];
        }
    });
}

template <class T>
void neighbor_sum_backward(T* dh, const T* ds, const std::int32_t* in_off,
                           const std::int32_t* in_src, int nodes, int c) {
    parallel_for(nodes, [&](long long j) {
        T* dhj = dh + j * c;
        for (int cc = 0; cc < c; ++cc) dhj[cc] = T(0);
        for (std::int32_t e = in_off[j]; e < in_off[j + 1]; ++e) {
            const T* dsi = ds + static_cast<std::size_t>(in_src[e]) * c;
            for (int cc = 0; cc < c; ++cc) dhj[cc] += dsi[cc];
        }
    });
}

#define LSG_INSTANTIATE(T)                                                                        \
    template void conv2d_forward<T>(T*, const T*, const T*, const T*, const Conv2dDims&);         \
    template void conv2d_backward_input<T>(T*, const T*, const T*, const Conv2dDims&);            \
    template void conv2d_backward_weight<T>(T*, T*, const T*, const T*, const Conv2dDims&);       \
    template void tconv2_forward<T>(T*, const T*, const T*, const T*, const Tconv2Dims&);         \
    template void tconv2_backward_input<T>(T*, const T*, const T*, const Tconv2Dims&);            \
    template void tconv2_backward_weight<T>(T*, T*, const T*, const T*, const Tconv2Dims&);       \
    template void maxpool2_forward<T>(T*, std::int32_t*, const T*, int, int, int);                \
    template void maxpool2_backward<T>(T*, const T*, const std::int32_t*, int, int, int);         \
    template void relu_forward<T>(T*, const T*, std::size_t);                                     \
    template void relu_backward<T>(T*, const T*, const T*, std::size_t);                          \
    template void sigmoid_forward<T>(T*, const T*, std::size_t, T);                               \
    template void sigmoid_backward<T>(T*, const T*, const T*, std::size_t);                       \
    template void linear_forward<T>(T*, const T*, const T*, const T*, int, int, int);             \
    template void linear_backward_input<T>(T*, const T*, const T*, int, int, int);                \
    template void linear_backward_weight<T>(T*, T*, const T*, const T*, int, int, int);           \
    template T chunked_sum<T>(const T*, std::size_t);                                             \
    template T bce_forward<T>(const T*, const T*, std::size_t, T);                                \
    template void bce_backward<T>(T*, const T*, const T*, std::size_t, T, T);                     \
    template void neighbor_sum_forward<T>(T*, const T*, const std::int32_t*, int, int, int);      \
    template void neighbor_sum_backward<T>(T*, const T*, const std::int32_t*,                     \
                                           const std::int32_t*, int, int);

LSG_INSTANTIATE(float)
LSG_INSTANTIATE(double)

#undef LSG_INSTANTIATE

} // namespace lsg::kernels
