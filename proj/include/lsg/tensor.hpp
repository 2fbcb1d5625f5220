#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "lsg/errors.hpp"

namespace lsg {

// Dense row-major tensor. Shapes used by the networks: [N,C,H,W] activations,
// [OC,IC,KH,KW] conv weights, [IC,OC,2,2] transposed-conv weights, [M,K]
// linear weights, [C] biases, [1] scalars.
template <class T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, T fill = T(0)) : shape(std::move(s)) {
        data.assign(numel_of(shape), fill);
    }
    Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != numel_of(shape))
            throw ShapeError("Tensor: data length " + std::to_string(data.size()) +
                             " does not match shape (numel " + std::to_string(numel_of(shape)) +
                             ")");
    }

    static std::size_t numel_of(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) {
            if (d < 0) throw ShapeError("Tensor: negative dimension");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t numel() const { return data.size(); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }
    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    template <class U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

inline std::string shape_string(const std::vector<int>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(a.shape) +
                         " vs " + shape_string(b.shape));
}

} // namespace lsg
