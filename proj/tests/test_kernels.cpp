// Serial and OpenMP kernel variants must produce identical bits.
#include <doctest.h>

#include "lsg/kernels.hpp"
#include "lsg/parallel.hpp"
#include "lsg/rng.hpp"
#include "support/oracles.hpp"

using namespace lsg;

namespace {

template <class Fn>
void check_modes_identical(Fn&& run) {
    set_exec_mode(ExecMode::Serial);
    const auto serial = run();
    set_exec_mode(ExecMode::Parallel);
    const auto parallel = run();
    set_exec_mode(ExecMode::Parallel);
    CHECK(serial == parallel);
}

Tensor<float> randf(std::vector<int> shape, std::uint64_t seed) {
    Tensor<float> t(std::move(shape));
    Rng rng(seed);
    for (auto& v : t.data) v = static_cast<float>(rng.next_gaussian());
    return t;
}

} // namespace

TEST_CASE("conv2d kernels: serial == parallel bitwise") {
    kernels::Conv2dDims d;
    d.n = 2;
    d.c_in = 3;
    d.h = 13;
    d.w = 9;
    d.c_out = 5;
    d.kh = d.kw = 3;
    d.pad = 1;
    const auto in = randf({d.n, d.c_in, d.h, d.w}, 1);
    const auto wgt = randf({d.c_out, d.c_in, 3, 3}, 2);
    const auto bias = randf({d.c_out}, 3);
    const auto dout = randf({d.n, d.c_out, d.out_h(), d.out_w()}, 4);

    check_modes_identical([&] {
        Tensor<float> out({d.n, d.c_out, d.out_h(), d.out_w()});
        kernels::conv2d_forward(out.ptr(), in.ptr(), wgt.ptr(), bias.ptr(), d);
        return out.data;
    });
    check_modes_identical([&] {
        Tensor<float> din(in.shape);
        kernels::conv2d_backward_input(din.ptr(), dout.ptr(), wgt.ptr(), d);
        return din.data;
    });
    check_modes_identical([&] {
        Tensor<float> dw(wgt.shape), db(bias.shape);
        kernels::conv2d_backward_weight(dw.ptr(), db.ptr(), dout.ptr(), in.ptr(), d);
        auto both = dw.data;
        both.insert(both.end(), db.data.begin(), db.data.end());
        return both;
    });
}

TEST_CASE("tconv2 kernels: serial == parallel bitwise") {
    kernels::Tconv2Dims d;
    d.n = 2;
    d.c_in = 4;
    d.h = 7;
    d.w = 5;
    d.c_out = 3;
    const auto in = randf({d.n, d.c_in, d.h, d.w}, 5);
    const auto wgt = randf({d.c_in, d.c_out, 2, 2}, 6);
    const auto bias = randf({d.c_out}, 7);
    const auto dout = randf({d.n, d.c_out, d.out_h(), d.out_w()}, 8);

    check_modes_identical([&] {
        Tensor<float> out({d.n, d.c_out, d.out_h(), d.out_w()});
        kernels::tconv2_forward(out.ptr(), in.ptr(), wgt.ptr(), bias.ptr(), d);
        return out.data;
    });
    check_modes_identical([&] {
        Tensor<float> din(in.shape);
        kernels::tconv2_backward_input(din.ptr(), dout.ptr(), wgt.ptr(), d);
        return din.data;
    });
    check_modes_identical([&] {
        Tensor<float> dw(wgt.shape), db(bias.shape);
        kernels::tconv2_backward_weight(dw.ptr(), db.ptr(), dout.ptr(), in.ptr(), d);
        auto both = dw.data;
        both.insert(both.end(), db.data.begin(), db.data.end());
        return both;
    });
}

TEST_CASE("pool, activations, linear, reductions: serial == parallel bitwise") {
    const auto in = randf({3, 4, 8, 6}, 9);
    check_modes_identical([&] {
        Tensor<float> out({3, 4, 4, 3});
        std::vector<std::int32_t> argmax(out.numel());
        kernels::maxpool2_forward(out.ptr(), argmax.data(), in.ptr(), 12, 8, 6);
        return out.data;
    });
    check_modes_identical([&] {
        Tensor<float> out(in.shape);
        kernels::relu_forward(out.ptr(), in.ptr(), in.numel());
        return out.data;
    });
    check_modes_identical([&] {
        Tensor<float> out(in.shape);
        kernels::sigmoid_forward(out.ptr(), in.ptr(), in.numel(), 1e-7f);
        return out.data;
    });

    const auto x = randf({17, 11}, 10);
    const auto w = randf({9, 11}, 11);
    const auto b = randf({9}, 12);
    check_modes_identical([&] {
        Tensor<float> out({17, 9});
        kernels::linear_forward(out.ptr(), x.ptr(), w.ptr(), b.ptr(), 17, 11, 9);
        return out.data;
    });

    const auto v = randf({4097}, 13);
    check_modes_identical([&] {
        return std::vector<float>{kernels::chunked_sum(v.ptr(), v.numel())};
    });
    const auto pred = randf({513}, 14);
    check_modes_identical([&] {
        Tensor<float> p(pred.shape);
        kernels::sigmoid_forward(p.ptr(), pred.ptr(), pred.numel(), 1e-7f);
        Tensor<float> t(pred.shape);
        for (std::size_t i = 0; i < t.numel(); ++i) t.data[i] = (i % 3 == 0) ? 1.0f : 0.0f;
        return std::vector<float>{kernels::bce_forward(p.ptr(), t.ptr(), p.numel(), 1e-7f)};
    });
}

TEST_CASE("knn adjacency: serial == parallel and matches the exhaustive oracle") {
    Rng rng(20);
    for (int trial = 0; trial < 5; ++trial) {
        const int h = 5, w = 4, c = 3, k = 4;
        Tensor<double> fmap({c, h, w});
        for (auto& v : fmap.data) v = rng.next_gaussian();
        const auto expected = oracle::knn(fmap, k);

        set_exec_mode(ExecMode::Serial);
        Graph gs = build_knn_graph(fmap, k);
        set_exec_mode(ExecMode::Parallel);
        Graph gp = build_knn_graph(fmap, k);
        CHECK(gs.adjacency == gp.adjacency);
        CHECK(gs.adjacency == expected);
    }
}
