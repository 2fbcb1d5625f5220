// Times the hot kernels in serial and OpenMP mode and checks that both modes
// produce identical bits.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "lsg/active_contour.hpp"
#include "lsg/graph.hpp"
#include "lsg/kernels.hpp"
#include "lsg/parallel.hpp"
#include "lsg/rng.hpp"
#include "lsg/tensor.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace lsg;

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <class Fn>
double time_best_of(int reps, Fn&& fn) {
    double best = 1e18;
    for (int i = 0; i < reps; ++i) {
        const double t0 = now_s();
        fn();
        best = std::min(best, now_s() - t0);
    }
    return best;
}

Tensor<float> randn(std::vector<int> shape, std::uint64_t seed) {
    Tensor<float> t(std::move(shape));
    Rng rng(seed);
    for (auto& v : t.data) v = static_cast<float>(rng.next_gaussian());
    return t;
}

struct Case {
    const char* name;
    double serial_s = 0.0;
    double parallel_s = 0.0;
    bool bit_identical = true;
};

void report(const Case& c) {
    std::printf("%-28s serial %9.4f ms   omp %9.4f ms   speedup %5.2fx   bits %s\n", c.name,
                c.serial_s * 1e3, c.parallel_s * 1e3, c.serial_s / c.parallel_s,
                c.bit_identical ? "equal" : "DIFFER");
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP max threads: %d\n", omp_get_max_threads());
#endif

    // conv2d forward + backward, U-Net-scale shapes.
    {
        kernels::Conv2dDims d;
        d.c_in = 16;
        d.h = d.w = 64;
        d.c_out = 16;
        d.kh = d.kw = 3;
        d.pad = 1;
        const auto in = randn({1, d.c_in, d.h, d.w}, 1);
        const auto wgt = randn({d.c_out, d.c_in, 3, 3}, 2);
        const auto bias = randn({d.c_out}, 3);
        Tensor<float> out({1, d.c_out, d.out_h(), d.out_w()});
        Tensor<float> out2 = out;

        Case c{"conv2d 16x64x64 -> 16 fwd"};
        set_exec_mode(ExecMode::Serial);
        c.serial_s = time_best_of(5, [&] {
            kernels::conv2d_forward(out.ptr(), in.ptr(), wgt.ptr(), bias.ptr(), d);
        });
        set_exec_mode(ExecMode::Parallel);
        c.parallel_s = time_best_of(5, [&] {
            kernels::conv2d_forward(out2.ptr(), in.ptr(), wgt.ptr(), bias.ptr(), d);
        });
        c.bit_identical = std::memcmp(out.ptr(), out2.ptr(), out.numel() * sizeof(float)) == 0;
        report(c);

        Tensor<float> din({1, d.c_in, d.h, d.w}), din2 = din;
        Case cb{"conv2d backward input"};
        set_exec_mode(ExecMode::Serial);
        cb.serial_s = time_best_of(5, [&] {
            kernels::conv2d_backward_input(din.ptr(), out.ptr(), wgt.ptr(), d);
        });
        set_exec_mode(ExecMode::Parallel);
        cb.parallel_s = time_best_of(5, [&] {
            kernels::conv2d_backward_input(din2.ptr(), out.ptr(), wgt.ptr(), d);
        });
        cb.bit_identical = std::memcmp(din.ptr(), din2.ptr(), din.numel() * sizeof(float)) == 0;
        report(cb);

        Tensor<float> dw(wgt.shape), dw2(wgt.shape);
        Tensor<float> db(bias.shape), db2(bias.shape);
        Case cw{"conv2d backward weight"};
        set_exec_mode(ExecMode::Serial);
        cw.serial_s = time_best_of(5, [&] {
            kernels::conv2d_backward_weight(dw.ptr(), db.ptr(), out.ptr(), in.ptr(), d);
        });
        set_exec_mode(ExecMode::Parallel);
        cw.parallel_s = time_best_of(5, [&] {
            kernels::conv2d_backward_weight(dw2.ptr(), db2.ptr(), out.ptr(), in.ptr(), d);
        });
        cw.bit_identical =
            std::memcmp(dw.ptr(), dw2.ptr(), dw.numel() * sizeof(float)) == 0 &&
            std::memcmp(db.ptr(), db2.ptr(), db.numel() * sizeof(float)) == 0;
        report(cw);
    }

    // k-NN over a bottleneck-sized feature map.
    {
        const int nodes = 256, c = 64, k = 8;
        const auto feat = randn({nodes, c}, 4);
        std::vector<std::int32_t> adj(static_cast<std::size_t>(nodes) * k);
        std::vector<std::int32_t> adj2 = adj;
        Case c1{"knn 256 nodes, C=64, k=8"};
        set_exec_mode(ExecMode::Serial);
        c1.serial_s = time_best_of(5, [&] {
            kernels::knn_adjacency(adj.data(), feat.ptr(), nodes, c, k);
        });
        set_exec_mode(ExecMode::Parallel);
        c1.parallel_s = time_best_of(5, [&] {
            kernels::knn_adjacency(adj2.data(), feat.ptr(), nodes, c, k);
        });
        c1.bit_identical = adj == adj2;
        report(c1);
    }

    // Level-set evolution on a synthetic disk image.
    {
        const int s = 128;
        Image img(s, s, 100);
        Mask nominal(s, s, 0);
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x) {
                const double r = std::hypot(x - s / 2.0, y - s / 2.0);
                if (r < 24.0) {
                    img.at(x, y) = 180;
                    nominal.at(x, y) = 1;
                }
            }
        AcParams p;
        p.max_iters = 60;
        const LevelSet init = init_levelset(nominal);
        Mask m1, m2;
        Case c2{"evolve 128x128, 60 iters"};
        set_exec_mode(ExecMode::Serial);
        c2.serial_s = time_best_of(3, [&] { m1 = evolve(img, init, p); });
        set_exec_mode(ExecMode::Parallel);
        c2.parallel_s = time_best_of(3, [&] { m2 = evolve(img, init, p); });
        c2.bit_identical = m1 == m2;
        report(c2);
    }

    set_exec_mode(ExecMode::Parallel);
    return 0;
}
