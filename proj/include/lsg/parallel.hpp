#pragma once

#include <cstdint>

namespace lsg {

enum class ExecMode { Serial, Parallel };

// Global kernel execution mode. Parallel kernels are written so that every
// output element has exactly one writer and reductions use fixed chunking;
// results are bit-identical to the serial reference for any thread count.
ExecMode exec_mode();
void set_exec_mode(ExecMode mode);
bool parallel_enabled();

// Fixed chunk count for ordered parallel reductions. Independent of the
// thread count so that sums do not depend on the OpenMP runtime.
inline constexpr int kReductionChunks = 256;

// Runs f(0..count-1). The parallel path distributes iterations over OpenMP
// threads; every iteration runs the same code as the serial path, so results
// are identical as long as iterations write disjoint outputs.
template <class F>
void parallel_for(long long count, F&& f) {
    if (parallel_enabled()) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (long long i = 0; i < count; ++i) f(i);
    } else {
        for (long long i = 0; i < count; ++i) f(i);
    }
}

} // namespace lsg
