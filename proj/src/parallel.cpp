#include "lsg/parallel.hpp"

#include <atomic>

namespace lsg {

namespace {
std::atomic<ExecMode> g_mode{ExecMode::Parallel};
}

ExecMode exec_mode() { return g_mode.load(std::memory_order_relaxed); }
void set_exec_mode(ExecMode mode) { g_mode.store(mode, std::memory_order_relaxed); }
bool parallel_enabled() { return exec_mode() == ExecMode::Parallel; }

} // namespace lsg
