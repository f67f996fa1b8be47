#include "lffd/exec.hpp"

#include <atomic>

namespace lffd {

namespace {
std::atomic<ExecMode> g_mode{ExecMode::Parallel};
}

ExecMode exec_mode() { return g_mode.load(std::memory_order_relaxed); }

void set_exec_mode(ExecMode m) { g_mode.store(m, std::memory_order_relaxed); }

} // namespace lffd
