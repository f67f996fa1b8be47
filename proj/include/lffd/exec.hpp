#pragma once

namespace lffd {

// Serial runs the reference kernels; Parallel runs the OpenMP ones.
// Both produce bit-identical results (every reduction keeps a fixed
// per-element accumulation order), but strict-deterministic training
// forces Serial anyway.
enum class ExecMode { Parallel, Serial };

ExecMode exec_mode();
void set_exec_mode(ExecMode mode);

class ScopedExecMode {
public:
    explicit ScopedExecMode(ExecMode mode) : prev_(exec_mode()) { set_exec_mode(mode); }
    ~ScopedExecMode() { set_exec_mode(prev_); }
    ScopedExecMode(const ScopedExecMode&) = delete;
    ScopedExecMode& operator=(const ScopedExecMode&) = delete;

private:
    ExecMode prev_;
};

} // namespace lffd
