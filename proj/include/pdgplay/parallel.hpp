#pragma once

namespace pdgplay {

/// Selects the serial reference loop or the OpenMP loop of a kernel. Both
/// paths run the same per-item work in isolation and fold results in index
/// order, so they return bit-identical values.
enum class Exec { Serial, Parallel };

/// Caps the OpenMP team size used by every Parallel kernel. n <= 0 restores
/// the runtime default.
void set_thread_cap(int n);
int thread_cap();

}  // namespace pdgplay
