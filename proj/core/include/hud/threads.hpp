#pragma once

namespace hud {

// Parallelism cap from the HUD_THREADS environment variable.
// Unset: hardware concurrency. "0": single-threaded deterministic mode.
// All parallel loops in this library produce results that are bitwise
// independent of the thread count; HUD_THREADS=0 is still useful to pin
// scheduling for timing or debugging.
int thread_budget();

}  // namespace hud
