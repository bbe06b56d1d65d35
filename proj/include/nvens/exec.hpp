#pragma once

namespace nvens {

/// Execution policy for the data-parallel kernels. `serial` runs the reference
/// implementation; `parallel` runs the OpenMP kernel. Both produce identical results.
enum class Exec { serial, parallel };

}  // namespace nvens
