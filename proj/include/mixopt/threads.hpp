#pragma once

namespace mixopt {

/// Maps a requested thread count to the one actually used: positive values
/// pass through, zero (or negative) means all available cores. Returns 1 when
/// built without OpenMP.
int resolve_threads(int requested);

}  // namespace mixopt
