#pragma once

#include "bbci/core/matrix.hpp"

namespace bbci::codec {

// Operant rate-threshold control law: gain * max(0, rate - threshold)
// per bin.
Vector rate_threshold_decode(const Vector& rate_trace, double threshold, double gain);

}  // namespace bbci::codec
