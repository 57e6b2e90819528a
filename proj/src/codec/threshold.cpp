#include "bbci/codec/threshold.hpp"

namespace bbci::codec {

Vector rate_threshold_decode(const Vector& rate_trace, double threshold, double gain) {
  require(gain >= 0.0, "rate_threshold_decode: gain must be >= 0");
  Vector out(rate_trace.size());
  for (std::size_t i = 0; i < rate_trace.size(); ++i) {
    const double excess = rate_trace[i] - threshold;
    out[i] = excess > 0.0 ? gain * excess : 0.0;
  }
  return out;
}

}  // namespace bbci::codec
