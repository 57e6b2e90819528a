#pragma once

#include "bbci/core/matrix.hpp"

namespace bbci::codec {

// Detector for a sustained drop in band power: the signal is cut into
// consecutive windows, band power is computed per window by direct DFT
// over the in-band bins, and a window triggers when its power falls below
// drop_ratio times the median of the trailing baseline windows.
struct BandPowerWindow {
  double start_ms;
  double power;
  double baseline;  // trailing median; 0 while the baseline is still filling
  bool triggered;
};

struct BandPowerResult {
  std::vector<BandPowerWindow> windows;
  std::vector<std::size_t> trigger_indices;
};

inline constexpr std::size_t kBaselineWindows = 8;  // trailing horizon
inline constexpr std::size_t kMinBaseline = 3;      // windows before the trigger arms
inline constexpr double kPowerFloor = 1e-12;        // silent-signal guard

BandPowerResult band_power_trigger(const Vector& signal, double fs_hz, double band_lo_hz,
                                   double band_hi_hz, double window_ms, double drop_ratio);

// Band power of one window (exposed for tests).
double band_power(const Vector& samples, double fs_hz, double band_lo_hz, double band_hi_hz);

}  // namespace bbci::codec
