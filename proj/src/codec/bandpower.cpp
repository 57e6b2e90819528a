#include "bbci/codec/bandpower.hpp"

#include <algorithm>
#include <cmath>

namespace bbci::codec {

double band_power(const Vector& samples, double fs_hz, double band_lo_hz, double band_hi_hz) {
  const std::size_t n = samples.size();
  const double two_pi = 6.283185307179586476925286766559;
  double total = 0.0;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const double f = static_cast<double>(k) * fs_hz / static_cast<double>(n);
    if (f < band_lo_hz || f > band_hi_hz) continue;
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = two_pi * static_cast<double>(k) * static_cast<double>(t) /
                         static_cast<double>(n);
      re += samples[t] * std::cos(ang);
      im -= samples[t] * std::sin(ang);
    }
    // one-sided power, normalized so a unit sinusoid at a bin gives 0.5
    total += 2.0 * (re * re + im * im) / (static_cast<double>(n) * static_cast<double>(n));
  }
  return total;
}

BandPowerResult band_power_trigger(const Vector& signal, double fs_hz, double band_lo_hz,
                                   double band_hi_hz, double window_ms, double drop_ratio) {
  require(band_lo_hz > 0.0 && band_lo_hz < band_hi_hz && band_hi_hz < fs_hz / 2.0,
          "band_power_trigger: need 0 < lo < hi < fs/2");
  require(drop_ratio > 0.0 && drop_ratio < 1.0, "band_power_trigger: drop_ratio must be in (0,1)");
  const std::size_t win = static_cast<std::size_t>(std::llround(window_ms * fs_hz / 1000.0));
  if (win < 2 || window_ms * band_lo_hz < 2000.0 - 1e-9)
    throw std::invalid_argument(
        "band_power_trigger: degenerate window (must cover at least 2 cycles of the low band "
        "edge)");

  BandPowerResult res;
  std::vector<double> history;  // trailing powers, newest last
  for (std::size_t start = 0; start + win <= signal.size(); start += win) {
    Vector chunk(signal.begin() + start, signal.begin() + start + win);
    BandPowerWindow w;
    w.start_ms = static_cast<double>(start) * 1000.0 / fs_hz;
    w.power = band_power(chunk, fs_hz, band_lo_hz, band_hi_hz);
    w.baseline = 0.0;
    w.triggered = false;
    if (history.size() >= kMinBaseline) {
      std::vector<double> sorted(history);
      std::sort(sorted.begin(), sorted.end());
      w.baseline = sorted[sorted.size() / 2];
      if (w.baseline > kPowerFloor && w.power < drop_ratio * w.baseline) {
        w.triggered = true;
        res.trigger_indices.push_back(res.windows.size());
      }
    }
    history.push_back(w.power);
    if (history.size() > kBaselineWindows) history.erase(history.begin());
    res.windows.push_back(w);
  }
  return res;
}

}  // namespace bbci::codec
