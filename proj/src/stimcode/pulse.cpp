#include "bbci/stimcode/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace bbci::stimcode {

std::string to_string(PulseShape s) {
  return s == PulseShape::biphasic ? "biphasic" : "monophasic";
}

PulseShape pulse_shape_from_string(const std::string& s) {
  if (s == "biphasic") return PulseShape::biphasic;
  if (s == "monophasic") return PulseShape::monophasic;
  throw std::invalid_argument("unknown pulse shape '" + s + "'");
}

namespace {

void sort_events(PulseTrain& train) {
  std::stable_sort(train.begin(), train.end(), [](const PulseEvent& a, const PulseEvent& b) {
    return a.t_ms != b.t_ms ? a.t_ms < b.t_ms : a.channel < b.channel;
  });
}

}  // namespace

PulseTrain packeted_pulse_train(const PulseTrainSpec& spec, double duration_ms) {
  require(duration_ms >= 0.0, "packeted_pulse_train: duration must be >= 0");
  require(spec.intra_packet_hz > 0.0, "packeted_pulse_train: intra-packet rate must be positive");
  require(spec.packet_hz >= 0.0, "packeted_pulse_train: packet rate must be >= 0");
  require(spec.packet_ms > 0.0, "packeted_pulse_train: packet duration must be positive");
  require(spec.amplitude_ma >= 0.0, "packeted_pulse_train: amplitude must be >= 0");
  require(spec.pulse_width_us > 0.0, "packeted_pulse_train: pulse width must be positive");
  if (1000.0 / spec.intra_packet_hz < 1.0 - 1e-9)
    throw std::invalid_argument(
        "packeted_pulse_train: intra-packet rate above 1000 Hz cannot be placed on the 1 ms "
        "grid");

  PulseTrain train;
  const double packet_period_ms = spec.packet_hz > 0.0 ? 1000.0 / spec.packet_hz : duration_ms;
  const double ipi_ms = 1000.0 / spec.intra_packet_hz;
  for (std::size_t p = 0;; ++p) {
    const double packet_start = static_cast<double>(p) * packet_period_ms;
    if (packet_start >= duration_ms) break;
    for (std::size_t i = 0;; ++i) {
      const double offset = static_cast<double>(i) * ipi_ms;
      if (offset >= spec.packet_ms) break;
      const long t = std::llround(packet_start + offset);
      if (static_cast<double>(t) >= duration_ms) break;
      for (int ch : spec.channels)
        train.push_back({t, ch, spec.amplitude_ma, spec.pulse_width_us, spec.shape});
    }
    if (spec.packet_hz == 0.0) break;  // single packet at t = 0
  }
  sort_events(train);
  return train;
}

PulseTrain continuous_pulse_train(double rate_hz, double duration_ms, double amplitude_ma,
                                  double width_us, PulseShape shape, int channel) {
  require(rate_hz > 0.0, "continuous_pulse_train: rate must be positive");
  require(duration_ms >= 0.0, "continuous_pulse_train: duration must be >= 0");
  PulseTrain train;
  const double period_ms = 1000.0 / rate_hz;
  for (std::size_t k = 0;; ++k) {
    const double t_exact = static_cast<double>(k) * period_ms;
    if (t_exact >= duration_ms) break;
    const long t = std::llround(t_exact);
    if (static_cast<double>(t) >= duration_ms) break;
    train.push_back({t, channel, amplitude_ma, width_us, shape});
  }
  return train;
}

FesCurrents fes_currents(double rate_hz, const FesParams& params) {
  require(rate_hz >= 0.0, "fes_currents: rate must be >= 0");
  require(params.flexor_gain >= 0.0 && params.extensor_gain >= 0.0,
          "fes_currents: gains must be >= 0");
  require(params.max_ma > 0.0, "fes_currents: max current must be positive");
  const double flexor =
      std::min(params.max_ma, params.flexor_gain * std::max(0.0, rate_hz - params.flexor_threshold_hz));
  const double extensor =
      std::min(params.max_ma,
               params.extensor_gain * std::max(0.0, params.extensor_threshold_hz - rate_hz));
  return {flexor, extensor};
}

Vector torque_to_amplitude(double torque, const std::vector<ChannelCalib>& calib) {
  require(torque >= 0.0, "torque_to_amplitude: torque must be >= 0");
  Vector amps(calib.size());
  for (std::size_t c = 0; c < calib.size(); ++c) {
    require(calib[c].gain >= 0.0, "torque_to_amplitude: gains must be >= 0");
    amps[c] = std::clamp(calib[c].offset + calib[c].gain * torque, 0.0, calib[c].amp_max);
  }
  return amps;
}

void write_pulse_train_csv(const PulseTrain& train, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t_ms,channel,amplitude_ma,width_us,shape\n";
  char buf[64];
  for (const PulseEvent& e : train) {
    std::snprintf(buf, sizeof(buf), "%ld,%d,%.6g,%.6g,", e.t_ms, e.channel, e.amplitude_ma,
                  e.pulse_width_us);
    out << buf << to_string(e.shape) << '\n';
  }
}

}  // namespace bbci::stimcode
