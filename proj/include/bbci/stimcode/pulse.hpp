#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bbci/core/matrix.hpp"

namespace bbci::stimcode {

enum class PulseShape { biphasic, monophasic };

std::string to_string(PulseShape s);
PulseShape pulse_shape_from_string(const std::string& s);

// A pulse is an event with attributes, not a sampled waveform. Times live
// on a 1 ms grid; sub-millisecond spacing is handled by cumulative-phase
// rounding so the long-run rate stays exact.
struct PulseEvent {
  long t_ms;
  int channel;
  double amplitude_ma;
  double pulse_width_us;
  PulseShape shape;
};

using PulseTrain = std::vector<PulseEvent>;

struct PulseTrainSpec {
  double intra_packet_hz = 200.0;  // pulse rate within a packet
  double packet_hz = 10.0;         // packet repetition rate
  double packet_ms = 50.0;         // packet duration
  double amplitude_ma = 1.0;
  double pulse_width_us = 200.0;
  PulseShape shape = PulseShape::biphasic;
  std::vector<int> channels{0};
};

// Packets start every 1000/packet_hz ms (first at t = 0); within a packet,
// pulses run at intra_packet_hz for packet_ms.
PulseTrain packeted_pulse_train(const PulseTrainSpec& spec, double duration_ms);

// Uniformly spaced pulses; first pulse at t = 0.
PulseTrain continuous_pulse_train(double rate_hz, double duration_ms, double amplitude_ma,
                                  double width_us, PulseShape shape, int channel = 0);

// Moritz-style piecewise-linear rate-to-current laws: flexor drive above
// one threshold, extensor drive below another, both capped.
struct FesParams {
  double flexor_gain = 0.8;
  double flexor_threshold_hz = 24.0;
  double extensor_gain = 0.6;
  double extensor_threshold_hz = 12.0;
  double max_ma = 10.0;
};

struct FesCurrents {
  double flexor_ma;
  double extensor_ma;
};

FesCurrents fes_currents(double rate_hz, const FesParams& params = {});

// Per-channel linear torque -> amplitude calibration, clamped to
// [0, amp_max].
struct ChannelCalib {
  double gain = 1.0;
  double offset = 0.0;
  double amp_max = 10.0;
};

Vector torque_to_amplitude(double torque, const std::vector<ChannelCalib>& calib);

void write_pulse_train_csv(const PulseTrain& train, const std::string& path);

}  // namespace bbci::stimcode
