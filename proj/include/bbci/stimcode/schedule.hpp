#pragma once

#include "bbci/stimcode/pulse.hpp"

namespace bbci::stimcode {

enum class WindowKind { record, stimulate };

struct ScheduleWindow {
  double start_ms;
  double end_ms;  // half-open [start, end)
  WindowKind kind;
};

struct Schedule {
  std::vector<ScheduleWindow> windows;
  std::vector<std::pair<double, double>> blanking;  // merged (t, t+blank] intervals

  const ScheduleWindow* window_at(double t_ms) const;
};

// Alternating record/stimulate windows starting with record; the final
// partial window is truncated at the duration.
Schedule interleave_schedule(double duration_ms, double record_ms = 50.0,
                             double stim_ms = 50.0);

// Keeps only the pulses that fall inside stimulate windows.
PulseTrain constrain_to_schedule(const PulseTrain& train, const Schedule& schedule);

struct TimedSample {
  double t_ms;
  double value;
  bool valid;
};

// Merged union of (pulse_t, pulse_t + blank_ms] intervals. blank_ms must
// lie in [5, 10] ms.
std::vector<std::pair<double, double>> blanking_intervals(const PulseTrain& train,
                                                          double blank_ms);

// Marks every sample inside a blanking interval invalid.
std::vector<TimedSample> apply_blanking(std::vector<TimedSample> samples,
                                        const PulseTrain& train, double blank_ms);

void write_schedule_csv(const Schedule& schedule, const std::string& path);

}  // namespace bbci::stimcode
