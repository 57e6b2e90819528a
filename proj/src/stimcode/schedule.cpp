#include "bbci/stimcode/schedule.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace bbci::stimcode {

const ScheduleWindow* Schedule::window_at(double t_ms) const {
  for (const auto& w : windows)
    if (t_ms >= w.start_ms && t_ms < w.end_ms) return &w;
  return nullptr;
}

Schedule interleave_schedule(double duration_ms, double record_ms, double stim_ms) {
  require(duration_ms >= 0.0, "interleave_schedule: duration must be >= 0");
  require(record_ms > 0.0 && stim_ms > 0.0, "interleave_schedule: window lengths must be positive");
  Schedule s;
  double t = 0.0;
  WindowKind kind = WindowKind::record;
  while (t < duration_ms) {
    const double len = kind == WindowKind::record ? record_ms : stim_ms;
    const double end = std::min(t + len, duration_ms);
    s.windows.push_back({t, end, kind});
    t = end;
    kind = kind == WindowKind::record ? WindowKind::stimulate : WindowKind::record;
  }
  return s;
}

PulseTrain constrain_to_schedule(const PulseTrain& train, const Schedule& schedule) {
  PulseTrain out;
  for (const PulseEvent& e : train) {
    const ScheduleWindow* w = schedule.window_at(static_cast<double>(e.t_ms));
    if (w && w->kind == WindowKind::stimulate) out.push_back(e);
  }
  return out;
}

std::vector<std::pair<double, double>> blanking_intervals(const PulseTrain& train,
                                                          double blank_ms) {
  if (blank_ms < 5.0 || blank_ms > 10.0)
    throw std::invalid_argument("blanking: blank_ms must lie in [5, 10] ms, got " +
                                std::to_string(blank_ms));
  std::vector<std::pair<double, double>> raw;
  raw.reserve(train.size());
  for (const PulseEvent& e : train)
    raw.emplace_back(static_cast<double>(e.t_ms), static_cast<double>(e.t_ms) + blank_ms);
  std::sort(raw.begin(), raw.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& iv : raw) {
    if (!merged.empty() && iv.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, iv.second);
    else
      merged.push_back(iv);
  }
  return merged;
}

std::vector<TimedSample> apply_blanking(std::vector<TimedSample> samples,
                                        const PulseTrain& train, double blank_ms) {
  const auto intervals = blanking_intervals(train, blank_ms);
  for (TimedSample& s : samples) {
    s.valid = true;
    // invalid when pulse_t < t <= pulse_t + blank_ms
    for (const auto& iv : intervals) {
      if (s.t_ms > iv.first && s.t_ms <= iv.second) {
        s.valid = false;
        break;
      }
      if (iv.first >= s.t_ms) break;  // intervals are sorted
    }
  }
  return samples;
}

void write_schedule_csv(const Schedule& schedule, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "start_ms,end_ms,kind\n";
  char buf[64];
  for (const auto& w : schedule.windows) {
    std::snprintf(buf, sizeof(buf), "%.6g,%.6g,", w.start_ms, w.end_ms);
    out << buf << (w.kind == WindowKind::record ? "record" : "stimulate") << '\n';
  }
}

}  // namespace bbci::stimcode
