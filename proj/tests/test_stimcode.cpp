#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "bbci/core/rng.hpp"
#include "bbci/stimcode/pulse.hpp"
#include "bbci/stimcode/schedule.hpp"

using namespace bbci;
using namespace bbci::stimcode;

namespace {

std::vector<long> packet_starts(const PulseTrain& train, double packet_period_ms) {
  std::set<long> starts;
  for (const auto& e : train)
    starts.insert(static_cast<long>(std::floor(e.t_ms / packet_period_ms)) *
                  static_cast<long>(packet_period_ms));
  return {starts.begin(), starts.end()};
}

}  // namespace

TEST_CASE("rewarded-object train: 10 packets of 200 Hz pulses, 5 ms apart") {
  PulseTrainSpec spec;
  spec.intra_packet_hz = 200.0;
  spec.packet_hz = 10.0;
  spec.packet_ms = 50.0;
  const PulseTrain train = packeted_pulse_train(spec, 1000.0);

  CHECK(train.size() == 100);  // 10 packets x 10 pulses
  const auto starts = packet_starts(train, 100.0);
  CHECK(starts.size() == 10);
  // within each packet, spacing exactly 5 ms
  for (std::size_t p = 0; p < 10; ++p)
    for (std::size_t i = 0; i < 10; ++i)
      CHECK(train[p * 10 + i].t_ms == static_cast<long>(p * 100 + i * 5));
}

TEST_CASE("unrewarded-object train: 5 packets at 400 Hz rounding to 2/3 ms intervals") {
  PulseTrainSpec spec;
  spec.intra_packet_hz = 400.0;
  spec.packet_hz = 5.0;
  spec.packet_ms = 50.0;
  const PulseTrain train = packeted_pulse_train(spec, 1000.0);

  const auto starts = packet_starts(train, 200.0);
  CHECK(starts.size() == 5);
  CHECK(train.size() == 5 * 20);  // 20 pulses per 50 ms packet at 400 Hz

  // first packet offsets: cumulative rounding of 2.5 ms -> 0,3,5,8,10,...
  std::vector<long> intervals;
  for (std::size_t i = 1; i < 20; ++i)
    intervals.push_back(train[i].t_ms - train[i - 1].t_ms);
  double mean = 0.0;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    CHECK((intervals[i] == 2 || intervals[i] == 3));
    if (i > 0) CHECK(intervals[i] != intervals[i - 1]);  // alternating
    mean += static_cast<double>(intervals[i]);
  }
  mean /= static_cast<double>(intervals.size());
  CHECK(mean == doctest::Approx(2.5).epsilon(0.011));
}

TEST_CASE("zero-duration packeted train is empty; unresolvable grid rejected") {
  PulseTrainSpec spec;
  CHECK(packeted_pulse_train(spec, 0.0).empty());
  spec.intra_packet_hz = 2000.0;  // 0.5 ms spacing cannot live on a 1 ms grid
  CHECK_THROWS_AS(packeted_pulse_train(spec, 100.0), std::invalid_argument);
}

TEST_CASE("multi-channel packeted trains replicate events across channels") {
  PulseTrainSpec spec;
  spec.channels = {0, 3, 5};
  const PulseTrain train = packeted_pulse_train(spec, 200.0);
  std::set<int> seen;
  for (const auto& e : train) seen.insert(e.channel);
  CHECK(seen == std::set<int>{0, 3, 5});
  CHECK(train.size() % 3 == 0);
}

TEST_CASE("continuous 50 Hz train: exactly 50 pulses at 20 ms spacing") {
  const PulseTrain train =
      continuous_pulse_train(50.0, 1000.0, 10.0, 500.0, PulseShape::monophasic);
  REQUIRE(train.size() == 50);
  for (std::size_t i = 0; i < 50; ++i) CHECK(train[i].t_ms == static_cast<long>(i * 20));
  CHECK(train[0].pulse_width_us == 500.0);
  CHECK(train[0].shape == PulseShape::monophasic);
}

TEST_CASE("continuous 300 Hz train has exactly 300 pulses over one second") {
  const PulseTrain train =
      continuous_pulse_train(300.0, 1000.0, 0.06, 200.0, PulseShape::biphasic);
  CHECK(train.size() == 300);
}

TEST_CASE("phase origin convention: 1 Hz over 500 ms yields one pulse at t = 0") {
  const PulseTrain train = continuous_pulse_train(1.0, 500.0, 1.0, 100.0, PulseShape::biphasic);
  REQUIRE(train.size() == 1);
  CHECK(train[0].t_ms == 0);
}

TEST_CASE("long-run rate accuracy within one pulse per horizon") {
  for (double rate : {7.0, 33.0, 111.0, 400.0, 999.0}) {
    for (double duration : {500.0, 1000.0, 4000.0}) {
      const PulseTrain train =
          continuous_pulse_train(rate, duration, 1.0, 100.0, PulseShape::biphasic);
      const double expected = rate * duration / 1000.0;
      CHECK(std::abs(static_cast<double>(train.size()) - expected) <= 1.0);
    }
  }
}

TEST_CASE("events are time-sorted and inside the horizon") {
  PulseTrainSpec spec;
  spec.intra_packet_hz = 333.0;
  spec.packet_hz = 7.0;
  spec.packet_ms = 41.0;
  const PulseTrain train = packeted_pulse_train(spec, 777.0);
  for (std::size_t i = 1; i < train.size(); ++i) CHECK(train[i].t_ms >= train[i - 1].t_ms);
  for (const auto& e : train) {
    CHECK(e.t_ms >= 0);
    CHECK(e.t_ms < 777);
  }
}

TEST_CASE("FES currents reproduce the closed-form flexor/extensor laws") {
  const FesParams p;  // the published constants
  // threshold boundary
  CHECK(fes_currents(24.0, p).flexor_ma == 0.0);
  // capped above threshold: min(10, 0.8 * 16) = 10
  CHECK(fes_currents(40.0, p).flexor_ma == 10.0);
  // resting rate drives the extensor: 0.6 * 12 = 7.2
  CHECK(fes_currents(0.0, p).extensor_ma == 0.6 * 12.0);
  // mid-range flexor value: 0.8 * (30 - 24)
  CHECK(fes_currents(30.0, p).flexor_ma == 0.8 * (30.0 - 24.0));
  CHECK_THROWS_AS(fes_currents(-1.0, p), std::invalid_argument);
}

TEST_CASE("FES outputs stay within [0, max] and at most one side is active") {
  const FesParams p;  // flexor threshold 24 > extensor threshold 12
  Rng rng(31);
  for (int i = 0; i < 300; ++i) {
    const double rate = rng.uniform(0.0, 120.0);
    const FesCurrents c = fes_currents(rate, p);
    CHECK(c.flexor_ma >= 0.0);
    CHECK(c.flexor_ma <= p.max_ma);
    CHECK(c.extensor_ma >= 0.0);
    CHECK(c.extensor_ma <= p.max_ma);
    CHECK((c.flexor_ma == 0.0 || c.extensor_ma == 0.0));
  }
}

TEST_CASE("torque maps linearly to per-channel amplitude with clamping") {
  const std::vector<ChannelCalib> calib{{2.0, 1.0, 10.0}, {0.5, 0.0, 2.0}};
  const Vector at0 = torque_to_amplitude(0.0, {{1.0, 0.0, 10.0}});
  CHECK(at0[0] == 0.0);
  const Vector amps = torque_to_amplitude(3.0, calib);
  CHECK(amps[0] == 7.0);  // 1 + 2*3
  CHECK(amps[1] == 1.5);
  const Vector capped = torque_to_amplitude(1000.0, calib);
  CHECK(capped[0] == 10.0);
  CHECK(capped[1] == 2.0);
}

TEST_CASE("interleaved schedule alternates 50 ms record/stimulate windows") {
  const Schedule s = interleave_schedule(200.0);
  REQUIRE(s.windows.size() == 4);
  CHECK(s.windows[0].start_ms == 0.0);
  CHECK(s.windows[0].end_ms == 50.0);
  CHECK(s.windows[0].kind == WindowKind::record);
  CHECK(s.windows[1].kind == WindowKind::stimulate);
  CHECK(s.windows[2].kind == WindowKind::record);
  CHECK(s.windows[3].end_ms == 200.0);
  CHECK(s.windows[3].kind == WindowKind::stimulate);
}

TEST_CASE("schedule edge cases: single window and truncation") {
  const Schedule single = interleave_schedule(50.0);
  REQUIRE(single.windows.size() == 1);
  CHECK(single.windows[0].kind == WindowKind::record);

  const Schedule trunc = interleave_schedule(130.0);
  REQUIRE(trunc.windows.size() == 3);
  CHECK(trunc.windows[2].start_ms == 100.0);
  CHECK(trunc.windows[2].end_ms == 130.0);
  CHECK(trunc.windows[2].kind == WindowKind::record);
}

TEST_CASE("schedule windows are contiguous, non-overlapping, alternating") {
  const Schedule s = interleave_schedule(1234.0, 50.0, 50.0);
  for (std::size_t i = 1; i < s.windows.size(); ++i) {
    CHECK(s.windows[i].start_ms == s.windows[i - 1].end_ms);
    CHECK(s.windows[i].kind != s.windows[i - 1].kind);
  }
}

TEST_CASE("constrained generator emits only inside stimulate windows") {
  const Schedule s = interleave_schedule(10000.0);
  const PulseTrain carrier =
      continuous_pulse_train(300.0, 10000.0, 1.0, 200.0, PulseShape::biphasic);
  const PulseTrain gated = constrain_to_schedule(carrier, s);
  CHECK(!gated.empty());
  CHECK(gated.size() < carrier.size());
  for (const auto& e : gated) {
    const ScheduleWindow* w = s.window_at(static_cast<double>(e.t_ms));
    REQUIRE(w != nullptr);
    CHECK(w->kind == WindowKind::stimulate);
  }
}

TEST_CASE("blanking invalidates (t, t+blank] after each pulse") {
  PulseTrain train{{60, 0, 1.0, 200.0, PulseShape::biphasic}};
  std::vector<TimedSample> samples;
  for (double t = 55.0; t <= 75.0; t += 1.0) samples.push_back({t, 0.0, true});
  const auto masked = apply_blanking(samples, train, 10.0);
  for (const auto& s : masked) {
    const bool should_be_invalid = s.t_ms > 60.0 && s.t_ms <= 70.0;
    CHECK(s.valid == !should_be_invalid);
  }
}

TEST_CASE("blanking with no pulses leaves every sample valid") {
  std::vector<TimedSample> samples{{1.0, 0.0, false}, {2.0, 0.0, false}};
  const auto masked = apply_blanking(samples, {}, 7.0);
  for (const auto& s : masked) CHECK(s.valid);
}

TEST_CASE("overlapping blanking intervals merge") {
  PulseTrain train{{60, 0, 1.0, 200.0, PulseShape::biphasic},
                   {65, 0, 1.0, 200.0, PulseShape::biphasic}};
  const auto intervals = blanking_intervals(train, 10.0);
  REQUIRE(intervals.size() == 1);
  CHECK(intervals[0].first == 60.0);
  CHECK(intervals[0].second == 75.0);
}

TEST_CASE("blanking range is paper-bounded to [5, 10] ms") {
  CHECK_THROWS_AS(blanking_intervals({}, 4.9), std::invalid_argument);
  CHECK_THROWS_AS(blanking_intervals({}, 10.1), std::invalid_argument);
  CHECK(blanking_intervals({}, 5.0).empty());
  CHECK(blanking_intervals({}, 10.0).empty());
}

TEST_CASE("generators are pure functions of their arguments") {
  PulseTrainSpec spec;
  spec.intra_packet_hz = 200.0;
  const PulseTrain a = packeted_pulse_train(spec, 500.0);
  const PulseTrain b = packeted_pulse_train(spec, 500.0);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].t_ms == b[i].t_ms);
    CHECK(a[i].channel == b[i].channel);
  }
}
