#include <algorithm>
#include <cmath>

#include "bbci/coproc/coproc.hpp"

namespace bbci::coproc {

EmulatorDataset sample_stim_dataset(const BrainConfig& cfg, std::uint64_t brain_seed,
                                    std::size_t n_trials, std::size_t trial_bins,
                                    const StimSamplerSpec& sampler,
                                    double validation_fraction) {
  cfg.validate();
  require(n_trials >= 1, "sample_stim_dataset: need at least one trial");
  require(trial_bins >= 1, "sample_stim_dataset: need at least one bin per trial");
  require(sampler.s_max > 0, "sample_stim_dataset: s_max must be positive");
  require(validation_fraction > 0.0 && validation_fraction <= 0.5,
          "sample_stim_dataset: validation fraction must be in (0, 0.5]");

  EmulatorDataset ds;
  ds.s_max = sampler.s_max;
  ds.records.reserve(n_trials);

  const auto n_sweeps = static_cast<std::size_t>(
      std::llround(sampler.sweep_fraction * static_cast<double>(n_trials)));

  for (std::size_t trial = 0; trial < n_trials; ++trial) {
    Rng trial_rng = Rng(brain_seed).fork(trial);
    BrainState st = brainsim::make_initial_state(cfg, trial_rng.next());
    // Diverse starting activity so the context input carries information.
    for (auto& r : st.r_a) r = trial_rng.uniform(0.0, 0.3 * cfg.rate_max);
    for (auto& r : st.r_b) r = trial_rng.uniform(0.0, 0.3 * cfg.rate_max);

    EmulatorRecord rec;
    rec.validation = trial + 1 > n_trials - static_cast<std::size_t>(std::llround(
                                     validation_fraction * static_cast<double>(n_trials)));
    rec.stim.reserve(trial_bins);

    const bool sweep_trial = trial < n_sweeps;
    const std::size_t sweep_channel = sweep_trial ? trial % cfg.n_b : 0;
    Vector smooth(cfg.n_b, 0.0);

    // Initial observation = the context the emulator will condition on.
    rec.context.resize(cfg.n_a);
    for (std::size_t i = 0; i < cfg.n_a; ++i)
      rec.context[i] = std::clamp(st.r_a[i] + cfg.obs_noise_std * st.rng.gaussian(), 0.0,
                                  cfg.rate_max);

    for (std::size_t b = 0; b < trial_bins; ++b) {
      Vector stim(cfg.n_b, 0.0);
      if (sweep_trial) {
        // ramp 0 -> s_max on one channel
        stim[sweep_channel] = sampler.s_max * static_cast<double>(b) /
                              static_cast<double>(trial_bins > 1 ? trial_bins - 1 : 1);
      } else {
        for (std::size_t c = 0; c < cfg.n_b; ++c) {
          smooth[c] = sampler.smooth * smooth[c] +
                      (1.0 - sampler.smooth) * trial_rng.uniform(0.0, sampler.s_max);
          stim[c] = std::clamp(smooth[c] * 1.6, 0.0, sampler.s_max);
        }
      }
      brainsim::StepInputs in;
      in.stim_drive = &stim;
      brainsim::step(cfg, st, in);
      rec.stim.push_back(std::move(stim));
      rec.behavior.push_back(
          {static_cast<double>(b + 1) * cfg.dt_ms, st.hand_pos, st.hand_vel});
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

std::vector<TaskSpec> radial_tasks(std::size_t count, double radius, double duration_ms,
                                   double success_radius) {
  std::vector<TaskSpec> tasks;
  const double two_pi = 6.283185307179586476925286766559;
  for (std::size_t k = 0; k < count; ++k) {
    const double ang = two_pi * static_cast<double>(k) / static_cast<double>(count);
    TaskSpec t;
    t.target_pos = {radius * std::cos(ang), radius * std::sin(ang)};
    t.duration_ms = duration_ms;
    t.success_radius = success_radius;
    tasks.push_back(t);
  }
  return tasks;
}

}  // namespace bbci::coproc
