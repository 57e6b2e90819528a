#include "bbci/bench/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "bbci/brainsim/brain.hpp"
#include "bbci/codec/bandpower.hpp"
#include "bbci/codec/kalman.hpp"
#include "bbci/codec/lda.hpp"
#include "bbci/codec/multiclass.hpp"
#include "bbci/codec/threshold.hpp"
#include "bbci/coproc/coproc.hpp"
#include "bbci/core/digest.hpp"
#include "bbci/plasticity/conditioning.hpp"
#include "bbci/stimcode/pulse.hpp"
#include "bbci/stimcode/schedule.hpp"

namespace fs = std::filesystem;

namespace bbci::bench {

namespace {

const std::vector<std::string> kAllowedKeys = {
    "experiment.scenario", "experiment.seeds", "experiment.output_dir",
    "brain.n_a", "brain.n_b", "brain.dt_ms", "brain.tau_ms", "brain.noise_std",
    "brain.obs_noise_std", "brain.stim_coupling", "brain.rate_max", "brain.intent_gain",
    "brain.readout_gain", "brain.pathway_gain", "brain.weight_seed", "brain.lesion_fraction",
    "brain.lesion_seed",
    "task.n_targets", "task.radius", "task.duration_ms", "task.success_radius",
    "plasticity.eta", "plasticity.lambda_decay", "plasticity.w_clip", "plasticity.enabled",
    "emulator.hidden", "emulator.epochs", "emulator.step_size", "emulator.n_trials",
    "emulator.trial_bins", "emulator.validation_fraction", "emulator.s_max",
    "emulator.net_seed", "emulator.data_seed",
    "ncp.hidden", "ncp.sessions", "ncp.steps_per_session", "ncp.step_size", "ncp.alpha",
    "ncp.beta", "ncp.gamma", "ncp.net_seed", "ncp.train_seed", "ncp.emulator_dir",
    "eval.checkpoint_dir", "eval.output_dir", "eval.eval_seed",
    "coadapt.sessions", "coadapt.checkpoint_dir", "coadapt.eval_seed",
    "conditioning.source_unit", "conditioning.target_units", "conditioning.delay_ms",
    "conditioning.detect_threshold_hz", "conditioning.stim_amplitude",
    "conditioning.session_bins", "conditioning.burst_prob", "conditioning.burst_amp",
    "conditioning.burst_bins",
    "codec_bench.n_train", "codec_bench.n_test",
    "encode_demo.duration_ms", "encode_demo.blank_ms", "encode_demo.session_ms",
};

std::vector<std::string> required_sections(const std::string& scenario) {
  if (scenario == "codec_bench") return {"experiment", "codec_bench"};
  if (scenario == "encode_demo") return {"experiment", "encode_demo"};
  if (scenario == "plasticity_demo") return {"experiment", "brain", "plasticity", "conditioning"};
  if (scenario == "emulator") return {"experiment", "brain", "emulator"};
  if (scenario == "ncp") return {"experiment", "brain", "task", "ncp"};
  if (scenario == "coadapt") return {"experiment", "brain", "task", "plasticity", "coadapt"};
  if (scenario == "full_pipeline")
    return {"experiment", "brain", "task", "emulator", "ncp", "plasticity", "coadapt"};
  throw std::runtime_error("config: unknown scenario '" + scenario + "' (expected one of " +
                           [] {
                             std::string s;
                             for (const auto& n : kScenarios) s += n + " ";
                             return s;
                           }());
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t run_seed) {
  return Rng(base).fork(run_seed).next();
}

brainsim::BrainConfig brain_from_config(const Config& cfg) {
  brainsim::BrainGenSpec spec;
  spec.n_a = static_cast<std::size_t>(cfg.get_int("brain", "n_a", 16));
  spec.n_b = static_cast<std::size_t>(cfg.get_int("brain", "n_b", 16));
  spec.dt_ms = cfg.get_double("brain", "dt_ms", 10.0);
  spec.tau_ms = cfg.get_double("brain", "tau_ms", 50.0);
  spec.noise_std = cfg.get_double("brain", "noise_std", 1.0);
  spec.obs_noise_std = cfg.get_double("brain", "obs_noise_std", 0.5);
  spec.stim_coupling = cfg.get_double("brain", "stim_coupling", 20.0);
  spec.rate_max = cfg.get_double("brain", "rate_max", 100.0);
  spec.intent_gain = cfg.get_double("brain", "intent_gain", 120.0);
  spec.readout_gain = cfg.get_double("brain", "readout_gain", 0.004);
  spec.pathway_gain = cfg.get_double("brain", "pathway_gain", 4.0);
  spec.weight_seed = static_cast<std::uint64_t>(cfg.get_int("brain", "weight_seed", 1));
  brainsim::BrainConfig bc = brainsim::make_default_brain(spec);
  const double lesion = cfg.get_double("brain", "lesion_fraction", 0.0);
  if (lesion > 0.0)
    bc = brainsim::apply_lesion(bc, lesion,
                                static_cast<std::uint64_t>(cfg.get_int("brain", "lesion_seed", 0)));
  return bc;
}

std::vector<brainsim::TaskSpec> tasks_from_config(const Config& cfg) {
  return coproc::radial_tasks(static_cast<std::size_t>(cfg.get_int("task", "n_targets", 8)),
                              cfg.get_double("task", "radius", 3.0),
                              cfg.get_double("task", "duration_ms", 1500.0),
                              cfg.get_double("task", "success_radius", 0.5));
}

brainsim::PlasticityParams plasticity_from_config(const Config& cfg) {
  brainsim::PlasticityParams p;
  p.eta = cfg.get_double("plasticity", "eta", 0.0);
  p.lambda_decay = cfg.get_double("plasticity", "lambda_decay", 0.0);
  p.w_clip = cfg.get_double("plasticity", "w_clip", 0.5);
  p.enabled = cfg.get_bool("plasticity", "enabled", false);
  return p;
}

struct RunContext {
  std::string scenario;
  std::vector<std::uint64_t> seeds;
  fs::path out;
  std::vector<MetricsRow> rows;

  fs::path seed_dir(std::uint64_t seed) const {
    return out / ("seed_" + std::to_string(seed));
  }
  void add(std::uint64_t seed, const std::string& condition, const std::string& metric,
           double value, const std::string& units) {
    rows.push_back({scenario, static_cast<long>(seed), condition, metric, value, units});
  }
};

void write_history_csv(const std::vector<coproc::EpochStats>& history, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,train_loss,val_loss\n";
  for (const auto& h : history)
    out << h.epoch << ',' << format_value(h.train_loss) << ',' << format_value(h.validation_loss)
        << '\n';
}

void write_history_csv(const std::vector<coproc::SessionStats>& history, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "session,total,terminal,path,energy\n";
  for (const auto& h : history)
    out << h.session << ',' << format_value(h.total) << ',' << format_value(h.terminal) << ','
        << format_value(h.path) << ',' << format_value(h.energy) << '\n';
}

// ---- codec_bench ---------------------------------------------------------

Matrix gaussian_blob(Rng& rng, std::size_t n, const Vector& mean, double sigma) {
  Matrix m(n, mean.size());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < mean.size(); ++c) m(r, c) = mean[c] + sigma * rng.gaussian();
  return m;
}

void append_rows(Matrix& dst, const Matrix& src) {
  Matrix merged(dst.rows() + src.rows(), src.cols());
  for (std::size_t r = 0; r < dst.rows(); ++r)
    for (std::size_t c = 0; c < dst.cols(); ++c) merged(r, c) = dst(r, c);
  for (std::size_t r = 0; r < src.rows(); ++r)
    for (std::size_t c = 0; c < src.cols(); ++c) merged(dst.rows() + r, c) = src(r, c);
  dst = std::move(merged);
}

void scenario_codec_bench(const Config& cfg, RunContext& ctx) {
  const auto n_train = static_cast<std::size_t>(cfg.get_int("codec_bench", "n_train", 400));
  const auto n_test = static_cast<std::size_t>(cfg.get_int("codec_bench", "n_test", 1000));

  for (std::uint64_t seed : ctx.seeds) {
    Rng rng(derive_seed(0xC0DEC, seed));

    // Two 4-sigma separated gait-like classes.
    {
      const Vector mu0{0.0, 0.0, 0.0};
      const Vector mu1{4.0 / std::sqrt(3.0), 4.0 / std::sqrt(3.0), 4.0 / std::sqrt(3.0)};
      Matrix train = gaussian_blob(rng, n_train / 2, mu0, 1.0);
      append_rows(train, gaussian_blob(rng, n_train / 2, mu1, 1.0));
      std::vector<int> labels(n_train / 2, 0);
      labels.insert(labels.end(), n_train / 2, 1);
      const auto model = codec::lda_fit(train, labels);
      Matrix test = gaussian_blob(rng, n_test / 2, mu0, 1.0);
      append_rows(test, gaussian_blob(rng, n_test / 2, mu1, 1.0));
      std::size_t correct = 0;
      for (std::size_t r = 0; r < test.rows(); ++r)
        if (model.predict(test.row(r)) == (r < n_test / 2 ? 0 : 1)) ++correct;
      ctx.add(seed, "lda_separable", "holdout_accuracy",
              static_cast<double>(correct) / static_cast<double>(test.rows()), "fraction");
    }

    // Identical-mean classes decode at chance.
    {
      const Vector mu{1.0, 1.0, 1.0};
      Matrix train = gaussian_blob(rng, n_train / 2, mu, 1.0);
      append_rows(train, gaussian_blob(rng, n_train / 2, mu, 1.0));
      std::vector<int> labels(n_train / 2, 0);
      labels.insert(labels.end(), n_train / 2, 1);
      const auto model = codec::lda_fit(train, labels);
      Matrix test = gaussian_blob(rng, n_test / 2, mu, 1.0);
      append_rows(test, gaussian_blob(rng, n_test / 2, mu, 1.0));
      std::size_t correct = 0;
      for (std::size_t r = 0; r < test.rows(); ++r)
        if (model.predict(test.row(r)) == (r < n_test / 2 ? 0 : 1)) ++correct;
      ctx.add(seed, "lda_identical_means", "holdout_accuracy",
              static_cast<double>(correct) / static_cast<double>(test.rows()), "fraction");
    }

    // Six movement classes at hexagon vertices, 4 sigma apart.
    {
      const double radius = 4.0;
      const double two_pi = 6.283185307179586476925286766559;
      Matrix train, test;
      std::vector<std::size_t> train_labels, test_labels;
      for (std::size_t c = 0; c < 6; ++c) {
        const Vector mu{radius * std::cos(two_pi * c / 6.0), radius * std::sin(two_pi * c / 6.0)};
        Matrix tr = gaussian_blob(rng, n_train / 6, mu, 1.0);
        Matrix te = gaussian_blob(rng, n_test / 6, mu, 1.0);
        if (train.empty()) {
          train = tr;
          test = te;
        } else {
          append_rows(train, tr);
          append_rows(test, te);
        }
        train_labels.insert(train_labels.end(), n_train / 6, c);
        test_labels.insert(test_labels.end(), n_test / 6, c);
      }
      const auto model = codec::multiclass_fit(train, train_labels, 6);
      std::size_t correct = 0;
      for (std::size_t r = 0; r < test.rows(); ++r)
        if (model.predict(test.row(r)) == test_labels[r]) ++correct;
      ctx.add(seed, "multiclass_hexagon", "holdout_accuracy",
              static_cast<double>(correct) / static_cast<double>(test.rows()), "fraction");
    }

    // Kalman recovery on a synthetic 2-state / 3-obs system.
    {
      Matrix a(2, 2);
      a(0, 0) = 0.9;
      a(0, 1) = 0.1;
      a(1, 0) = -0.05;
      a(1, 1) = 0.85;
      Matrix b(3, 2);
      for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-1.0, 1.0);
      std::vector<Vector> xs, ys;
      Vector x{1.0, -0.5};
      for (std::size_t t = 0; t < 2000; ++t) {
        Vector nx(2), y(3);
        for (std::size_t i = 0; i < 2; ++i)
          nx[i] = a(i, 0) * x[0] + a(i, 1) * x[1] + 0.1 * rng.gaussian();
        for (std::size_t i = 0; i < 3; ++i)
          y[i] = b(i, 0) * nx[0] + b(i, 1) * nx[1] + 0.2 * rng.gaussian();
        x = nx;
        xs.push_back(x);
        ys.push_back(y);
      }
      const auto model = codec::kalman_fit(xs, ys);
      double err_a = 0.0;
      for (std::size_t i = 0; i < 4; ++i)
        err_a = std::max(err_a, std::abs(model.dyn_a.data()[i] - a.data()[i]));
      ctx.add(seed, "kalman_fit", "dyn_a_max_error", err_a, "abs");
      ctx.add(seed, "kalman_fit", "q_var_estimate", model.q_cov(0, 0), "rate_sq");
    }

    // Operant rate law sample point and a band-power drop detection.
    {
      const Vector trace{10.0, 24.0, 30.0, 60.0};
      const Vector out = codec::rate_threshold_decode(trace, 24.0, 0.8);
      ctx.add(seed, "rate_threshold", "control_at_30hz", out[2], "mA");

      const double fs = 200.0;
      Vector sig(static_cast<std::size_t>(fs) * 4);
      for (std::size_t i = 0; i < sig.size(); ++i) {
        const double t = static_cast<double>(i) / fs;
        const double amp = t < 2.0 ? 1.0 : 0.45;
        sig[i] = amp * std::sin(2.0 * 3.14159265358979323846 * 10.0 * t);
      }
      const auto res = codec::band_power_trigger(sig, fs, 8.0, 12.0, 200.0, 0.5);
      ctx.add(seed, "band_power", "trigger_count",
              static_cast<double>(res.trigger_indices.size()), "count");
      ctx.add(seed, "band_power", "first_trigger_ms",
              res.trigger_indices.empty()
                  ? -1.0
                  : res.windows[res.trigger_indices.front()].start_ms,
              "ms");
    }
  }
}

// ---- encode_demo ---------------------------------------------------------

void scenario_encode_demo(const Config& cfg, RunContext& ctx) {
  const double duration = cfg.get_double("encode_demo", "duration_ms", 1000.0);
  const double blank = cfg.get_double("encode_demo", "blank_ms", 10.0);
  const double session = cfg.get_double("encode_demo", "session_ms", 10000.0);

  using namespace stimcode;
  PulseTrainSpec rewarded;  // 200 Hz in 10 Hz packets
  rewarded.intra_packet_hz = 200.0;
  rewarded.packet_hz = 10.0;
  rewarded.packet_ms = 50.0;
  rewarded.amplitude_ma = 0.06;
  rewarded.pulse_width_us = 200.0;
  PulseTrainSpec unrewarded = rewarded;  // 400 Hz in 5 Hz packets
  unrewarded.intra_packet_hz = 400.0;
  unrewarded.packet_hz = 5.0;

  const PulseTrain train_r = packeted_pulse_train(rewarded, duration);
  const PulseTrain train_u = packeted_pulse_train(unrewarded, duration);
  const PulseTrain train_300 =
      continuous_pulse_train(300.0, duration, 0.06, 200.0, PulseShape::biphasic);
  const PulseTrain train_fes =
      continuous_pulse_train(50.0, duration, 10.0, 500.0, PulseShape::monophasic);
  write_pulse_train_csv(train_r, (ctx.out / "pulses_rewarded.csv").string());
  write_pulse_train_csv(train_u, (ctx.out / "pulses_unrewarded.csv").string());
  write_pulse_train_csv(train_300, (ctx.out / "pulses_continuous_300hz.csv").string());
  write_pulse_train_csv(train_fes, (ctx.out / "pulses_fes_50hz.csv").string());

  const Schedule sched = interleave_schedule(session);
  write_schedule_csv(sched, (ctx.out / "schedule.csv").string());

  // Interleaved session: 300 Hz carrier constrained to stimulate windows,
  // then recording samples blanked after each pulse.
  const PulseTrain carrier =
      continuous_pulse_train(300.0, session, 0.06, 200.0, PulseShape::biphasic);
  const PulseTrain gated = constrain_to_schedule(carrier, sched);
  std::vector<TimedSample> samples;
  for (double t = 0.0; t < session; t += 1.0) samples.push_back({t, 0.0, true});
  const auto masked = apply_blanking(samples, gated, blank);
  std::size_t invalid = 0;
  for (const auto& s : masked)
    if (!s.valid) ++invalid;

  for (std::uint64_t seed : ctx.seeds) {
    ctx.add(seed, "rewarded", "pulse_count", static_cast<double>(train_r.size()), "count");
    ctx.add(seed, "unrewarded", "pulse_count", static_cast<double>(train_u.size()), "count");
    ctx.add(seed, "continuous_300hz", "pulse_count", static_cast<double>(train_300.size()),
            "count");
    ctx.add(seed, "fes_50hz", "pulse_count", static_cast<double>(train_fes.size()), "count");
    ctx.add(seed, "interleaved", "gated_pulse_count", static_cast<double>(gated.size()), "count");
    ctx.add(seed, "interleaved", "blanked_samples", static_cast<double>(invalid), "count");
    const auto fes = fes_currents(30.0);
    ctx.add(seed, "fes_law", "flexor_at_30hz", fes.flexor_ma, "mA");
    ctx.add(seed, "fes_law", "extensor_at_0hz", fes_currents(0.0).extensor_ma, "mA");
  }
}

// ---- plasticity_demo -----------------------------------------------------

void scenario_plasticity_demo(const Config& cfg, RunContext& ctx) {
  const brainsim::BrainConfig brain = brain_from_config(cfg);
  brainsim::PlasticityParams plast = plasticity_from_config(cfg);
  require(plast.enabled, "plasticity_demo: [plasticity] enabled must be true");

  plasticity::ConditioningProtocol proto;
  proto.source_unit = static_cast<std::size_t>(cfg.get_int("conditioning", "source_unit", 0));
  if (cfg.has("conditioning", "target_units")) {
    proto.target_units.clear();
    for (std::uint64_t u : cfg.get_seed_list("conditioning", "target_units"))
      proto.target_units.push_back(static_cast<std::size_t>(u));
  } else {
    proto.target_units = {brain.n_b / 4};
  }
  proto.delay_ms = cfg.get_double("conditioning", "delay_ms", 7.5);
  proto.detect_threshold_hz = cfg.get_double("conditioning", "detect_threshold_hz", 50.0);
  proto.stim_amplitude = cfg.get_double("conditioning", "stim_amplitude", 4.0);
  proto.session_bins = static_cast<std::size_t>(cfg.get_int("conditioning", "session_bins", 3000));

  plasticity::BackgroundDrive bg;
  bg.burst_prob = cfg.get_double("conditioning", "burst_prob", 0.004);
  bg.burst_amp_hz = cfg.get_double("conditioning", "burst_amp", 400.0);
  bg.burst_bins = static_cast<std::size_t>(cfg.get_int("conditioning", "burst_bins", 6));

  struct SeedResult {
    plasticity::ShiftReport triggered;
    plasticity::ShiftReport shuffled;
  };
  std::vector<SeedResult> results(ctx.seeds.size());
  std::string error;

  // Seeds are independent runs; partial results land in per-seed slots.
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(ctx.seeds.size()); ++i) {
    try {
      const std::uint64_t seed = ctx.seeds[i];
      plasticity::BackgroundDrive bg_seed = bg;
      bg_seed.seed = derive_seed(0xBB, seed);
      const brainsim::BrainState pre = brainsim::make_initial_state(brain, derive_seed(0xA0, seed));

      plasticity::ConditioningProtocol trig = proto;
      trig.control_mode = plasticity::ConditioningProtocol::ControlMode::none;
      const auto run_t = plasticity::run_conditioning(brain, pre, trig, plast, bg_seed);
      results[i].triggered =
          plasticity::measure_shift(brain, pre, run_t.state, proto, run_t.stim_count);

      plasticity::ConditioningProtocol ctrl = proto;
      ctrl.control_mode = plasticity::ConditioningProtocol::ControlMode::shuffled_timing;
      const auto run_c = plasticity::run_conditioning(brain, pre, ctrl, plast, bg_seed);
      results[i].shuffled =
          plasticity::measure_shift(brain, pre, run_c.state, proto, run_c.stim_count);
    } catch (const std::exception& e) {
#pragma omp critical
      if (error.empty()) error = e.what();
    }
  }
  if (!error.empty()) throw std::runtime_error(error);

  std::ofstream csv(ctx.out / "plasticity.csv", std::ios::binary);
  csv << "seed,mode,stim_count,cosine_gain\n";
  for (std::size_t i = 0; i < ctx.seeds.size(); ++i) {
    const std::uint64_t seed = ctx.seeds[i];
    csv << seed << ",triggered," << results[i].triggered.stim_count << ','
        << format_value(results[i].triggered.cosine_gain) << '\n';
    csv << seed << ",shuffled," << results[i].shuffled.stim_count << ','
        << format_value(results[i].shuffled.cosine_gain) << '\n';
    ctx.add(seed, "triggered", "cosine_gain", results[i].triggered.cosine_gain, "cosine");
    ctx.add(seed, "triggered", "stim_count",
            static_cast<double>(results[i].triggered.stim_count), "count");
    ctx.add(seed, "shuffled", "cosine_gain", results[i].shuffled.cosine_gain, "cosine");
    ctx.add(seed, "shuffled", "stim_count", static_cast<double>(results[i].shuffled.stim_count),
            "count");
  }
}

// ---- emulator / ncp / coadapt / full_pipeline ------------------------------

struct EmulatorArtifacts {
  coproc::EmulatorDataset dataset;
  diffnet::NetParams en;
};

EmulatorArtifacts train_emulator_for_seed(const Config& cfg, const brainsim::BrainConfig& brain,
                                          std::uint64_t seed, const fs::path& seed_dir,
                                          RunContext& ctx) {
  coproc::StimSamplerSpec sampler;
  sampler.s_max = cfg.get_double("emulator", "s_max", 5.0);
  const auto n_trials = static_cast<std::size_t>(cfg.get_int("emulator", "n_trials", 80));
  const auto trial_bins = static_cast<std::size_t>(cfg.get_int("emulator", "trial_bins", 150));
  const double val_frac = cfg.get_double("emulator", "validation_fraction", 0.2);
  const auto dataset = coproc::sample_stim_dataset(
      brain, derive_seed(static_cast<std::uint64_t>(cfg.get_int("emulator", "data_seed", 3)), seed),
      n_trials, trial_bins, sampler, val_frac);

  auto en_init = coproc::default_en(
      brain.n_b, brain.n_a, static_cast<std::size_t>(cfg.get_int("emulator", "hidden", 32)),
      derive_seed(static_cast<std::uint64_t>(cfg.get_int("emulator", "net_seed", 2)), seed));
  auto opt = diffnet::make_opt_state(diffnet::OptMethod::adam,
                                     cfg.get_double("emulator", "step_size", 0.01), en_init);
  auto trained = coproc::train_emulator(
      dataset, en_init, static_cast<std::size_t>(cfg.get_int("emulator", "epochs", 300)), opt);

  write_history_csv(trained.history, seed_dir / "history.csv");
  save_checkpoint_file(diffnet::to_checkpoint(trained.en), (seed_dir / "en.ckpt").string());

  const double r2 = coproc::emulator_validation_r2(trained.en, dataset, brain.rate_max);
  ctx.add(seed, "emulator", "validation_r2", r2, "r2");
  if (!trained.history.empty()) {
    ctx.add(seed, "emulator", "final_train_loss", trained.history.back().train_loss, "mse");
    ctx.add(seed, "emulator", "final_val_loss", trained.history.back().validation_loss, "mse");
  }
  return {dataset, trained.en};
}

coproc::CoprocModel train_ncp_for_seed(const Config& cfg, const brainsim::BrainConfig& brain,
                                       const diffnet::NetParams& en, std::uint64_t seed,
                                       const fs::path& seed_dir) {
  coproc::CoprocModel model;
  model.en = en;
  model.s_max = cfg.get_double("emulator", "s_max", 5.0);
  model.rate_max = brain.rate_max;
  model.ncp = coproc::default_ncp(
      brain.n_a, brain.n_b, static_cast<std::size_t>(cfg.get_int("ncp", "hidden", 32)),
      model.s_max, derive_seed(static_cast<std::uint64_t>(cfg.get_int("ncp", "net_seed", 4)), seed));
  model.refresh_en_digest();

  coproc::NcpTrainOptions opts;
  opts.weights.alpha = cfg.get_double("ncp", "alpha", 1.0);
  opts.weights.beta = cfg.get_double("ncp", "beta", 0.1);
  opts.weights.gamma = cfg.get_double("ncp", "gamma", 1e-3);
  opts.brain_seed = derive_seed(static_cast<std::uint64_t>(cfg.get_int("ncp", "train_seed", 11)),
                                seed);
  opts.steps_per_session =
      static_cast<std::size_t>(cfg.get_int("ncp", "steps_per_session", 4));

  auto opt = diffnet::make_opt_state(diffnet::OptMethod::adam,
                                     cfg.get_double("ncp", "step_size", 0.003), model.ncp);
  const auto tasks = tasks_from_config(cfg);
  auto trained = coproc::train_ncp(
      model, brain, tasks, static_cast<std::size_t>(cfg.get_int("ncp", "sessions", 200)), opt,
      opts);

  write_history_csv(trained.history, seed_dir / "history.csv");
  save_checkpoint_file(coproc::to_checkpoint(trained.model), (seed_dir / "ncp.ckpt").string());
  return trained.model;
}

void eval_for_seed(const Config& cfg, const brainsim::BrainConfig& brain,
                   const coproc::CoprocModel& model, std::uint64_t seed, RunContext& ctx) {
  const auto tasks = tasks_from_config(cfg);
  const std::uint64_t eval_seed = derive_seed(
      static_cast<std::uint64_t>(cfg.get_int("eval", "eval_seed", 101)), seed);

  const auto ncp_m = coproc::closed_loop_eval(model, brain, eval_seed, tasks,
                                              coproc::PolicyMode::ncp);
  const auto zero_m = coproc::closed_loop_eval(model, brain, eval_seed, tasks,
                                               coproc::PolicyMode::zero_stim);
  coproc::EvalOptions ropts;
  ropts.random_energy = ncp_m.mean_stim_energy;  // energy-matched control
  const auto rand_m = coproc::closed_loop_eval(model, brain, eval_seed, tasks,
                                               coproc::PolicyMode::random_stim, ropts);

  for (const auto& [mode, m] :
       {std::pair{"ncp", &ncp_m}, std::pair{"zero_stim", &zero_m},
        std::pair{"random_stim", &rand_m}}) {
    ctx.add(seed, mode, "mean_terminal_distance", m->mean_terminal_distance, "units");
    ctx.add(seed, mode, "success_rate", m->success_rate, "fraction");
    ctx.add(seed, mode, "mean_stim_energy", m->mean_stim_energy, "drive_sq");
  }
}

void coadapt_for_seed(const Config& cfg, const brainsim::BrainConfig& brain,
                      const coproc::CoprocModel& model, std::uint64_t seed,
                      const fs::path& seed_dir, RunContext& ctx) {
  auto plast = plasticity_from_config(cfg);
  require(plast.enabled, "coadapt: [plasticity] enabled must be true");
  const auto tasks = tasks_from_config(cfg);
  const auto sessions = static_cast<std::size_t>(cfg.get_int("coadapt", "sessions", 20));
  const std::uint64_t eval_seed = derive_seed(
      static_cast<std::uint64_t>(cfg.get_int("coadapt", "eval_seed", 101)), seed);

  brainsim::BrainState st = brainsim::make_initial_state(brain, derive_seed(0xADA, seed));
  auto [post_state, report] =
      coproc::coadaptation_session(model, brain, st, plast, tasks, sessions, eval_seed);

  save_checkpoint_file(brainsim::state_to_checkpoint(post_state),
                       (seed_dir / "brain_post.ckpt").string());
  ctx.add(seed, "coadapt", "pre_zero_stim_distance",
          report.pre_zero_stim.mean_terminal_distance, "units");
  ctx.add(seed, "coadapt", "post_zero_stim_distance",
          report.post_zero_stim.mean_terminal_distance, "units");
  ctx.add(seed, "coadapt", "weight_change_norm", report.weight_change_norm, "weight");
  ctx.add(seed, "coadapt", "sessions", static_cast<double>(report.sessions), "count");
}

void scenario_emulator(const Config& cfg, RunContext& ctx) {
  const auto brain = brain_from_config(cfg);
  for (std::uint64_t seed : ctx.seeds) {
    const fs::path dir = ctx.seed_dir(seed);
    fs::create_directories(dir);
    train_emulator_for_seed(cfg, brain, seed, dir, ctx);
  }
}

void scenario_ncp(const Config& cfg, RunContext& ctx) {
  const auto brain = brain_from_config(cfg);
  const std::string emu_dir = cfg.get_string("ncp", "emulator_dir");
  for (std::uint64_t seed : ctx.seeds) {
    const fs::path dir = ctx.seed_dir(seed);
    fs::create_directories(dir);
    const fs::path en_path =
        fs::path(emu_dir) / ("seed_" + std::to_string(seed)) / "en.ckpt";
    const auto en = diffnet::net_params_from_checkpoint(load_checkpoint_file(en_path.string()));
    const auto model = train_ncp_for_seed(cfg, brain, en, seed, dir);
    eval_for_seed(cfg, brain, model, seed, ctx);
  }
}

void scenario_coadapt(const Config& cfg, RunContext& ctx) {
  const auto brain = brain_from_config(cfg);
  const std::string ckpt_dir = cfg.get_string("coadapt", "checkpoint_dir");
  for (std::uint64_t seed : ctx.seeds) {
    const fs::path dir = ctx.seed_dir(seed);
    fs::create_directories(dir);
    const fs::path path =
        fs::path(ckpt_dir) / ("seed_" + std::to_string(seed)) / "ncp.ckpt";
    const auto model = coproc::coproc_from_checkpoint(load_checkpoint_file(path.string()));
    coadapt_for_seed(cfg, brain, model, seed, dir, ctx);
  }
}

void scenario_full_pipeline(const Config& cfg, RunContext& ctx) {
  const auto brain = brain_from_config(cfg);
  for (std::uint64_t seed : ctx.seeds) {
    const fs::path dir = ctx.seed_dir(seed);
    fs::create_directories(dir);
    auto art = train_emulator_for_seed(cfg, brain, seed, dir, ctx);
    fs::rename(dir / "history.csv", dir / "emulator_history.csv");
    const auto model = train_ncp_for_seed(cfg, brain, art.en, seed, dir);
    fs::rename(dir / "history.csv", dir / "ncp_history.csv");
    eval_for_seed(cfg, brain, model, seed, ctx);
    coadapt_for_seed(cfg, brain, model, seed, dir, ctx);
  }
}

Manifest finalize_outputs(RunContext& ctx) {
  emit_metrics(ctx.rows, (ctx.out / "metrics.csv").string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(ctx.out))
    if (entry.is_regular_file() && entry.path().filename() != "manifest.txt")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  Manifest manifest;
  std::ofstream out(ctx.out / "manifest.txt", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest");
  for (const fs::path& f : files) {
    ManifestEntry e;
    e.path = fs::relative(f, ctx.out).generic_string();
    e.digest = file_digest_hex(f.string());
    out << e.digest << "  " << e.path << '\n';
    manifest.push_back(std::move(e));
  }
  return manifest;
}

}  // namespace

Manifest run_experiment(const Config& config, const std::string& output_dir_override) {
  const std::string scenario = config.get_string("experiment", "scenario");
  config.validate_keys(kAllowedKeys, required_sections(scenario));

  RunContext ctx;
  ctx.scenario = scenario;
  ctx.seeds = config.get_seed_list("experiment", "seeds");
  ctx.out = output_dir_override.empty() ? config.get_string("experiment", "output_dir")
                                        : output_dir_override;
  fs::create_directories(ctx.out);

  if (scenario == "codec_bench")
    scenario_codec_bench(config, ctx);
  else if (scenario == "encode_demo")
    scenario_encode_demo(config, ctx);
  else if (scenario == "plasticity_demo")
    scenario_plasticity_demo(config, ctx);
  else if (scenario == "emulator")
    scenario_emulator(config, ctx);
  else if (scenario == "ncp")
    scenario_ncp(config, ctx);
  else if (scenario == "coadapt")
    scenario_coadapt(config, ctx);
  else if (scenario == "full_pipeline")
    scenario_full_pipeline(config, ctx);
  else
    throw std::runtime_error("config: unknown scenario '" + scenario + "'");

  return finalize_outputs(ctx);
}

Manifest run_eval_only(const Config& config, const std::string& output_dir_override) {
  const std::string scenario = config.get_string("experiment", "scenario");
  require(scenario == "ncp" || scenario == "full_pipeline",
          "eval: config must describe an ncp or full_pipeline experiment");
  config.validate_keys(kAllowedKeys, {"experiment", "brain", "task", "eval"});

  RunContext ctx;
  ctx.scenario = scenario;
  ctx.seeds = config.get_seed_list("experiment", "seeds");
  ctx.out = output_dir_override.empty() ? config.get_string("eval", "output_dir") : output_dir_override;
  fs::create_directories(ctx.out);

  const auto brain = brain_from_config(config);
  const std::string ckpt_dir = config.get_string("eval", "checkpoint_dir");
  for (std::uint64_t seed : ctx.seeds) {
    const fs::path path = fs::path(ckpt_dir) / ("seed_" + std::to_string(seed)) / "ncp.ckpt";
    // include_en = false: evaluation never touches the emulator
    const auto model =
        coproc::coproc_from_checkpoint(load_checkpoint_file(path.string()), false);
    eval_for_seed(config, brain, model, seed, ctx);
  }
  return finalize_outputs(ctx);
}

double run_grad_check_suite() {
  using namespace diffnet;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    NetParams net;
    const std::size_t in = 3 + seed % 4;
    const std::size_t hid = 6 + seed % 5;
    if (seed % 2 == 0) {
      net.layers.push_back(make_recurrent("rec", in, hid, Activation::tanh, rng));
      net.layers.push_back(make_dense("out", hid, 2, Activation::identity, rng));
    } else {
      net.layers.push_back(make_dense("l1", in, hid, Activation::relu, rng));
      net.layers.push_back(make_dense("l2", hid, hid, Activation::tanh, rng));
      net.layers.push_back(make_dense("l3", hid, 2, Activation::bounded_sigmoid, rng, 3.0));
    }
    std::vector<Vector> inputs(5, Vector(in));
    std::vector<Vector> targets(5, Vector(2));
    for (auto& v : inputs)
      for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    for (auto& v : targets)
      for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    const double err = grad_check(net, inputs, nullptr, squared_error_loss(targets));
    std::printf("net %2llu (%zu params): max relative error %.3e\n",
                static_cast<unsigned long long>(seed), net.parameter_count(), err);
    worst = std::max(worst, err);
  }
  std::printf("worst over 10 nets: %.3e\n", worst);
  return worst;
}

}  // namespace bbci::bench
