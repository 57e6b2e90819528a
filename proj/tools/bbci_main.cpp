#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "bbci/bench/config.hpp"
#include "bbci/bench/experiment.hpp"

namespace {

std::string output_override() {
  const char* env = std::getenv("BBCI_OUTPUT_DIR");
  return env ? std::string(env) : std::string();
}

int run_with_config(const std::string& path, const std::string& forced_scenario,
                    bool eval_only = false) {
  auto config = bbci::bench::Config::parse_file(path);
  if (!forced_scenario.empty()) {
    const std::string actual = config.get_string("experiment", "scenario");
    if (actual != forced_scenario)
      throw std::runtime_error("this subcommand expects scenario '" + forced_scenario +
                               "', config declares '" + actual + "'");
  }
  const auto manifest = eval_only ? bbci::bench::run_eval_only(config, output_override())
                                  : bbci::bench::run_experiment(config, output_override());
  std::printf("wrote %zu files:\n", manifest.size());
  for (const auto& e : manifest) std::printf("  %s  %s\n", e.digest.c_str(), e.path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"closed-loop bidirectional BCI simulation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  auto add_config_sub = [&](const std::string& name, const std::string& desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("config", config_path, "experiment config file")->required();
    return sub;
  };

  CLI::App* cmd_run = add_config_sub("run", "run the scenario declared in the config");
  CLI::App* cmd_decode = add_config_sub("decode-bench", "decoder accuracy suites");
  CLI::App* cmd_encode = add_config_sub("encode-demo", "pulse-train and scheduling demos");
  CLI::App* cmd_plast = add_config_sub("plasticity-demo", "conditioning vs shuffled control");
  CLI::App* cmd_emu = add_config_sub("train-emulator", "train the emulator network");
  CLI::App* cmd_ncp = add_config_sub("train-ncp", "train the co-processor through the frozen emulator");
  CLI::App* cmd_eval = add_config_sub("eval", "closed-loop evaluation from a saved co-processor");
  CLI::App* cmd_coadapt = add_config_sub("coadapt", "co-adaptation sessions with plasticity");
  CLI::App* cmd_grad = app.add_subcommand("grad-check", "verify gradients on seeded nets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) return run_with_config(config_path, "");
    if (cmd_decode->parsed()) return run_with_config(config_path, "codec_bench");
    if (cmd_encode->parsed()) return run_with_config(config_path, "encode_demo");
    if (cmd_plast->parsed()) return run_with_config(config_path, "plasticity_demo");
    if (cmd_emu->parsed()) return run_with_config(config_path, "emulator");
    if (cmd_ncp->parsed()) return run_with_config(config_path, "ncp");
    if (cmd_eval->parsed()) return run_with_config(config_path, "", true);
    if (cmd_coadapt->parsed()) return run_with_config(config_path, "coadapt");
    if (cmd_grad->parsed()) {
      const double worst = bbci::bench::run_grad_check_suite();
      if (worst >= 1e-4) {
        std::fprintf(stderr, "error: gradient check failed (%.3e >= 1e-4)\n", worst);
        return 1;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
