// Command-line entry point: `run` executes the TSM and/or Monte Carlo
// solver for a JSON config and writes CSV artifacts; `verify` runs the
// finite-difference and sampling oracles against the configured model.
//
// Exit codes: 0 success, 1 validation/parse failure, 2 runtime failure,
// 3 verification failure.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tsm/config.hpp"
#include "tsm/pipeline.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  long long mc_n = 0;
  int workers = -1;
  CLI::App* sub = nullptr;
};

void add_common(CLI::App* sub, CommonOpts& o) {
  o.sub = sub;
  sub->add_option("config", o.config_path, "JSON run configuration")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--out", o.out_dir, "output directory (overrides config)");
  sub->add_option("--seed", o.seed, "base RNG seed (overrides config)");
  sub->add_option("--mc-n", o.mc_n, "Monte Carlo realization count override");
  sub->add_option("--workers", o.workers,
                  "MC worker threads (0 = available parallelism)");
}

tsm::RunConfig effective_config(const CommonOpts& o) {
  tsm::RunConfig cfg = tsm::load_config(o.config_path);
  if (o.sub->count("--out")) {
    cfg.out_dir = o.out_dir;
  } else if (const char* env = std::getenv("TSM_OUT_DIR")) {
    cfg.out_dir = env;
  }
  if (o.sub->count("--seed")) cfg.seed = o.seed;
  if (o.sub->count("--mc-n")) {
    if (o.mc_n < 1) throw tsm::ValidationError("--mc-n must be >= 1");
    cfg.mc_n = o.mc_n;
  }
  if (o.sub->count("--workers")) {
    if (o.workers < 0) throw tsm::ValidationError("--workers must be >= 0");
    cfg.workers = o.workers;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty propagation for material-point models: one "
               "extended deterministic simulation with moment-based "
               "post-processing, plus a Monte Carlo reference"};
  app.require_subcommand(1);

  CommonOpts run_opts, verify_opts;
  CLI::App* run_cmd =
      app.add_subcommand("run", "simulate and write CSV artifacts");
  add_common(run_cmd, run_opts);
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "run tangent and sampling oracles");
  add_common(verify_cmd, verify_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run_cmd->parsed()) {
      const tsm::RunConfig cfg = effective_config(run_opts);
      const tsm::PipelineResult res = tsm::run_pipeline(cfg);
      tsm::write_artifacts(cfg, res);
      std::cout << "artifacts written to " << cfg.out_dir << "\n";
      if (res.ran_tsm && res.ran_mc && res.tsm_wall > 0.0)
        std::cout << "speedup (mc/tsm wall time): "
                  << res.mc_wall / res.tsm_wall << "\n";
      return 0;
    }
    const tsm::RunConfig cfg = effective_config(verify_opts);
    const tsm::VerifyReport rep = tsm::run_verify(cfg);
    std::cout << rep.text();
    return rep.pass() ? 0 : 3;
  } catch (const tsm::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const tsm::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
