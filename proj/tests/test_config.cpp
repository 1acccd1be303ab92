#include <catch2/catch_amalgamated.hpp>

#include "tsm/config.hpp"

using namespace tsm;

namespace {

const char* kMinimalDamage = R"json({
  "model": "damage",
  "material": {
    "lambda": {"mean": 12e9, "std": 1.8e9},
    "mu": {"mean": 8e9, "std": 1.2e9},
    "eta": 10e6
  },
  "load": {"kind": "proportional", "direction": [1,0,0,0,0,0], "rate": 2e-4},
  "grid": {"t_end": 100.0, "dt": 0.005}
})json";

const char* kViscoplastic = R"json({
  "model": "viscoplastic",
  "material": {
    "lambda": {"mean": 12e9, "std": 1.2e9},
    "mu": {"mean": 8e9, "std": 0.8e9},
    "sigma_y": {"mean": 50e6, "std": 10e6},
    "eta": 20e9
  },
  "correlation": {"mode": "fully_dependent"},
  "load": {"kind": "triangular_cycle", "direction": [0,0,0,0,0,1],
           "amplitude": 0.02, "period": 100.0},
  "grid": {"t_end": 100.0, "dt": 0.05}
})json";

}  // namespace

TEST_CASE("minimal config gets the documented defaults") {
  RunConfig cfg = parse_config(kMinimalDamage);
  CHECK(cfg.model == ModelKind::kDamage);
  CHECK(cfg.sp.tensors.size() == 1);
  CHECK(cfg.sp.tensors[0].lambda.mean == 12e9);
  CHECK(cfg.sp.tensors[0].mu.std == 1.2e9);
  CHECK_FALSE(cfg.sp.yield.has_value());
  CHECK(cfg.sp.correlation.mode == CorrelationMode::kIndependent);
  CHECK(cfg.eta == 10e6);
  CHECK(cfg.grid.n_steps == 20000);
  CHECK(cfg.solver == Solver::kBoth);
  CHECK(cfg.mc_n == 1000);
  CHECK(cfg.moment_samples == 1000000);
  CHECK(cfg.seed == 0);
  CHECK(cfg.workers == 0);
  CHECK(cfg.out_dir == "out");
}

TEST_CASE("scalar parameters accept the shorthand number form") {
  std::string text = kMinimalDamage;
  text.replace(text.find("{\"mean\": 12e9, \"std\": 1.8e9}"),
               std::string("{\"mean\": 12e9, \"std\": 1.8e9}").size(), "12e9");
  RunConfig cfg = parse_config(text);
  CHECK(cfg.sp.tensors[0].lambda.mean == 12e9);
  CHECK(cfg.sp.tensors[0].lambda.std == 0.0);
}

TEST_CASE("malformed JSON raises a parse error") {
  CHECK_THROWS_AS(parse_config("{ not json"), ParseError);
  CHECK_THROWS_AS(load_config("no_such_file.json"), ParseError);
}

TEST_CASE("missing sigma_y for viscoplastic names the key") {
  std::string text = kViscoplastic;
  const std::string key = "\"sigma_y\": {\"mean\": 50e6, \"std\": 10e6},";
  text.replace(text.find(key), key.size(), "");
  CHECK_THROWS_WITH(parse_config(text),
                    Catch::Matchers::ContainsSubstring("sigma_y"));
}

TEST_CASE("sigma_y is rejected outside the viscoplastic model") {
  std::string text = kMinimalDamage;
  text.replace(text.find("\"eta\": 10e6"), std::string("\"eta\": 10e6").size(),
               "\"eta\": 10e6, \"sigma_y\": 50e6");
  CHECK_THROWS_WITH(parse_config(text),
                    Catch::Matchers::ContainsSubstring("sigma_y"));
}

TEST_CASE("zero dt is rejected") {
  std::string text = kMinimalDamage;
  text.replace(text.find("\"dt\": 0.005"), std::string("\"dt\": 0.005").size(),
               "\"dt\": 0");
  CHECK_THROWS_AS(parse_config(text), ValidationError);
}

TEST_CASE("every violation is listed at once") {
  const char* bad = R"json({
    "model": "nonsense",
    "material": {"lambda": 12e9, "mu": 8e9, "eta": -1},
    "load": {"kind": "proportional", "rate": 2e-4},
    "grid": {"t_end": 1.0, "dt": 0},
    "mc_n": 0,
    "moment_samples": 10
  })json";
  try {
    parse_config(bad);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("'model'") != std::string::npos);
    CHECK(msg.find("eta") != std::string::npos);
    CHECK(msg.find("dt") != std::string::npos);
    CHECK(msg.find("mc_n") != std::string::npos);
    CHECK(msg.find("moment_samples") != std::string::npos);
    CHECK(msg.find("5 problems") != std::string::npos);
  }
}

TEST_CASE("phase configs validate fractions and phase count") {
  const char* phase = R"json({
    "model": "phase",
    "material": {
      "phases": [
        {"lambda": {"mean": 70e9, "std": 7e9}, "mu": {"mean": 30e9, "std": 3e9}},
        {"lambda": {"mean": 35e9, "std": 3.5e9}, "mu": {"mean": 15e9, "std": 1.5e9},
         "eigenstrain": [0.055, -0.02475, -0.02475, 0, 0, 0]}
      ],
      "initial_fractions": [0.99, 0.01],
      "eta": 0.2e9,
      "wall": 10.0
    },
    "load": {"kind": "triangular_cycle", "direction": [1,0,0,0,0,0],
             "amplitude": 0.08, "period": 80.0},
    "grid": {"t_end": 40.0, "dt": 0.0004}
  })json";
  RunConfig cfg = parse_config(phase);
  CHECK(cfg.model == ModelKind::kPhase);
  CHECK(cfg.sp.tensors.size() == 2);
  CHECK(cfg.eigenstrains[1][0] == 0.055);
  CHECK(cfg.eigenstrains[0].norm() == 0.0);
  CHECK(cfg.init_fractions == std::vector<double>{0.99, 0.01});
  CHECK(cfg.wall == 10.0);

  std::string bad = phase;
  bad.replace(bad.find("[0.99, 0.01]"), std::string("[0.99, 0.01]").size(),
              "[0.99, 0.02]");
  CHECK_THROWS_WITH(parse_config(bad),
                    Catch::Matchers::ContainsSubstring("sum to 1"));
}

TEST_CASE("matrix correlation round trip") {
  std::string text = kViscoplastic;
  const std::string corr = R"json({"mode": "fully_dependent"})json";
  text.replace(text.find(corr), corr.size(), R"json({
    "mode": "matrix",
    "matrix": [[1, 0.5, 0], [0.5, 1, 0], [0, 0, 1]]
  })json");
  RunConfig cfg = parse_config(text);
  CHECK(cfg.sp.correlation.mode == CorrelationMode::kMatrix);
  CHECK(cfg.sp.correlation.matrix(0, 1) == 0.5);

  // non-PSD matrices are rejected during validation
  std::string bad = text;
  bad.replace(bad.find("0.5, 1, 0"), std::string("0.5, 1, 0").size(),
              "-1.5, 1, 0");
  bad.replace(bad.find("1, 0.5, 0"), std::string("1, 0.5, 0").size(),
              "1, -1.5, 0");
  CHECK_THROWS_AS(parse_config(bad), ValidationError);
}

TEST_CASE("config echo re-parses to the same configuration") {
  RunConfig cfg = parse_config(kViscoplastic);
  cfg.seed = 42;
  cfg.mc_n = 17;
  cfg.out_dir = "some/dir";
  const std::string echoed = config_echo(cfg);
  RunConfig back = parse_config(echoed);
  CHECK(back.model == cfg.model);
  CHECK(back.sp.tensors[0].lambda.mean == cfg.sp.tensors[0].lambda.mean);
  CHECK(back.sp.yield->std == cfg.sp.yield->std);
  CHECK(back.sp.correlation.mode == cfg.sp.correlation.mode);
  CHECK(back.eta == cfg.eta);
  CHECK(back.load.amplitude == cfg.load.amplitude);
  CHECK(back.grid.dt == cfg.grid.dt);
  CHECK(back.seed == 42);
  CHECK(back.mc_n == 17);
  CHECK(back.out_dir == "some/dir");
}

TEST_CASE("model factories build from realizations") {
  RunConfig cfg = parse_config(kViscoplastic);
  ParamRealization r = mean_realization(cfg.sp);
  ViscoplasticModel m = make_viscoplastic(cfg, r);
  CHECK(m.yield_value() == 50e6);
  CHECK(m.stiffness()(0, 0) == 28e9);
  CHECK(m.eta() == 20e9);
}
