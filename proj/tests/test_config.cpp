#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "predgame/config/config.hpp"
#include "predgame/errors.hpp"

using namespace predgame;
using namespace predgame::cfg;

namespace fs = std::filesystem;

TEST_CASE("parsing sections, comments and whitespace") {
  const auto c = Config::parse_string(
      "# leading comment\n"
      "[run]\n"
      "scenario = homogeneous   # trailing comment\n"
      "seeds=3\n"
      "\n"
      "[ppo]\n"
      "learning_rate = 5e-4\n");
  CHECK(c.get("run.scenario") == "homogeneous");
  CHECK(c.get("run.seeds") == "3");
  CHECK(c.get("ppo.learning_rate") == "5e-4");
  CHECK_FALSE(c.has("run.missing"));
  CHECK_THROWS_AS(c.get("run.missing"), ConfigError);
}

TEST_CASE("parse errors carry file and line") {
  try {
    Config::parse_string("[run]\nnot a key value\n", "test.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("test.cfg:2") != std::string::npos);
  }
  CHECK_THROWS_AS(Config::parse_string("[unterminated\n"), ConfigError);
}

TEST_CASE("include files merge with later keys winning") {
  const auto dir = fs::temp_directory_path() / "predgame_cfg_test";
  fs::create_directories(dir);
  {
    std::ofstream base(dir / "base.cfg");
    base << "[ppo]\nlearning_rate = 1e-4\nnum_envs = 16\n";
  }
  {
    std::ofstream top(dir / "top.cfg");
    top << "include base.cfg\n[ppo]\nlearning_rate = 9e-4\n";
  }
  const auto c = Config::parse_file((dir / "top.cfg").string());
  CHECK(c.get("ppo.learning_rate") == "9e-4");
  CHECK(c.get("ppo.num_envs") == "16");
  fs::remove_all(dir);
}

TEST_CASE("serialize -> parse round-trips the resolved config exactly") {
  RunConfig run;
  run.spec.arch = ppo::Arch::RNN;
  run.spec.blind = true;
  run.spec.ppo_cfg.learning_rate = 5e-4;
  run.spec.n_seeds = 7;
  const Config serialized = run.to_config();
  const Config reparsed = Config::parse_string(serialized.serialize());
  CHECK(reparsed == serialized);

  const RunConfig rebound = RunConfig::from_config(reparsed);
  CHECK(rebound.to_config() == serialized);
}

TEST_CASE("unknown keys are rejected") {
  const auto c = Config::parse_string("[run]\nscenario = homogeneous\nbanana = 3\n");
  CHECK_THROWS_AS(RunConfig::from_config(c), ConfigError);
  try {
    RunConfig::from_config(c);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("run.banana") != std::string::npos);
  }
}

TEST_CASE("typed binding errors") {
  CHECK_THROWS_AS(RunConfig::from_config(Config::parse_string("[run]\nseeds = many\n")),
                  ConfigError);
  CHECK_THROWS_AS(RunConfig::from_config(Config::parse_string("[run]\nblind = yes\n")),
                  ConfigError);
  CHECK_THROWS_AS(RunConfig::from_config(Config::parse_string("[ppo]\nlearning_rate = fast\n")),
                  ConfigError);
  CHECK_THROWS_AS(RunConfig::from_config(Config::parse_string("[run]\narch = cnn\n")),
                  ConfigError);
  CHECK_THROWS_AS(RunConfig::from_config(Config::parse_string("[mi]\nunits = decibels\n")),
                  ConfigError);
  CHECK_THROWS_AS(RunConfig::from_config(Config::parse_string("[heuristic]\ncycles = 3;2\n")),
                  ConfigError);
}

TEST_CASE("defaults carry the shipped hyperparameters") {
  const RunConfig run = RunConfig::from_config(Config{});
  CHECK(run.spec.ppo_cfg.num_steps == 128);
  CHECK(run.spec.ppo_cfg.num_envs == 16);
  CHECK(run.spec.ppo_cfg.update_epochs == 4);
  CHECK(run.spec.ppo_cfg.num_minibatches == 4);
  CHECK(run.spec.ppo_cfg.clip_eps == 0.2);
  CHECK(run.spec.ppo_cfg.entropy_coef == 0.01);
  CHECK(run.spec.ppo_cfg.vf_coef == 0.5);
  CHECK(run.spec.ppo_cfg.max_grad_norm == 0.5);
  CHECK(run.spec.ppo_cfg.gamma == 0.99);
  CHECK(run.spec.ppo_cfg.gae_lambda == 0.95);
  CHECK(run.spec.env_cfg.n_agents == 4);
  CHECK(run.spec.env_cfg.n_actions == 4);
  CHECK(run.spec.env_cfg.episode_len == 10);
  CHECK(run.spec.n_seeds == 10);
  CHECK(run.spec.eval_episodes == 1000);
  CHECK(run.spec.heuristic_agents == std::vector<int>{2, 3});
  CHECK(run.spec.heuristic_cycles == std::vector<int>{3, 2});
}

TEST_CASE("comma lists bind") {
  const auto c = Config::parse_string("[heuristic]\nagents = 1,3\ncycles = 5,2\n");
  const auto run = RunConfig::from_config(c);
  CHECK(run.spec.heuristic_agents == std::vector<int>{1, 3});
  CHECK(run.spec.heuristic_cycles == std::vector<int>{5, 2});
}
