#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ddpgpp/agent.hpp"
#include "ddpgpp/envs.hpp"
#include "ddpgpp/nn.hpp"

namespace ddpgpp {

struct RunConfig {
  std::string env = "lqr2d";
  std::string algo = "ddpgpp";
  uint64_t seed = 0;
  int64_t total_env_steps = 30000;
  int64_t eval_every = 1000;
  int eval_episodes = 10;
  std::string out_dir = "runs/out";
  int64_t replay_capacity = 1000000;
  std::string dump_replay;  // optional CSV path for the final buffer
  AgentConfig agent;        // preset(algo) with overrides applied
  bool verbose = false;     // progress lines on stderr; not part of the echo

  void validate() const;  // throws std::invalid_argument before any work
};

// One evaluation row. wall_seconds is measured wall time since the start of
// the run; the CSV column is pinned to 0 so output files stay bit-reproducible
// (timing is reported on stderr when verbose).
struct EvalRecord {
  int64_t env_steps = 0;
  double return_mean = 0.0;
  double return_std = 0.0;
  double mean_q1 = 0.0;
  double mean_q2 = 0.0;
  double mean_beta_tilde = 1.0;
  double classifier_accuracy = -1.0;
  double wall_seconds = 0.0;
};

inline constexpr const char* kProgressCsvHeader =
    "env_steps,return_mean,return_std,mean_q1,mean_q2,mean_beta_tilde,"
    "classifier_accuracy,wall_seconds";

// key = value lines, UTF-8, '#' comments; returned in file order.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::istream& is);
std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path);

// Applies one key=value override. "algo" resets the agent block to its
// preset, so later agent-field overrides stick. Throws on unknown keys or
// unparseable values.
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

// Full re-runnable dump of the effective configuration.
std::string config_echo(const RunConfig& cfg);

struct EvalSummary {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> returns;
};

// Deterministic-policy evaluation, no exploration noise, no learning.
// Episode e uses its own seed stream derived from (seed, "eval", e); returns
// are discount-weighted reward sums (discount = 1 gives the undiscounted
// return used in the progress log).
EvalSummary evaluate(const nn::MlpParams& actor, const std::string& env_name, int episodes,
                     uint64_t seed, double discount = 1.0);
// Same with explicit per-episode seeds (episodes with equal seeds produce
// identical returns).
EvalSummary evaluate_with_seeds(const nn::MlpParams& actor, const std::string& env_name,
                                const std::vector<uint64_t>& episode_seeds,
                                double discount = 1.0);

struct TrainResult {
  std::vector<EvalRecord> records;
  int64_t critic_updates = 0;
  int64_t actor_updates = 0;
  std::string checkpoint_dir;
};

// The interleaved collect/update loop: one gradient step per environment step
// once past burn-in, evaluation every eval_every steps, incremental CSV at
// out_dir/progress.csv, config echo written first, checkpoint at the end.
// Fully reproducible from the config; throws NumericalError (after flushing
// the partial CSV) if training hits a non-finite loss.
TrainResult train(const RunConfig& cfg);

// Checkpoint access for the eval subcommand; `dir` may be a run directory or
// its checkpoint/ subdirectory.
nn::MlpParams load_actor_checkpoint(const std::string& dir);
std::string checkpoint_env_name(const std::string& dir);

}  // namespace ddpgpp
