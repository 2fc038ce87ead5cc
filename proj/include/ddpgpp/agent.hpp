#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddpgpp/envs.hpp"
#include "ddpgpp/nn.hpp"
#include "ddpgpp/replay.hpp"
#include "ddpgpp/rng.hpp"

namespace ddpgpp {

// Hyper-parameters plus mechanism toggles. The same machinery expresses DDPG,
// TD3 and DDPG++ through the toggles (see preset()).
struct AgentConfig {
  double gamma = 0.99;
  double tau = 0.005;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  int batch_size = 100;
  // Std of exploration noise, as a fraction of the control half-range.
  double exploration_noise_std = 0.2;
  // Env steps with uniform random controls before the policy drives.
  int burn_in = 1000;
  // Bootstrap with min of the two target critics.
  bool twin_critics = true;
  // Actor updates once per policy_delay critic updates.
  int policy_delay = 1;
  // TD3 target smoothing: noise added to the target action, both std and clip
  // as fractions of the control half-range. 0 disables.
  double target_noise_std = 0.0;
  double target_noise_clip = 0.5;
  // Weight the actor objective by the per-batch normalized propensity.
  bool use_propensity = false;
  // Actor ascends min(q1, q2) instead of q1 alone.
  bool actor_uses_min = true;
  int hidden_size = 256;
  int hidden_layers = 2;
  double propensity_c = 1e-3;
  int propensity_iters = 100;

  void validate() const;  // throws std::invalid_argument
};

// "ddpg" | "td3" | "ddpgpp" | "ddpgpp-prop"; throws on unknown names.
AgentConfig preset(const std::string& name);

struct UpdateDiagnostics {
  double critic_loss = 0.0;
  double actor_objective = 0.0;
  double mean_q1 = 0.0;
  double mean_q2 = 0.0;
  double mean_beta_tilde = 1.0;
  double classifier_accuracy = -1.0;  // -1 when the classifier did not run
  bool actor_updated = false;
  // A non-finite loss/objective was hit and that step was skipped.
  bool numerical_skip = false;
};

struct CriticUpdate {
  double loss = 0.0;
  double mean_q1 = 0.0;
  double mean_q2 = 0.0;
  bool skipped = false;
};

struct ActorUpdate {
  double objective = 0.0;
  double mean_beta_tilde = 1.0;
  double classifier_accuracy = -1.0;
  bool skipped = false;
};

class Agent {
 public:
  // Networks: actor x -> u (tanh head scaled to the control box), two critics
  // (x, u) -> scalar. Targets start as exact copies of the online nets.
  Agent(const EnvSpec& env_spec, const AgentConfig& cfg, Rng& init_rng);

  // Deterministic actor output when explore is false. When exploring, uniform
  // random in the box for the first burn_in env steps, then actor output plus
  // Gaussian noise, clamped to the box.
  Vector select_action(const Vector& x, bool explore, int64_t env_step, Rng& rng) const;

  // y_i = r_i + gamma * bootstrap(x'_i), zero bootstrap on terminal tuples.
  // The bootstrap is min over the two target critics when twin_critics, else
  // the first target critic; target noise is drawn from `rng` when enabled.
  std::vector<double> compute_target(const std::vector<Transition>& batch, Rng& rng) const;

  // One Adam step per critic, both regressing the same targets.
  CriticUpdate update_critics(const std::vector<Transition>& batch,
                              const std::vector<double>& targets);

  // Propensity-weighted (or unweighted) ascent step on the actor objective.
  ActorUpdate update_actor(const std::vector<Transition>& batch);
  // Same step with explicit per-tuple weights; update_actor delegates here.
  ActorUpdate update_actor_weighted(const std::vector<Transition>& batch,
                                    const std::vector<double>& weights);

  // Steps 1-6 of the inner loop: sample, target, critic updates, delayed
  // actor update, then target soft-updates (run every step).
  UpdateDiagnostics train_step(const ReplayBuffer& buffer, Rng& batch_rng, Rng& target_noise_rng);

  const AgentConfig& config() const { return cfg_; }
  const EnvSpec& env_spec() const { return env_spec_; }
  int64_t critic_updates() const { return critic_updates_; }
  int64_t actor_updates() const { return actor_updates_; }

  const nn::MlpParams& actor() const { return actor_; }
  const nn::MlpParams& actor_target() const { return actor_target_; }
  const nn::MlpParams& critic(int i) const { return i == 0 ? critic1_ : critic2_; }
  const nn::MlpParams& critic_target(int i) const {
    return i == 0 ? critic1_target_ : critic2_target_;
  }
  // Test hooks: replacing a network resets its Adam moments.
  void set_actor(const nn::MlpParams& params);
  void set_critic(int i, const nn::MlpParams& params);

  // One checkpoint file per network under `dir`.
  void save(const std::string& dir) const;

 private:
  double critic_batch_q(const nn::MlpParams& critic, const nn::Matrix& xu) const;

  EnvSpec env_spec_;
  AgentConfig cfg_;
  Vector half_range_;
  Vector center_;

  nn::MlpParams actor_, actor_target_;
  nn::MlpParams critic1_, critic2_, critic1_target_, critic2_target_;
  nn::AdamState actor_adam_, critic1_adam_, critic2_adam_;
  int64_t critic_updates_ = 0;
  int64_t actor_updates_ = 0;
};

}  // namespace ddpgpp
