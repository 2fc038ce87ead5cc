#include "ddpgpp/agent.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "ddpgpp/propensity.hpp"

namespace ddpgpp {

namespace {

nn::Matrix states_matrix(const std::vector<Transition>& batch, bool next_states) {
  const int b = static_cast<int>(batch.size());
  const int dim = static_cast<int>(batch.front().x.size());
  nn::Matrix m(b, dim);
  for (int i = 0; i < b; ++i) {
    const Vector& x = next_states ? batch[i].x_next : batch[i].x;
    std::copy(x.begin(), x.end(), m.data.begin() + static_cast<size_t>(i) * dim);
  }
  return m;
}

nn::Matrix concat_cols(const nn::Matrix& a, const nn::Matrix& b) {
  nn::Matrix m(a.rows, a.cols + b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < a.cols; ++j) m(i, j) = a(i, j);
    for (int j = 0; j < b.cols; ++j) m(i, a.cols + j) = b(i, j);
  }
  return m;
}

}  // namespace

void AgentConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in (0,1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must be in (0,1]");
  if (actor_lr <= 0.0 || critic_lr <= 0.0)
    throw std::invalid_argument("learning rates must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (use_propensity && batch_size < 2)
    throw std::invalid_argument("batch_size must be >= 2 with propensity weighting");
  if (exploration_noise_std < 0.0) throw std::invalid_argument("exploration noise must be >= 0");
  if (burn_in < 0) throw std::invalid_argument("burn_in must be >= 0");
  if (policy_delay < 1) throw std::invalid_argument("policy_delay must be >= 1");
  if (target_noise_std < 0.0 || target_noise_clip < 0.0)
    throw std::invalid_argument("target noise parameters must be >= 0");
  if (hidden_size < 1 || hidden_layers < 0)
    throw std::invalid_argument("bad hidden layer configuration");
  if (propensity_c < 0.0 || propensity_iters < 1)
    throw std::invalid_argument("bad propensity solver configuration");
}

AgentConfig preset(const std::string& name) {
  AgentConfig cfg;  // defaults describe ddpgpp
  if (name == "ddpgpp") return cfg;
  if (name == "ddpgpp-prop") {
    cfg.use_propensity = true;
    return cfg;
  }
  if (name == "ddpg") {
    cfg.twin_critics = false;
    cfg.policy_delay = 1;
    cfg.target_noise_std = 0.0;
    cfg.use_propensity = false;
    cfg.actor_uses_min = false;
    cfg.exploration_noise_std = 0.1;
    cfg.actor_lr = cfg.critic_lr = 1e-3;
    return cfg;
  }
  if (name == "td3") {
    cfg.twin_critics = true;
    cfg.policy_delay = 2;
    cfg.target_noise_std = 0.2;
    cfg.target_noise_clip = 0.5;
    cfg.use_propensity = false;
    cfg.actor_uses_min = false;
    cfg.exploration_noise_std = 0.1;
    cfg.actor_lr = cfg.critic_lr = 1e-3;
    return cfg;
  }
  throw std::invalid_argument("unknown algorithm preset: " + name);
}

Agent::Agent(const EnvSpec& env_spec, const AgentConfig& cfg, Rng& init_rng)
    : env_spec_(env_spec), cfg_(cfg) {
  env_spec_.validate();
  cfg_.validate();
  half_range_ = env_spec_.control_half_range();
  center_ = env_spec_.control_center();

  const std::vector<int> hidden(cfg_.hidden_layers, cfg_.hidden_size);
  actor_ = nn::make_mlp(env_spec_.state_dim, hidden, env_spec_.control_dim,
                        nn::Activation::kRelu, nn::Activation::kTanh, init_rng);
  // Near-zero initial policy keeps early bootstrapped targets small.
  nn::reinit_final_layer(actor_, 3e-3, init_rng);
  actor_.out_scale = half_range_;
  actor_.out_offset = center_;
  const int qin = env_spec_.state_dim + env_spec_.control_dim;
  critic1_ = nn::make_mlp(qin, hidden, 1, nn::Activation::kRelu, nn::Activation::kIdentity,
                          init_rng);
  critic2_ = nn::make_mlp(qin, hidden, 1, nn::Activation::kRelu, nn::Activation::kIdentity,
                          init_rng);
  actor_target_ = actor_;
  critic1_target_ = critic1_;
  critic2_target_ = critic2_;
  actor_adam_ = nn::AdamState(actor_, cfg_.actor_lr);
  critic1_adam_ = nn::AdamState(critic1_, cfg_.critic_lr);
  critic2_adam_ = nn::AdamState(critic2_, cfg_.critic_lr);
}

void Agent::set_actor(const nn::MlpParams& params) {
  if (params.input_dim() != env_spec_.state_dim ||
      params.output_dim() != env_spec_.control_dim)
    throw std::invalid_argument("set_actor: dimension mismatch");
  actor_ = params;
  actor_target_ = params;
  actor_adam_ = nn::AdamState(actor_, cfg_.actor_lr);
}

void Agent::set_critic(int i, const nn::MlpParams& params) {
  if (params.input_dim() != env_spec_.state_dim + env_spec_.control_dim ||
      params.output_dim() != 1)
    throw std::invalid_argument("set_critic: dimension mismatch");
  if (i == 0) {
    critic1_ = params;
    critic1_target_ = params;
    critic1_adam_ = nn::AdamState(critic1_, cfg_.critic_lr);
  } else {
    critic2_ = params;
    critic2_target_ = params;
    critic2_adam_ = nn::AdamState(critic2_, cfg_.critic_lr);
  }
}

Vector Agent::select_action(const Vector& x, bool explore, int64_t env_step, Rng& rng) const {
  if (static_cast<int>(x.size()) != env_spec_.state_dim)
    throw std::invalid_argument("select_action: state dim mismatch");
  if (!explore) return nn::forward(actor_, x);
  if (env_step <= cfg_.burn_in) {
    Vector u(env_spec_.control_dim);
    for (int i = 0; i < env_spec_.control_dim; ++i)
      u[i] = rng.uniform(env_spec_.control_low[i], env_spec_.control_high[i]);
    return u;
  }
  Vector u = nn::forward(actor_, x);
  for (int i = 0; i < env_spec_.control_dim; ++i) {
    u[i] += cfg_.exploration_noise_std * half_range_[i] * rng.normal();
    u[i] = std::clamp(u[i], env_spec_.control_low[i], env_spec_.control_high[i]);
  }
  return u;
}

std::vector<double> Agent::compute_target(const std::vector<Transition>& batch, Rng& rng) const {
  if (batch.empty()) throw std::invalid_argument("compute_target: empty batch");
  const int b = static_cast<int>(batch.size());
  nn::Matrix xn = states_matrix(batch, /*next_states=*/true);
  nn::Matrix un = nn::forward_batch(actor_target_, xn);
  if (cfg_.target_noise_std > 0.0) {
    for (int i = 0; i < b; ++i) {
      for (int j = 0; j < env_spec_.control_dim; ++j) {
        const double hr = half_range_[j];
        double noise = cfg_.target_noise_std * hr * rng.normal();
        noise = std::clamp(noise, -cfg_.target_noise_clip * hr, cfg_.target_noise_clip * hr);
        un(i, j) = std::clamp(un(i, j) + noise, env_spec_.control_low[j],
                              env_spec_.control_high[j]);
      }
    }
  }
  const nn::Matrix xu = concat_cols(xn, un);
  const nn::Matrix q1 = nn::forward_batch(critic1_target_, xu);
  nn::Matrix q2;
  if (cfg_.twin_critics) q2 = nn::forward_batch(critic2_target_, xu);
  std::vector<double> y(b);
  for (int i = 0; i < b; ++i) {
    double boot = q1(i, 0);
    if (cfg_.twin_critics) boot = std::min(boot, q2(i, 0));
    y[i] = batch[i].r + (batch[i].terminal ? 0.0 : cfg_.gamma * boot);
  }
  return y;
}

CriticUpdate Agent::update_critics(const std::vector<Transition>& batch,
                                   const std::vector<double>& targets) {
  if (batch.empty() || targets.size() != batch.size())
    throw std::invalid_argument("update_critics: targets not aligned with batch");
  const int b = static_cast<int>(batch.size());
  nn::Matrix xu(b, env_spec_.state_dim + env_spec_.control_dim);
  for (int i = 0; i < b; ++i) {
    int j = 0;
    for (double v : batch[i].x) xu(i, j++) = v;
    for (double v : batch[i].u) xu(i, j++) = v;
  }

  CriticUpdate out;
  nn::ForwardCache cache1, cache2;
  const nn::Matrix q1 = nn::forward_batch(critic1_, xu, &cache1);
  const nn::Matrix q2 = nn::forward_batch(critic2_, xu, &cache2);
  const double inv_b = 1.0 / static_cast<double>(b);
  double loss1 = 0.0, loss2 = 0.0;
  nn::Matrix up1(b, 1), up2(b, 1);
  for (int i = 0; i < b; ++i) {
    const double e1 = q1(i, 0) - targets[i];
    const double e2 = q2(i, 0) - targets[i];
    loss1 += e1 * e1 * inv_b;
    loss2 += e2 * e2 * inv_b;
    up1(i, 0) = 2.0 * e1 * inv_b;
    up2(i, 0) = 2.0 * e2 * inv_b;
    out.mean_q1 += q1(i, 0) * inv_b;
    out.mean_q2 += q2(i, 0) * inv_b;
  }
  out.loss = 0.5 * (loss1 + loss2);
  if (!std::isfinite(out.loss)) {
    out.skipped = true;
    return out;
  }
  try {
    nn::Grads g1 = nn::backward_batch(critic1_, cache1, up1);
    nn::Grads g2 = nn::backward_batch(critic2_, cache2, up2);
    nn::adam_step(critic1_, g1, critic1_adam_);
    nn::adam_step(critic2_, g2, critic2_adam_);
  } catch (const NumericalError&) {
    out.skipped = true;
    return out;
  }
  ++critic_updates_;
  return out;
}

ActorUpdate Agent::update_actor(const std::vector<Transition>& batch) {
  if (batch.empty()) throw std::invalid_argument("update_actor: empty batch");
  std::vector<double> weights(batch.size(), 1.0);
  ActorUpdate out;
  if (cfg_.use_propensity) {
    std::vector<Vector> dataset_controls, policy_controls;
    dataset_controls.reserve(batch.size());
    policy_controls.reserve(batch.size());
    const nn::Matrix x = states_matrix(batch, /*next_states=*/false);
    const nn::Matrix a = nn::forward_batch(actor_, x);
    for (size_t i = 0; i < batch.size(); ++i) {
      dataset_controls.push_back(batch[i].u);
      policy_controls.push_back(a.row(static_cast<int>(i)));
    }
    propensity::PropensityReport rep = propensity::report(dataset_controls, policy_controls,
                                                          cfg_.propensity_c,
                                                          cfg_.propensity_iters);
    weights = rep.beta_tilde;
    double mean_bt = 0.0;
    for (double w : weights) mean_bt += w;
    out.mean_beta_tilde = mean_bt / static_cast<double>(weights.size());
    out.classifier_accuracy = rep.accuracy;
  }
  ActorUpdate stepped = update_actor_weighted(batch, weights);
  stepped.mean_beta_tilde = out.mean_beta_tilde;
  stepped.classifier_accuracy = out.classifier_accuracy;
  return stepped;
}

ActorUpdate Agent::update_actor_weighted(const std::vector<Transition>& batch,
                                         const std::vector<double>& weights) {
  if (batch.empty() || weights.size() != batch.size())
    throw std::invalid_argument("update_actor_weighted: weights not aligned with batch");
  const int b = static_cast<int>(batch.size());
  const double inv_b = 1.0 / static_cast<double>(b);

  nn::ForwardCache actor_cache;
  const nn::Matrix x = states_matrix(batch, /*next_states=*/false);
  const nn::Matrix a = nn::forward_batch(actor_, x, &actor_cache);
  const nn::Matrix xu = concat_cols(x, a);

  nn::ForwardCache cache1, cache2;
  const nn::Matrix q1 = nn::forward_batch(critic1_, xu, &cache1);
  nn::Matrix q2;
  if (cfg_.actor_uses_min) q2 = nn::forward_batch(critic2_, xu, &cache2);

  ActorUpdate out;
  nn::Matrix up1(b, 1), up2(b, 1);
  double objective = 0.0;
  for (int i = 0; i < b; ++i) {
    const bool use_second = cfg_.actor_uses_min && q2(i, 0) < q1(i, 0);
    const double q = use_second ? q2(i, 0) : q1(i, 0);
    objective += weights[i] * q * inv_b;
    (use_second ? up2 : up1)(i, 0) = weights[i] * inv_b;
  }
  out.objective = objective;
  if (!std::isfinite(objective)) {
    out.skipped = true;
    return out;
  }

  // dJ/du per sample, then ascend by descending the negated objective.
  nn::Matrix ig1 = nn::backward_input_batch(critic1_, cache1, up1);
  nn::Matrix actor_up(b, env_spec_.control_dim);
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < env_spec_.control_dim; ++j)
      actor_up(i, j) = -ig1(i, env_spec_.state_dim + j);
  if (cfg_.actor_uses_min) {
    nn::Matrix ig2 = nn::backward_input_batch(critic2_, cache2, up2);
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < env_spec_.control_dim; ++j)
        actor_up(i, j) -= ig2(i, env_spec_.state_dim + j);
  }
  try {
    nn::Grads grads = nn::backward_batch(actor_, actor_cache, actor_up);
    nn::adam_step(actor_, grads, actor_adam_);
  } catch (const NumericalError&) {
    out.skipped = true;
    return out;
  }
  ++actor_updates_;
  return out;
}

UpdateDiagnostics Agent::train_step(const ReplayBuffer& buffer, Rng& batch_rng,
                                    Rng& target_noise_rng) {
  if (buffer.size() < cfg_.batch_size)
    throw std::invalid_argument("train_step: buffer smaller than batch size");
  const std::vector<Transition> batch = buffer.sample(cfg_.batch_size, batch_rng);
  const std::vector<double> y = compute_target(batch, target_noise_rng);

  UpdateDiagnostics diag;
  const CriticUpdate cu = update_critics(batch, y);
  diag.critic_loss = cu.loss;
  diag.mean_q1 = cu.mean_q1;
  diag.mean_q2 = cu.mean_q2;
  if (cu.skipped) {
    diag.numerical_skip = true;
    return diag;
  }

  if (critic_updates_ % cfg_.policy_delay == 0) {
    diag.actor_updated = true;
    const ActorUpdate au = update_actor(batch);
    diag.actor_objective = au.objective;
    diag.mean_beta_tilde = au.mean_beta_tilde;
    diag.classifier_accuracy = au.classifier_accuracy;
    diag.numerical_skip = au.skipped;
  }

  nn::soft_update(critic1_target_, critic1_, cfg_.tau);
  nn::soft_update(critic2_target_, critic2_, cfg_.tau);
  nn::soft_update(actor_target_, actor_, cfg_.tau);
  return diag;
}

void Agent::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  nn::save_checkpoint(actor_, (base / "actor.bin").string());
  nn::save_checkpoint(actor_target_, (base / "actor_target.bin").string());
  nn::save_checkpoint(critic1_, (base / "critic1.bin").string());
  nn::save_checkpoint(critic2_, (base / "critic2.bin").string());
  nn::save_checkpoint(critic1_target_, (base / "critic1_target.bin").string());
  nn::save_checkpoint(critic2_target_, (base / "critic2_target.bin").string());
}

}  // namespace ddpgpp
