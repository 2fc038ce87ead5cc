#include "ddpgpp/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ddpgpp {

namespace {

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

}  // namespace

Vector EnvSpec::control_half_range() const {
  Vector h(control_low.size());
  for (size_t i = 0; i < h.size(); ++i) h[i] = 0.5 * (control_high[i] - control_low[i]);
  return h;
}

Vector EnvSpec::control_center() const {
  Vector c(control_low.size());
  for (size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (control_high[i] + control_low[i]);
  return c;
}

void EnvSpec::validate() const {
  if (state_dim < 1 || control_dim < 1) throw std::invalid_argument("env dims must be >= 1");
  if (static_cast<int>(control_low.size()) != control_dim ||
      static_cast<int>(control_high.size()) != control_dim)
    throw std::invalid_argument("control box size does not match control dim");
  for (int i = 0; i < control_dim; ++i)
    if (!(control_low[i] < control_high[i]))
      throw std::invalid_argument("control box must have low < high");
  if (max_episode_steps < 1) throw std::invalid_argument("max_episode_steps must be >= 1");
  if (!(gamma_hint > 0.0 && gamma_hint < 1.0))
    throw std::invalid_argument("gamma_hint must be in (0,1)");
}

DoubleIntegratorEnv::DoubleIntegratorEnv(double pos_weight, double vel_weight, double ctrl_weight,
                                         double process_noise_std, uint64_t noise_seed)
    : pos_w_(pos_weight),
      vel_w_(vel_weight),
      ctrl_w_(ctrl_weight),
      noise_std_(process_noise_std),
      noise_rng_(Rng::stream(noise_seed, "lqr2d-process-noise")) {
  spec_.state_dim = 2;
  spec_.control_dim = 1;
  spec_.control_low = {-1.0};
  spec_.control_high = {1.0};
  spec_.max_episode_steps = 200;
  spec_.gamma_hint = 0.99;
}

Vector DoubleIntegratorEnv::reset(Rng& rng) {
  x_[0] = rng.uniform(-1.0, 1.0);
  x_[1] = rng.uniform(-1.0, 1.0);
  steps_ = 0;
  return x_;
}

StepResult DoubleIntegratorEnv::step(const Vector& u) {
  if (u.size() != 1) throw std::invalid_argument("lqr2d: control dim mismatch");
  const double a = clamp(u[0], spec_.control_low[0], spec_.control_high[0]);
  StepResult out;
  out.r = -(pos_w_ * x_[0] * x_[0] + vel_w_ * x_[1] * x_[1] + ctrl_w_ * a * a);
  const double p = x_[0] + kDt * x_[1];
  const double v = x_[1] + kDt * a;
  x_[0] = p;
  x_[1] = v;
  if (noise_std_ > 0.0) {
    x_[0] += noise_std_ * noise_rng_.normal();
    x_[1] += noise_std_ * noise_rng_.normal();
  }
  ++steps_;
  out.x_next = x_;
  out.terminal = false;
  out.truncated = steps_ >= spec_.max_episode_steps;
  return out;
}

PendulumEnv::PendulumEnv(double process_noise_std, uint64_t noise_seed)
    : noise_std_(process_noise_std),
      noise_rng_(Rng::stream(noise_seed, "pendulum-process-noise")) {
  spec_.state_dim = 2;
  spec_.control_dim = 1;
  spec_.control_low = {-2.0};
  spec_.control_high = {2.0};
  spec_.max_episode_steps = 200;
  spec_.gamma_hint = 0.99;
}

Vector PendulumEnv::reset(Rng& rng) {
  x_[0] = rng.uniform(-M_PI, M_PI);
  x_[1] = rng.uniform(-1.0, 1.0);
  steps_ = 0;
  return x_;
}

StepResult PendulumEnv::step(const Vector& u) {
  if (u.size() != 1) throw std::invalid_argument("pendulum: control dim mismatch");
  const double tau = clamp(u[0], spec_.control_low[0], spec_.control_high[0]);
  const double th = x_[0];
  const double w = x_[1];
  StepResult out;
  out.r = -(th * th + 0.1 * w * w + 0.001 * tau * tau);
  double w_next = w + kDt * (3.0 * kGravity / (2.0 * kLength) * std::sin(th) +
                             3.0 / (kMass * kLength * kLength) * tau);
  w_next = clamp(w_next, -kMaxSpeed, kMaxSpeed);
  double th_next = wrap_angle(th + kDt * w_next);
  if (noise_std_ > 0.0) {
    th_next = wrap_angle(th_next + noise_std_ * noise_rng_.normal());
    w_next = clamp(w_next + noise_std_ * noise_rng_.normal(), -kMaxSpeed, kMaxSpeed);
  }
  x_[0] = th_next;
  x_[1] = w_next;
  ++steps_;
  out.x_next = x_;
  out.terminal = false;
  out.truncated = steps_ >= spec_.max_episode_steps;
  return out;
}

double PendulumEnv::energy() const {
  const double inertia = kMass * kLength * kLength / 3.0;
  return 0.5 * inertia * x_[1] * x_[1] +
         kMass * kGravity * (kLength / 2.0) * std::cos(x_[0]);
}

std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "lqr2d") return std::make_unique<DoubleIntegratorEnv>();
  if (name == "pendulum") return std::make_unique<PendulumEnv>();
  throw std::invalid_argument("unknown environment: " + name);
}

Quadratic2 lqr_cost_matrix(const DoubleIntegratorEnv& env, double gamma, double tol,
                           int max_iters) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("lqr_cost_matrix: gamma must be in (0,1)");
  const double dt = DoubleIntegratorEnv::kDt;
  const double qp = env.pos_weight(), qv = env.vel_weight(), ru = env.ctrl_weight();
  Quadratic2 p{qp, 0.0, qv};
  for (int it = 0; it < max_iters; ++it) {
    const double a = p.xx, b = p.xv, c = p.vv;
    // w = A'PB, s = R + gamma B'PB for A = [[1,dt],[0,1]], B = [0,dt]'.
    const double w0 = dt * b;
    const double w1 = dt * (b * dt + c);
    const double s = ru + gamma * c * dt * dt;
    const double g2 = gamma * gamma / s;
    Quadratic2 next;
    next.xx = qp + gamma * a - g2 * w0 * w0;
    next.xv = gamma * (a * dt + b) - g2 * w0 * w1;
    next.vv = qv + gamma * (a * dt * dt + 2.0 * b * dt + c) - g2 * w1 * w1;
    const double delta = std::max({std::abs(next.xx - a), std::abs(next.xv - b),
                                   std::abs(next.vv - c)});
    p = next;
    if (delta < tol) return p;
  }
  throw NumericalError("lqr_cost_matrix: Riccati recursion did not converge");
}

std::array<double, 2> lqr_gain(const DoubleIntegratorEnv& env, double gamma) {
  const Quadratic2 p = lqr_cost_matrix(env, gamma);
  const double dt = DoubleIntegratorEnv::kDt;
  const double s = env.ctrl_weight() + gamma * p.vv * dt * dt;
  return {gamma * dt * p.xv / s, gamma * dt * (p.xv * dt + p.vv) / s};
}

double lqr_optimal_return(const DoubleIntegratorEnv& env, double gamma,
                          const std::vector<Vector>& x0s) {
  if (x0s.empty()) throw std::invalid_argument("lqr_optimal_return: empty start-state set");
  const Quadratic2 p = lqr_cost_matrix(env, gamma);
  double sum = 0.0;
  for (const Vector& x0 : x0s) {
    if (x0.size() != 2) throw std::invalid_argument("lqr_optimal_return: bad start state");
    sum += -p.eval(x0[0], x0[1]);
  }
  return sum / static_cast<double>(x0s.size());
}

double lqr_optimal_return(const DoubleIntegratorEnv& env, double gamma, int num_samples,
                          Rng& rng) {
  if (num_samples < 1) throw std::invalid_argument("lqr_optimal_return: need >= 1 sample");
  std::vector<Vector> x0s;
  x0s.reserve(num_samples);
  for (int i = 0; i < num_samples; ++i)
    x0s.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
  return lqr_optimal_return(env, gamma, x0s);
}

}  // namespace ddpgpp
