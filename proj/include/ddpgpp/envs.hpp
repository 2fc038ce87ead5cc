#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "ddpgpp/nn.hpp"
#include "ddpgpp/rng.hpp"

namespace ddpgpp {

struct EnvSpec {
  int state_dim = 0;
  int control_dim = 0;
  Vector control_low;
  Vector control_high;
  int max_episode_steps = 0;
  double gamma_hint = 0.99;

  Vector control_half_range() const;
  Vector control_center() const;
  void validate() const;
};

struct StepResult {
  Vector x_next;
  double r = 0.0;
  bool terminal = false;   // failure/goal state reached
  bool truncated = false;  // step limit hit
};

class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual Vector reset(Rng& rng) = 0;
  virtual StepResult step(const Vector& u) = 0;
};

// Known names: "lqr2d", "pendulum".
std::unique_ptr<Env> make_env(const std::string& name);

// Linear double integrator, 200-step episodes, dt = 0.05:
//   p' = p + dt v,  v' = v + dt u,  u scalar in [-1, 1],
//   r(x, u) = -(pos_w p^2 + vel_w v^2 + ctrl_w u^2),
//   x0 ~ U([-1,1]^2).
class DoubleIntegratorEnv final : public Env {
 public:
  static constexpr double kDt = 0.05;

  explicit DoubleIntegratorEnv(double pos_weight = 1.0, double vel_weight = 0.1,
                               double ctrl_weight = 0.01, double process_noise_std = 0.0,
                               uint64_t noise_seed = 0);

  const EnvSpec& spec() const override { return spec_; }
  Vector reset(Rng& rng) override;
  StepResult step(const Vector& u) override;

  double pos_weight() const { return pos_w_; }
  double vel_weight() const { return vel_w_; }
  double ctrl_weight() const { return ctrl_w_; }

 private:
  EnvSpec spec_;
  double pos_w_, vel_w_, ctrl_w_;
  double noise_std_;
  Rng noise_rng_;
  Vector x_{0.0, 0.0};
  int steps_ = 0;
};

// Torque-limited swing-up pendulum, 200-step episodes, semi-implicit Euler at
// dt = 0.05 (gravity 10, mass 1, length 1, torque in [-2, 2], speed clipped to
// [-8, 8]). State is (angle wrapped to [-pi, pi], angular velocity); angle 0
// is upright. r(x, u) = -(angle^2 + 0.1 w^2 + 0.001 u^2).
class PendulumEnv final : public Env {
 public:
  static constexpr double kDt = 0.05;
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr double kMaxSpeed = 8.0;

  explicit PendulumEnv(double process_noise_std = 0.0, uint64_t noise_seed = 0);

  const EnvSpec& spec() const override { return spec_; }
  Vector reset(Rng& rng) override;
  StepResult step(const Vector& u) override;

  // Total mechanical energy of the current state (rod pendulum about its
  // pivot); used by integration-quality checks.
  double energy() const;

 private:
  EnvSpec spec_;
  double noise_std_;
  Rng noise_rng_;
  Vector x_{0.0, 0.0};
  int steps_ = 0;
};

// Quadratic form q(p, v) = xx p^2 + 2 xv p v + vv v^2.
struct Quadratic2 {
  double xx = 0.0, xv = 0.0, vv = 0.0;
  double eval(double p, double v) const { return xx * p * p + 2.0 * xv * p * v + vv * v * v; }
};

// Fixed point of the discounted discrete-time Riccati recursion for the
// double integrator's cost and dynamics; the optimal value from x0 is
// -P.eval(p0, v0). Throws NumericalError if the iteration does not contract
// below `tol` within `max_iters`.
Quadratic2 lqr_cost_matrix(const DoubleIntegratorEnv& env, double gamma, double tol = 1e-10,
                           int max_iters = 100000);

// Optimal state-feedback gain, u = -(k_p p + k_v v).
std::array<double, 2> lqr_gain(const DoubleIntegratorEnv& env, double gamma);

// Optimal expected discounted return averaged over the given start states
// (the control box is ignored; from the reset box the optimal controller
// stays inside it).
double lqr_optimal_return(const DoubleIntegratorEnv& env, double gamma,
                          const std::vector<Vector>& x0s);
// Same, over `num_samples` draws from the reset distribution.
double lqr_optimal_return(const DoubleIntegratorEnv& env, double gamma, int num_samples,
                          Rng& rng);

}  // namespace ddpgpp
