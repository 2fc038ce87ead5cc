#pragma once

#include <vector>

#include "ddpgpp/nn.hpp"

namespace ddpgpp {
namespace propensity {

// Two-class logistic model over features with an appended constant-1 bias
// feature; w.back() is the bias weight.
struct LogisticModel {
  Vector w;
  double c = 0.0;

  // w . [x; 1]
  double score(const Vector& x) const;
};

// Minimizes (1/N) sum log(1 + exp(-z w.[x;1])) + c ||w||^2 over the combined
// samples (z = +1 for pos, z = -1 for neg) by full-batch gradient descent with
// fixed step 0.5 from w = 0, stopping at gradient norm 1e-6 or the iteration
// cap. The objective is convex, so the run is deterministic.
LogisticModel fit_logistic(const std::vector<Vector>& pos, const std::vector<Vector>& neg,
                           double c, int iters, std::vector<double>* objective_trace = nullptr);

double logistic_objective(const LogisticModel& model, const std::vector<Vector>& pos,
                          const std::vector<Vector>& neg);

// Importance ratio beta(x) = P(z=-1|x) / P(z=+1|x) = exp(-w.[x;1]), clamped
// to [1e-12, 1e12] so downstream weights stay positive and finite.
double beta(const LogisticModel& model, const Vector& x);

// Min-max normalization to [0,1]; a degenerate batch (max == min) maps to
// all-ones, which is the propensity-off weighting.
Vector normalize_beta(const Vector& beta_raw);

struct PropensityReport {
  LogisticModel model;
  Vector beta_raw;    // evaluated at each dataset control
  Vector beta_tilde;  // min-max normalized within the batch
  double accuracy = 0.0;  // training accuracy at threshold 0.5 over all 2m points
};

// Fits the two-sample classifier on a mini-batch: dataset controls get label
// z=+1, controls proposed by the current policy get z=-1.
PropensityReport report(const std::vector<Vector>& dataset_controls,
                        const std::vector<Vector>& policy_controls, double c, int iters);

}  // namespace propensity
}  // namespace ddpgpp
