#include "ddpgpp/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ddpgpp {
namespace propensity {

namespace {

constexpr double kBetaCap = 1e12;
constexpr double kGradTol = 1e-6;
constexpr double kStep = 0.5;

// log(1 + exp(t)) without overflow.
double log1p_exp(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

void check_features(const std::vector<Vector>& pos, const std::vector<Vector>& neg) {
  if (pos.empty() || neg.empty())
    throw std::invalid_argument("fit_logistic: both classes must be non-empty");
  const size_t dim = pos.front().size();
  for (const Vector& x : pos)
    if (x.size() != dim) throw std::invalid_argument("fit_logistic: feature dim mismatch");
  for (const Vector& x : neg)
    if (x.size() != dim) throw std::invalid_argument("fit_logistic: feature dim mismatch");
}

// grad of the objective at w; features are [x; 1].
Vector objective_grad(const Vector& w, const std::vector<Vector>& pos,
                      const std::vector<Vector>& neg) {
  const size_t dim = w.size();
  Vector g(dim, 0.0);
  const double inv_n = 1.0 / static_cast<double>(pos.size() + neg.size());
  auto accumulate = [&](const Vector& x, double z) {
    double s = w[dim - 1];
    for (size_t j = 0; j + 1 < dim; ++j) s += w[j] * x[j];
    const double coef = -z * sigmoid(-z * s) * inv_n;
    for (size_t j = 0; j + 1 < dim; ++j) g[j] += coef * x[j];
    g[dim - 1] += coef;
  };
  for (const Vector& x : pos) accumulate(x, +1.0);
  for (const Vector& x : neg) accumulate(x, -1.0);
  return g;
}

}  // namespace

double LogisticModel::score(const Vector& x) const {
  if (x.size() + 1 != w.size())
    throw std::invalid_argument("LogisticModel::score: feature dim mismatch");
  double s = w.back();
  for (size_t j = 0; j < x.size(); ++j) s += w[j] * x[j];
  return s;
}

double logistic_objective(const LogisticModel& model, const std::vector<Vector>& pos,
                          const std::vector<Vector>& neg) {
  double loss = 0.0;
  for (const Vector& x : pos) loss += log1p_exp(-model.score(x));
  for (const Vector& x : neg) loss += log1p_exp(model.score(x));
  loss /= static_cast<double>(pos.size() + neg.size());
  double reg = 0.0;
  for (double wj : model.w) reg += wj * wj;
  return loss + model.c * reg;
}

LogisticModel fit_logistic(const std::vector<Vector>& pos, const std::vector<Vector>& neg,
                           double c, int iters, std::vector<double>* objective_trace) {
  check_features(pos, neg);
  if (c < 0.0) throw std::invalid_argument("fit_logistic: c must be >= 0");
  if (iters < 0) throw std::invalid_argument("fit_logistic: iters must be >= 0");
  LogisticModel model;
  model.c = c;
  model.w.assign(pos.front().size() + 1, 0.0);
  if (objective_trace) {
    objective_trace->clear();
    objective_trace->push_back(logistic_objective(model, pos, neg));
  }
  for (int it = 0; it < iters; ++it) {
    Vector g = objective_grad(model.w, pos, neg);
    double norm2 = 0.0;
    for (size_t j = 0; j < g.size(); ++j) {
      g[j] += 2.0 * c * model.w[j];
      norm2 += g[j] * g[j];
    }
    if (std::sqrt(norm2) < kGradTol) break;
    for (size_t j = 0; j < g.size(); ++j) model.w[j] -= kStep * g[j];
    if (objective_trace) objective_trace->push_back(logistic_objective(model, pos, neg));
  }
  return model;
}

double beta(const LogisticModel& model, const Vector& x) {
  const double b = std::exp(-model.score(x));
  return std::clamp(b, 1.0 / kBetaCap, kBetaCap);
}

Vector normalize_beta(const Vector& beta_raw) {
  if (beta_raw.empty()) throw std::invalid_argument("normalize_beta: empty input");
  double lo = beta_raw.front(), hi = beta_raw.front();
  for (double b : beta_raw) {
    if (!std::isfinite(b) || b <= 0.0)
      throw std::invalid_argument("normalize_beta: entries must be finite positives");
    lo = std::min(lo, b);
    hi = std::max(hi, b);
  }
  if (hi == lo) return Vector(beta_raw.size(), 1.0);
  Vector out(beta_raw.size());
  const double span = hi - lo;
  for (size_t i = 0; i < beta_raw.size(); ++i) out[i] = (beta_raw[i] - lo) / span;
  return out;
}

PropensityReport report(const std::vector<Vector>& dataset_controls,
                        const std::vector<Vector>& policy_controls, double c, int iters) {
  if (dataset_controls.size() != policy_controls.size() || dataset_controls.empty())
    throw std::invalid_argument("report: lists must be equal-length and non-empty");
  PropensityReport rep;
  rep.model = fit_logistic(dataset_controls, policy_controls, c, iters);
  rep.beta_raw.reserve(dataset_controls.size());
  for (const Vector& u : dataset_controls) rep.beta_raw.push_back(beta(rep.model, u));
  rep.beta_tilde = normalize_beta(rep.beta_raw);
  // Threshold 0.5 on P(z=+1|x), i.e. predict the dataset class when the score
  // is >= 0; the all-ties w=0 case then lands at exactly 0.5.
  int64_t correct = 0;
  for (const Vector& u : dataset_controls)
    if (rep.model.score(u) >= 0.0) ++correct;
  for (const Vector& u : policy_controls)
    if (rep.model.score(u) < 0.0) ++correct;
  rep.accuracy =
      static_cast<double>(correct) / static_cast<double>(2 * dataset_controls.size());
  return rep;
}

}  // namespace propensity
}  // namespace ddpgpp
