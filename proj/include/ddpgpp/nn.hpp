#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ddpgpp/rng.hpp"

namespace ddpgpp {

// A value that must be finite is not (exploded loss, bad gradients, diverging
// fixed-point iteration).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Vector = std::vector<double>;

namespace nn {

// Row-major matrix of doubles; also used for sample batches (one row each).
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  Vector row(int r) const {
    return Vector(data.begin() + static_cast<size_t>(r) * cols,
                  data.begin() + static_cast<size_t>(r + 1) * cols);
  }
};

enum class Activation { kIdentity, kRelu, kTanh };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation act = Activation::kIdentity;
};

// Fully-connected network. When out_scale is non-empty the last activation is
// mapped through y = out_offset + out_scale * a elementwise; this places a
// tanh head onto a control box.
struct MlpParams {
  std::vector<Layer> layers;
  Vector out_scale;
  Vector out_offset;

  int input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows; }
  int64_t param_count() const;
};

// Parameter gradients, shape-congruent with the owning MlpParams (the output
// scale/offset are fixed constants, not parameters).
struct Grads {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
};

Grads zero_grads(const MlpParams& params);

struct AdamState {
  Vector m;
  Vector v;
  int64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  AdamState(const MlpParams& params, double learning_rate);
};

// Post-activation values per layer; acts[0] is the input batch, acts[i+1] the
// output of layer i before the output scale is applied.
struct ForwardCache {
  std::vector<Matrix> acts;
};

Vector forward(const MlpParams& params, const Vector& input);
Matrix forward_batch(const MlpParams& params, const Matrix& input, ForwardCache* cache = nullptr);

// Gradients of sum_b(upstream_b . output_b) w.r.t. every parameter and the
// input; the input gradient is what chains dq/du into the actor update.
std::pair<Grads, Vector> backward(const MlpParams& params, const Vector& input,
                                  const Vector& upstream);
Grads backward_batch(const MlpParams& params, const ForwardCache& cache, const Matrix& upstream,
                     Matrix* input_grad = nullptr);
// Input gradient only; skips the parameter-gradient accumulation.
Matrix backward_input_batch(const MlpParams& params, const ForwardCache& cache,
                            const Matrix& upstream);

// Bias-corrected Adam step. Throws NumericalError on non-finite gradient
// entries, leaving params and state untouched.
void adam_step(MlpParams& params, const Grads& grads, AdamState& state);

// target <- (1 - tau) * target + tau * online, entrywise.
void soft_update(MlpParams& target, const MlpParams& online, double tau);

// Uniform fan-in init: every weight and bias of a layer drawn from
// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
MlpParams make_mlp(int input_dim, const std::vector<int>& hidden, int output_dim,
                   Activation hidden_act, Activation output_act, Rng& rng);
// Re-draws the last layer from U(-bound, bound); used for near-zero actor heads.
void reinit_final_layer(MlpParams& params, double bound, Rng& rng);

// Checkpoint: one plain-text header line with layer dimensions and activation
// tags, then the flat parameter sequence as 64-bit little-endian reals.
void write_checkpoint(const MlpParams& params, std::ostream& os);
MlpParams read_checkpoint(std::istream& is);
void save_checkpoint(const MlpParams& params, const std::string& path);
MlpParams load_checkpoint(const std::string& path);

}  // namespace nn
}  // namespace ddpgpp
