#include "ddpgpp/nn.hpp"

#include <bit>
#include <cblas.h>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

extern "C" void openblas_set_num_threads(int);

namespace ddpgpp {
namespace nn {

namespace {

// C (m x n) = alpha * A (m x k) * op(B) + beta * C, all row-major.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a, int lda,
          const double* b, int ldb, double beta, double* c, int ldc) {
  // The training loop is single-threaded by contract; a threaded BLAS would
  // also make summation order depend on the machine's core count.
  static const bool once = [] {
    openblas_set_num_threads(1);
    return true;
  }();
  (void)once;
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

void apply_activation(Activation act, Matrix& z) {
  switch (act) {
    case Activation::kIdentity:
      return;
    case Activation::kRelu:
      for (double& v : z.data) v = v > 0.0 ? v : 0.0;
      return;
    case Activation::kTanh:
      for (double& v : z.data) v = std::tanh(v);
      return;
  }
}

// act'(z) expressed through the post-activation value a.
double activation_grad(Activation act, double a) {
  switch (act) {
    case Activation::kIdentity:
      return 1.0;
    case Activation::kRelu:
      return a > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh:
      return 1.0 - a * a;
  }
  return 1.0;
}

void check_shapes(const MlpParams& params) {
  if (params.layers.empty()) throw std::invalid_argument("mlp has no layers");
  for (size_t i = 0; i < params.layers.size(); ++i) {
    const Layer& l = params.layers[i];
    if (l.weight.rows <= 0 || l.weight.cols <= 0)
      throw std::invalid_argument("mlp layer has empty weight");
    if (static_cast<int>(l.bias.size()) != l.weight.rows)
      throw std::invalid_argument("mlp bias size does not match weight rows");
    if (i + 1 < params.layers.size() &&
        params.layers[i + 1].weight.cols != l.weight.rows)
      throw std::invalid_argument("mlp layer dimensions do not chain");
  }
  if (!params.out_scale.empty() &&
      (params.out_scale.size() != params.out_offset.size() ||
       static_cast<int>(params.out_scale.size()) != params.output_dim()))
    throw std::invalid_argument("mlp output scale size does not match output dim");
}

Matrix layer_forward(const Layer& l, const Matrix& input) {
  Matrix z(input.rows, l.weight.rows);
  gemm(false, true, input.rows, l.weight.rows, input.cols, 1.0, input.data.data(), input.cols,
       l.weight.data.data(), l.weight.cols, 0.0, z.data.data(), z.cols);
  for (int r = 0; r < z.rows; ++r)
    for (int c = 0; c < z.cols; ++c) z(r, c) += l.bias[c];
  apply_activation(l.act, z);
  return z;
}

}  // namespace

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation tag: " + name);
}

int64_t MlpParams::param_count() const {
  int64_t n = 0;
  for (const Layer& l : layers) n += static_cast<int64_t>(l.weight.data.size()) + l.bias.size();
  return n;
}

Grads zero_grads(const MlpParams& params) {
  Grads g;
  g.weight.reserve(params.layers.size());
  g.bias.reserve(params.layers.size());
  for (const Layer& l : params.layers) {
    g.weight.emplace_back(l.weight.rows, l.weight.cols);
    g.bias.emplace_back(l.bias.size(), 0.0);
  }
  return g;
}

AdamState::AdamState(const MlpParams& params, double learning_rate)
    : m(params.param_count(), 0.0), v(params.param_count(), 0.0), lr(learning_rate) {
  if (learning_rate <= 0.0) throw std::invalid_argument("adam learning rate must be positive");
}

Matrix forward_batch(const MlpParams& params, const Matrix& input, ForwardCache* cache) {
  check_shapes(params);
  if (input.cols != params.input_dim())
    throw std::invalid_argument("forward: input dim " + std::to_string(input.cols) +
                                " does not match first layer in dim " +
                                std::to_string(params.input_dim()));
  if (cache) {
    cache->acts.clear();
    cache->acts.reserve(params.layers.size() + 1);
    cache->acts.push_back(input);
  }
  Matrix a = input;
  for (const Layer& l : params.layers) {
    a = layer_forward(l, a);
    if (cache) cache->acts.push_back(a);
  }
  if (!params.out_scale.empty()) {
    for (int r = 0; r < a.rows; ++r)
      for (int c = 0; c < a.cols; ++c)
        a(r, c) = params.out_offset[c] + params.out_scale[c] * a(r, c);
  }
  return a;
}

Vector forward(const MlpParams& params, const Vector& input) {
  Matrix in(1, static_cast<int>(input.size()));
  in.data = input;
  return forward_batch(params, in).data;
}

Grads backward_batch(const MlpParams& params, const ForwardCache& cache, const Matrix& upstream,
                     Matrix* input_grad) {
  check_shapes(params);
  const int n_layers = static_cast<int>(params.layers.size());
  if (static_cast<int>(cache.acts.size()) != n_layers + 1)
    throw std::invalid_argument("backward: cache does not match network depth");
  if (upstream.cols != params.output_dim() || upstream.rows != cache.acts[0].rows)
    throw std::invalid_argument("backward: upstream shape does not match output");

  Grads grads = zero_grads(params);
  Matrix ga = upstream;
  if (!params.out_scale.empty()) {
    for (int r = 0; r < ga.rows; ++r)
      for (int c = 0; c < ga.cols; ++c) ga(r, c) *= params.out_scale[c];
  }
  for (int i = n_layers - 1; i >= 0; --i) {
    const Layer& l = params.layers[i];
    const Matrix& a_out = cache.acts[i + 1];
    const Matrix& a_in = cache.acts[i];
    // gz = ga * act'(z), with act' read off the cached activation.
    Matrix gz = ga;
    for (size_t k = 0; k < gz.data.size(); ++k)
      gz.data[k] *= activation_grad(l.act, a_out.data[k]);
    gemm(true, false, l.weight.rows, l.weight.cols, gz.rows, 1.0, gz.data.data(), gz.cols,
         a_in.data.data(), a_in.cols, 0.0, grads.weight[i].data.data(), grads.weight[i].cols);
    for (int r = 0; r < gz.rows; ++r)
      for (int c = 0; c < gz.cols; ++c) grads.bias[i][c] += gz(r, c);
    if (i > 0 || input_grad) {
      Matrix prev(gz.rows, l.weight.cols);
      gemm(false, false, gz.rows, l.weight.cols, gz.cols, 1.0, gz.data.data(), gz.cols,
           l.weight.data.data(), l.weight.cols, 0.0, prev.data.data(), prev.cols);
      ga = std::move(prev);
    }
  }
  if (input_grad) *input_grad = std::move(ga);
  return grads;
}

Matrix backward_input_batch(const MlpParams& params, const ForwardCache& cache,
                            const Matrix& upstream) {
  check_shapes(params);
  const int n_layers = static_cast<int>(params.layers.size());
  if (static_cast<int>(cache.acts.size()) != n_layers + 1)
    throw std::invalid_argument("backward: cache does not match network depth");
  Matrix ga = upstream;
  if (!params.out_scale.empty()) {
    for (int r = 0; r < ga.rows; ++r)
      for (int c = 0; c < ga.cols; ++c) ga(r, c) *= params.out_scale[c];
  }
  for (int i = n_layers - 1; i >= 0; --i) {
    const Layer& l = params.layers[i];
    const Matrix& a_out = cache.acts[i + 1];
    Matrix gz = ga;
    for (size_t k = 0; k < gz.data.size(); ++k)
      gz.data[k] *= activation_grad(l.act, a_out.data[k]);
    Matrix prev(gz.rows, l.weight.cols);
    gemm(false, false, gz.rows, l.weight.cols, gz.cols, 1.0, gz.data.data(), gz.cols,
         l.weight.data.data(), l.weight.cols, 0.0, prev.data.data(), prev.cols);
    ga = std::move(prev);
  }
  return ga;
}

std::pair<Grads, Vector> backward(const MlpParams& params, const Vector& input,
                                  const Vector& upstream) {
  Matrix in(1, static_cast<int>(input.size()));
  in.data = input;
  Matrix up(1, static_cast<int>(upstream.size()));
  up.data = upstream;
  ForwardCache cache;
  forward_batch(params, in, &cache);
  Matrix input_grad;
  Grads grads = backward_batch(params, cache, up, &input_grad);
  return {std::move(grads), std::move(input_grad.data)};
}

void adam_step(MlpParams& params, const Grads& grads, AdamState& state) {
  check_shapes(params);
  if (grads.weight.size() != params.layers.size() || grads.bias.size() != params.layers.size())
    throw std::invalid_argument("adam: gradient layer count mismatch");
  for (size_t i = 0; i < params.layers.size(); ++i) {
    if (grads.weight[i].rows != params.layers[i].weight.rows ||
        grads.weight[i].cols != params.layers[i].weight.cols ||
        grads.bias[i].size() != params.layers[i].bias.size())
      throw std::invalid_argument("adam: gradient shape mismatch");
  }
  if (static_cast<int64_t>(state.m.size()) != params.param_count())
    throw std::invalid_argument("adam: moment size mismatch");
  for (size_t i = 0; i < grads.weight.size(); ++i) {
    for (double g : grads.weight[i].data)
      if (!std::isfinite(g)) throw NumericalError("adam: non-finite weight gradient");
    for (double g : grads.bias[i])
      if (!std::isfinite(g)) throw NumericalError("adam: non-finite bias gradient");
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  size_t k = 0;
  auto update = [&](double& p, double g) {
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[k] / bc1;
    const double vhat = state.v[k] / bc2;
    p -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    ++k;
  };
  for (size_t i = 0; i < params.layers.size(); ++i) {
    Layer& l = params.layers[i];
    for (size_t j = 0; j < l.weight.data.size(); ++j) update(l.weight.data[j], grads.weight[i].data[j]);
    for (size_t j = 0; j < l.bias.size(); ++j) update(l.bias[j], grads.bias[i][j]);
  }
}

void soft_update(MlpParams& target, const MlpParams& online, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("soft_update: tau must be in (0,1]");
  if (target.layers.size() != online.layers.size())
    throw std::invalid_argument("soft_update: layer count mismatch");
  for (size_t i = 0; i < target.layers.size(); ++i) {
    Layer& t = target.layers[i];
    const Layer& o = online.layers[i];
    if (t.weight.rows != o.weight.rows || t.weight.cols != o.weight.cols ||
        t.bias.size() != o.bias.size())
      throw std::invalid_argument("soft_update: layer shape mismatch");
    for (size_t j = 0; j < t.weight.data.size(); ++j)
      t.weight.data[j] = (1.0 - tau) * t.weight.data[j] + tau * o.weight.data[j];
    for (size_t j = 0; j < t.bias.size(); ++j)
      t.bias[j] = (1.0 - tau) * t.bias[j] + tau * o.bias[j];
  }
}

MlpParams make_mlp(int input_dim, const std::vector<int>& hidden, int output_dim,
                   Activation hidden_act, Activation output_act, Rng& rng) {
  if (input_dim <= 0 || output_dim <= 0)
    throw std::invalid_argument("make_mlp: dimensions must be positive");
  MlpParams params;
  int in = input_dim;
  auto add_layer = [&](int out, Activation act) {
    Layer l;
    l.weight = Matrix(out, in);
    l.bias.assign(out, 0.0);
    l.act = act;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& w : l.weight.data) w = rng.uniform(-bound, bound);
    for (double& b : l.bias) b = rng.uniform(-bound, bound);
    params.layers.push_back(std::move(l));
    in = out;
  };
  for (int h : hidden) add_layer(h, hidden_act);
  add_layer(output_dim, output_act);
  return params;
}

void reinit_final_layer(MlpParams& params, double bound, Rng& rng) {
  Layer& l = params.layers.back();
  for (double& w : l.weight.data) w = rng.uniform(-bound, bound);
  for (double& b : l.bias) b = rng.uniform(-bound, bound);
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

void write_doubles(std::ostream& os, const double* p, size_t n) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_doubles(std::istream& is, double* p, size_t n) {
  is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("checkpoint: truncated payload");
}

}  // namespace

void write_checkpoint(const MlpParams& params, std::ostream& os) {
  check_shapes(params);
  std::ostringstream header;
  header << "mlp " << params.layers.size();
  for (const Layer& l : params.layers)
    header << ' ' << l.weight.cols << ' ' << l.weight.rows << ' ' << activation_name(l.act);
  header << ' ' << params.out_scale.size() << '\n';
  os << header.str();
  for (const Layer& l : params.layers) {
    write_doubles(os, l.weight.data.data(), l.weight.data.size());
    write_doubles(os, l.bias.data(), l.bias.size());
  }
  if (!params.out_scale.empty()) {
    write_doubles(os, params.out_scale.data(), params.out_scale.size());
    write_doubles(os, params.out_offset.data(), params.out_offset.size());
  }
}

MlpParams read_checkpoint(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("checkpoint: missing header");
  std::istringstream header(line);
  std::string magic;
  size_t n_layers = 0;
  header >> magic >> n_layers;
  if (!header || magic != "mlp" || n_layers == 0)
    throw std::runtime_error("checkpoint: bad header: " + line);
  MlpParams params;
  for (size_t i = 0; i < n_layers; ++i) {
    int in = 0, out = 0;
    std::string act;
    header >> in >> out >> act;
    if (!header || in <= 0 || out <= 0) throw std::runtime_error("checkpoint: bad layer dims");
    Layer l;
    l.weight = Matrix(out, in);
    l.bias.assign(out, 0.0);
    l.act = activation_from_name(act);
    params.layers.push_back(std::move(l));
  }
  size_t scale_size = 0;
  header >> scale_size;
  if (!header) throw std::runtime_error("checkpoint: missing scale size");
  for (Layer& l : params.layers) {
    read_doubles(is, l.weight.data.data(), l.weight.data.size());
    read_doubles(is, l.bias.data(), l.bias.size());
  }
  if (scale_size > 0) {
    params.out_scale.assign(scale_size, 0.0);
    params.out_offset.assign(scale_size, 0.0);
    read_doubles(is, params.out_scale.data(), scale_size);
    read_doubles(is, params.out_offset.data(), scale_size);
  }
  check_shapes(params);
  for (const Layer& l : params.layers) {
    for (double w : l.weight.data)
      if (!std::isfinite(w)) throw NumericalError("checkpoint: non-finite weight");
    for (double b : l.bias)
      if (!std::isfinite(b)) throw NumericalError("checkpoint: non-finite bias");
  }
  return params;
}

void save_checkpoint(const MlpParams& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  write_checkpoint(params, os);
  if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

MlpParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  return read_checkpoint(is);
}

}  // namespace nn
}  // namespace ddpgpp
