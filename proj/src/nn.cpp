#include "armarecon/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "armarecon/common.hpp"
#include "armarecon/spectral.hpp"

namespace armarecon {

namespace {

void apply_activation(Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::kReLU) z = z.cwiseMax(0.0);
}

// Derivative mask evaluated at the pre-activation; ReLU' at exactly 0 is 0.
Eigen::MatrixXd activation_grad(const Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::kIdentity) return Eigen::MatrixXd::Ones(z.rows(), z.cols());
  return (z.array() > 0.0).cast<double>().matrix();
}

void glorot_fill(Eigen::MatrixXd& m, SplitMix64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  double* data = m.data();
  for (long i = 0; i < m.size(); ++i) data[i] = rng.next_uniform(-limit, limit);
}

long arma_layer_input_dim(const ModelConfig& c, int layer) {
  return layer == 0 ? c.input_dim : c.hidden_dim;
}

ModelParams make_zero_params(const ModelConfig& config) {
  if (config.input_dim < 1 || config.hidden_dim < 1) {
    throw ConfigError("model needs positive input and hidden dimensions");
  }
  if (!(config.dropout_rate >= 0.0 && config.dropout_rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(config.dropout_rate));
  }
  ModelParams p;
  p.config = config;
  switch (config.conv_kind) {
    case ConvKind::kArma: {
      if (config.num_stacks < 1 || config.num_layers < 1) {
        throw ConfigError("ARMA convolution needs num_stacks >= 1 and num_layers >= 1");
      }
      p.arma.num_stacks = config.num_stacks;
      p.arma.num_layers = config.num_layers;
      for (int r = 0; r < config.num_stacks; ++r) {
        for (int l = 0; l < config.num_layers; ++l) {
          p.arma.w.emplace_back(Eigen::MatrixXd::Zero(arma_layer_input_dim(config, l), config.hidden_dim));
          p.arma.v.emplace_back(Eigen::MatrixXd::Zero(config.input_dim, config.hidden_dim));
        }
      }
      break;
    }
    case ConvKind::kCheb: {
      if (config.cheb_order < 1) throw ConfigError("Chebyshev convolution needs order K >= 1");
      for (int k = 0; k < config.cheb_order; ++k) {
        p.cheb_w.emplace_back(Eigen::MatrixXd::Zero(config.input_dim, config.hidden_dim));
      }
      break;
    }
    case ConvKind::kGcn:
    case ConvKind::kMlp:
      p.dense_w = Eigen::MatrixXd::Zero(config.input_dim, config.hidden_dim);
      break;
  }
  if (config.with_decoder) {
    p.decoder.w1 = Eigen::MatrixXd::Zero(config.hidden_dim, config.hidden_dim);
    p.decoder.b1 = Eigen::VectorXd::Zero(config.hidden_dim);
    p.decoder.w2 = Eigen::MatrixXd::Zero(config.hidden_dim, config.input_dim);
    p.decoder.b2 = Eigen::VectorXd::Zero(config.input_dim);
  }
  p.head_w = Eigen::MatrixXd::Zero(config.hidden_dim, 2);
  p.head_b = Eigen::VectorXd::Zero(2);
  return p;
}

Eigen::MatrixXd rows_plus_bias(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                               const Eigen::VectorXd& b) {
  return (x * w).rowwise() + b.transpose();
}

}  // namespace

ConvKind conv_kind_from_string(const std::string& name) {
  if (name == "arma") return ConvKind::kArma;
  if (name == "gcn") return ConvKind::kGcn;
  if (name == "cheb") return ConvKind::kCheb;
  if (name == "mlp") return ConvKind::kMlp;
  throw ConfigError("unknown model kind '" + name + "' (expected arma, gcn, cheb or mlp)");
}

std::string to_string(ConvKind kind) {
  switch (kind) {
    case ConvKind::kArma: return "arma";
    case ConvKind::kGcn: return "gcn";
    case ConvKind::kCheb: return "cheb";
    case ConvKind::kMlp: return "mlp";
  }
  return "?";
}

ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = make_zero_params(config);

  // One stream per group: dropping a group (decoder ablation) must not shift the others.
  SplitMix64 conv_rng(mix_seed(seed, rng_tags::kInitConv));
  switch (config.conv_kind) {
    case ConvKind::kArma:
      for (std::size_t i = 0; i < p.arma.w.size(); ++i) {
        glorot_fill(p.arma.w[i], conv_rng);
        glorot_fill(p.arma.v[i], conv_rng);
      }
      break;
    case ConvKind::kCheb:
      for (auto& w : p.cheb_w) glorot_fill(w, conv_rng);
      break;
    case ConvKind::kGcn:
    case ConvKind::kMlp:
      glorot_fill(p.dense_w, conv_rng);
      break;
  }

  SplitMix64 head_rng(mix_seed(seed, rng_tags::kInitHead));
  glorot_fill(p.head_w, head_rng);

  if (config.with_decoder) {
    SplitMix64 dec_rng(mix_seed(seed, rng_tags::kInitDecoder));
    glorot_fill(p.decoder.w1, dec_rng);
    glorot_fill(p.decoder.w2, dec_rng);
  }
  return p;
}

ModelParams zeros_like(const ModelParams& like) { return make_zero_params(like.config); }

std::vector<ParamRef> parameter_views(ModelParams& params, bool include_decoder) {
  std::vector<ParamRef> views;
  auto add = [&views](const std::string& name, Eigen::MatrixXd& m) {
    views.push_back({name, m.data(), m.size()});
  };
  auto add_vec = [&views](const std::string& name, Eigen::VectorXd& v) {
    views.push_back({name, v.data(), v.size()});
  };

  switch (params.config.conv_kind) {
    case ConvKind::kArma:
      for (int r = 0; r < params.arma.num_stacks; ++r) {
        for (int l = 0; l < params.arma.num_layers; ++l) {
          const std::size_t i = static_cast<std::size_t>(r) * params.arma.num_layers + l;
          add("arma.w.r" + std::to_string(r) + ".l" + std::to_string(l), params.arma.w[i]);
          add("arma.v.r" + std::to_string(r) + ".l" + std::to_string(l), params.arma.v[i]);
        }
      }
      break;
    case ConvKind::kCheb:
      for (std::size_t k = 0; k < params.cheb_w.size(); ++k) {
        add("cheb.w" + std::to_string(k), params.cheb_w[k]);
      }
      break;
    case ConvKind::kGcn:
    case ConvKind::kMlp:
      add("conv.w", params.dense_w);
      break;
  }
  add("head.w", params.head_w);
  add_vec("head.b", params.head_b);
  if (include_decoder && params.config.with_decoder) {
    add("decoder.w1", params.decoder.w1);
    add_vec("decoder.b1", params.decoder.b1);
    add("decoder.w2", params.decoder.w2);
    add_vec("decoder.b2", params.decoder.b2);
  }
  return views;
}

double power_iteration_lambda_max(const Eigen::MatrixXd& sym, double tol, int max_iter) {
  if (sym.rows() != sym.cols()) throw DataError("power iteration needs a square matrix");
  const long n = sym.rows();
  if (n == 0) return 0.0;

  SplitMix64 rng(0x51BB318F2C037F96ULL);  // fixed start keeps runs reproducible
  Eigen::VectorXd z(n);
  for (long i = 0; i < n; ++i) z[i] = rng.next_uniform(-1.0, 1.0);
  z /= z.norm();

  double lambda = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::VectorXd y = sym * z;
    const double next = z.dot(y);
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    z = y / norm;
    if (iter > 0 && std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) {
      return next;
    }
    lambda = next;
  }
  warn("power iteration hit the iteration cap; using the last eigenvalue estimate");
  return lambda;
}

PropagationOps build_propagation(const SubjectGraph& graph, ConvKind kind) {
  PropagationOps ops;
  switch (kind) {
    case ConvKind::kArma:
    case ConvKind::kGcn:
      ops.atil = graph.normalized;
      break;
    case ConvKind::kCheb: {
      Eigen::MatrixXd lap = normalized_laplacian(graph.adjacency);
      ops.lambda_max = power_iteration_lambda_max(lap, 1e-8);
      const double scale = ops.lambda_max > 0.0 ? 2.0 / ops.lambda_max : 0.0;
      ops.lhat = scale * lap - Eigen::MatrixXd::Identity(lap.rows(), lap.cols());
      break;
    }
    case ConvKind::kMlp:
      break;  // no propagation operator
  }
  return ops;
}

Eigen::MatrixXd arma_conv_forward(const Eigen::MatrixXd& atil, const Eigen::MatrixXd& x_prev,
                                  const Eigen::MatrixXd& h, const Eigen::MatrixXd& w,
                                  const Eigen::MatrixXd& v, Activation act) {
  if (atil.cols() != x_prev.rows() || x_prev.cols() != w.rows() || h.cols() != v.rows() ||
      w.cols() != v.cols() || atil.rows() != h.rows()) {
    throw DataError("arma_conv_forward: shape mismatch");
  }
  Eigen::MatrixXd z = atil * x_prev * w + h * v;
  apply_activation(z, act);
  return z;
}

Eigen::MatrixXd gcn_conv_forward(const Eigen::MatrixXd& atil, const Eigen::MatrixXd& x,
                                 const Eigen::MatrixXd& w, Activation act) {
  if (atil.cols() != x.rows() || x.cols() != w.rows()) {
    throw DataError("gcn_conv_forward: shape mismatch");
  }
  Eigen::MatrixXd z = atil * x * w;
  apply_activation(z, act);
  return z;
}

Eigen::MatrixXd cheb_conv_forward(const Eigen::MatrixXd& l_scaled, const Eigen::MatrixXd& x,
                                  const std::vector<Eigen::MatrixXd>& w, Activation act) {
  if (w.empty()) throw ConfigError("cheb_conv_forward needs K >= 1 coefficient matrices");
  if (l_scaled.cols() != x.rows()) throw DataError("cheb_conv_forward: shape mismatch");

  Eigen::MatrixXd t_prev = x;  // T_0
  Eigen::MatrixXd z = t_prev * w[0];
  if (w.size() > 1) {
    Eigen::MatrixXd t_curr = l_scaled * x;  // T_1
    z += t_curr * w[1];
    for (std::size_t k = 2; k < w.size(); ++k) {
      Eigen::MatrixXd t_next = 2.0 * (l_scaled * t_curr) - t_prev;
      z += t_next * w[k];
      t_prev = std::move(t_curr);
      t_curr = std::move(t_next);
    }
  }
  apply_activation(z, act);
  return z;
}

Eigen::MatrixXd dropout(const Eigen::MatrixXd& x, double rate, bool training, SplitMix64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const double scale = 1.0 / (1.0 - rate);
  Eigen::MatrixXd out(x.rows(), x.cols());
  const double* in = x.data();
  double* o = out.data();
  for (long i = 0; i < x.size(); ++i) o[i] = rng.next_double() < rate ? 0.0 : in[i] * scale;
  return out;
}

ForwardResult model_forward(const ModelParams& params, const PropagationOps& ops,
                            const Eigen::MatrixXd& h, bool training, SplitMix64& dropout_rng,
                            ForwardCache* cache) {
  const ModelConfig& cfg = params.config;
  if (h.cols() != cfg.input_dim) {
    throw DataError("model_forward: feature matrix has " + std::to_string(h.cols()) +
                    " columns, model expects " + std::to_string(cfg.input_dim));
  }

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c = ForwardCache{};

  const long n = h.rows();
  switch (cfg.conv_kind) {
    case ConvKind::kArma: {
      if (ops.atil.rows() != n) throw DataError("model_forward: operator/feature row mismatch");
      const int stacks = params.arma.num_stacks;
      const int layers = params.arma.num_layers;
      c.arma_ax.resize(static_cast<std::size_t>(stacks) * layers);
      c.arma_z.resize(static_cast<std::size_t>(stacks) * layers);
      c.arma_x.resize(static_cast<std::size_t>(stacks) * layers);
      Eigen::MatrixXd mean_out = Eigen::MatrixXd::Zero(n, cfg.hidden_dim);
      for (int r = 0; r < stacks; ++r) {
        const Eigen::MatrixXd* x = &h;  // X^{(0)} = H
        for (int l = 0; l < layers; ++l) {
          const std::size_t i = static_cast<std::size_t>(r) * layers + l;
          c.arma_ax[i] = ops.atil * (*x);
          c.arma_z[i] = c.arma_ax[i] * params.arma.w[i] + h * params.arma.v[i];
          c.arma_x[i] = c.arma_z[i];
          apply_activation(c.arma_x[i], Activation::kReLU);
          x = &c.arma_x[i];
        }
        mean_out += c.arma_x[static_cast<std::size_t>(r) * layers + layers - 1];
      }
      c.conv_out = mean_out / static_cast<double>(stacks);
      break;
    }
    case ConvKind::kGcn: {
      if (ops.atil.rows() != n) throw DataError("model_forward: operator/feature row mismatch");
      c.conv_ax = ops.atil * h;
      c.conv_z = c.conv_ax * params.dense_w;
      c.conv_out = c.conv_z;
      apply_activation(c.conv_out, Activation::kReLU);
      break;
    }
    case ConvKind::kCheb: {
      if (ops.lhat.rows() != n) throw DataError("model_forward: operator/feature row mismatch");
      const std::size_t order = params.cheb_w.size();
      c.cheb_t.resize(order);
      c.cheb_t[0] = h;
      if (order > 1) c.cheb_t[1] = ops.lhat * h;
      for (std::size_t k = 2; k < order; ++k) {
        c.cheb_t[k] = 2.0 * (ops.lhat * c.cheb_t[k - 1]) - c.cheb_t[k - 2];
      }
      c.conv_z = Eigen::MatrixXd::Zero(n, cfg.hidden_dim);
      for (std::size_t k = 0; k < order; ++k) c.conv_z += c.cheb_t[k] * params.cheb_w[k];
      c.conv_out = c.conv_z;
      apply_activation(c.conv_out, Activation::kReLU);
      break;
    }
    case ConvKind::kMlp: {
      c.conv_z = h * params.dense_w;
      c.conv_out = c.conv_z;
      apply_activation(c.conv_out, Activation::kReLU);
      break;
    }
  }

  if (training && cfg.dropout_rate > 0.0) {
    const double scale = 1.0 / (1.0 - cfg.dropout_rate);
    c.dropout_multiplier.resize(n, cfg.hidden_dim);
    double* m = c.dropout_multiplier.data();
    for (long i = 0; i < c.dropout_multiplier.size(); ++i) {
      m[i] = dropout_rng.next_double() < cfg.dropout_rate ? 0.0 : scale;
    }
    c.hidden = c.conv_out.cwiseProduct(c.dropout_multiplier);
  } else {
    c.hidden = c.conv_out;
  }

  c.logits = rows_plus_bias(c.hidden, params.head_w, params.head_b);

  if (cfg.with_decoder) {
    c.dec_z1 = rows_plus_bias(c.hidden, params.decoder.w1, params.decoder.b1);
    c.dec_h1 = c.dec_z1.cwiseMax(0.0);
    c.reconstruction = rows_plus_bias(c.dec_h1, params.decoder.w2, params.decoder.b2);
  }

  return {c.logits, c.reconstruction, c.hidden};
}

double joint_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                  const std::vector<std::uint8_t>& train_mask,
                  const Eigen::MatrixXd& reconstruction, const Eigen::MatrixXd& h,
                  double lambda_recon) {
  const long n = logits.rows();
  if (logits.cols() != 2) throw DataError("joint_loss expects two-class logits");
  if (static_cast<long>(labels.size()) != n || static_cast<long>(train_mask.size()) != n) {
    throw DataError("joint_loss: labels/mask length mismatch");
  }

  long count = 0;
  double ce = 0.0;
  for (long i = 0; i < n; ++i) {
    if (!train_mask[static_cast<std::size_t>(i)]) continue;
    const int y = labels[static_cast<std::size_t>(i)];
    if (y != 0 && y != 1) {
      throw DataError("train mask selects node " + std::to_string(i) + " whose label is hidden or invalid (" +
                      std::to_string(y) + ")");
    }
    const double z0 = logits(i, 0);
    const double z1 = logits(i, 1);
    const double m = std::max(z0, z1);
    const double lse = m + std::log(std::exp(z0 - m) + std::exp(z1 - m));
    ce += lse - logits(i, y);
    ++count;
  }
  if (count == 0) throw DataError("joint_loss: empty training mask");
  ce /= static_cast<double>(count);

  double mse = 0.0;
  if (lambda_recon != 0.0 || reconstruction.size() > 0) {
    if (reconstruction.rows() != h.rows() || reconstruction.cols() != h.cols()) {
      if (lambda_recon != 0.0) {
        throw DataError("joint_loss: reconstruction/feature shape mismatch");
      }
    } else {
      mse = (reconstruction - h).squaredNorm() / static_cast<double>(h.size());
    }
  }
  return ce + lambda_recon * mse;
}

ModelParams backward(const ModelParams& params, const PropagationOps& ops,
                     const Eigen::MatrixXd& h, const std::vector<int>& labels,
                     const std::vector<std::uint8_t>& train_mask, double lambda_recon,
                     const ForwardCache& cache) {
  const ModelConfig& cfg = params.config;
  const long n = h.rows();
  ModelParams grads = zeros_like(params);

  // d loss / d logits: softmax minus one-hot over the train mask, averaged.
  long count = 0;
  for (long i = 0; i < n; ++i)
    if (train_mask[static_cast<std::size_t>(i)]) ++count;
  if (count == 0) throw DataError("backward: empty training mask");

  Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(n, 2);
  const double inv_count = 1.0 / static_cast<double>(count);
  for (long i = 0; i < n; ++i) {
    if (!train_mask[static_cast<std::size_t>(i)]) continue;
    const int y = labels[static_cast<std::size_t>(i)];
    if (y != 0 && y != 1) {
      throw DataError("backward: train mask selects node " + std::to_string(i) + " with hidden label");
    }
    const double z0 = cache.logits(i, 0);
    const double z1 = cache.logits(i, 1);
    const double m = std::max(z0, z1);
    const double e0 = std::exp(z0 - m);
    const double e1 = std::exp(z1 - m);
    const double denom = e0 + e1;
    dlogits(i, 0) = (e0 / denom - (y == 0 ? 1.0 : 0.0)) * inv_count;
    dlogits(i, 1) = (e1 / denom - (y == 1 ? 1.0 : 0.0)) * inv_count;
  }

  grads.head_w = cache.hidden.transpose() * dlogits;
  grads.head_b = dlogits.colwise().sum().transpose();
  Eigen::MatrixXd dhidden = dlogits * params.head_w.transpose();

  if (cfg.with_decoder) {
    // 2*lambda/(n*d_in) * (reconstruction - H); exactly zero when lambda is zero.
    Eigen::MatrixXd drec =
        (2.0 * lambda_recon / static_cast<double>(h.size())) * (cache.reconstruction - h);
    grads.decoder.w2 = cache.dec_h1.transpose() * drec;
    grads.decoder.b2 = drec.colwise().sum().transpose();
    Eigen::MatrixXd dh1 = drec * params.decoder.w2.transpose();
    Eigen::MatrixXd dz1 = dh1.cwiseProduct(activation_grad(cache.dec_z1, Activation::kReLU));
    grads.decoder.w1 = cache.hidden.transpose() * dz1;
    grads.decoder.b1 = dz1.colwise().sum().transpose();
    dhidden += dz1 * params.decoder.w1.transpose();
  }

  Eigen::MatrixXd dconv = cache.dropout_multiplier.size() > 0
                              ? dhidden.cwiseProduct(cache.dropout_multiplier)
                              : std::move(dhidden);

  switch (cfg.conv_kind) {
    case ConvKind::kArma: {
      const int stacks = params.arma.num_stacks;
      const int layers = params.arma.num_layers;
      const Eigen::MatrixXd dstack_out = dconv / static_cast<double>(stacks);
      for (int r = 0; r < stacks; ++r) {
        Eigen::MatrixXd dx = dstack_out;  // d loss / d X_r^{(T)}
        for (int l = layers - 1; l >= 0; --l) {
          const std::size_t i = static_cast<std::size_t>(r) * layers + l;
          Eigen::MatrixXd dz = dx.cwiseProduct(activation_grad(cache.arma_z[i], Activation::kReLU));
          grads.arma.w[i] += cache.arma_ax[i].transpose() * dz;
          grads.arma.v[i] += h.transpose() * dz;
          if (l > 0) dx = ops.atil * (dz * params.arma.w[i].transpose());  // Atil is symmetric
        }
      }
      break;
    }
    case ConvKind::kGcn: {
      Eigen::MatrixXd dz = dconv.cwiseProduct(activation_grad(cache.conv_z, Activation::kReLU));
      grads.dense_w = cache.conv_ax.transpose() * dz;
      break;
    }
    case ConvKind::kCheb: {
      Eigen::MatrixXd dz = dconv.cwiseProduct(activation_grad(cache.conv_z, Activation::kReLU));
      for (std::size_t k = 0; k < params.cheb_w.size(); ++k) {
        grads.cheb_w[k] = cache.cheb_t[k].transpose() * dz;
      }
      break;
    }
    case ConvKind::kMlp: {
      Eigen::MatrixXd dz = dconv.cwiseProduct(activation_grad(cache.conv_z, Activation::kReLU));
      grads.dense_w = h.transpose() * dz;
      break;
    }
  }
  return grads;
}

AdamState make_adam_state(const std::vector<ParamRef>& params, double lr, double weight_decay) {
  AdamState state;
  state.lr = lr;
  state.weight_decay = weight_decay;
  for (const auto& p : params) {
    state.names.push_back(p.name);
    state.m.emplace_back(Eigen::VectorXd::Zero(p.size));
    state.v.emplace_back(Eigen::VectorXd::Zero(p.size));
  }
  return state;
}

void adam_step(const std::vector<ParamRef>& params, const std::vector<ParamRef>& grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw DataError("adam_step: parameter/gradient/state count mismatch");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const double decay = 1.0 - state.lr * state.weight_decay;

  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].size != grads[t].size || params[t].size != state.m[t].size() ||
        params[t].name != grads[t].name) {
      throw DataError("adam_step: tensor '" + params[t].name + "' mismatched with gradient '" + grads[t].name + "'");
    }
    double* theta = params[t].data;
    const double* g = grads[t].data;
    double* m = state.m[t].data();
    double* v = state.v[t].data();
    for (long i = 0; i < params[t].size; ++i) {
      theta[i] *= decay;
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      theta[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

// ---- checkpoint I/O ----

namespace {

constexpr char kCkptMagic[] = "armarecon-ckpt v1\n";

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u64(out, bits);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw DataError("truncated checkpoint");
  return static_cast<std::uint32_t>(b[0]) | (b[1] << 8) | (b[2] << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw DataError("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double get_f64(std::istream& in) {
  std::uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const std::uint32_t len = get_u32(in);
  if (len > (1u << 20)) throw DataError("corrupt checkpoint: oversized string");
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw DataError("truncated checkpoint");
  return s;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const AdamState& state, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint '" + path + "' for writing");
  out.write(kCkptMagic, static_cast<std::streamsize>(std::strlen(kCkptMagic)));

  const ModelConfig& c = params.config;
  char line[96];
  std::ostringstream meta;
  meta << "conv_kind=" << to_string(c.conv_kind) << "\n";
  meta << "with_decoder=" << (c.with_decoder ? 1 : 0) << "\n";
  meta << "input_dim=" << c.input_dim << "\n";
  meta << "hidden_dim=" << c.hidden_dim << "\n";
  meta << "num_stacks=" << c.num_stacks << "\n";
  meta << "num_layers=" << c.num_layers << "\n";
  meta << "cheb_order=" << c.cheb_order << "\n";
  std::snprintf(line, sizeof(line), "dropout_rate=%.17g\n", c.dropout_rate);
  meta << line;
  put_string(out, meta.str());

  auto views = parameter_views(const_cast<ModelParams&>(params), true);
  put_u32(out, static_cast<std::uint32_t>(views.size()));
  for (const auto& view : views) {
    put_string(out, view.name);
    put_u64(out, static_cast<std::uint64_t>(view.size));
    for (long i = 0; i < view.size; ++i) put_f64(out, view.data[i]);
  }

  put_u64(out, static_cast<std::uint64_t>(state.step));
  put_f64(out, state.lr);
  put_f64(out, state.beta1);
  put_f64(out, state.beta2);
  put_f64(out, state.eps);
  put_f64(out, state.weight_decay);
  put_u32(out, static_cast<std::uint32_t>(state.m.size()));
  for (std::size_t t = 0; t < state.m.size(); ++t) {
    put_string(out, state.names[t]);
    put_u64(out, static_cast<std::uint64_t>(state.m[t].size()));
    for (long i = 0; i < state.m[t].size(); ++i) put_f64(out, state.m[t][i]);
    for (long i = 0; i < state.v[t].size(); ++i) put_f64(out, state.v[t][i]);
  }
  if (!out) throw DataError("I/O error while writing checkpoint '" + path + "'");
}

std::pair<ModelParams, AdamState> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");

  std::string magic(std::strlen(kCkptMagic), '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (!in || magic != kCkptMagic) {
    throw DataError("'" + path + "' is not an armarecon-ckpt v1 checkpoint");
  }

  ModelConfig cfg;
  {
    std::istringstream meta(get_string(in));
    std::string line;
    while (std::getline(meta, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 1);
      if (key == "conv_kind") cfg.conv_kind = conv_kind_from_string(value);
      else if (key == "with_decoder") cfg.with_decoder = value == "1";
      else if (key == "input_dim") cfg.input_dim = std::stoi(value);
      else if (key == "hidden_dim") cfg.hidden_dim = std::stoi(value);
      else if (key == "num_stacks") cfg.num_stacks = std::stoi(value);
      else if (key == "num_layers") cfg.num_layers = std::stoi(value);
      else if (key == "cheb_order") cfg.cheb_order = std::stoi(value);
      else if (key == "dropout_rate") cfg.dropout_rate = std::stod(value);
      else throw DataError("checkpoint '" + path + "' has unknown meta key '" + key + "'");
    }
  }

  ModelParams params = make_zero_params(cfg);
  auto views = parameter_views(params, true);
  const std::uint32_t tensor_count = get_u32(in);
  if (tensor_count != views.size()) {
    throw DataError("checkpoint '" + path + "' holds " + std::to_string(tensor_count) + " tensors, model expects " +
                    std::to_string(views.size()));
  }
  for (std::uint32_t t = 0; t < tensor_count; ++t) {
    const std::string name = get_string(in);
    const std::uint64_t size = get_u64(in);
    ParamRef* view = nullptr;
    for (auto& v : views)
      if (v.name == name) view = &v;
    if (!view) throw DataError("checkpoint '" + path + "' names unknown tensor '" + name + "'");
    if (static_cast<std::uint64_t>(view->size) != size) {
      throw DataError("checkpoint '" + path + "' tensor '" + name + "' has size " + std::to_string(size) +
                      ", model expects " + std::to_string(view->size));
    }
    for (std::uint64_t i = 0; i < size; ++i) view->data[i] = get_f64(in);
  }

  AdamState state;
  state.step = static_cast<long>(get_u64(in));
  state.lr = get_f64(in);
  state.beta1 = get_f64(in);
  state.beta2 = get_f64(in);
  state.eps = get_f64(in);
  state.weight_decay = get_f64(in);
  const std::uint32_t moment_count = get_u32(in);
  for (std::uint32_t t = 0; t < moment_count; ++t) {
    state.names.push_back(get_string(in));
    const std::uint64_t size = get_u64(in);
    Eigen::VectorXd m(static_cast<long>(size)), v(static_cast<long>(size));
    for (std::uint64_t i = 0; i < size; ++i) m[static_cast<long>(i)] = get_f64(in);
    for (std::uint64_t i = 0; i < size; ++i) v[static_cast<long>(i)] = get_f64(in);
    state.m.push_back(std::move(m));
    state.v.push_back(std::move(v));
  }
  return {std::move(params), std::move(state)};
}

}  // namespace armarecon
