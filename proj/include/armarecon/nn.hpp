#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "armarecon/graph.hpp"
#include "armarecon/rng.hpp"

namespace armarecon {

enum class Activation { kReLU, kIdentity };

enum class ConvKind { kArma, kGcn, kCheb, kMlp };

ConvKind conv_kind_from_string(const std::string& name);
std::string to_string(ConvKind kind);

/// ARMA convolution weights: R parallel stacks of T layers, each layer holding the
/// propagation weight W (d_l x d_{l+1}) and the skip weight V (d_in x d_{l+1}).
/// The stack outputs are averaged.
struct ArmaConvParams {
  int num_stacks = 1;
  int num_layers = 1;
  std::vector<Eigen::MatrixXd> w;  // indexed [r * num_layers + l]
  std::vector<Eigen::MatrixXd> v;  // same indexing
};

struct DecoderParams {
  Eigen::MatrixXd w1;  // d_h x d_h
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // d_h x d_in
  Eigen::VectorXd b2;
};

struct ModelConfig {
  ConvKind conv_kind = ConvKind::kArma;
  bool with_decoder = true;
  int input_dim = 0;
  int hidden_dim = 64;
  int num_stacks = 1;
  int num_layers = 1;
  int cheb_order = 3;
  double dropout_rate = 0.25;
};

/// All trainable state of one model. Which conv member is populated follows conv_kind;
/// the decoder exists only for reconstruction-regularized variants.
struct ModelParams {
  ModelConfig config;
  ArmaConvParams arma;                  // kArma
  std::vector<Eigen::MatrixXd> cheb_w;  // kCheb: cheb_order matrices, d_in x d_h
  Eigen::MatrixXd dense_w;              // kGcn / kMlp: d_in x d_h
  DecoderParams decoder;
  Eigen::MatrixXd head_w;  // d_h x 2
  Eigen::VectorXd head_b;  // 2
};

/// Glorot-uniform initialization, biases zero. Each parameter group (conv / head /
/// decoder) draws from its own stream derived from `seed`, so ablating the decoder does
/// not shift any other group's draws.
ModelParams init_model(const ModelConfig& config, std::uint64_t seed);

/// Same structure as `like` with every tensor zeroed (gradient accumulator).
ModelParams zeros_like(const ModelParams& like);

/// Flat named view over a model's tensors, in a fixed order shared by the optimizer,
/// the checkpoint format, and the finite-difference harness.
struct ParamRef {
  std::string name;
  double* data;
  long size;
};
std::vector<ParamRef> parameter_views(ModelParams& params, bool include_decoder = true);

/// Propagation operators precomputed from the subject graph for one run.
struct PropagationOps {
  Eigen::MatrixXd atil;   // kArma / kGcn
  Eigen::MatrixXd lhat;   // kCheb: 2 L / lambda_max - I
  double lambda_max = 0;  // of the normalized Laplacian (kCheb only)
};
PropagationOps build_propagation(const SubjectGraph& graph, ConvKind kind);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double power_iteration_lambda_max(const Eigen::MatrixXd& sym, double tol = 1e-8,
                                  int max_iter = 50000);

// ---- single-layer forward rules (also the oracle-test surface) ----

/// One ARMA layer step: sigma(Atil * x_prev * w + h * v).
Eigen::MatrixXd arma_conv_forward(const Eigen::MatrixXd& atil, const Eigen::MatrixXd& x_prev,
                                  const Eigen::MatrixXd& h, const Eigen::MatrixXd& w,
                                  const Eigen::MatrixXd& v, Activation act);

/// sigma(Atil * x * w).
Eigen::MatrixXd gcn_conv_forward(const Eigen::MatrixXd& atil, const Eigen::MatrixXd& x,
                                 const Eigen::MatrixXd& w, Activation act);

/// Chebyshev convolution: T_0 = x, T_1 = l_scaled x, T_k = 2 l_scaled T_{k-1} - T_{k-2};
/// output sigma(sum_k T_k w_k).
Eigen::MatrixXd cheb_conv_forward(const Eigen::MatrixXd& l_scaled, const Eigen::MatrixXd& x,
                                  const std::vector<Eigen::MatrixXd>& w, Activation act);

/// Inverted dropout: zero each entry with probability `rate` and scale survivors by
/// 1/(1-rate); identity at inference.
Eigen::MatrixXd dropout(const Eigen::MatrixXd& x, double rate, bool training, SplitMix64& rng);

// ---- full model ----

struct ForwardCache {
  // ARMA per (stack, layer): Atil * X^{(l)}, pre-activation Z, post-activation X^{(l+1)}.
  std::vector<Eigen::MatrixXd> arma_ax;
  std::vector<Eigen::MatrixXd> arma_z;
  std::vector<Eigen::MatrixXd> arma_x;
  // GCN / MLP / Cheb.
  Eigen::MatrixXd conv_ax;                // Atil * H (kGcn)
  Eigen::MatrixXd conv_z;                 // pre-activation
  std::vector<Eigen::MatrixXd> cheb_t;    // Chebyshev basis
  Eigen::MatrixXd conv_out;               // post-activation conv output
  Eigen::MatrixXd dropout_multiplier;     // entries in {0, 1/(1-rate)}; empty when unused
  Eigen::MatrixXd hidden;                 // post-dropout
  Eigen::MatrixXd dec_z1, dec_h1;         // decoder intermediates
  Eigen::MatrixXd reconstruction;         // empty for plain models
  Eigen::MatrixXd logits;
};

struct ForwardResult {
  Eigen::MatrixXd logits;          // n x 2
  Eigen::MatrixXd reconstruction;  // n x d_in, empty for plain models
  Eigen::MatrixXd hidden;          // n x d_h, post-dropout
};

/// Full forward pass. The dropout stream is consumed only when training with a positive
/// rate, so inference passes are deterministic without an rng argument change.
ForwardResult model_forward(const ModelParams& params, const PropagationOps& ops,
                            const Eigen::MatrixXd& h, bool training, SplitMix64& dropout_rng,
                            ForwardCache* cache = nullptr);

/// Mean log-sum-exp cross-entropy over train-mask nodes plus
/// lambda_recon * mean squared reconstruction error over all nodes.
/// `labels` may hold a sentinel (-1) outside the mask; a masked node with a sentinel or
/// out-of-range label is an error (test-set hygiene).
double joint_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                  const std::vector<std::uint8_t>& train_mask,
                  const Eigen::MatrixXd& reconstruction, const Eigen::MatrixXd& h,
                  double lambda_recon);

/// Exact reverse-mode gradients of joint_loss for every tensor in `params`, reusing the
/// forward cache (including the dropout multiplier).
ModelParams backward(const ModelParams& params, const PropagationOps& ops,
                     const Eigen::MatrixXd& h, const std::vector<int>& labels,
                     const std::vector<std::uint8_t>& train_mask, double lambda_recon,
                     const ForwardCache& cache);

// ---- optimizer ----

struct AdamState {
  long step = 0;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  std::vector<std::string> names;  // aligned with m/v
  std::vector<Eigen::VectorXd> m;
  std::vector<Eigen::VectorXd> v;
};

AdamState make_adam_state(const std::vector<ParamRef>& params, double lr, double weight_decay);

/// One Adam step with bias correction. Decoupled weight decay shrinks each parameter by
/// (1 - lr*wd) before the moment update. Parameters whose gradient path is inactive must
/// simply not appear in `params` (the trainer builds the list accordingly).
void adam_step(const std::vector<ParamRef>& params, const std::vector<ParamRef>& grads,
               AdamState& state);

// ---- checkpoints ----

/// Versioned binary dump, header line `armarecon-ckpt v1`. Tensor payloads are raw
/// little-endian doubles, so a save/load round trip is bit-exact.
void save_checkpoint(const ModelParams& params, const AdamState& state, const std::string& path);
std::pair<ModelParams, AdamState> load_checkpoint(const std::string& path);

}  // namespace armarecon
