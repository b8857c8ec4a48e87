#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bsdp/graph_sequence.hpp"

namespace bsdp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Gated recurrent model over encoded graphs. Each gate weight splits into an
// input part (*_x, hidden*input) and a recurrent part (*_h, hidden*hidden);
// the candidate state has no bias. w_o maps hidden back to input size.
struct GruModel {
  Matrix w_rx, w_rh;
  Matrix w_zx, w_zh;
  Matrix w_hx, w_hh;
  Matrix w_o;
  Vector b_r, b_z;

  int input_dim() const { return static_cast<int>(w_rx.cols()); }
  int hidden_dim() const { return static_cast<int>(w_rx.rows()); }
  void validate_shapes() const;
  bool finite() const;

  static GruModel random_init(int input_dim, int hidden_dim,
                              std::uint64_t seed, double init_scale);
};

struct GruStep {
  Vector r, z, h_cand, h, y;
};

// r = sigma(w_rh h_prev + w_rx x + b_r); z likewise; h_cand =
// tanh(w_hh (r.*h_prev) + w_hx x); h = (1-z).*h_prev + z.*h_cand;
// y = sigma(w_o h).
GruStep gru_step_forward(const Vector& x, const Vector& h_prev,
                         const GruModel& model);

struct GruGradients {
  Matrix w_rx, w_rh, w_zx, w_zh, w_hx, w_hh, w_o;
  Vector b_r, b_z;

  static GruGradients zeros(int input_dim, int hidden_dim);
  double squared_norm() const;
  void scale(double factor);
};

// Backpropagation through time over the whole sequence, hidden state carried
// from zero. inputs and targets must have equal length >= 1.
GruGradients gru_backward_gradients(std::span<const Vector> inputs,
                                    std::span<const Vector> targets,
                                    const GruModel& model);

// L = 1/2 sum_t |y_t - target_t|^2 over the carried-state forward pass.
double sequence_loss(std::span<const Vector> inputs,
                     std::span<const Vector> targets, const GruModel& model);

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 0.05;
  std::uint64_t rng_seed = 42;
  double init_scale = 0.1;
  double gradient_clip = 0.0;  // global norm; <= 0 disables clipping
  int hidden_dim = 32;

  void validate() const;
};

struct TrainResult {
  GruModel model;
  std::vector<double> epoch_loss;  // pre-update loss per epoch
};

// Gradient descent on explicit (input, target) pairs processed in order with
// the hidden state carried; one update per epoch, state reset between epochs.
TrainResult train_pairs(std::span<const Vector> inputs,
                        std::span<const Vector> targets,
                        const TrainConfig& config);

// Full-sequence training on pairs (frame_t -> frame_{t+1}).
TrainResult train_sequence(std::span<const Vector> frames,
                           const TrainConfig& config);

TrainResult train_ggnn(const GraphSequence& gs, const TrainConfig& config);

// Final output of the forward pass over all frames.
Vector predict_next_vector(const GruModel& model,
                           std::span<const Vector> frames);

StationGraph predict_next_graph(const GruModel& model, const GraphSequence& gs,
                                int min_station_size = 5);

}  // namespace bsdp
