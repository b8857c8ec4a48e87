#include "bsdp/gru.hpp"

#include <cmath>
#include <random>
#include <string>

#include "bsdp/error.hpp"

namespace bsdp {

namespace {

inline Vector sigmoid(const Vector& a) {
  return a.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

// Uniform in [0, 1) from the top 53 bits, independent of library
// distribution implementations.
inline double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void fill_uniform(Matrix& m, std::mt19937_64& rng, double scale) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = (2.0 * unit_double(rng) - 1.0) * scale;
    }
  }
}

void fill_uniform(Vector& v, std::mt19937_64& rng, double scale) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v(i) = (2.0 * unit_double(rng) - 1.0) * scale;
  }
}

}  // namespace

void GruModel::validate_shapes() const {
  const auto dh = w_rx.rows();
  const auto dx = w_rx.cols();
  const bool ok = dh > 0 && dx > 0 &&
                  w_rh.rows() == dh && w_rh.cols() == dh &&
                  w_zx.rows() == dh && w_zx.cols() == dx &&
                  w_zh.rows() == dh && w_zh.cols() == dh &&
                  w_hx.rows() == dh && w_hx.cols() == dx &&
                  w_hh.rows() == dh && w_hh.cols() == dh &&
                  w_o.rows() == dx && w_o.cols() == dh &&
                  b_r.size() == dh && b_z.size() == dh;
  if (!ok) throw ContractError("inconsistent GRU weight shapes");
}

bool GruModel::finite() const {
  return w_rx.allFinite() && w_rh.allFinite() && w_zx.allFinite() &&
         w_zh.allFinite() && w_hx.allFinite() && w_hh.allFinite() &&
         w_o.allFinite() && b_r.allFinite() && b_z.allFinite();
}

GruModel GruModel::random_init(int input_dim, int hidden_dim,
                               std::uint64_t seed, double init_scale) {
  if (input_dim < 1 || hidden_dim < 1) {
    throw ConfigError("GRU dimensions must be >= 1");
  }
  if (!(init_scale > 0.0)) throw ConfigError("init_scale must be positive");

  GruModel m;
  m.w_rx = Matrix(hidden_dim, input_dim);
  m.w_rh = Matrix(hidden_dim, hidden_dim);
  m.w_zx = Matrix(hidden_dim, input_dim);
  m.w_zh = Matrix(hidden_dim, hidden_dim);
  m.w_hx = Matrix(hidden_dim, input_dim);
  m.w_hh = Matrix(hidden_dim, hidden_dim);
  m.w_o = Matrix(input_dim, hidden_dim);
  m.b_r = Vector(hidden_dim);
  m.b_z = Vector(hidden_dim);

  std::mt19937_64 rng(seed);
  fill_uniform(m.w_rx, rng, init_scale);
  fill_uniform(m.w_rh, rng, init_scale);
  fill_uniform(m.w_zx, rng, init_scale);
  fill_uniform(m.w_zh, rng, init_scale);
  fill_uniform(m.w_hx, rng, init_scale);
  fill_uniform(m.w_hh, rng, init_scale);
  fill_uniform(m.w_o, rng, init_scale);
  fill_uniform(m.b_r, rng, init_scale);
  fill_uniform(m.b_z, rng, init_scale);
  return m;
}

GruStep gru_step_forward(const Vector& x, const Vector& h_prev,
                         const GruModel& model) {
  model.validate_shapes();
  if (x.size() != model.input_dim() || h_prev.size() != model.hidden_dim()) {
    throw ContractError("GRU step input shapes do not match the model");
  }
  GruStep s;
  s.r = sigmoid(model.w_rh * h_prev + model.w_rx * x + model.b_r);
  s.z = sigmoid(model.w_zh * h_prev + model.w_zx * x + model.b_z);
  s.h_cand =
      (model.w_hh * s.r.cwiseProduct(h_prev) + model.w_hx * x).array().tanh();
  s.h = (Vector::Ones(h_prev.size()) - s.z).cwiseProduct(h_prev) +
        s.z.cwiseProduct(s.h_cand);
  s.y = sigmoid(model.w_o * s.h);
  return s;
}

GruGradients GruGradients::zeros(int input_dim, int hidden_dim) {
  GruGradients g;
  g.w_rx = Matrix::Zero(hidden_dim, input_dim);
  g.w_rh = Matrix::Zero(hidden_dim, hidden_dim);
  g.w_zx = Matrix::Zero(hidden_dim, input_dim);
  g.w_zh = Matrix::Zero(hidden_dim, hidden_dim);
  g.w_hx = Matrix::Zero(hidden_dim, input_dim);
  g.w_hh = Matrix::Zero(hidden_dim, hidden_dim);
  g.w_o = Matrix::Zero(input_dim, hidden_dim);
  g.b_r = Vector::Zero(hidden_dim);
  g.b_z = Vector::Zero(hidden_dim);
  return g;
}

double GruGradients::squared_norm() const {
  return w_rx.squaredNorm() + w_rh.squaredNorm() + w_zx.squaredNorm() +
         w_zh.squaredNorm() + w_hx.squaredNorm() + w_hh.squaredNorm() +
         w_o.squaredNorm() + b_r.squaredNorm() + b_z.squaredNorm();
}

void GruGradients::scale(double factor) {
  w_rx *= factor;
  w_rh *= factor;
  w_zx *= factor;
  w_zh *= factor;
  w_hx *= factor;
  w_hh *= factor;
  w_o *= factor;
  b_r *= factor;
  b_z *= factor;
}

GruGradients gru_backward_gradients(std::span<const Vector> inputs,
                                    std::span<const Vector> targets,
                                    const GruModel& model) {
  model.validate_shapes();
  if (inputs.empty() || inputs.size() != targets.size()) {
    throw ContractError("BPTT needs equally many inputs and targets (>= 1)");
  }
  const int dh = model.hidden_dim();
  const auto steps = inputs.size();

  std::vector<GruStep> trace(steps);
  std::vector<Vector> h_prev(steps);
  Vector h = Vector::Zero(dh);
  for (std::size_t t = 0; t < steps; ++t) {
    h_prev[t] = h;
    trace[t] = gru_step_forward(inputs[t], h, model);
    h = trace[t].h;
  }

  auto grads = GruGradients::zeros(model.input_dim(), dh);
  Vector dh_next = Vector::Zero(dh);
  for (std::size_t ti = steps; ti-- > 0;) {
    const auto& s = trace[ti];
    const Vector ones_h = Vector::Ones(dh);

    const Vector d_ay =
        (s.y - targets[ti])
            .cwiseProduct(s.y)
            .cwiseProduct(Vector::Ones(s.y.size()) - s.y);
    grads.w_o += d_ay * s.h.transpose();

    const Vector dhid = model.w_o.transpose() * d_ay + dh_next;
    const Vector d_ah = dhid.cwiseProduct(s.z).cwiseProduct(
        ones_h - s.h_cand.cwiseProduct(s.h_cand));
    const Vector dz = dhid.cwiseProduct(s.h_cand - h_prev[ti]);
    const Vector d_az = dz.cwiseProduct(s.z).cwiseProduct(ones_h - s.z);
    const Vector back_h = model.w_hh.transpose() * d_ah;
    const Vector dr = back_h.cwiseProduct(h_prev[ti]);
    const Vector d_ar = dr.cwiseProduct(s.r).cwiseProduct(ones_h - s.r);

    if (!d_ay.allFinite() || !d_ah.allFinite() || !d_az.allFinite() ||
        !d_ar.allFinite()) {
      throw NumericalError("non-finite delta at step " + std::to_string(ti));
    }

    grads.w_hh += d_ah * s.r.cwiseProduct(h_prev[ti]).transpose();
    grads.w_hx += d_ah * inputs[ti].transpose();
    grads.w_rh += d_ar * h_prev[ti].transpose();
    grads.w_rx += d_ar * inputs[ti].transpose();
    grads.b_r += d_ar;
    grads.w_zh += d_az * h_prev[ti].transpose();
    grads.w_zx += d_az * inputs[ti].transpose();
    grads.b_z += d_az;

    dh_next = dhid.cwiseProduct(ones_h - s.z) + back_h.cwiseProduct(s.r) +
              model.w_rh.transpose() * d_ar + model.w_zh.transpose() * d_az;
  }
  return grads;
}

double sequence_loss(std::span<const Vector> inputs,
                     std::span<const Vector> targets, const GruModel& model) {
  model.validate_shapes();
  if (inputs.empty() || inputs.size() != targets.size()) {
    throw ContractError("loss needs equally many inputs and targets (>= 1)");
  }
  Vector h = Vector::Zero(model.hidden_dim());
  double loss = 0.0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const auto s = gru_step_forward(inputs[t], h, model);
    loss += 0.5 * (s.y - targets[t]).squaredNorm();
    h = s.h;
  }
  return loss;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(init_scale > 0.0)) throw ConfigError("init_scale must be positive");
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
}

TrainResult train_pairs(std::span<const Vector> inputs,
                        std::span<const Vector> targets,
                        const TrainConfig& config) {
  config.validate();
  if (inputs.empty() || inputs.size() != targets.size()) {
    throw InvalidInputError(
        "training needs equally many inputs and targets (>= 1)");
  }
  const auto input_dim = static_cast<int>(inputs[0].size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != input_dim || targets[i].size() != input_dim) {
      throw ContractError("training frames have inconsistent lengths");
    }
  }

  TrainResult result;
  result.model = GruModel::random_init(input_dim, config.hidden_dim,
                                       config.rng_seed, config.init_scale);
  result.epoch_loss.reserve(static_cast<std::size_t>(config.epochs));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double loss = sequence_loss(inputs, targets, result.model);
    if (!std::isfinite(loss)) {
      throw NumericalError("training diverged at epoch " +
                           std::to_string(epoch));
    }
    result.epoch_loss.push_back(loss);

    auto grads = gru_backward_gradients(inputs, targets, result.model);
    if (config.gradient_clip > 0.0) {
      const double norm = std::sqrt(grads.squared_norm());
      if (norm > config.gradient_clip) {
        grads.scale(config.gradient_clip / norm);
      }
    }
    const double lr = config.learning_rate;
    result.model.w_rx -= lr * grads.w_rx;
    result.model.w_rh -= lr * grads.w_rh;
    result.model.w_zx -= lr * grads.w_zx;
    result.model.w_zh -= lr * grads.w_zh;
    result.model.w_hx -= lr * grads.w_hx;
    result.model.w_hh -= lr * grads.w_hh;
    result.model.w_o -= lr * grads.w_o;
    result.model.b_r -= lr * grads.b_r;
    result.model.b_z -= lr * grads.b_z;
    if (!result.model.finite()) {
      throw NumericalError("training diverged at epoch " +
                           std::to_string(epoch));
    }
  }
  return result;
}

TrainResult train_sequence(std::span<const Vector> frames,
                           const TrainConfig& config) {
  if (frames.size() < 2) {
    throw InvalidInputError("training needs at least 2 frames");
  }
  return train_pairs(frames.first(frames.size() - 1), frames.subspan(1),
                     config);
}

TrainResult train_ggnn(const GraphSequence& gs, const TrainConfig& config) {
  if (gs.size() < 2) {
    throw InvalidInputError(
        "training needs a sequence of at least 2 periods");
  }
  std::vector<Vector> frames;
  frames.reserve(gs.size());
  for (const auto& g : gs.graphs) {
    const auto x = encode_graph(g, gs.codec);
    frames.push_back(Eigen::Map<const Vector>(x.data(),
                                              static_cast<Eigen::Index>(x.size())));
  }
  return train_sequence(frames, config);
}

Vector predict_next_vector(const GruModel& model,
                           std::span<const Vector> frames) {
  model.validate_shapes();
  if (!model.finite()) {
    throw NumericalError("model contains non-finite weights");
  }
  if (frames.empty()) {
    throw InvalidInputError("prediction needs a non-empty sequence");
  }
  Vector h = Vector::Zero(model.hidden_dim());
  Vector y;
  for (const auto& x : frames) {
    const auto s = gru_step_forward(x, h, model);
    h = s.h;
    y = s.y;
  }
  return y;
}

StationGraph predict_next_graph(const GruModel& model, const GraphSequence& gs,
                                int min_station_size) {
  std::vector<Vector> frames;
  frames.reserve(gs.size());
  for (const auto& g : gs.graphs) {
    const auto x = encode_graph(g, gs.codec);
    frames.push_back(Eigen::Map<const Vector>(x.data(),
                                              static_cast<Eigen::Index>(x.size())));
  }
  const Vector y = predict_next_vector(model, frames);
  return decode_prediction(std::span<const double>(y.data(),
                                                   static_cast<std::size_t>(y.size())),
                           gs.codec, min_station_size);
}

}  // namespace bsdp
