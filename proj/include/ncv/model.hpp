#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncv/matrix.hpp"
#include "ncv/spectro.hpp"

namespace ncv::model {

/// Output grid of the band-aligned pooling. With F = 128 bins over 0-32 Hz,
/// 8 frequency rows are 4 Hz bands (delta, theta, alpha, beta...).
struct PoolConfig {
  std::size_t out_freq_bins = 8;
  std::size_t out_time_bins = 8;
};

/// Block means. Row i of the output averages input rows
/// [floor(i*F/F'), ceil((i+1)*F/F')), likewise for columns; when F' divides F
/// these are equal, disjoint blocks.
template <class V>
Matrix<double> pool_to_grid(const Matrix<V>& spect, const PoolConfig& cfg) {
  if (spect.empty()) throw std::invalid_argument("pool_to_grid: empty input");
  if (cfg.out_freq_bins == 0 || cfg.out_time_bins == 0 || cfg.out_freq_bins > spect.rows() ||
      cfg.out_time_bins > spect.cols())
    throw std::invalid_argument("pool_to_grid: output grid must be non-empty and no larger than the input");
  const std::size_t F = spect.rows(), T = spect.cols();
  const std::size_t Fo = cfg.out_freq_bins, To = cfg.out_time_bins;
  Matrix<double> out(Fo, To);
  for (std::size_t i = 0; i < Fo; ++i) {
    const std::size_t r0 = i * F / Fo, r1 = ((i + 1) * F + Fo - 1) / Fo;
    for (std::size_t j = 0; j < To; ++j) {
      const std::size_t c0 = j * T / To, c1 = ((j + 1) * T + To - 1) / To;
      double sum = 0.0;
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) sum += static_cast<double>(spect(r, c));
      out(i, j) = sum / static_cast<double>((r1 - r0) * (c1 - c0));
    }
  }
  return out;
}

struct TrainConfig {
  int epochs = 200;
  double base_lr = 0.1;
  double lr_decay = 0.995;  // per epoch
  std::uint64_t seed = 0;   // the reference model starts from zero weights and does not draw from it
};

struct ModelParams {
  std::vector<double> weights;  // length F'*T'
  double bias = 0.0;
  std::vector<double> feature_means;
  std::vector<double> feature_scales;
  TrainConfig train_config;
  PoolConfig pool;
};

/// Logistic function with p(-z) == 1 - p(z) exactly and p in (0, 1) strictly.
double sigmoid(double z);

/// Flattened (row-major) pooled grid of one spectrogram.
std::vector<double> pooled_features(const spectro::SpectrogramWindow& w, const PoolConfig& cfg);

struct LossGradient {
  double loss = 0.0;  // mean binary cross-entropy
  std::vector<double> grad_weights;
  double grad_bias = 0.0;
};

/// Mean BCE of sigmoid(X w + b) against labels and its exact gradient.
LossGradient loss_and_gradient(const Matrix<double>& features, std::span<const int> labels,
                               std::span<const double> weights, double bias);

/// Full-batch gradient descent from zero on standardized features with step
/// base_lr * lr_decay^epoch. A step that would raise the loss is halved until
/// it does not. `loss_history`, if given, receives the loss before the first
/// epoch and after each one.
ModelParams train_features(const Matrix<double>& pooled, std::span<const int> labels, const TrainConfig& cfg,
                           const PoolConfig& pool, std::vector<double>* loss_history = nullptr);

/// Pools the given windows and trains on them; labels come from diagnosis.
ModelParams train(std::span<const spectro::SpectrogramWindow* const> windows, const TrainConfig& cfg,
                  const PoolConfig& pool, std::vector<double>* loss_history = nullptr);

double decision_score(const ModelParams& params, std::span<const double> pooled);
double predict_proba(const ModelParams& params, std::span<const double> pooled);
double predict_proba(const ModelParams& params, const spectro::SpectrogramWindow& window);

nlohmann::json to_json(const ModelParams& params);
ModelParams model_params_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Pluggable back-end: anything that turns labelled spectrogram windows into
// window-level probabilities.

class WindowClassifier {
 public:
  virtual ~WindowClassifier() = default;
  virtual double predict_proba(const spectro::SpectrogramWindow& window) const = 0;
};

class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<WindowClassifier> fit(std::span<const spectro::SpectrogramWindow* const> windows) const = 0;
};

/// Reference back-end: band-pooled features + logistic output.
class BandPooledLogistic final : public ClassifierBackend {
 public:
  BandPooledLogistic(TrainConfig train, PoolConfig pool) : train_(train), pool_(pool) {}
  std::string name() const override { return "band_pooled_logistic"; }
  std::unique_ptr<WindowClassifier> fit(std::span<const spectro::SpectrogramWindow* const> windows) const override;

 private:
  TrainConfig train_;
  PoolConfig pool_;
};

}  // namespace ncv::model
