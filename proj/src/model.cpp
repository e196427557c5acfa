#include "ncv/model.hpp"

#include <algorithm>
#include <cmath>

#include "ncv/errors.hpp"

namespace ncv::model {
using nlohmann::json;

namespace {

constexpr double kProbFloor = 0x1.0p-40;

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double exact_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

class BandPooledClassifier final : public WindowClassifier {
 public:
  explicit BandPooledClassifier(ModelParams params) : params_(std::move(params)) {}
  double predict_proba(const spectro::SpectrogramWindow& window) const override {
    return model::predict_proba(params_, window);
  }

 private:
  ModelParams params_;
};

}  // namespace

double sigmoid(double z) {
  // q in [0.5, 1 - 2^-40], so 1 - q is exact.
  const double q = std::min(1.0 / (1.0 + std::exp(-std::abs(z))), 1.0 - kProbFloor);
  return z >= 0.0 ? q : 1.0 - q;
}

std::vector<double> pooled_features(const spectro::SpectrogramWindow& w, const PoolConfig& cfg) {
  return pool_to_grid(w.values, cfg).data();
}

LossGradient loss_and_gradient(const Matrix<double>& features, std::span<const int> labels,
                               std::span<const double> weights, double bias) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (labels.size() != n || weights.size() != d)
    throw std::invalid_argument("loss_and_gradient: dimension mismatch");
  LossGradient out;
  out.grad_weights.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = features.row(i);
    double z = bias;
    for (std::size_t j = 0; j < d; ++j) z += weights[j] * x[j];
    const double y = labels[i];
    out.loss += softplus(z) - y * z;
    const double r = exact_sigmoid(z) - y;
    for (std::size_t j = 0; j < d; ++j) out.grad_weights[j] += r * x[j];
    out.grad_bias += r;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.loss *= inv_n;
  for (auto& g : out.grad_weights) g *= inv_n;
  out.grad_bias *= inv_n;
  return out;
}

ModelParams train_features(const Matrix<double>& pooled, std::span<const int> labels, const TrainConfig& cfg,
                           const PoolConfig& pool, std::vector<double>* loss_history) {
  const std::size_t n = pooled.rows();
  const std::size_t d = pooled.cols();
  if (labels.size() != n) throw std::invalid_argument("train: label count differs from sample count");
  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("train: labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  if (positives == 0 || positives == n) throw DataError("train: training set must contain both classes");
  for (double v : pooled.data())
    if (!std::isfinite(v)) throw DataError("train: non-finite feature value");
  if (cfg.epochs < 0 || !(cfg.base_lr > 0.0) || !(cfg.lr_decay > 0.0))
    throw ConfigError("train: epochs >= 0, base_lr > 0 and lr_decay > 0 required");

  ModelParams params;
  params.train_config = cfg;
  params.pool = pool;
  params.feature_means.assign(d, 0.0);
  params.feature_scales.assign(d, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) params.feature_means[j] += pooled(i, j);
  for (auto& m : params.feature_means) m /= static_cast<double>(n);
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = pooled(i, j) - params.feature_means[j];
      var[j] += c * c;
    }
  for (std::size_t j = 0; j < d; ++j) {
    const double s = std::sqrt(var[j] / static_cast<double>(n));
    params.feature_scales[j] = s > 1e-12 ? s : 1.0;
  }

  Matrix<double> x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, j) = (pooled(i, j) - params.feature_means[j]) / params.feature_scales[j];

  std::vector<double> w(d, 0.0);
  double b = 0.0;
  LossGradient current = loss_and_gradient(x, labels, w, b);
  if (loss_history) loss_history->assign(1, current.loss);

  std::vector<double> w_next(d);
  double lr = cfg.base_lr;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch, lr *= cfg.lr_decay) {
    double step = lr;
    for (int attempt = 0; attempt < 40; ++attempt, step *= 0.5) {
      for (std::size_t j = 0; j < d; ++j) w_next[j] = w[j] - step * current.grad_weights[j];
      const double b_next = b - step * current.grad_bias;
      LossGradient next = loss_and_gradient(x, labels, w_next, b_next);
      if (next.loss <= current.loss) {
        w.swap(w_next);
        b = b_next;
        current = std::move(next);
        break;
      }
    }
    if (loss_history) loss_history->push_back(current.loss);
  }
  params.weights = std::move(w);
  params.bias = b;
  return params;
}

ModelParams train(std::span<const spectro::SpectrogramWindow* const> windows, const TrainConfig& cfg,
                  const PoolConfig& pool, std::vector<double>* loss_history) {
  if (windows.empty()) throw DataError("train: no training windows");
  const std::size_t d = pool.out_freq_bins * pool.out_time_bins;
  Matrix<double> pooled(windows.size(), d);
  std::vector<int> labels(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto f = pooled_features(*windows[i], pool);
    std::copy(f.begin(), f.end(), pooled.row(i).begin());
    labels[i] = windows[i]->label();
  }
  return train_features(pooled, labels, cfg, pool, loss_history);
}

double decision_score(const ModelParams& params, std::span<const double> pooled) {
  if (pooled.size() != params.weights.size()) throw std::invalid_argument("predict: feature length mismatch");
  double z = params.bias;
  for (std::size_t j = 0; j < pooled.size(); ++j)
    z += params.weights[j] * ((pooled[j] - params.feature_means[j]) / params.feature_scales[j]);
  return z;
}

double predict_proba(const ModelParams& params, std::span<const double> pooled) {
  return sigmoid(decision_score(params, pooled));
}

double predict_proba(const ModelParams& params, const spectro::SpectrogramWindow& window) {
  return predict_proba(params, pooled_features(window, params.pool));
}

std::unique_ptr<WindowClassifier> BandPooledLogistic::fit(
    std::span<const spectro::SpectrogramWindow* const> windows) const {
  return std::make_unique<BandPooledClassifier>(train(windows, train_, pool_));
}

json to_json(const ModelParams& p) {
  return {{"weights", p.weights},
          {"bias", p.bias},
          {"feature_means", p.feature_means},
          {"feature_scales", p.feature_scales},
          {"train_config",
           {{"epochs", p.train_config.epochs},
            {"base_lr", p.train_config.base_lr},
            {"lr_decay", p.train_config.lr_decay},
            {"seed", p.train_config.seed}}},
          {"pool", {{"out_freq_bins", p.pool.out_freq_bins}, {"out_time_bins", p.pool.out_time_bins}}}};
}

ModelParams model_params_from_json(const json& j) {
  try {
    ModelParams p;
    p.weights = j.at("weights").get<std::vector<double>>();
    p.bias = j.at("bias").get<double>();
    p.feature_means = j.at("feature_means").get<std::vector<double>>();
    p.feature_scales = j.at("feature_scales").get<std::vector<double>>();
    const auto& tc = j.at("train_config");
    p.train_config = {tc.at("epochs").get<int>(), tc.at("base_lr").get<double>(), tc.at("lr_decay").get<double>(),
                      tc.at("seed").get<std::uint64_t>()};
    p.pool = {j.at("pool").at("out_freq_bins").get<std::size_t>(), j.at("pool").at("out_time_bins").get<std::size_t>()};
    if (p.feature_means.size() != p.weights.size() || p.feature_scales.size() != p.weights.size())
      throw DataError("model params: vector lengths differ");
    for (double s : p.feature_scales)
      if (!(s > 0.0)) throw DataError("model params: feature scales must be positive");
    return p;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model params: ") + e.what());
  }
}

}  // namespace ncv::model
