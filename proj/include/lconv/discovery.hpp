#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lconv/layer.hpp"
#include "lconv/matrix.hpp"

namespace lieconv {

struct OptimizerConfig {
  enum class Kind { Sgd, Adam };
  Kind kind = Kind::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 16;
  std::size_t epochs = 20;

  /// Throws ConfigError for lr ≤ 0, batch_size = 0 or betas outside [0, 1).
  void validate() const;
};

struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

/// p ← p − lr·g. Rejects non-finite gradients (EvaluationError) before
/// touching any parameter.
void sgd_step(std::span<double> params, std::span<const double> grads, double lr);

/// Bias-corrected Adam. State vectors are sized on first use.
void adam_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
               const OptimizerConfig& cfg);

void optimizer_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
                    const OptimizerConfig& cfg);

struct FixedAngleTask {
  std::size_t width = 7;
  std::size_t height = 7;
  double theta = std::numbers::pi / 10;
  std::size_t n_train = 50000;
  std::size_t n_test = 10000;
  double pixel_lo = -0.5;
  double pixel_hi = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Column-per-sample image pairs.
struct PairSplit {
  Matrix x;  // d×N
  Matrix y;  // d×N
};

struct FixedAngleData {
  PairSplit train;
  PairSplit test;
};

/// Inputs uniform in [pixel_lo, pixel_hi), Y = R(θ)·X. The training split
/// draws from seed, the test split from seed + 1.
FixedAngleData gen_fixed_angle_dataset(const FixedAngleTask& task);

struct AngleRegressionTask {
  std::size_t width = 7;
  std::size_t height = 7;
  double theta_max = std::numbers::pi / 3;
  std::size_t copies = 10;
  unsigned recursions = 3;
  std::size_t hidden = 5;
  std::size_t n_train = 20000;
  std::size_t n_test = 2000;
  std::size_t low_rank = 0;  // 0 = dense generator
  double pixel_lo = -0.5;
  double pixel_hi = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AngleSplit {
  Matrix x;                    // d×N inputs f
  Matrix y;                    // d×N rotated R(θ)f
  std::vector<double> theta;   // labels
};

struct AngleData {
  AngleSplit train;
  AngleSplit test;
};

AngleData gen_angle_pairs_dataset(const AngleRegressionTask& task);

/// Recursive L-conv (W0 = I, one generator, m×m ε̄) followed by
/// g = tanh(yᵀh_t) per channel, FC(hidden, tanh) and FC(1).
struct AngleModel {
  LConvLayer lconv;
  unsigned recursions = 3;
  Matrix fc1_w;  // hidden×m
  Matrix fc1_b;  // hidden×1
  Matrix fc2_w;  // 1×hidden
  Matrix fc2_b;  // 1×1

  std::size_t copies() const { return lconv.m_in(); }
};

AngleModel make_angle_model(const AngleRegressionTask& task, SeededRng& rng);
/// The initialization used by train_angle_regression (rng seeded with seed + 2).
AngleModel make_angle_model(const AngleRegressionTask& task);

/// The single-channel layer trained by train_fixed_angle, before training.
LConvLayer make_fixed_angle_layer(const FixedAngleTask& task);

/// Parameter order: the L-conv layer (see flatten_parameters), then
/// fc1_w, fc1_b, fc2_w, fc2_b.
std::vector<double> flatten_parameters(const AngleModel& model);
void assign_parameters(AngleModel& model, std::span<const double> values);
/// 1 for trainable entries, 0 for frozen ones (W0 is frozen).
std::vector<double> trainable_mask(const AngleModel& model);
std::vector<double> trainable_mask(const LConvLayer& layer);

/// Predicted angles for the samples in columns [begin, begin + count).
std::vector<double> angle_predict(const AngleModel& model, const Matrix& x, const Matrix& y, std::size_t begin,
                                  std::size_t count);

/// Mean squared angle error over the given columns, with the gradient with
/// respect to flatten_parameters(model) written to `grad` when non-null.
double angle_loss(const AngleModel& model, const Matrix& x, const Matrix& y, std::span<const double> theta,
                  std::span<const std::size_t> columns, std::vector<double>* grad);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_mse = 0.0;
  double test_mse = 0.0;
};

struct TrainReport {
  std::string task;
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::vector<EpochRecord> curve;
  Matrix learned_generator;  // εL̂ (fixed angle) or L̂ (angle regression)
  nlohmann::json metrics;
  double wall_seconds = 0.0;

  /// Everything except wall-clock time, so identical runs serialize identically.
  nlohmann::json to_json() const;
  /// report.json, loss.csv, learned_generator.mat/.json and timing.json.
  void write(const std::filesystem::path& dir, const GridSpec& grid) const;
};

/// Resumable training state: completed epochs, parameters and optimizer.
struct TrainCheckpoint {
  std::size_t epochs_done = 0;
  std::vector<double> params;
  OptimizerState optimizer;
  std::vector<EpochRecord> curve;
};

void save_checkpoint(const std::filesystem::path& dir, const TrainCheckpoint& ckpt);
TrainCheckpoint load_checkpoint(const std::filesystem::path& dir);

struct TrainHooks {
  /// Called after every epoch with the report so far and a resumable state.
  std::function<void(const TrainReport&, const TrainCheckpoint&)> on_epoch;
  /// Start from this state instead of a fresh initialization.
  const TrainCheckpoint* resume = nullptr;
};

/// Single-channel layer with W0 = 1 frozen, a scalar ε̄ and one dense
/// generator, fitted so that (I + εL̂)f ≈ Rf. Metrics include the
/// least-squares oracle correlation Corr(εL̂, R_LS − I) and the final test MSE.
/// Throws TrainingFailure when the loss or a gradient becomes non-finite.
TrainReport train_fixed_angle(const FixedAngleTask& task, const FixedAngleData& data, const OptimizerConfig& opt,
                              const TrainHooks& hooks = {});

/// Metrics include |Corr(L̂, sw_rotation_generator)| (the pair (L̂, ε̄) and
/// (−L̂, −ε̄) give the same network, so only the magnitude is meaningful),
/// the signed value, and the final test MSE.
TrainReport train_angle_regression(const AngleRegressionTask& task, const AngleData& data,
                                   const OptimizerConfig& opt, const TrainHooks& hooks = {});

/// MSE and generator correlation of trained parameters (as stored in a
/// checkpoint) on one split.
nlohmann::json evaluate_fixed_angle(const FixedAngleTask& task, const PairSplit& split,
                                    std::span<const double> params);
nlohmann::json evaluate_angle_regression(const AngleRegressionTask& task, const AngleSplit& split,
                                         std::span<const double> params);

/// Seed used to shuffle the given epoch; independent of earlier epochs so a
/// resumed run visits the same batches.
std::uint64_t epoch_shuffle_seed(std::uint64_t seed, std::size_t epoch);

}  // namespace lieconv
