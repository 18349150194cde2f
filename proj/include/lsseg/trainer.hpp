#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsseg/acm.hpp"
#include "lsseg/grid.hpp"
#include "lsseg/losses.hpp"
#include "lsseg/tape.hpp"

namespace lsseg {

/// Weights of the minimal 2-layer convolutional parameter-map predictor:
/// conv1 3x3 (1->8 channels) + ReLU, conv2 3x3 (8->4 channels), heads
/// lambda1/lambda2/phi0/prob. Tensors live in a flat list with a fixed layout
/// so the optimizer, serializer, and gradient checks can treat them uniformly.
struct PredictorParams {
    static constexpr int kHidden = 8;
    static constexpr int kOut = 4;

    std::vector<Grid> tensors;
    double phi_scale = 10.0;
    double lambda_scale = 7.3890560989306495;  // e^2, the lambda-map upper bound

    // layout: [0..7] conv1 kernels, [8..15] conv1 biases (1x1),
    // [16..47] conv2 kernels (out*8+in), [48..51] conv2 biases (1x1),
    // [52..53] constant-lambda raw scalars (1x1)
    static constexpr int kConv1K = 0;
    static constexpr int kConv1B = 8;
    static constexpr int kConv2K = 16;
    static constexpr int kConv2B = 48;
    static constexpr int kLambdaRaw = 52;
    static constexpr int kTensorCount = 54;

    static PredictorParams zeros();
    static PredictorParams random_init(uint64_t seed);
    /// Rounds every tensor through float32, matching the model-file precision.
    void snap_to_f32();
};

struct PredictorOutput {
    Grid lambda1, lambda2, phi0, prob;
};

struct PredictorOutputVars {
    Var lambda1, lambda2, phi0, prob;
};

/// Registers every tensor as a tape leaf; vars[i] corresponds to tensors[i].
std::vector<Var> lift_params(Tape& t, const PredictorParams& p);

PredictorOutputVars predictor_forward(Tape& t, const Grid& image, const PredictorParams& p,
                                      const std::vector<Var>& vars);
PredictorOutput predictor_forward(const Grid& image, const PredictorParams& p);

/// alpha0 * (1 - e/N_e)^0.9
double lr_schedule(int e, int n_e, double alpha0);

enum class Optimizer { PlainSGD, Momentum };

struct TrainConfig {
    int epochs = 30;
    double base_lr = 0.05;
    AcmParams acm;
    LossWeights weights;
    int batch_size = 8;
    uint64_t seed = 0;
    Optimizer optimizer = Optimizer::PlainSGD;
    double momentum_beta = 0.9;
    int holdout = 0;  // samples held out from the end of the dataset

    std::string to_json() const;
    static TrainConfig from_json(const std::string& text);
};

struct TrainSample {
    Grid image;
    Grid gt;
};

struct MomentumState {
    std::vector<Grid> velocity;
};

/// One SGD step over a batch (gradients averaged); returns the batch loss.
double train_step(const std::vector<TrainSample>& batch, PredictorParams& params,
                  const TrainConfig& cfg, double lr, MomentumState* momentum = nullptr);

/// Loss and per-sample lambda/phi0/prob for one sample on a fresh tape;
/// exposed for gradient checking.
Var sample_loss(Tape& t, const TrainSample& sample, const PredictorParams& params,
                const std::vector<Var>& vars, const TrainConfig& cfg);

/// Full inference path: predictor, then eager evolution.
Grid predict_mask(const Grid& image, const PredictorParams& params, const TrainConfig& cfg);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double holdout_dice = 0.0;
};

struct FitResult {
    PredictorParams params;
    std::vector<EpochRecord> history;
};

FitResult fit(const std::vector<TrainSample>& train, const std::vector<TrainSample>& holdout,
              const TrainConfig& cfg);
/// Reads scene_XXXX.pgm / scene_XXXX_gt.pgm pairs, holds out cfg.holdout
/// samples from the end, trains, and writes the model if out_path is nonempty.
FitResult fit(const std::string& dataset_dir, const TrainConfig& cfg,
              const std::string& out_path = "");

void save_model(const std::string& path, const PredictorParams& params);
PredictorParams load_model(const std::string& path);

std::vector<TrainSample> load_dataset(const std::string& dir);

}  // namespace lsseg
