#pragma once

// Minibatch Adam training of an EncoderPair on the symmetric contrastive
// objective. Gradients are reverse-mode by hand and checkable against central
// finite differences.

#include <cstdint>

#include "midlab/dataset.hpp"
#include "midlab/encoder.hpp"
#include "midlab/loss.hpp"

namespace midl {

enum class TemperatureMode { FIXED, LEARNABLE };

struct TrainConfig {
    std::size_t epochs = 200;
    std::size_t batch_size = 512;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    TemperatureMode temperature_mode = TemperatureMode::LEARNABLE;
    double tau_init = 1.0;
    std::size_t hidden_width = 128;
    std::size_t hidden_layers = 3;
    std::uint64_t seed = 0;
    bool grad_check = false;

    void validate() const;
};

// Learnable log_tau is clamped into [log 1e-3, log 1e3] after every step.
constexpr double kLogTauMin = -6.907755278982137;  // log(1e-3)
constexpr double kLogTauMax = 6.907755278982137;   // log(1e3)

struct PairGradients {
    std::vector<Matrix> dW_x;
    std::vector<Vector> db_x;
    std::vector<Matrix> dW_t;
    std::vector<Vector> db_t;
    double dlog_tau = 0.0;
    double loss = 0.0;
};

// Loss of one batch plus gradients for every parameter tensor and log_tau.
PairGradients loss_and_gradients(const EncoderPair& pair, const Matrix& xb, const Matrix& tb);

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
};

// Central finite differences against the analytic gradients on one batch.
// max_per_tensor = 0 sweeps every parameter; otherwise an evenly strided
// subset per tensor. Relative error uses max(|analytic|, |fd|, 1e-3) as the
// denominator so near-zero gradients do not blow up the ratio.
GradCheckReport grad_check_pair(EncoderPair pair, const Matrix& xb, const Matrix& tb,
                                std::size_t max_per_tensor = 0, double step = 1e-5);

struct TrainResult {
    EncoderPair pair;
    Vector loss_history; // per-epoch dataset-weighted mean batch loss
};

// Builds encoders from cfg (He init, seeded), then runs minibatch Adam over
// the paired observations. A non-finite loss aborts with the epoch, batch and
// learning rate in the message.
TrainResult train(const PairedDataset& ds, const TrainConfig& cfg, const OutputSpace& space,
                  const SimilarityKernel& kernel);

} // namespace midl
