#pragma once

#include <cstdint>
#include <vector>

#include "lsg/unet.hpp"

namespace lsg {

struct TrainSample {
    Tensor<float> image;  // [1,1,H,W], values in [0,1]
    Tensor<float> target; // [1,1,H,W], values in {0,1}
};

struct EpochStats {
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainOptions {
    int epochs = 10;
    int batch_size = 1;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 1;
    // Trailing fraction of the training range held out for per-epoch
    // validation diagnostics; no early stopping, epochs are fixed.
    double val_fraction = 0.1;
};

struct TrainResult {
    std::vector<EpochStats> history;
    int train_count = 0;
    int val_count = 0;
};

// Minimizes mean BCE with Adam. Deterministic for a fixed seed: shuffling,
// batching, and updates are all keyed off TrainOptions::seed.
TrainResult train_model(SegModel<float>& model, const std::vector<TrainSample>& samples,
                        const TrainOptions& options);

} // namespace lsg
