#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "sonarprop/datagen.hpp"
#include "sonarprop/models.hpp"

namespace sonarprop {

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_mse = 0.0;
    double val_mse = 0.0;
};

struct TrainConfig {
    float learning_rate = 0.01f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 50;
    std::size_t patience = 5;
    std::uint64_t seed = 1;
    // Samples accumulated serially per reduction chunk. Chunks may run in
    // parallel and are summed in index order, so results do not depend on the
    // thread count.
    std::size_t reduction_chunk = 8;
    std::function<void(const EpochRecord&)> on_epoch;

    void validate() const;
};

struct AdamState {
    Parameters first_moment;
    Parameters second_moment;
    std::uint64_t step = 0;

    static AdamState zeros_like(const Parameters& params);
};

// Bias-corrected ADAM update. Throws TrainingDiverged naming the layer and the
// offending magnitude if any gradient is non-finite; parameters are untouched
// in that case.
void adam_step(Parameters& params, const Parameters& grads, AdamState& state, const TrainConfig& config);

struct TrainResult {
    Network best;                      // parameters from the best validation epoch
    std::vector<EpochRecord> history;  // one record per epoch run
    std::size_t best_epoch = 0;
    double best_val_mse = 0.0;
    bool early_stopped = false;
};

// Mean squared error of forward_patch against the patch objectness.
double evaluate_mse(const Network& net, const std::vector<LabeledPatch>& patches);

// Mean loss and summed gradient over a set of samples, using the
// chunked ordered reduction.
struct BatchGradient {
    Parameters grads;  // mean over the batch
    double loss = 0.0;
};
BatchGradient batch_gradient(const Network& net, const std::vector<const LabeledPatch*>& batch,
                             std::size_t reduction_chunk = 8);

TrainResult train(const Network& net, const std::vector<LabeledPatch>& train_set,
                  const std::vector<LabeledPatch>& val_set, const TrainConfig& config);

// CSV with header "epoch,train_mse,val_mse".
void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

}  // namespace sonarprop
