#include "sonarprop/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "sonarprop/errors.hpp"

namespace sonarprop {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0f)) throw InvalidInput("train: learning rate must be positive");
    if (patience < 1) throw InvalidInput("train: patience must be >= 1");
    if (batch_size < 1) throw InvalidInput("train: batch size must be >= 1");
    if (max_epochs < 1) throw InvalidInput("train: max epochs must be >= 1");
    if (reduction_chunk < 1) throw InvalidInput("train: reduction chunk must be >= 1");
}

AdamState AdamState::zeros_like(const Parameters& params) {
    AdamState s;
    for (const auto& p : params) {
        LayerParams z;
        if (!p.weights.empty()) z.weights = Tensor(p.weights.shape());
        if (!p.bias.empty()) z.bias = Tensor(p.bias.shape());
        s.first_moment.push_back(z);
        s.second_moment.push_back(z);
    }
    return s;
}

namespace {

void check_finite(const Tensor& t, std::size_t layer, const char* what) {
    for (float v : t.values()) {
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << "non-finite " << what << " gradient in layer " << layer << " (value " << v << ")";
            throw TrainingDiverged(msg.str());
        }
    }
}

void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, const TrainConfig& c,
                 float correction1, float correction2) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        const float g = grad[i];
        m[i] = c.beta1 * m[i] + (1.0f - c.beta1) * g;
        v[i] = c.beta2 * v[i] + (1.0f - c.beta2) * g * g;
        const float m_hat = m[i] / correction1;
        const float v_hat = v[i] / correction2;
        param[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
}

void add_into(Parameters& acc, const Parameters& g) {
    for (std::size_t l = 0; l < acc.size(); ++l) {
        for (std::size_t i = 0; i < acc[l].weights.size(); ++i) acc[l].weights[i] += g[l].weights[i];
        for (std::size_t i = 0; i < acc[l].bias.size(); ++i) acc[l].bias[i] += g[l].bias[i];
    }
}

Parameters zeros_like(const Parameters& params) {
    Parameters z(params.size());
    for (std::size_t l = 0; l < params.size(); ++l) {
        if (!params[l].weights.empty()) z[l].weights = Tensor(params[l].weights.shape());
        if (!params[l].bias.empty()) z[l].bias = Tensor(params[l].bias.shape());
    }
    return z;
}

}  // namespace

void adam_step(Parameters& params, const Parameters& grads, AdamState& state, const TrainConfig& config) {
    if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
        state.second_moment.size() != params.size())
        throw InvalidInput("adam_step: parameter, gradient and state layouts differ");
    for (std::size_t l = 0; l < params.size(); ++l) {
        if (grads[l].weights.shape() != params[l].weights.shape() || grads[l].bias.shape() != params[l].bias.shape() ||
            state.first_moment[l].weights.shape() != params[l].weights.shape())
            throw InvalidInput("adam_step: shape mismatch in layer " + std::to_string(l));
        check_finite(grads[l].weights, l, "weight");
        check_finite(grads[l].bias, l, "bias");
    }
    ++state.step;
    const auto t = static_cast<float>(state.step);
    const float correction1 = 1.0f - std::pow(config.beta1, t);
    const float correction2 = 1.0f - std::pow(config.beta2, t);
    for (std::size_t l = 0; l < params.size(); ++l) {
        adam_update(params[l].weights, grads[l].weights, state.first_moment[l].weights,
                    state.second_moment[l].weights, config, correction1, correction2);
        adam_update(params[l].bias, grads[l].bias, state.first_moment[l].bias, state.second_moment[l].bias, config,
                    correction1, correction2);
    }
}

double evaluate_mse(const Network& net, const std::vector<LabeledPatch>& patches) {
    if (patches.empty()) throw InvalidInput("evaluate_mse: empty patch set");
    std::vector<double> losses(patches.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(patches.size()); ++i) {
        const auto& p = patches[static_cast<std::size_t>(i)];
        const double d = static_cast<double>(forward_patch(net, p.pixels())) - p.objectness;
        losses[static_cast<std::size_t>(i)] = d * d;
    }
    return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(patches.size());
}

BatchGradient batch_gradient(const Network& net, const std::vector<const LabeledPatch*>& batch,
                             std::size_t reduction_chunk) {
    if (batch.empty()) throw InvalidInput("batch_gradient: empty batch");
    const std::size_t chunks = (batch.size() + reduction_chunk - 1) / reduction_chunk;
    std::vector<Parameters> partial(chunks);
    std::vector<double> partial_loss(chunks, 0.0);
    std::vector<std::exception_ptr> errors(chunks);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t cc = 0; cc < static_cast<std::ptrdiff_t>(chunks); ++cc) {
        const auto c = static_cast<std::size_t>(cc);
        try {
            Parameters acc = zeros_like(net.params);
            const std::size_t end = std::min(batch.size(), (c + 1) * reduction_chunk);
            for (std::size_t i = c * reduction_chunk; i < end; ++i) {
                const LabeledPatch& p = *batch[i];
                const ForwardTrace trace = forward_trace(net, p.pixels());
                Tensor target(trace.output.shape(), p.objectness);
                const LossResult loss = mse_loss(trace.output, target);
                partial_loss[c] += loss.value;
                add_into(acc, backward(net, trace, loss.gradient));
            }
            partial[c] = std::move(acc);
        } catch (...) {
            errors[c] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    BatchGradient out{std::move(partial[0]), partial_loss[0]};
    for (std::size_t c = 1; c < chunks; ++c) {
        add_into(out.grads, partial[c]);
        out.loss += partial_loss[c];
    }
    const float scale = 1.0f / static_cast<float>(batch.size());
    for (auto& p : out.grads) {
        for (float& v : p.weights.values()) v *= scale;
        for (float& v : p.bias.values()) v *= scale;
    }
    out.loss /= static_cast<double>(batch.size());
    return out;
}

TrainResult train(const Network& net, const std::vector<LabeledPatch>& train_set,
                  const std::vector<LabeledPatch>& val_set, const TrainConfig& config) {
    config.validate();
    if (train_set.empty()) throw InvalidInput("train: empty training set");
    if (val_set.empty()) throw InvalidInput("train: empty validation set");

    Network current = net;
    AdamState state = AdamState::zeros_like(current.params);
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    result.best = net;
    result.best_val_mse = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            std::vector<const LabeledPatch*> batch;
            for (std::size_t i = start; i < end; ++i) batch.push_back(&train_set[order[i]]);
            BatchGradient bg = batch_gradient(current, batch, config.reduction_chunk);
            if (!std::isfinite(bg.loss))
                throw TrainingDiverged("training loss became non-finite in epoch " + std::to_string(epoch));
            try {
                adam_step(current.params, bg.grads, state, config);
            } catch (const TrainingDiverged& e) {
                throw TrainingDiverged(std::string(e.what()) + " during epoch " + std::to_string(epoch));
            }
            epoch_loss += bg.loss * static_cast<double>(end - start);
        }
        EpochRecord rec{epoch, epoch_loss / static_cast<double>(order.size()), evaluate_mse(current, val_set)};
        if (!std::isfinite(rec.val_mse))
            throw TrainingDiverged("validation loss became non-finite in epoch " + std::to_string(epoch));
        result.history.push_back(rec);
        if (config.on_epoch) config.on_epoch(rec);
        if (rec.val_mse < result.best_val_mse) {
            result.best_val_mse = rec.val_mse;
            result.best_epoch = epoch;
            result.best.params = current.params;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            result.early_stopped = true;
            break;
        }
    }
    return result;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write history CSV: " + path.string());
    os << "epoch,train_mse,val_mse\n" << std::setprecision(9);
    for (const auto& r : history) os << r.epoch << "," << r.train_mse << "," << r.val_mse << "\n";
}

}  // namespace sonarprop
