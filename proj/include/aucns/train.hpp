#pragma once

#include <cstdint>
#include <vector>

#include "aucns/data.hpp"
#include "aucns/model.hpp"
#include "aucns/samplers.hpp"

namespace aucns {

struct TrainConfig {
    std::size_t dim = 12;
    double learning_rate = 0.1;
    double lr_decay_factor = 0.1;
    std::vector<std::size_t> lr_decay_epochs = {20, 60, 80};  // 0-based epoch indices
    double l2_reg = 1e-4;
    std::size_t batch_size = 128;
    std::size_t epochs = 100;
    std::uint64_t seed = 1;
    SamplerSpec sampler;
};

void validate(const TrainConfig& config);

// Learning rate in effect during the given 0-based epoch.
double learning_rate_at(const TrainConfig& config, std::size_t epoch);

struct EpochLog {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    double learning_rate = 0.0;
    double sampled_popular_rate = 0.0;
    double sampled_false_negative_rate = 0.0;
};

// Fraction of sampled negatives that are hot items / held-out test positives.
struct SamplerTelemetry {
    std::size_t samples = 0;
    std::size_t popular = 0;
    std::size_t false_negative = 0;

    double popular_rate() const { return samples ? static_cast<double>(popular) / static_cast<double>(samples) : 0.0; }
    double false_negative_rate() const {
        return samples ? static_cast<double>(false_negative) / static_cast<double>(samples) : 0.0;
    }
};

struct TrainResult {
    FactorModel model;
    std::vector<EpochLog> log;
    SamplerTelemetry telemetry;
};

// Mini-batch SGD on the BPR loss. Every epoch visits each training positive once
// in shuffled order, draws one negative from the configured sampler, and applies
// the gradient summed over batch_size pairs.
TrainResult train(const InteractionDataset& dataset, const PopularityProfile& profile, const TrainConfig& config);

}  // namespace aucns
