#include "aucns/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "aucns/error.hpp"

namespace aucns {

void validate(const TrainConfig& c) {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::Config, msg); };
    if (c.dim < 1) fail("dim must be >= 1");
    if (!(c.learning_rate > 0.0)) fail("learning_rate must be > 0, got " + std::to_string(c.learning_rate));
    if (!(c.lr_decay_factor > 0.0)) fail("lr_decay factor must be > 0");
    if (!(c.l2_reg >= 0.0)) fail("l2_reg must be >= 0, got " + std::to_string(c.l2_reg));
    if (c.batch_size < 1) fail("batch_size must be >= 1");
    if (c.epochs < 1) fail("epochs must be >= 1");
    validate(c.sampler);
}

double learning_rate_at(const TrainConfig& config, std::size_t epoch) {
    double lr = config.learning_rate;
    for (std::size_t milestone : config.lr_decay_epochs)
        if (epoch >= milestone) lr *= config.lr_decay_factor;
    return lr;
}

namespace {

// Dense gradient buffers with a list of touched rows, reset after each batch.
class GradientAccumulator {
public:
    GradientAccumulator(std::size_t rows, std::size_t dim) : dim_(dim), grad_(rows * dim, 0.0), touched_(rows, false) {}

    std::span<double> row(std::size_t r) {
        if (!touched_[r]) {
            touched_[r] = true;
            rows_.push_back(r);
        }
        return {grad_.data() + r * dim_, dim_};
    }

    void apply(std::vector<double>& params, double lr) {
        for (std::size_t r : rows_) {
            double* g = grad_.data() + r * dim_;
            double* p = params.data() + r * dim_;
            for (std::size_t k = 0; k < dim_; ++k) {
                p[k] -= lr * g[k];
                g[k] = 0.0;
            }
            touched_[r] = false;
        }
        rows_.clear();
    }

    bool finite() const {
        for (std::size_t r : rows_) {
            const double* g = grad_.data() + r * dim_;
            for (std::size_t k = 0; k < dim_; ++k)
                if (!std::isfinite(g[k])) return false;
        }
        return true;
    }

private:
    std::size_t dim_;
    std::vector<double> grad_;
    std::vector<bool> touched_;
    std::vector<std::size_t> rows_;
};

}  // namespace

TrainResult train(const InteractionDataset& dataset, const PopularityProfile& profile, const TrainConfig& config) {
    validate(config);
    if (dataset.num_train() == 0) throw Error(ErrorKind::EmptyDataset, "no training interactions");

    TrainResult result;
    result.model = init_model(dataset.num_users(), dataset.num_items(), config.dim, config.seed);
    FactorModel& model = result.model;
    auto sampler = make_sampler(config.sampler, dataset, profile, model);

    std::vector<std::pair<UserId, ItemId>> pairs;
    pairs.reserve(dataset.num_train());
    for (std::size_t u = 0; u < dataset.num_users(); ++u)
        for (ItemId i : dataset.train_items(static_cast<UserId>(u))) pairs.emplace_back(static_cast<UserId>(u), i);

    Rng shuffle_rng = named_stream(config.seed, "shuffle");
    Rng sampler_rng = named_stream(config.seed, "sampler");

    const std::size_t d = config.dim;
    GradientAccumulator user_grad(dataset.num_users(), d);
    GradientAccumulator item_grad(dataset.num_items(), d);
    std::vector<double> scratch(3 * d);
    std::span<double> gu(scratch.data(), d), gp(scratch.data() + d, d), gn(scratch.data() + 2 * d, d);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = learning_rate_at(config, epoch);
        sampler->begin_epoch(model);
        std::shuffle(pairs.begin(), pairs.end(), shuffle_rng);

        SamplerTelemetry epoch_telemetry;
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < pairs.size(); start += config.batch_size) {
            const std::size_t end = std::min(start + config.batch_size, pairs.size());
            for (std::size_t k = start; k < end; ++k) {
                auto [u, pos] = pairs[k];
                SamplerContext ctx{u, pos, uninteracted_pool(dataset, u), sampler_rng};
                ItemId neg = sampler->sample(ctx);

                ++epoch_telemetry.samples;
                if (profile.hot(neg)) ++epoch_telemetry.popular;
                if (dataset.is_test_positive(u, neg)) ++epoch_telemetry.false_negative;

                loss_sum += bpr_gradient(model, u, pos, neg, config.l2_reg, gu, gp, gn);
                auto ru = user_grad.row(u);
                auto rp = item_grad.row(pos);
                for (std::size_t j = 0; j < d; ++j) {
                    ru[j] += gu[j];
                    rp[j] += gp[j];
                }
                auto rn = item_grad.row(neg);
                for (std::size_t j = 0; j < d; ++j) rn[j] += gn[j];
            }
            if (!std::isfinite(loss_sum) || !user_grad.finite() || !item_grad.finite()) {
                throw Error(ErrorKind::Training, "non-finite gradient in epoch " + std::to_string(epoch) +
                                                     ", batch starting at pair " + std::to_string(start));
            }
            user_grad.apply(model.user_factors(), lr);
            item_grad.apply(model.item_factors(), lr);
        }

        result.telemetry.samples += epoch_telemetry.samples;
        result.telemetry.popular += epoch_telemetry.popular;
        result.telemetry.false_negative += epoch_telemetry.false_negative;
        result.log.push_back({epoch, loss_sum / static_cast<double>(pairs.size()), lr, epoch_telemetry.popular_rate(),
                              epoch_telemetry.false_negative_rate()});
    }
    if (!model.all_finite()) throw Error(ErrorKind::Training, "model contains non-finite entries after training");
    return result;
}

}  // namespace aucns
