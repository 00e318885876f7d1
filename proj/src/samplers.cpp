#include "aucns/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aucns/error.hpp"

namespace aucns {

namespace {

constexpr double kZeroPopWeight = 1e-6;
constexpr int kMaxRejections = 64;

void require_pool(const SamplerContext& ctx) {
    if (ctx.pool.empty()) {
        throw Error(ErrorKind::Sampler, "user " + std::to_string(ctx.user) + " has an empty candidate pool");
    }
}

double pop_weight(std::int64_t pop, double exponent) {
    return pop > 0 ? std::pow(static_cast<double>(pop), exponent) : kZeroPopWeight;
}

}  // namespace

SamplerKind parse_sampler_kind(std::string_view name) {
    if (name == "rns") return SamplerKind::Rns;
    if (name == "pns") return SamplerKind::Pns;
    if (name == "dns") return SamplerKind::Dns;
    if (name == "aucns") return SamplerKind::Aucns;
    throw Error(ErrorKind::Config, "unknown sampler '" + std::string(name) + "' (expected rns, pns, dns or aucns)");
}

std::string_view to_string(SamplerKind kind) {
    switch (kind) {
        case SamplerKind::Rns: return "rns";
        case SamplerKind::Pns: return "pns";
        case SamplerKind::Dns: return "dns";
        case SamplerKind::Aucns: return "aucns";
    }
    return "unknown";
}

DnsMode parse_dns_mode(std::string_view name) {
    if (name == "linear") return DnsMode::Linear;
    if (name == "argmax") return DnsMode::Argmax;
    throw Error(ErrorKind::Config, "unknown dns_mode '" + std::string(name) + "' (expected linear or argmax)");
}

std::string_view to_string(DnsMode mode) { return mode == DnsMode::Linear ? "linear" : "argmax"; }

void validate(const SamplerSpec& spec) {
    validate(spec.aucns);
    if (spec.dns_candidates < 1) throw Error(ErrorKind::Config, "dns_candidates must be >= 1");
    if (!(spec.pns_exponent >= 0.0)) throw Error(ErrorKind::Config, "pns_exponent must be >= 0");
}

ItemId rns_sample(SamplerContext& ctx) {
    require_pool(ctx);
    return ctx.pool.sample(ctx.rng);
}

ItemId pns_sample(SamplerContext& ctx, const PopularityProfile& profile, double exponent) {
    require_pool(ctx);
    const std::size_t n = ctx.pool.size();
    std::vector<double> cumulative(n);
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        total += pop_weight(profile.pop[ctx.pool.nth(r)], exponent);
        cumulative[r] = total;
    }
    double target = uniform_real(ctx.rng) * total;
    auto r = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), target) - cumulative.begin());
    return ctx.pool.nth(std::min(r, n - 1));
}

PopularityWeights::PopularityWeights(const PopularityProfile& profile, double exponent) {
    weights_.resize(profile.pop.size());
    cumulative_.resize(profile.pop.size());
    double total = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        weights_[i] = pop_weight(profile.pop[i], exponent);
        total += weights_[i];
        cumulative_[i] = total;
    }
}

ItemId PopularityWeights::sample(SamplerContext& ctx) const {
    require_pool(ctx);
    const double total = cumulative_.back();
    for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
        double target = uniform_real(ctx.rng) * total;
        auto i = static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), target) -
                                          cumulative_.begin());
        i = std::min(i, cumulative_.size() - 1);
        if (ctx.pool.contains(static_cast<ItemId>(i))) return static_cast<ItemId>(i);
    }
    // Users whose positives hold most of the mass: draw directly from the pool.
    const std::size_t n = ctx.pool.size();
    std::vector<double> cumulative(n);
    double pool_total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        pool_total += weights_[ctx.pool.nth(r)];
        cumulative[r] = pool_total;
    }
    double target = uniform_real(ctx.rng) * pool_total;
    auto r = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), target) - cumulative.begin());
    return ctx.pool.nth(std::min(r, n - 1));
}

ItemId pns_sample(SamplerContext& ctx, const PopularityWeights& weights) { return weights.sample(ctx); }

ItemId dns_sample(SamplerContext& ctx, const FactorModel& model, std::size_t candidate_count, DnsMode mode) {
    require_pool(ctx);
    if (candidate_count < 1) throw Error(ErrorKind::Config, "dns candidate_count must be >= 1");

    struct Candidate {
        ItemId item;
        double score;
    };
    std::vector<Candidate> drawn(candidate_count);
    for (auto& c : drawn) {
        c.item = ctx.pool.sample(ctx.rng);
        c.score = model.score_fast(ctx.user, c.item);
    }
    if (candidate_count == 1) return drawn.front().item;

    std::stable_sort(drawn.begin(), drawn.end(), [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
    if (mode == DnsMode::Argmax) return drawn.front().item;

    // Rank r (0 = highest score) has weight c - r; the total is c(c+1)/2.
    const std::size_t c = candidate_count;
    const std::size_t total = c * (c + 1) / 2;
    std::size_t ticket = uniform_index(ctx.rng, total);
    for (std::size_t r = 0; r < c; ++r) {
        std::size_t w = c - r;
        if (ticket < w) return drawn[r].item;
        ticket -= w;
    }
    return drawn.back().item;
}

namespace {

class RnsSampler final : public NegativeSampler {
public:
    ItemId sample(SamplerContext& ctx) override { return rns_sample(ctx); }
};

class PnsSampler final : public NegativeSampler {
public:
    PnsSampler(const PopularityProfile& profile, double exponent) : weights_(profile, exponent) {}
    ItemId sample(SamplerContext& ctx) override { return weights_.sample(ctx); }

private:
    PopularityWeights weights_;
};

class DnsSampler final : public NegativeSampler {
public:
    DnsSampler(const FactorModel& model, std::size_t candidates, DnsMode mode)
        : model_(model), candidates_(candidates), mode_(mode) {}
    ItemId sample(SamplerContext& ctx) override { return dns_sample(ctx, model_, candidates_, mode_); }

private:
    const FactorModel& model_;
    std::size_t candidates_;
    DnsMode mode_;
};

class AucnsSampler final : public NegativeSampler {
public:
    AucnsSampler(const SamplerConfig& config, const InteractionDataset& dataset, const PopularityProfile& profile,
                 const FactorModel& model)
        : config_(config), dataset_(dataset), profile_(profile), model_(model) {}

    void begin_epoch(const FactorModel& model) override { snapshot_.rebuild(model, dataset_); }

    ItemId sample(SamplerContext& ctx) override {
        if (snapshot_.empty()) snapshot_.rebuild(model_, dataset_);
        SelectionInputs in{model_, dataset_, profile_, snapshot_, config_};
        return aucns_select(in, ctx.user, ctx.rng);
    }

private:
    SamplerConfig config_;
    const InteractionDataset& dataset_;
    const PopularityProfile& profile_;
    const FactorModel& model_;
    ScoreSnapshot snapshot_;
};

}  // namespace

std::unique_ptr<NegativeSampler> make_sampler(const SamplerSpec& spec, const InteractionDataset& dataset,
                                              const PopularityProfile& profile, const FactorModel& model) {
    validate(spec);
    switch (spec.kind) {
        case SamplerKind::Rns: return std::make_unique<RnsSampler>();
        case SamplerKind::Pns: return std::make_unique<PnsSampler>(profile, spec.pns_exponent);
        case SamplerKind::Dns: return std::make_unique<DnsSampler>(model, spec.dns_candidates, spec.dns_mode);
        case SamplerKind::Aucns: return std::make_unique<AucnsSampler>(spec.aucns, dataset, profile, model);
    }
    throw Error(ErrorKind::Config, "unhandled sampler kind");
}

}  // namespace aucns
