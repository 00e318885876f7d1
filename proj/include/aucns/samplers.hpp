#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "aucns/aucns_core.hpp"
#include "aucns/data.hpp"
#include "aucns/model.hpp"
#include "aucns/rng.hpp"

namespace aucns {

enum class SamplerKind { Rns, Pns, Dns, Aucns };
enum class DnsMode { Linear, Argmax };

SamplerKind parse_sampler_kind(std::string_view name);
std::string_view to_string(SamplerKind kind);
DnsMode parse_dns_mode(std::string_view name);
std::string_view to_string(DnsMode mode);

struct SamplerSpec {
    SamplerKind kind = SamplerKind::Aucns;
    SamplerConfig aucns;
    std::size_t dns_candidates = 16;
    DnsMode dns_mode = DnsMode::Linear;
    double pns_exponent = 0.75;
};

void validate(const SamplerSpec& spec);

struct SamplerContext {
    UserId user;
    ItemId positive_item;
    UninteractedPool pool;
    Rng& rng;
};

// Uniform over I_u^-.
ItemId rns_sample(SamplerContext& ctx);

// Probability proportional to pop^exponent over I_u^-; pop 0 gets weight 1e-6.
// Reference version, linear in the number of items.
ItemId pns_sample(SamplerContext& ctx, const PopularityProfile& profile, double exponent = 0.75);

// Cumulative pop^exponent table over all items. Draws are rejected when they hit a
// training positive, which leaves the conditional distribution on I_u^- exact.
class PopularityWeights {
public:
    PopularityWeights(const PopularityProfile& profile, double exponent);
    double weight(ItemId i) const { return weights_[i]; }
    ItemId sample(SamplerContext& ctx) const;

private:
    std::vector<double> weights_;
    std::vector<double> cumulative_;
};

ItemId pns_sample(SamplerContext& ctx, const PopularityWeights& weights);

// Draws candidate_count items uniformly, ranks them by score and samples with
// weights c, c-1, ..., 1 from the highest score down (Linear) or returns the
// best-scored one (Argmax). Equal scores keep draw order.
ItemId dns_sample(SamplerContext& ctx, const FactorModel& model, std::size_t candidate_count,
                  DnsMode mode = DnsMode::Linear);

class NegativeSampler {
public:
    virtual ~NegativeSampler() = default;
    // Called before every epoch with the current model.
    virtual void begin_epoch(const FactorModel&) {}
    virtual ItemId sample(SamplerContext& ctx) = 0;
};

// The sampler keeps references to `model`, `dataset` and `profile`; they must outlive it.
std::unique_ptr<NegativeSampler> make_sampler(const SamplerSpec& spec, const InteractionDataset& dataset,
                                              const PopularityProfile& profile, const FactorModel& model);

}  // namespace aucns
