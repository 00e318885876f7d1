#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aucns/data.hpp"
#include "aucns/model.hpp"
#include "aucns/rng.hpp"

namespace aucns {

// Hyperparameters of the partial-AUC sampling rule.
struct SamplerConfig {
    double alpha = 0.75;         // confidence in the model's ranking, [0.5, 1]
    double beta = 0.01;          // popularity concentration of the true-negative prior, >= 0
    double gamma = 0.006;        // false positive rate range of the partial AUC, (0, 1]
    std::size_t n_mc = 5;        // Monte-Carlo draws for each Delta estimate
    std::size_t m_candidates = 20;
    double epsilon_prior = 0.01;  // prior clipped to [eps, 1 - eps]
};

// Throws ErrorKind::Config naming the offending field and its bound.
void validate(const SamplerConfig& config);

struct CandidateEvaluation {
    ItemId item = 0;
    double score = 0.0;
    double cdf = 0.0;
    double tau_neg = 0.0;
    double posterior_tn = 0.0;
    double delta_plus = 0.0;
    double delta_minus = 0.0;
    double objective = 0.0;
};

// Fraction of sorted_scores that are <= x_hat; binary search.
double empirical_cdf(std::span<const double> sorted_scores, double x_hat);

// tau^- = clip((pop / pop_max)^beta, eps, 1 - eps).
double prior_tn(double pop, double pop_max, double beta, double epsilon_prior);

// Posterior probability that an un-interacted item with empirical CDF value `cdf`
// is a true negative, from the two-sample order-statistics mixture.
double posterior_tn(double cdf, double alpha, double tau_neg);

// Sum over draws of 1 - sigma(positive_score - x_hat), rescaled to |I_u^+|.
double delta_plus_from_scores(std::span<const double> sampled_positive_scores, std::size_t num_positives,
                              double x_hat);
// gamma * |I_u^-| times the mean of 1 - sigma(x_hat - negative_score).
double delta_minus_from_scores(std::span<const double> sampled_negative_scores, std::size_t num_uninteracted,
                               double x_hat, double gamma);

// Monte-Carlo estimates drawing n_mc items with replacement.
double delta_plus(const FactorModel& model, const InteractionDataset& dataset, UserId user, double x_hat,
                  std::size_t n_mc, Rng& rng);
double delta_minus(const FactorModel& model, const InteractionDataset& dataset, UserId user, double x_hat,
                   std::size_t n_mc, double gamma, Rng& rng);

// Per-user ascending scores over I_u^-, refreshed once per epoch.
class ScoreSnapshot {
public:
    ScoreSnapshot() = default;
    void rebuild(const FactorModel& model, const InteractionDataset& dataset);
    std::span<const double> user_scores(UserId u) const {
        return {scores_.data() + offsets_[u], offsets_[u + 1] - offsets_[u]};
    }
    bool empty() const { return offsets_.empty(); }

private:
    std::vector<double> scores_;
    std::vector<std::size_t> offsets_;
};

struct SelectionInputs {
    const FactorModel& model;
    const InteractionDataset& dataset;
    const PopularityProfile& profile;
    const ScoreSnapshot& snapshot;
    const SamplerConfig& config;
};

// Evaluates the rule for explicit candidates, sharing one set of Monte-Carlo
// draws across them.
std::vector<CandidateEvaluation> evaluate_candidates(const SelectionInputs& in, UserId user,
                                                     std::span<const ItemId> candidates, Rng& rng);

// Index of the largest objective; the earliest candidate wins ties.
std::size_t argmax_objective(std::span<const CandidateEvaluation> evaluations);

// Draws m_candidates from I_u^- and returns the one maximizing
// delta_plus * P(TN|x) - delta_minus * (1 - P(TN|x)).
ItemId aucns_select(const SelectionInputs& in, UserId user, Rng& rng,
                    std::vector<CandidateEvaluation>* trace = nullptr);

}  // namespace aucns
