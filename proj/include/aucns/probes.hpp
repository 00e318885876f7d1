#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aucns/rng.hpp"

namespace aucns {

// Regression world for checking the bias/variance/noise decomposition of MSE.
struct SyntheticRegressionWorld {
    std::vector<double> true_coefficients = {0.5, -1.0, 2.0};  // f*(x) = sum c_k x^k
    double noise_sigma = 0.3;
    std::size_t degree = 1;  // capacity of the fitted polynomial
    std::size_t num_datasets = 10000;
    std::size_t dataset_size = 50;
    std::size_t grid_points = 41;  // evaluation grid on [-1, 1]
    std::uint64_t seed = 1;
};

struct BiasVarianceResult {
    double mse = 0.0;
    double bias_sq = 0.0;
    double variance = 0.0;
    double noise = 0.0;
    double residual = 0.0;  // |mse - (bias_sq + variance + noise)| / mse
    std::size_t resampled = 0;  // rank-deficient fits that were redrawn
};

double evaluate_polynomial(std::span<const double> coefficients, double x);

BiasVarianceResult bias_variance_probe(const SyntheticRegressionWorld& world);

struct Prop2Sides {
    double lhs = 0.0;  // mean (g - y)^2
    double rhs = 0.0;  // (#FP + #FN) / n
};

Prop2Sides prop2_identity_check(std::span<const int> predictions, std::span<const int> labels);

// Number of binary (prediction, label) patterns of the given length whose two
// sides differ. Length 4 covers all 2^8 patterns.
std::size_t prop2_exhaustive_mismatches(std::size_t length);

enum class TrueLabel { TrueNegative, FalseNegative };

struct UnlabeledItem {
    double score = 0.0;
    TrueLabel label = TrueLabel::TrueNegative;
    double popularity = 1.0;
};

// One user small enough to enumerate: scored positives and unlabeled items.
struct ToyRankingInstance {
    std::vector<double> positive_scores;
    std::vector<UnlabeledItem> unlabeled;
    double alpha = 0.75;
    double beta = 0.01;
    double gamma = 0.5;
    double epsilon_prior = 0.01;
};

// Size of the top-ranked negative set N paired with a candidate: the best
// floor(gamma * |D-|) of the other unlabeled items, at least 1 when any exist.
std::size_t top_set_size(const ToyRankingInstance& instance);

// Indices of N for a candidate, best score first; ties keep index order.
std::vector<std::size_t> top_negatives(const ToyRankingInstance& instance, std::size_t candidate);

// P(TN | x) for an unlabeled item, from its empirical CDF among all unlabeled
// scores and its popularity prior.
double candidate_posterior(const ToyRankingInstance& instance, std::size_t candidate);

// First index whose value is within a relative 1e-9 of the maximum.
std::size_t argmax_with_tolerance(std::span<const double> values);

struct PaucRuleVerdict {
    std::size_t rule_choice = 0;
    std::size_t oracle_choice = 0;
    bool agree = false;
    std::vector<double> rule_objectives;
    std::vector<double> oracle_objectives;  // expected surrogate pAUC gain for dg = -1
};

// Compares the sampling rule (exact Delta sums) with the argmax of the expected
// surrogate pAUC increment obtained by differentiating the pairwise objective.
PaucRuleVerdict pauc_rule_oracle(const ToyRankingInstance& instance);

// The rule with Delta sums estimated from n_mc draws with replacement from D+
// and N. Returns the chosen index.
std::size_t pauc_rule_monte_carlo(const ToyRankingInstance& instance, std::size_t n_mc, Rng& rng);

enum class Branch { TrueNegative, FalseNegative };

// Logistic surrogate pAUC, (1/(|D+||N|)) sum ln sigma(g+ - g-), with the candidate
// scored at candidate_score and placed on the negative side (TN) or the
// positive side (FN).
double surrogate_pauc(const ToyRankingInstance& instance, std::size_t candidate, Branch branch,
                      double candidate_score);

// Closed-form derivative of surrogate_pauc with respect to the candidate score.
double surrogate_derivative(const ToyRankingInstance& instance, std::size_t candidate, Branch branch);

struct GradientCheck {
    double tn_analytic = 0.0;
    double tn_numeric = 0.0;
    double fn_analytic = 0.0;
    double fn_numeric = 0.0;
    double max_relative_error = 0.0;
};

GradientCheck surrogate_gradient_check(const ToyRankingInstance& instance, std::size_t candidate, double h = 1e-5);

// Random instance with at most max_items scores in total, alpha in [0.55, 0.95]
// and gamma in {0.25, 0.5, 1}.
ToyRankingInstance random_toy_instance(Rng& rng, std::size_t max_items = 20);

struct OracleSuiteSummary {
    std::size_t instances = 0;
    std::size_t exact_agreements = 0;
    std::size_t monte_carlo_agreements = 0;
    double max_gradient_error = 0.0;
};

// Runs pauc_rule_oracle, the Monte-Carlo rule (n_mc draws) and a gradient check
// on `count` random instances.
OracleSuiteSummary run_oracle_suite(std::size_t count, std::uint64_t seed, std::size_t n_mc = 5);

}  // namespace aucns
