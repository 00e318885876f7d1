#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aucns/data.hpp"
#include "aucns/model.hpp"

namespace aucns {

inline constexpr int kReportSchemaVersion = 1;

struct RecommendationList {
    UserId user = 0;
    std::vector<ItemId> items;  // descending score, no training positives
};

// The k best-scored items of I_u^-; equal scores rank by ascending item index.
RecommendationList topk(const FactorModel& model, const InteractionDataset& dataset, UserId user, std::size_t k);

struct RankingMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double ndcg = 0.0;
    std::size_t users = 0;  // users with a non-empty test set
};

// Per-user precision@k, recall@k, F1@k and binary-gain NDCG@k averaged over
// users whose test set is non-empty. test_sets is indexed by user.
RankingMetrics ranking_metrics(std::span<const RecommendationList> lists,
                               const std::vector<std::vector<ItemId>>& test_sets, std::size_t k);

// Over- and under-recommendation rates split by item popularity, pooled over
// all (user, item) pairs. The primary UHR/UCR divide by the recommended hot/cold
// counts; the *_alt variants divide by the held-out hot/cold counts.
struct BiasMetrics {
    double ohr = 0.0;
    double ocr = 0.0;
    double uhr = 0.0;
    double ucr = 0.0;
    double uhr_alt = 0.0;
    double ucr_alt = 0.0;
    bool zero_rec_hot = false;   // |S_Rec ∩ hot| = 0
    bool zero_rec_cold = false;  // |S_Rec ∩ cold| = 0
    bool zero_test_hot = false;
    bool zero_test_cold = false;
};

BiasMetrics bias_metrics(std::span<const RecommendationList> lists, const std::vector<std::vector<ItemId>>& test_sets,
                         const std::vector<bool>& is_hot);

struct ErrorRates {
    double fpr = 0.0;  // |S_Rec - S_Test| / |S_Rec|
    double fnr = 0.0;  // |S_Test - S_Rec| / |S_Test|
};

// Throws when the pooled test set is empty.
ErrorRates fpr_fnr(std::span<const RecommendationList> lists, const std::vector<std::vector<ItemId>>& test_sets);

struct MseResult {
    double mse = 0.0;
    std::size_t points = 0;
    std::size_t skipped_users = 0;  // constant score vectors
};

// Scores of I_u^- are z-normalized per user and passed through a sigmoid. Test
// positives (label 1) and an equal number of seeded uniform draws from the
// items outside train and test (label 0) form the evaluation set.
MseResult mse_metric(const FactorModel& model, const InteractionDataset& dataset, std::uint64_t seed);

// Mean squared error of explicit (prediction, label) pairs.
double mean_squared_error(std::span<const double> predictions, std::span<const double> labels);

// One-way partial AUC: positives against the top floor(gamma*|neg|) negatives
// (at least one), ties counted as 1/2.
double partial_auc(std::span<const double> pos_scores, std::span<const double> neg_scores, double gamma);

// Mean per-user partial AUC of test positives against un-interacted, non-test items.
double mean_user_partial_auc(const FactorModel& model, const InteractionDataset& dataset, double gamma);

struct EvalReport {
    std::size_t k = 0;
    RankingMetrics ranking;
    BiasMetrics bias;
    ErrorRates rates;
    double mse = 0.0;
    double pauc = 0.0;
    double pauc_gamma = 0.0;
};

struct EvalOptions {
    std::vector<std::size_t> ks = {5, 10, 20};
    double pauc_gamma = 0.006;
    std::uint64_t seed = 1;
};

std::vector<EvalReport> evaluate(const FactorModel& model, const InteractionDataset& dataset,
                                 const PopularityProfile& profile, const EvalOptions& options);

nlohmann::json to_json(const EvalReport& report);
std::string csv_header();
std::string to_csv_row(const EvalReport& report);

}  // namespace aucns
