#include "aucns/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "aucns/error.hpp"
#include "aucns/rng.hpp"

namespace aucns {

RecommendationList topk(const FactorModel& model, const InteractionDataset& dataset, UserId user, std::size_t k) {
    if (user >= dataset.num_users()) throw Error(ErrorKind::Index, "user " + std::to_string(user) + " out of range");
    auto positives = dataset.train_items(user);
    std::vector<std::pair<double, ItemId>> scored;
    scored.reserve(dataset.num_uninteracted(user));
    std::size_t next_pos = 0;
    for (ItemId i = 0; i < dataset.num_items(); ++i) {
        if (next_pos < positives.size() && positives[next_pos] == i) {
            ++next_pos;
            continue;
        }
        scored.emplace_back(model.score_fast(user, i), i);
    }
    const std::size_t n = std::min(k, scored.size());
    auto better = [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); };
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), better);

    RecommendationList list{user, {}};
    list.items.reserve(n);
    for (std::size_t r = 0; r < n; ++r) list.items.push_back(scored[r].second);
    return list;
}

namespace {

bool contains_sorted(const std::vector<ItemId>& sorted, ItemId i) {
    return std::binary_search(sorted.begin(), sorted.end(), i);
}

}  // namespace

RankingMetrics ranking_metrics(std::span<const RecommendationList> lists,
                               const std::vector<std::vector<ItemId>>& test_sets, std::size_t k) {
    RankingMetrics m;
    for (const auto& list : lists) {
        const auto& test = test_sets[list.user];
        if (test.empty()) continue;
        double dcg = 0.0;
        std::size_t hits = 0;
        for (std::size_t r = 0; r < list.items.size() && r < k; ++r) {
            if (contains_sorted(test, list.items[r])) {
                ++hits;
                dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
            }
        }
        double idcg = 0.0;
        for (std::size_t r = 0; r < std::min(k, test.size()); ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);

        double precision = static_cast<double>(hits) / static_cast<double>(k);
        double recall = static_cast<double>(hits) / static_cast<double>(test.size());
        m.precision += precision;
        m.recall += recall;
        m.f1 += precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        m.ndcg += idcg > 0.0 ? dcg / idcg : 0.0;
        ++m.users;
    }
    if (m.users > 0) {
        const auto n = static_cast<double>(m.users);
        m.precision /= n;
        m.recall /= n;
        m.f1 /= n;
        m.ndcg /= n;
    }
    return m;
}

BiasMetrics bias_metrics(std::span<const RecommendationList> lists, const std::vector<std::vector<ItemId>>& test_sets,
                         const std::vector<bool>& is_hot) {
    // Counts indexed [hot ? 0 : 1].
    std::size_t rec[2] = {0, 0}, over[2] = {0, 0}, test_total[2] = {0, 0}, under[2] = {0, 0};
    for (const auto& list : lists) {
        const auto& test = test_sets[list.user];
        std::vector<ItemId> rec_sorted = list.items;
        std::sort(rec_sorted.begin(), rec_sorted.end());
        for (ItemId i : list.items) {
            const int g = is_hot[i] ? 0 : 1;
            ++rec[g];
            if (!contains_sorted(test, i)) ++over[g];
        }
        for (ItemId i : test) {
            const int g = is_hot[i] ? 0 : 1;
            ++test_total[g];
            if (!std::binary_search(rec_sorted.begin(), rec_sorted.end(), i)) ++under[g];
        }
    }
    auto ratio = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    BiasMetrics b;
    b.ohr = ratio(over[0], rec[0]);
    b.ocr = ratio(over[1], rec[1]);
    b.uhr = ratio(under[0], rec[0]);
    b.ucr = ratio(under[1], rec[1]);
    b.uhr_alt = ratio(under[0], test_total[0]);
    b.ucr_alt = ratio(under[1], test_total[1]);
    b.zero_rec_hot = rec[0] == 0;
    b.zero_rec_cold = rec[1] == 0;
    b.zero_test_hot = test_total[0] == 0;
    b.zero_test_cold = test_total[1] == 0;
    return b;
}

ErrorRates fpr_fnr(std::span<const RecommendationList> lists, const std::vector<std::vector<ItemId>>& test_sets) {
    std::size_t rec = 0, false_pos = 0, test = 0, false_neg = 0;
    for (const auto& list : lists) {
        const auto& t = test_sets[list.user];
        std::vector<ItemId> rec_sorted = list.items;
        std::sort(rec_sorted.begin(), rec_sorted.end());
        rec += list.items.size();
        for (ItemId i : list.items)
            if (!contains_sorted(t, i)) ++false_pos;
        test += t.size();
        for (ItemId i : t)
            if (!std::binary_search(rec_sorted.begin(), rec_sorted.end(), i)) ++false_neg;
    }
    if (test == 0) throw Error(ErrorKind::EmptyDataset, "FNR undefined: pooled test set is empty");
    ErrorRates r;
    r.fpr = rec == 0 ? 0.0 : static_cast<double>(false_pos) / static_cast<double>(rec);
    r.fnr = static_cast<double>(false_neg) / static_cast<double>(test);
    return r;
}

double mean_squared_error(std::span<const double> predictions, std::span<const double> labels) {
    if (predictions.size() != labels.size() || predictions.empty()) {
        throw Error(ErrorKind::Config, "mean_squared_error needs equal, non-empty inputs");
    }
    double s = 0.0;
    for (std::size_t k = 0; k < predictions.size(); ++k) s += (predictions[k] - labels[k]) * (predictions[k] - labels[k]);
    return s / static_cast<double>(predictions.size());
}

MseResult mse_metric(const FactorModel& model, const InteractionDataset& dataset, std::uint64_t seed) {
    Rng rng = named_stream(seed, "eval");
    MseResult result;
    double sum = 0.0;
    for (std::size_t uu = 0; uu < dataset.num_users(); ++uu) {
        const auto u = static_cast<UserId>(uu);
        auto test = dataset.test_items(u);
        if (test.empty()) continue;

        auto pool = uninteracted_pool(dataset, u);
        double mean = 0.0, sq = 0.0;
        for (std::size_t r = 0; r < pool.size(); ++r) {
            double s = model.score_fast(u, pool.nth(r));
            mean += s;
            sq += s * s;
        }
        const auto n = static_cast<double>(pool.size());
        mean /= n;
        const double var = std::max(sq / n - mean * mean, 0.0);
        if (var < 1e-24) {
            ++result.skipped_users;
            continue;
        }
        const double sd = std::sqrt(var);
        auto predict = [&](ItemId i) { return sigmoid((model.score_fast(u, i) - mean) / sd); };

        for (ItemId i : test) {
            double p = predict(i);
            sum += (p - 1.0) * (p - 1.0);
            ++result.points;
        }
        std::vector<ItemId> unlabeled;
        unlabeled.reserve(pool.size());
        for (std::size_t r = 0; r < pool.size(); ++r) {
            ItemId i = pool.nth(r);
            if (!dataset.is_test_positive(u, i)) unlabeled.push_back(i);
        }
        const std::size_t take = std::min(test.size(), unlabeled.size());
        for (std::size_t k = 0; k < take; ++k) {
            std::size_t j = k + uniform_index(rng, unlabeled.size() - k);
            std::swap(unlabeled[k], unlabeled[j]);
            double p = predict(unlabeled[k]);
            sum += p * p;
            ++result.points;
        }
    }
    result.mse = result.points ? sum / static_cast<double>(result.points) : 0.0;
    return result;
}

double partial_auc(std::span<const double> pos_scores, std::span<const double> neg_scores, double gamma) {
    if (pos_scores.empty() || neg_scores.empty()) throw Error(ErrorKind::Config, "partial_auc needs non-empty score sets");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorKind::Config, "gamma must lie in (0, 1]");
    std::vector<double> neg(neg_scores.begin(), neg_scores.end());
    std::sort(neg.begin(), neg.end(), std::greater<>());
    auto top = static_cast<std::size_t>(std::floor(gamma * static_cast<double>(neg.size()) + 1e-9));
    top = std::clamp<std::size_t>(top, 1, neg.size());
    neg.resize(top);

    double total = 0.0;
    for (double p : pos_scores) {
        for (double n : neg) {
            if (p > n) total += 1.0;
            else if (p == n) total += 0.5;
        }
    }
    return total / (static_cast<double>(pos_scores.size()) * static_cast<double>(neg.size()));
}

double mean_user_partial_auc(const FactorModel& model, const InteractionDataset& dataset, double gamma) {
    double sum = 0.0;
    std::size_t users = 0;
    std::vector<double> pos, neg;
    for (std::size_t uu = 0; uu < dataset.num_users(); ++uu) {
        const auto u = static_cast<UserId>(uu);
        auto test = dataset.test_items(u);
        if (test.empty()) continue;
        pos.clear();
        neg.clear();
        auto pool = uninteracted_pool(dataset, u);
        for (std::size_t r = 0; r < pool.size(); ++r) {
            ItemId i = pool.nth(r);
            (dataset.is_test_positive(u, i) ? pos : neg).push_back(model.score_fast(u, i));
        }
        if (neg.empty()) continue;
        sum += partial_auc(pos, neg, gamma);
        ++users;
    }
    return users ? sum / static_cast<double>(users) : 0.0;
}

std::vector<EvalReport> evaluate(const FactorModel& model, const InteractionDataset& dataset,
                                 const PopularityProfile& profile, const EvalOptions& options) {
    if (options.ks.empty()) throw Error(ErrorKind::Config, "evaluation needs at least one k");
    const std::size_t k_max = *std::max_element(options.ks.begin(), options.ks.end());

    std::vector<RecommendationList> full;
    for (std::size_t u = 0; u < dataset.num_users(); ++u) {
        if (dataset.test_items(static_cast<UserId>(u)).empty()) continue;
        full.push_back(topk(model, dataset, static_cast<UserId>(u), k_max));
    }
    const double mse = mse_metric(model, dataset, options.seed).mse;
    const double pauc = mean_user_partial_auc(model, dataset, options.pauc_gamma);

    std::vector<EvalReport> reports;
    for (std::size_t k : options.ks) {
        if (k == 0) throw Error(ErrorKind::Config, "k must be >= 1");
        std::vector<RecommendationList> lists = full;
        for (auto& l : lists)
            if (l.items.size() > k) l.items.resize(k);
        EvalReport r;
        r.k = k;
        r.ranking = ranking_metrics(lists, dataset.test_pos(), k);
        r.bias = bias_metrics(lists, dataset.test_pos(), profile.is_hot);
        r.rates = fpr_fnr(lists, dataset.test_pos());
        r.mse = mse;
        r.pauc = pauc;
        r.pauc_gamma = options.pauc_gamma;
        reports.push_back(r);
    }
    return reports;
}

nlohmann::json to_json(const EvalReport& r) {
    return {
        {"schema_version", kReportSchemaVersion},
        {"k", r.k},
        {"users", r.ranking.users},
        {"precision", r.ranking.precision},
        {"recall", r.ranking.recall},
        {"f1", r.ranking.f1},
        {"ndcg", r.ranking.ndcg},
        {"ohr", r.bias.ohr},
        {"ocr", r.bias.ocr},
        {"uhr", r.bias.uhr},
        {"ucr", r.bias.ucr},
        {"uhr_alt_test_denominator", r.bias.uhr_alt},
        {"ucr_alt_test_denominator", r.bias.ucr_alt},
        {"zero_denominator",
         {{"rec_hot", r.bias.zero_rec_hot},
          {"rec_cold", r.bias.zero_rec_cold},
          {"test_hot", r.bias.zero_test_hot},
          {"test_cold", r.bias.zero_test_cold}}},
        {"fpr", r.rates.fpr},
        {"fnr", r.rates.fnr},
        {"mse", r.mse},
        {"pauc", r.pauc},
        {"pauc_gamma", r.pauc_gamma},
    };
}

std::string csv_header() {
    return "schema_version,k,users,precision,recall,f1,ndcg,ohr,ocr,uhr,ucr,uhr_alt,ucr_alt,fpr,fnr,mse,pauc,pauc_gamma";
}

std::string to_csv_row(const EvalReport& r) {
    std::ostringstream out;
    out.precision(17);
    out << kReportSchemaVersion << ',' << r.k << ',' << r.ranking.users << ',' << r.ranking.precision << ','
        << r.ranking.recall << ',' << r.ranking.f1 << ',' << r.ranking.ndcg << ',' << r.bias.ohr << ',' << r.bias.ocr
        << ',' << r.bias.uhr << ',' << r.bias.ucr << ',' << r.bias.uhr_alt << ',' << r.bias.ucr_alt << ','
        << r.rates.fpr << ',' << r.rates.fnr << ',' << r.mse << ',' << r.pauc << ',' << r.pauc_gamma;
    return out.str();
}

}  // namespace aucns
