#include "aucns/aucns_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aucns/error.hpp"

namespace aucns {

void validate(const SamplerConfig& c) {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::Config, msg); };
    if (!(c.alpha >= 0.5 && c.alpha <= 1.0)) fail("alpha must lie in [0.5, 1], got " + std::to_string(c.alpha));
    if (!(c.beta >= 0.0) || !std::isfinite(c.beta)) fail("beta must be >= 0, got " + std::to_string(c.beta));
    if (!(c.gamma > 0.0 && c.gamma <= 1.0)) fail("gamma must lie in (0, 1], got " + std::to_string(c.gamma));
    if (c.n_mc < 1) fail("n_mc must be >= 1");
    if (c.m_candidates < 1) fail("m_candidates must be >= 1");
    if (!(c.epsilon_prior > 0.0 && c.epsilon_prior < 0.5)) {
        fail("epsilon_prior must lie in (0, 0.5), got " + std::to_string(c.epsilon_prior));
    }
}

double empirical_cdf(std::span<const double> sorted_scores, double x_hat) {
    if (sorted_scores.empty()) throw Error(ErrorKind::Sampler, "empirical CDF over an empty score set");
    auto below = std::upper_bound(sorted_scores.begin(), sorted_scores.end(), x_hat) - sorted_scores.begin();
    return static_cast<double>(below) / static_cast<double>(sorted_scores.size());
}

double prior_tn(double pop, double pop_max, double beta, double epsilon_prior) {
    if (!(pop_max > 0.0)) throw Error(ErrorKind::DegenerateDataset, "pop_max is 0; no item has a training interaction");
    if (pop < 0.0 || pop > pop_max) {
        throw Error(ErrorKind::Config, "popularity " + std::to_string(pop) + " outside [0, pop_max]");
    }
    double tau = std::pow(pop / pop_max, beta);
    return std::clamp(tau, epsilon_prior, 1.0 - epsilon_prior);
}

double posterior_tn(double cdf, double alpha, double tau_neg) {
    if (!(cdf >= 0.0 && cdf <= 1.0) || !(alpha >= 0.5 && alpha <= 1.0) || !(tau_neg > 0.0 && tau_neg < 1.0)) {
        std::ostringstream msg;
        msg << "posterior inputs out of domain (cdf=" << cdf << ", alpha=" << alpha << ", tau_neg=" << tau_neg << ")";
        throw Error(ErrorKind::Config, msg.str());
    }
    const double tau_pos = 1.0 - tau_neg;
    const double mix = (1.0 - 2.0 * alpha) * cdf;
    const double numerator = alpha * tau_neg + mix * tau_neg;
    const double denominator = alpha * tau_neg + (1.0 - alpha) * tau_pos + mix * (tau_neg - tau_pos);
    if (denominator <= 1e-12) {
        std::ostringstream msg;
        msg << "posterior denominator " << denominator << " (cdf=" << cdf << ", alpha=" << alpha
            << ", tau_neg=" << tau_neg << ")";
        throw Error(ErrorKind::Numerical, msg.str());
    }
    const double p = numerator / denominator;
    if (p < -1e-9 || p > 1.0 + 1e-9) {
        std::ostringstream msg;
        msg << "posterior " << p << " outside [0,1] (cdf=" << cdf << ", alpha=" << alpha << ", tau_neg=" << tau_neg
            << ")";
        throw Error(ErrorKind::Numerical, msg.str());
    }
    return std::clamp(p, 0.0, 1.0);
}

double delta_plus_from_scores(std::span<const double> sampled_positive_scores, std::size_t num_positives,
                              double x_hat) {
    if (sampled_positive_scores.empty()) throw Error(ErrorKind::Sampler, "no positive draws for delta_plus");
    double sum = 0.0;
    for (double s : sampled_positive_scores) sum += sigmoid(x_hat - s);  // 1 - sigma(s - x_hat)
    return static_cast<double>(num_positives) * sum / static_cast<double>(sampled_positive_scores.size());
}

double delta_minus_from_scores(std::span<const double> sampled_negative_scores, std::size_t num_uninteracted,
                               double x_hat, double gamma) {
    if (sampled_negative_scores.empty()) throw Error(ErrorKind::Sampler, "no negative draws for delta_minus");
    double sum = 0.0;
    for (double s : sampled_negative_scores) sum += sigmoid(s - x_hat);  // 1 - sigma(x_hat - s)
    return gamma * static_cast<double>(num_uninteracted) * sum / static_cast<double>(sampled_negative_scores.size());
}

double delta_plus(const FactorModel& model, const InteractionDataset& dataset, UserId user, double x_hat,
                  std::size_t n_mc, Rng& rng) {
    auto positives = dataset.train_items(user);
    if (positives.empty()) throw Error(ErrorKind::Sampler, "user " + std::to_string(user) + " has no positives");
    std::vector<double> scores(n_mc);
    for (auto& s : scores) s = model.score_fast(user, positives[uniform_index(rng, positives.size())]);
    return delta_plus_from_scores(scores, positives.size(), x_hat);
}

double delta_minus(const FactorModel& model, const InteractionDataset& dataset, UserId user, double x_hat,
                   std::size_t n_mc, double gamma, Rng& rng) {
    auto pool = uninteracted_pool(dataset, user);
    if (pool.empty()) throw Error(ErrorKind::Sampler, "user " + std::to_string(user) + " has no un-interacted items");
    std::vector<double> scores(n_mc);
    for (auto& s : scores) s = model.score_fast(user, pool.sample(rng));
    return delta_minus_from_scores(scores, pool.size(), x_hat, gamma);
}

void ScoreSnapshot::rebuild(const FactorModel& model, const InteractionDataset& dataset) {
    const std::size_t users = dataset.num_users();
    offsets_.assign(users + 1, 0);
    for (std::size_t u = 0; u < users; ++u) offsets_[u + 1] = offsets_[u] + dataset.num_uninteracted(static_cast<UserId>(u));
    scores_.resize(offsets_.back());
    for (std::size_t u = 0; u < users; ++u) {
        auto positives = dataset.train_items(static_cast<UserId>(u));
        std::size_t next_pos = 0;
        double* out = scores_.data() + offsets_[u];
        for (ItemId i = 0; i < dataset.num_items(); ++i) {
            if (next_pos < positives.size() && positives[next_pos] == i) {
                ++next_pos;
                continue;
            }
            *out++ = model.score_fast(static_cast<UserId>(u), i);
        }
        std::sort(scores_.data() + offsets_[u], out);
    }
}

std::vector<CandidateEvaluation> evaluate_candidates(const SelectionInputs& in, UserId user,
                                                     std::span<const ItemId> candidates, Rng& rng) {
    const auto& cfg = in.config;
    auto positives = in.dataset.train_items(user);
    auto pool = uninteracted_pool(in.dataset, user);
    if (pool.empty()) throw Error(ErrorKind::Sampler, "user " + std::to_string(user) + " has no un-interacted items");
    if (positives.empty()) throw Error(ErrorKind::Sampler, "user " + std::to_string(user) + " has no positives");

    std::vector<double> pos_scores(cfg.n_mc), neg_scores(cfg.n_mc);
    for (auto& s : pos_scores) s = in.model.score_fast(user, positives[uniform_index(rng, positives.size())]);
    for (auto& s : neg_scores) s = in.model.score_fast(user, pool.sample(rng));

    auto sorted_scores = in.snapshot.user_scores(user);
    const double pop_max = static_cast<double>(in.profile.pop_max);

    std::vector<CandidateEvaluation> out;
    out.reserve(candidates.size());
    for (ItemId item : candidates) {
        CandidateEvaluation e;
        e.item = item;
        e.score = in.model.score_fast(user, item);
        e.cdf = empirical_cdf(sorted_scores, e.score);
        e.tau_neg = prior_tn(static_cast<double>(in.profile.pop[item]), pop_max, cfg.beta, cfg.epsilon_prior);
        e.posterior_tn = posterior_tn(e.cdf, cfg.alpha, e.tau_neg);
        e.delta_plus = delta_plus_from_scores(pos_scores, positives.size(), e.score);
        e.delta_minus = delta_minus_from_scores(neg_scores, pool.size(), e.score, cfg.gamma);
        e.objective = e.delta_plus * e.posterior_tn - e.delta_minus * (1.0 - e.posterior_tn);
        out.push_back(e);
    }
    return out;
}

std::size_t argmax_objective(std::span<const CandidateEvaluation> evaluations) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < evaluations.size(); ++k) {
        if (evaluations[k].objective > evaluations[best].objective) best = k;
    }
    return best;
}

ItemId aucns_select(const SelectionInputs& in, UserId user, Rng& rng, std::vector<CandidateEvaluation>* trace) {
    auto pool = uninteracted_pool(in.dataset, user);
    if (pool.empty()) throw Error(ErrorKind::Sampler, "user " + std::to_string(user) + " has no un-interacted items");
    std::vector<ItemId> candidates(in.config.m_candidates);
    for (auto& c : candidates) c = pool.sample(rng);
    auto evaluations = evaluate_candidates(in, user, candidates, rng);
    ItemId chosen = evaluations[argmax_objective(evaluations)].item;
    if (trace) *trace = std::move(evaluations);
    return chosen;
}

}  // namespace aucns
