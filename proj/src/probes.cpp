#include "aucns/probes.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "aucns/aucns_core.hpp"
#include "aucns/error.hpp"
#include "aucns/model.hpp"

namespace aucns {

double evaluate_polynomial(std::span<const double> coefficients, double x) {
    double y = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) y = y * x + *it;
    return y;
}

BiasVarianceResult bias_variance_probe(const SyntheticRegressionWorld& world) {
    if (world.num_datasets < 100) throw Error(ErrorKind::Config, "bias_variance_probe needs num_datasets >= 100");
    if (world.dataset_size < 10) throw Error(ErrorKind::Config, "bias_variance_probe needs dataset_size >= 10");
    if (world.grid_points < 2) throw Error(ErrorKind::Config, "bias_variance_probe needs grid_points >= 2");
    if (world.true_coefficients.empty()) throw Error(ErrorKind::Config, "true_coefficients is empty");

    const std::size_t m = world.num_datasets, n = world.dataset_size, G = world.grid_points;
    const std::size_t p = world.degree + 1;
    Rng rng = named_stream(world.seed, "bias-variance");
    std::uniform_real_distribution<double> input(-1.0, 1.0);
    std::normal_distribution<double> noise(0.0, world.noise_sigma);

    std::vector<double> grid(G), truth(G);
    for (std::size_t g = 0; g < G; ++g) {
        grid[g] = -1.0 + 2.0 * static_cast<double>(g) / static_cast<double>(G - 1);
        truth[g] = evaluate_polynomial(world.true_coefficients, grid[g]);
    }
    Eigen::MatrixXd grid_design(G, p);
    for (std::size_t g = 0; g < G; ++g)
        for (std::size_t k = 0; k < p; ++k) grid_design(g, k) = std::pow(grid[g], static_cast<double>(k));

    BiasVarianceResult r;
    std::vector<double> sum_pred(G, 0.0), sum_pred_sq(G, 0.0);
    double sq_error = 0.0, noise_sq = 0.0;
    Eigen::MatrixXd design(n, p);
    Eigen::VectorXd target(n);
    for (std::size_t d = 0; d < m; ++d) {
        Eigen::VectorXd coef;
        for (;;) {
            for (std::size_t s = 0; s < n; ++s) {
                double x = input(rng);
                for (std::size_t k = 0; k < p; ++k) design(s, k) = std::pow(x, static_cast<double>(k));
                target(s) = evaluate_polynomial(world.true_coefficients, x) + noise(rng);
            }
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
            if (qr.rank() == static_cast<Eigen::Index>(p)) {
                coef = qr.solve(target);
                break;
            }
            ++r.resampled;
        }
        Eigen::VectorXd pred = grid_design * coef;
        for (std::size_t g = 0; g < G; ++g) {
            sum_pred[g] += pred(g);
            sum_pred_sq[g] += pred(g) * pred(g);
            // A fresh label at each grid point for this dataset.
            double eps = noise(rng);
            double diff = pred(g) - (truth[g] + eps);
            sq_error += diff * diff;
            noise_sq += eps * eps;
        }
    }
    const double md = static_cast<double>(m);
    for (std::size_t g = 0; g < G; ++g) {
        double mean = sum_pred[g] / md;
        r.bias_sq += (mean - truth[g]) * (mean - truth[g]);
        r.variance += std::max(0.0, sum_pred_sq[g] / md - mean * mean);
    }
    const double cells = md * static_cast<double>(G);
    r.bias_sq /= static_cast<double>(G);
    r.variance /= static_cast<double>(G);
    r.mse = sq_error / cells;
    r.noise = noise_sq / cells;
    r.residual = r.mse > 0.0 ? std::abs(r.mse - (r.bias_sq + r.variance + r.noise)) / r.mse : 0.0;
    return r;
}

Prop2Sides prop2_identity_check(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.empty() || predictions.size() != labels.size()) {
        throw Error(ErrorKind::Config, "prop2_identity_check needs equal non-empty lengths");
    }
    double squared = 0.0;
    std::size_t fp = 0, fn = 0;
    for (std::size_t k = 0; k < predictions.size(); ++k) {
        double diff = predictions[k] - labels[k];
        squared += diff * diff;
        if (predictions[k] > labels[k]) ++fp;
        if (predictions[k] < labels[k]) ++fn;
    }
    const double n = static_cast<double>(predictions.size());
    return {squared / n, static_cast<double>(fp + fn) / n};
}

std::size_t prop2_exhaustive_mismatches(std::size_t length) {
    std::size_t mismatches = 0;
    const std::size_t patterns = std::size_t{1} << (2 * length);
    std::vector<int> g(length), y(length);
    for (std::size_t bits = 0; bits < patterns; ++bits) {
        for (std::size_t k = 0; k < length; ++k) {
            g[k] = static_cast<int>((bits >> k) & 1U);
            y[k] = static_cast<int>((bits >> (k + length)) & 1U);
        }
        auto sides = prop2_identity_check(g, y);
        if (sides.lhs != sides.rhs) ++mismatches;
    }
    return mismatches;
}

std::size_t top_set_size(const ToyRankingInstance& instance) {
    const std::size_t others = instance.unlabeled.empty() ? 0 : instance.unlabeled.size() - 1;
    if (others == 0) return 0;
    auto size = static_cast<std::size_t>(std::floor(instance.gamma * static_cast<double>(instance.unlabeled.size())));
    return std::clamp<std::size_t>(size, 1, others);
}

std::vector<std::size_t> top_negatives(const ToyRankingInstance& instance, std::size_t candidate) {
    std::vector<std::size_t> others;
    for (std::size_t k = 0; k < instance.unlabeled.size(); ++k)
        if (k != candidate) others.push_back(k);
    std::stable_sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
        return instance.unlabeled[a].score > instance.unlabeled[b].score;
    });
    others.resize(top_set_size(instance));
    return others;
}

double candidate_posterior(const ToyRankingInstance& instance, std::size_t candidate) {
    std::vector<double> scores;
    double pop_max = 0.0;
    for (const auto& item : instance.unlabeled) {
        scores.push_back(item.score);
        pop_max = std::max(pop_max, item.popularity);
    }
    std::sort(scores.begin(), scores.end());
    const auto& x = instance.unlabeled.at(candidate);
    double cdf = empirical_cdf(scores, x.score);
    double tau = prior_tn(x.popularity, pop_max, instance.beta, instance.epsilon_prior);
    return posterior_tn(cdf, instance.alpha, tau);
}

std::size_t argmax_with_tolerance(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorKind::Config, "argmax of an empty list");
    double best = *std::max_element(values.begin(), values.end());
    double tol = 1e-9 * std::max(1.0, std::abs(best));
    for (std::size_t k = 0; k < values.size(); ++k)
        if (values[k] >= best - tol) return k;
    return 0;
}

namespace {

// d/dm ln sigma(m) = sigma(-m).
double log_sigmoid_slope(double margin) { return sigmoid(-margin); }

double normalizer(const ToyRankingInstance& instance) {
    return static_cast<double>(instance.positive_scores.size()) *
           static_cast<double>(std::max<std::size_t>(1, top_set_size(instance)));
}

}  // namespace

double surrogate_pauc(const ToyRankingInstance& instance, std::size_t candidate, Branch branch,
                      double candidate_score) {
    std::vector<double> positives = instance.positive_scores;
    std::vector<double> negatives;
    for (std::size_t k : top_negatives(instance, candidate)) negatives.push_back(instance.unlabeled[k].score);
    if (branch == Branch::TrueNegative) negatives.push_back(candidate_score);
    else positives.push_back(candidate_score);

    double total = 0.0;
    for (double sp : positives)
        for (double sn : negatives) total -= softplus(-(sp - sn));  // ln sigma(sp - sn)
    return total / normalizer(instance);
}

double surrogate_derivative(const ToyRankingInstance& instance, std::size_t candidate, Branch branch) {
    const double x = instance.unlabeled.at(candidate).score;
    double sum = 0.0;
    if (branch == Branch::TrueNegative) {
        for (double sp : instance.positive_scores) sum -= 1.0 - sigmoid(sp - x);
    } else {
        for (std::size_t k : top_negatives(instance, candidate)) sum += 1.0 - sigmoid(x - instance.unlabeled[k].score);
    }
    return sum / normalizer(instance);
}

PaucRuleVerdict pauc_rule_oracle(const ToyRankingInstance& instance) {
    if (instance.unlabeled.empty() || instance.positive_scores.empty()) {
        throw Error(ErrorKind::Config, "toy instance needs positives and unlabeled items");
    }
    PaucRuleVerdict v;
    const double z = normalizer(instance);
    for (std::size_t c = 0; c < instance.unlabeled.size(); ++c) {
        const double x = instance.unlabeled[c].score;
        const double p_tn = candidate_posterior(instance, c);

        // Rule path: exact Delta sums through the library estimators.
        auto top = top_negatives(instance, c);
        std::vector<double> top_scores;
        for (std::size_t k : top) top_scores.push_back(instance.unlabeled[k].score);
        double dplus = delta_plus_from_scores(instance.positive_scores, instance.positive_scores.size(), x);
        double dminus = top_scores.empty() ? 0.0 : delta_minus_from_scores(top_scores, top_scores.size(), x, 1.0);
        v.rule_objectives.push_back(dplus * p_tn - dminus * (1.0 - p_tn));

        // Oracle path: pair-by-pair derivative of the surrogate, dg = -1.
        double tn_grad = 0.0;
        for (double sp : instance.positive_scores) tn_grad -= log_sigmoid_slope(sp - x);
        double fn_grad = 0.0;
        for (double sn : top_scores) fn_grad += log_sigmoid_slope(x - sn);
        double expected = p_tn * tn_grad / z + (1.0 - p_tn) * fn_grad / z;
        v.oracle_objectives.push_back(-expected * z);
    }
    v.rule_choice = argmax_with_tolerance(v.rule_objectives);
    v.oracle_choice = argmax_with_tolerance(v.oracle_objectives);
    v.agree = v.rule_choice == v.oracle_choice;
    return v;
}

std::size_t pauc_rule_monte_carlo(const ToyRankingInstance& instance, std::size_t n_mc, Rng& rng) {
    if (n_mc == 0) throw Error(ErrorKind::Config, "n_mc must be >= 1");
    const std::size_t n_top = top_set_size(instance);
    std::vector<double> objectives;
    std::vector<double> pos(n_mc), neg(n_mc);
    // One set of draw positions shared by all candidates.
    std::vector<std::size_t> pos_draw(n_mc), neg_draw(n_mc);
    for (auto& k : pos_draw) k = uniform_index(rng, instance.positive_scores.size());
    if (n_top > 0)
        for (auto& k : neg_draw) k = uniform_index(rng, n_top);
    for (std::size_t c = 0; c < instance.unlabeled.size(); ++c) {
        const double x = instance.unlabeled[c].score;
        const double p_tn = candidate_posterior(instance, c);
        auto top = top_negatives(instance, c);
        for (std::size_t j = 0; j < n_mc; ++j) pos[j] = instance.positive_scores[pos_draw[j]];
        double dplus = delta_plus_from_scores(pos, instance.positive_scores.size(), x);
        double dminus = 0.0;
        if (n_top > 0) {
            for (std::size_t j = 0; j < n_mc; ++j) neg[j] = instance.unlabeled[top[neg_draw[j]]].score;
            dminus = delta_minus_from_scores(neg, n_top, x, 1.0);
        }
        objectives.push_back(dplus * p_tn - dminus * (1.0 - p_tn));
    }
    return argmax_with_tolerance(objectives);
}

GradientCheck surrogate_gradient_check(const ToyRankingInstance& instance, std::size_t candidate, double h) {
    const double x = instance.unlabeled.at(candidate).score;
    GradientCheck r;
    auto numeric = [&](Branch b) {
        return (surrogate_pauc(instance, candidate, b, x + h) - surrogate_pauc(instance, candidate, b, x - h)) /
               (2.0 * h);
    };
    auto relative = [](double a, double n) {
        double scale = std::max({std::abs(a), std::abs(n), 1e-8});
        return std::abs(a - n) / scale;
    };
    r.tn_analytic = surrogate_derivative(instance, candidate, Branch::TrueNegative);
    r.tn_numeric = numeric(Branch::TrueNegative);
    r.fn_analytic = surrogate_derivative(instance, candidate, Branch::FalseNegative);
    r.fn_numeric = numeric(Branch::FalseNegative);
    r.max_relative_error = std::max(relative(r.tn_analytic, r.tn_numeric), relative(r.fn_analytic, r.fn_numeric));
    return r;
}

ToyRankingInstance random_toy_instance(Rng& rng, std::size_t max_items) {
    if (max_items < 3) throw Error(ErrorKind::Config, "toy instances need room for at least 3 items");
    ToyRankingInstance inst;
    std::normal_distribution<double> score(0.0, 1.0);
    std::uniform_real_distribution<double> alpha(0.55, 0.95);
    static constexpr double kGammas[] = {0.25, 0.5, 1.0};
    static constexpr double kBetas[] = {0.01, 0.1, 1.0};

    const std::size_t positives = 1 + uniform_index(rng, std::min<std::size_t>(5, max_items - 2));
    const std::size_t unlabeled = 2 + uniform_index(rng, max_items - positives - 1);
    for (std::size_t k = 0; k < positives; ++k) inst.positive_scores.push_back(score(rng) + 1.0);
    for (std::size_t k = 0; k < unlabeled; ++k) {
        UnlabeledItem item;
        item.score = score(rng);
        item.label = uniform_real(rng) < 0.2 ? TrueLabel::FalseNegative : TrueLabel::TrueNegative;
        item.popularity = static_cast<double>(1 + uniform_index(rng, 100));
        inst.unlabeled.push_back(item);
    }
    inst.alpha = alpha(rng);
    inst.gamma = kGammas[uniform_index(rng, 3)];
    inst.beta = kBetas[uniform_index(rng, 3)];
    return inst;
}

OracleSuiteSummary run_oracle_suite(std::size_t count, std::uint64_t seed, std::size_t n_mc) {
    Rng rng = named_stream(seed, "oracle-instances");
    Rng mc_rng = named_stream(seed, "oracle-mc");
    OracleSuiteSummary s;
    for (std::size_t k = 0; k < count; ++k) {
        auto inst = random_toy_instance(rng);
        auto verdict = pauc_rule_oracle(inst);
        ++s.instances;
        if (verdict.agree) ++s.exact_agreements;
        if (pauc_rule_monte_carlo(inst, n_mc, mc_rng) == verdict.oracle_choice) ++s.monte_carlo_agreements;
        for (std::size_t c = 0; c < inst.unlabeled.size(); ++c) {
            s.max_gradient_error = std::max(s.max_gradient_error, surrogate_gradient_check(inst, c).max_relative_error);
        }
    }
    return s;
}

}  // namespace aucns
