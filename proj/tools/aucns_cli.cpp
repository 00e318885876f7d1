// Command-line front end: train, sweep, eval and probe.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include "aucns/aucns_core.hpp"
#include "aucns/error.hpp"
#include "aucns/experiment.hpp"
#include "aucns/probes.hpp"

using nlohmann::json;

namespace {

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> values;
    std::stringstream in(text);
    std::string field;
    while (std::getline(in, field, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(field, &used));
            if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw aucns::Error(aucns::ErrorKind::Config, "bad sweep value '" + field + "'");
        }
    }
    return values;
}

void print_reports(const std::vector<aucns::EvalReport>& reports) {
    for (const auto& r : reports) {
        std::printf("k=%zu  P=%.4f R=%.4f F1=%.4f NDCG=%.4f  OHR=%.4f OCR=%.4f UHR=%.4f UCR=%.4f  FPR=%.4f FNR=%.4f\n",
                    r.k, r.ranking.precision, r.ranking.recall, r.ranking.f1, r.ranking.ndcg, r.bias.ohr, r.bias.ocr,
                    r.bias.uhr, r.bias.ucr, r.rates.fpr, r.rates.fnr);
    }
    if (!reports.empty()) std::printf("MSE=%.4f  pAUC=%.4f\n", reports.front().mse, reports.front().pauc);
}

json probe_bias_variance(std::uint64_t seed, std::size_t datasets) {
    aucns::SyntheticRegressionWorld world;
    world.seed = seed;
    world.num_datasets = datasets;
    auto r = aucns::bias_variance_probe(world);
    return {{"probe", "bias-variance"}, {"mse", r.mse},           {"bias_sq", r.bias_sq},
            {"variance", r.variance},   {"noise", r.noise},       {"residual", r.residual},
            {"resampled", r.resampled}, {"pass", r.residual < 0.02}};
}

json probe_prop2() {
    std::size_t mismatches = aucns::prop2_exhaustive_mismatches(4);
    return {{"probe", "prop2"}, {"patterns", 256}, {"mismatches", mismatches}, {"pass", mismatches == 0}};
}

json probe_pauc_rule(std::uint64_t seed, std::size_t count) {
    auto s = aucns::run_oracle_suite(count, seed);
    const double n = static_cast<double>(s.instances);
    return {{"probe", "pauc-rule"},
            {"instances", s.instances},
            {"exact_agreement", s.exact_agreements / n},
            {"monte_carlo_agreement", s.monte_carlo_agreements / n},
            {"pass", s.exact_agreements == s.instances}};
}

json probe_gradient(std::uint64_t seed, std::size_t count) {
    aucns::Rng rng = aucns::named_stream(seed, "gradient-probe");
    double worst = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        auto inst = aucns::random_toy_instance(rng);
        for (std::size_t c = 0; c < inst.unlabeled.size(); ++c)
            worst = std::max(worst, aucns::surrogate_gradient_check(inst, c).max_relative_error);
    }
    return {{"probe", "gradient"}, {"instances", count}, {"max_relative_error", worst}, {"pass", worst < 1e-4}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Matrix-factorization recommender with partial-AUC negative sampling"};
    app.require_subcommand(1);

    std::string config_path, sampler_name, out_dir, param, values_text, model_path, probe_name;
    std::optional<std::uint64_t> seed;
    std::uint64_t probe_seed = 1;
    std::size_t probe_count = 200, probe_datasets = 10000;

    auto* train = app.add_subcommand("train", "Train, evaluate and write a report");
    train->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
    train->add_option("--seed", seed, "Override the config seed");
    train->add_option("--sampler", sampler_name, "Override the sampler (rns, pns, dns, aucns)");
    train->add_option("--out", out_dir, "Output directory");

    auto* sweep = app.add_subcommand("sweep", "One run per value of alpha, beta or gamma");
    sweep->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
    sweep->add_option("--param", param, "alpha, beta or gamma")->required()->check(CLI::IsMember({"alpha", "beta", "gamma"}));
    sweep->add_option("--values", values_text, "Comma-separated values")->required();
    sweep->add_option("--out", out_dir, "Output directory");

    auto* eval = app.add_subcommand("eval", "Evaluate a saved checkpoint");
    eval->add_option("--model", model_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
    eval->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);

    auto* probe = app.add_subcommand("probe", "Run a numerical probe and print a JSON verdict");
    probe->add_option("name", probe_name, "bias-variance, prop2, pauc-rule or gradient")
        ->required()
        ->check(CLI::IsMember({"bias-variance", "prop2", "pauc-rule", "gradient"}));
    probe->add_option("--seed", probe_seed, "Seed");
    probe->add_option("--count", probe_count, "Toy instances for pauc-rule and gradient");
    probe->add_option("--datasets", probe_datasets, "Synthetic datasets for bias-variance");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*probe) {
            json verdict;
            if (probe_name == "bias-variance") verdict = probe_bias_variance(probe_seed, probe_datasets);
            else if (probe_name == "prop2") verdict = probe_prop2();
            else if (probe_name == "pauc-rule") verdict = probe_pauc_rule(probe_seed, probe_count);
            else verdict = probe_gradient(probe_seed, probe_count);
            std::cout << verdict.dump(2) << '\n';
            return verdict["pass"].get<bool>() ? 0 : 1;
        }

        auto config = aucns::load_experiment_config(config_path);
        if (seed) {
            config.seed = *seed;
            config.train.seed = *seed;
        }
        if (!sampler_name.empty()) config.train.sampler.kind = aucns::parse_sampler_kind(sampler_name);
        if (!out_dir.empty()) config.output_dir = out_dir;
        aucns::validate(config);

        if (*train) {
            auto result = aucns::run_experiment(config);
            print_reports(result.reports);
            std::printf("sampled popular rate=%.4f  sampled false negative rate=%.4f\n",
                        result.telemetry.popular_rate(), result.telemetry.false_negative_rate());
            std::printf("wrote %s\n", config.output_dir.string().c_str());
        } else if (*sweep) {
            auto points = aucns::sweep(config, param, parse_values(values_text));
            for (const auto& p : points) {
                const auto& r = p.result.reports.front();
                std::printf("%s=%g  P@%zu=%.4f NDCG=%.4f OHR=%.4f popular=%.4f fn=%.4f\n", param.c_str(), p.value, r.k,
                            r.ranking.precision, r.ranking.ndcg, r.bias.ohr, p.result.telemetry.popular_rate(),
                            p.result.telemetry.false_negative_rate());
            }
        } else if (*eval) {
            print_reports(aucns::evaluate_checkpoint(config, model_path));
        }
    } catch (const aucns::Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
