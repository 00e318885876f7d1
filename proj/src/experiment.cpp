#include "aucns/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "aucns/error.hpp"
#include "aucns/rng.hpp"

namespace aucns {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw Error(ErrorKind::Config, where + " must be a JSON object");
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        if (!ok.count(key)) throw Error(ErrorKind::Config, "unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, where + "." + key + ": " + e.what());
    }
}

}  // namespace

void validate(const ExperimentConfig& c) {
    if (c.dataset_path.empty()) throw Error(ErrorKind::Config, "dataset.path is required");
    if (!(c.split_ratio > 0.0 && c.split_ratio < 1.0)) {
        throw Error(ErrorKind::Config, "split_ratio must lie in (0,1), got " + std::to_string(c.split_ratio));
    }
    if (!(c.hot_quantile > 0.0 && c.hot_quantile < 1.0)) {
        throw Error(ErrorKind::Config, "hot_quantile must lie in (0,1), got " + std::to_string(c.hot_quantile));
    }
    if (c.eval_ks.empty()) throw Error(ErrorKind::Config, "eval.k must list at least one cutoff");
    for (auto k : c.eval_ks)
        if (k == 0) throw Error(ErrorKind::Config, "eval.k entries must be >= 1");
    if (!(c.pauc_gamma > 0.0 && c.pauc_gamma <= 1.0)) throw Error(ErrorKind::Config, "eval.pauc_gamma must lie in (0,1]");
    validate(c.train);
}

ExperimentConfig parse_experiment_config(const json& j, const fs::path& base_dir) {
    require_object(j, "config");
    reject_unknown_keys(j, {"dataset", "split_ratio", "hot_quantile", "train", "sampler", "eval", "seed", "output_dir"},
                        "config");
    ExperimentConfig c;

    if (!j.contains("dataset")) throw Error(ErrorKind::Config, "config.dataset is required");
    const auto& ds = j.at("dataset");
    require_object(ds, "dataset");
    reject_unknown_keys(ds, {"path", "format"}, "dataset");
    std::string path, format = "ml100k";
    read_field(ds, "path", path, "dataset");
    read_field(ds, "format", format, "dataset");
    c.dataset_path = path;
    if (c.dataset_path.is_relative() && !base_dir.empty()) c.dataset_path = base_dir / c.dataset_path;
    c.format = parse_rating_format(format);

    read_field(j, "split_ratio", c.split_ratio, "config");
    read_field(j, "hot_quantile", c.hot_quantile, "config");
    read_field(j, "seed", c.seed, "config");
    std::string out;
    read_field(j, "output_dir", out, "config");
    if (!out.empty()) c.output_dir = out;

    if (j.contains("train")) {
        const auto& t = j.at("train");
        require_object(t, "train");
        reject_unknown_keys(t, {"dim", "learning_rate", "lr_decay", "l2_reg", "batch_size", "epochs"}, "train");
        read_field(t, "dim", c.train.dim, "train");
        read_field(t, "learning_rate", c.train.learning_rate, "train");
        read_field(t, "l2_reg", c.train.l2_reg, "train");
        read_field(t, "batch_size", c.train.batch_size, "train");
        read_field(t, "epochs", c.train.epochs, "train");
        if (t.contains("lr_decay")) {
            const auto& d = t.at("lr_decay");
            require_object(d, "train.lr_decay");
            reject_unknown_keys(d, {"factor", "epochs"}, "train.lr_decay");
            read_field(d, "factor", c.train.lr_decay_factor, "train.lr_decay");
            read_field(d, "epochs", c.train.lr_decay_epochs, "train.lr_decay");
        }
    }

    if (j.contains("sampler")) {
        const auto& s = j.at("sampler");
        require_object(s, "sampler");
        reject_unknown_keys(s,
                            {"name", "alpha", "beta", "gamma", "n_mc", "m_candidates", "epsilon_prior",
                             "dns_candidates", "dns_mode", "pns_exponent"},
                            "sampler");
        auto& spec = c.train.sampler;
        std::string name = std::string(to_string(spec.kind));
        std::string dns_mode = std::string(to_string(spec.dns_mode));
        read_field(s, "name", name, "sampler");
        read_field(s, "alpha", spec.aucns.alpha, "sampler");
        read_field(s, "beta", spec.aucns.beta, "sampler");
        read_field(s, "gamma", spec.aucns.gamma, "sampler");
        read_field(s, "n_mc", spec.aucns.n_mc, "sampler");
        read_field(s, "m_candidates", spec.aucns.m_candidates, "sampler");
        read_field(s, "epsilon_prior", spec.aucns.epsilon_prior, "sampler");
        read_field(s, "dns_candidates", spec.dns_candidates, "sampler");
        read_field(s, "dns_mode", dns_mode, "sampler");
        read_field(s, "pns_exponent", spec.pns_exponent, "sampler");
        spec.kind = parse_sampler_kind(name);
        spec.dns_mode = parse_dns_mode(dns_mode);
    }

    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        require_object(e, "eval");
        reject_unknown_keys(e, {"k", "pauc_gamma"}, "eval");
        read_field(e, "k", c.eval_ks, "eval");
        read_field(e, "pauc_gamma", c.pauc_gamma, "eval");
    }

    c.train.seed = c.seed;
    validate(c);
    return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, path.string() + ": " + e.what());
    }
    return parse_experiment_config(j, path.parent_path());
}

json to_json(const ExperimentConfig& c) {
    const auto& s = c.train.sampler;
    return {
        {"dataset", {{"path", c.dataset_path.generic_string()}, {"format", std::string(to_string(c.format))}}},
        {"split_ratio", c.split_ratio},
        {"hot_quantile", c.hot_quantile},
        {"train",
         {{"dim", c.train.dim},
          {"learning_rate", c.train.learning_rate},
          {"lr_decay", {{"factor", c.train.lr_decay_factor}, {"epochs", c.train.lr_decay_epochs}}},
          {"l2_reg", c.train.l2_reg},
          {"batch_size", c.train.batch_size},
          {"epochs", c.train.epochs}}},
        {"sampler",
         {{"name", std::string(to_string(s.kind))},
          {"alpha", s.aucns.alpha},
          {"beta", s.aucns.beta},
          {"gamma", s.aucns.gamma},
          {"n_mc", s.aucns.n_mc},
          {"m_candidates", s.aucns.m_candidates},
          {"epsilon_prior", s.aucns.epsilon_prior},
          {"dns_candidates", s.dns_candidates},
          {"dns_mode", std::string(to_string(s.dns_mode))},
          {"pns_exponent", s.pns_exponent}}},
        {"eval", {{"k", c.eval_ks}, {"pauc_gamma", c.pauc_gamma}}},
        {"seed", c.seed},
    };
}

std::uint64_t config_hash(const ExperimentConfig& config) { return fnv1a64(to_json(config).dump()); }

std::string git_blob_sha1(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string content = buffer.str();
    const std::string header = "blob " + std::to_string(content.size()) + '\0';

    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
    EVP_DigestUpdate(ctx, header.data(), header.size());
    EVP_DigestUpdate(ctx, content.data(), content.size());
    EVP_DigestFinal_ex(ctx, digest, &length);
    EVP_MD_CTX_free(ctx);

    std::ostringstream hex;
    for (unsigned int k = 0; k < length; ++k) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[k]);
    return hex.str();
}

PreparedData prepare_data(const ExperimentConfig& config) {
    PreparedData data;
    data.table = load_ratings(config.dataset_path, config.format);
    data.dataset = to_implicit_and_split(data.table, config.split_ratio, config.seed);
    data.profile = popularity_profile(data.dataset, config.hot_quantile);
    return data;
}

namespace {

std::string hex64(std::uint64_t v) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << v;
    return out.str();
}

// Writes files and removes all of them if any write fails.
class OutputWriter {
public:
    explicit OutputWriter(fs::path dir) : dir_(std::move(dir)) {}

    void text(const std::string& name, const std::string& content) {
        fs::path p = dir_ / name;
        written_.push_back(p);
        std::ofstream out(p, std::ios::binary);
        out << content;
        if (!out) throw Error(ErrorKind::Io, "failed writing " + p.string());
    }

    void track(const fs::path& p) { written_.push_back(p); }

    void rollback() noexcept {
        std::error_code ec;
        for (const auto& p : written_) fs::remove(p, ec);
    }

    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
};

std::string training_log_csv(const std::vector<EpochLog>& log) {
    std::ostringstream out;
    out.precision(17);
    out << "epoch,mean_loss,learning_rate,sampled_popular_rate,sampled_false_negative_rate\n";
    for (const auto& e : log) {
        out << e.epoch << ',' << e.mean_loss << ',' << e.learning_rate << ',' << e.sampled_popular_rate << ','
            << e.sampled_false_negative_rate << '\n';
    }
    return out.str();
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    validate(config);

    PreparedData data;
    TrainResult trained;
    ExperimentResult result;
    try {
        data = prepare_data(config);
    } catch (const Error& e) {
        throw Error(e.kind(), std::string("[data] ") + e.what());
    }
    try {
        trained = train(data.dataset, data.profile, config.train);
    } catch (const Error& e) {
        throw Error(e.kind(), std::string("[train] ") + e.what());
    }
    try {
        result.reports = evaluate(trained.model, data.dataset, data.profile,
                                  EvalOptions{config.eval_ks, config.pauc_gamma, config.seed});
    } catch (const Error& e) {
        throw Error(e.kind(), std::string("[eval] ") + e.what());
    }
    result.log = trained.log;
    result.telemetry = trained.telemetry;

    const std::uint64_t hash = config_hash(config);
    json reports = json::array();
    for (const auto& r : result.reports) reports.push_back(to_json(r));
    result.report_json = {
        {"schema_version", kReportSchemaVersion},
        {"config_hash", hex64(hash)},
        {"config", to_json(config)},
        {"dataset",
         {{"users", data.dataset.num_users()},
          {"items", data.dataset.num_items()},
          {"train_interactions", data.dataset.num_train()},
          {"test_interactions", data.dataset.num_test()},
          {"hot_items", data.profile.hot_set.size()},
          {"hot_threshold", data.profile.hot_threshold},
          {"excluded_users", data.dataset.excluded_users},
          {"dropped_test_pairs", data.dataset.dropped_test_pairs}}},
        {"telemetry",
         {{"sampled_negatives", result.telemetry.samples},
          {"sampled_popular_item_rate", result.telemetry.popular_rate()},
          {"sampled_false_negative_rate", result.telemetry.false_negative_rate()}}},
        {"final_train_loss", result.log.empty() ? 0.0 : result.log.back().mean_loss},
        {"reports", reports},
    };
    result.manifest_json = {
        {"schema_version", kReportSchemaVersion},
        {"config_hash", hex64(hash)},
        {"seed", config.seed},
        {"input", {{"path", config.dataset_path.generic_string()}, {"git_blob_sha1", git_blob_sha1(config.dataset_path)}}},
        {"outputs", {"report.json", "training_log.csv", "manifest.json", "model.bin"}},
    };
    for (auto k : config.eval_ks) result.manifest_json["outputs"].push_back("metrics_k" + std::to_string(k) + ".csv");

    fs::create_directories(config.output_dir);
    OutputWriter writer(config.output_dir);
    try {
        writer.text("report.json", result.report_json.dump(2) + "\n");
        for (const auto& r : result.reports) {
            writer.text("metrics_k" + std::to_string(r.k) + ".csv", csv_header() + "\n" + to_csv_row(r) + "\n");
        }
        writer.text("training_log.csv", training_log_csv(result.log));
        writer.track(config.output_dir / "model.bin");
        save_checkpoint(trained.model,
                        CheckpointHeader{trained.model.num_users(), trained.model.num_items(), trained.model.dim(),
                                         config.seed, hash},
                        config.output_dir / "model.bin");
        writer.text("manifest.json", result.manifest_json.dump(2) + "\n");
    } catch (...) {
        writer.rollback();
        throw;
    }
    return result;
}

std::vector<EvalReport> evaluate_checkpoint(const ExperimentConfig& config, const fs::path& checkpoint) {
    validate(config);
    PreparedData data = prepare_data(config);
    CheckpointHeader header;
    FactorModel model = load_checkpoint(checkpoint, &header);
    if (model.num_users() != data.dataset.num_users() || model.num_items() != data.dataset.num_items()) {
        throw Error(ErrorKind::Config, "checkpoint shape " + std::to_string(model.num_users()) + "x" +
                                           std::to_string(model.num_items()) + " does not match dataset " +
                                           std::to_string(data.dataset.num_users()) + "x" +
                                           std::to_string(data.dataset.num_items()));
    }
    return evaluate(model, data.dataset, data.profile, EvalOptions{config.eval_ks, config.pauc_gamma, config.seed});
}

ExperimentConfig with_parameter(ExperimentConfig config, const std::string& parameter, double value) {
    auto& s = config.train.sampler.aucns;
    if (parameter == "alpha") s.alpha = value;
    else if (parameter == "beta") s.beta = value;
    else if (parameter == "gamma") s.gamma = value;
    else throw Error(ErrorKind::Config, "sweep parameter must be alpha, beta or gamma, got '" + parameter + "'");
    return config;
}

std::vector<SweepPoint> sweep(const ExperimentConfig& config, const std::string& parameter,
                              const std::vector<double>& values) {
    if (values.empty()) throw Error(ErrorKind::Config, "sweep needs at least one value");
    // Validate every point before spending time on training.
    for (double v : values) validate(with_parameter(config, parameter, v));

    std::vector<SweepPoint> points;
    std::ostringstream csv;
    csv.precision(17);
    csv << parameter << ",k,precision,recall,ndcg,ohr,sampled_popular_item_rate,sampled_false_negative_rate\n";
    for (double v : values) {
        ExperimentConfig point = with_parameter(config, parameter, v);
        std::ostringstream name;
        name << parameter << '_' << v;
        point.output_dir = config.output_dir / name.str();
        SweepPoint sp{v, run_experiment(point)};
        const EvalReport& r = sp.result.reports.front();
        csv << v << ',' << r.k << ',' << r.ranking.precision << ',' << r.ranking.recall << ',' << r.ranking.ndcg << ','
            << r.bias.ohr << ',' << sp.result.telemetry.popular_rate() << ','
            << sp.result.telemetry.false_negative_rate() << '\n';
        points.push_back(std::move(sp));
    }
    fs::create_directories(config.output_dir);
    std::ofstream out(config.output_dir / ("sweep_" + parameter + ".csv"));
    out << csv.str();
    if (!out) throw Error(ErrorKind::Io, "failed writing sweep table");
    return points;
}

}  // namespace aucns
