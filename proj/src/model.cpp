#include "aucns/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <string>

#include "aucns/error.hpp"
#include "aucns/rng.hpp"

namespace aucns {

FactorModel::FactorModel(std::size_t num_users, std::size_t num_items, std::size_t dim)
    : num_users_(num_users),
      num_items_(num_items),
      dim_(dim),
      user_factors_(num_users * dim, 0.0),
      item_factors_(num_items * dim, 0.0) {}

bool FactorModel::all_finite() const {
    auto finite = [](double v) { return std::isfinite(v); };
    return std::all_of(user_factors_.begin(), user_factors_.end(), finite) &&
           std::all_of(item_factors_.begin(), item_factors_.end(), finite);
}

FactorModel init_model(std::size_t num_users, std::size_t num_items, std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw Error(ErrorKind::Config, "dim must be >= 1");
    FactorModel model(num_users, num_items, dim);
    Rng rng = named_stream(seed, "init");
    std::normal_distribution<double> normal(0.0, 0.1 / std::sqrt(static_cast<double>(dim)));
    for (double& v : model.user_factors()) v = normal(rng);
    for (double& v : model.item_factors()) v = normal(rng);
    return model;
}

double score(const FactorModel& model, UserId u, ItemId i) {
    if (u >= model.num_users() || i >= model.num_items()) {
        throw Error(ErrorKind::Index, "score(" + std::to_string(u) + ", " + std::to_string(i) + ") out of range (" +
                                          std::to_string(model.num_users()) + " users, " +
                                          std::to_string(model.num_items()) + " items)");
    }
    return model.score_fast(u, i);
}

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

namespace {

double squared_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

void check_triple(const FactorModel& model, UserId u, ItemId pos, ItemId neg) {
    if (u >= model.num_users() || pos >= model.num_items() || neg >= model.num_items()) {
        throw Error(ErrorKind::Index, "bpr triple (" + std::to_string(u) + ", " + std::to_string(pos) + ", " +
                                          std::to_string(neg) + ") out of range");
    }
}

}  // namespace

double bpr_loss(const FactorModel& model, UserId u, ItemId pos, ItemId neg, double l2_reg) {
    check_triple(model, u, pos, neg);
    double margin = model.score_fast(u, pos) - model.score_fast(u, neg);
    return softplus(-margin) +
           l2_reg * (squared_norm(model.user(u)) + squared_norm(model.item(pos)) + squared_norm(model.item(neg)));
}

double bpr_gradient(const FactorModel& model, UserId u, ItemId pos, ItemId neg, double l2_reg,
                    std::span<double> grad_user, std::span<double> grad_pos, std::span<double> grad_neg) {
    check_triple(model, u, pos, neg);
    auto p = model.user(u);
    auto qp = model.item(pos);
    auto qn = model.item(neg);
    const std::size_t d = model.dim();

    double margin = model.score_fast(u, pos) - model.score_fast(u, neg);
    double weight = sigmoid(-margin);  // -dL/dmargin
    double loss = softplus(-margin) + l2_reg * (squared_norm(p) + squared_norm(qp) + squared_norm(qn));

    for (std::size_t k = 0; k < d; ++k) {
        grad_user[k] = -weight * (qp[k] - qn[k]) + 2.0 * l2_reg * p[k];
        grad_pos[k] = -weight * p[k] + 2.0 * l2_reg * qp[k];
        grad_neg[k] = weight * p[k] + 2.0 * l2_reg * qn[k];
    }
    return loss;
}

double bpr_step(FactorModel& model, UserId u, ItemId pos, ItemId neg, double learning_rate, double l2_reg) {
    const std::size_t d = model.dim();
    std::vector<double> grads(3 * d);
    std::span<double> gu(grads.data(), d), gp(grads.data() + d, d), gn(grads.data() + 2 * d, d);
    double loss = bpr_gradient(model, u, pos, neg, l2_reg, gu, gp, gn);
    if (!std::isfinite(loss) || !std::all_of(grads.begin(), grads.end(), [](double g) { return std::isfinite(g); })) {
        throw Error(ErrorKind::Training, "non-finite gradient at (user " + std::to_string(u) + ", pos " +
                                             std::to_string(pos) + ", neg " + std::to_string(neg) + ")");
    }
    auto p = model.user(u);
    auto qp = model.item(pos);
    auto qn = model.item(neg);
    for (std::size_t k = 0; k < d; ++k) {
        p[k] -= learning_rate * gu[k];
        qp[k] -= learning_rate * gp[k];
        qn[k] -= learning_rate * gn[k];
    }
    return loss;
}

namespace {

constexpr std::array<char, 8> kMagic = {'A', 'U', 'C', 'N', 'S', 'M', 'F', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& what) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
        throw Error(ErrorKind::Io, "truncated checkpoint while reading " + what);
    }
    return value;
}

}  // namespace

void save_checkpoint(const FactorModel& model, const CheckpointHeader& header, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write checkpoint " + path.string());
    out.write(kMagic.data(), kMagic.size());
    write_pod(out, kCheckpointVersion);
    write_pod<std::uint64_t>(out, model.num_users());
    write_pod<std::uint64_t>(out, model.num_items());
    write_pod<std::uint64_t>(out, model.dim());
    write_pod(out, header.seed);
    write_pod(out, header.config_hash);
    out.write(reinterpret_cast<const char*>(model.user_factors().data()),
              static_cast<std::streamsize>(model.user_factors().size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(model.item_factors().data()),
              static_cast<std::streamsize>(model.item_factors().size() * sizeof(double)));
    if (!out) throw Error(ErrorKind::Io, "failed writing checkpoint " + path.string());
}

FactorModel load_checkpoint(const std::filesystem::path& path, CheckpointHeader* header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open checkpoint " + path.string());
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
        throw Error(ErrorKind::Io, path.string() + " is not a factor-model checkpoint");
    }
    auto version = read_pod<std::uint32_t>(in, "version");
    if (version != kCheckpointVersion) {
        throw Error(ErrorKind::Io, "unsupported checkpoint version " + std::to_string(version));
    }
    CheckpointHeader h;
    h.num_users = read_pod<std::uint64_t>(in, "num_users");
    h.num_items = read_pod<std::uint64_t>(in, "num_items");
    h.dim = read_pod<std::uint64_t>(in, "dim");
    h.seed = read_pod<std::uint64_t>(in, "seed");
    h.config_hash = read_pod<std::uint64_t>(in, "config_hash");
    if (h.dim == 0) throw Error(ErrorKind::Io, "checkpoint has dim 0");

    FactorModel model(h.num_users, h.num_items, h.dim);
    auto read_block = [&](std::vector<double>& block) {
        if (!in.read(reinterpret_cast<char*>(block.data()), static_cast<std::streamsize>(block.size() * sizeof(double)))) {
            throw Error(ErrorKind::Io, "truncated checkpoint factors");
        }
    };
    read_block(model.user_factors());
    read_block(model.item_factors());
    if (header) *header = h;
    return model;
}

}  // namespace aucns
