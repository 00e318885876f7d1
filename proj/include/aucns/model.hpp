#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "aucns/data.hpp"

namespace aucns {

// Row-major user and item embeddings; score(u,i) is their dot product.
class FactorModel {
public:
    FactorModel() = default;
    FactorModel(std::size_t num_users, std::size_t num_items, std::size_t dim);

    std::size_t num_users() const { return num_users_; }
    std::size_t num_items() const { return num_items_; }
    std::size_t dim() const { return dim_; }

    std::span<double> user(UserId u) { return {user_factors_.data() + u * dim_, dim_}; }
    std::span<const double> user(UserId u) const { return {user_factors_.data() + u * dim_, dim_}; }
    std::span<double> item(ItemId i) { return {item_factors_.data() + i * dim_, dim_}; }
    std::span<const double> item(ItemId i) const { return {item_factors_.data() + i * dim_, dim_}; }

    std::vector<double>& user_factors() { return user_factors_; }
    const std::vector<double>& user_factors() const { return user_factors_; }
    std::vector<double>& item_factors() { return item_factors_; }
    const std::vector<double>& item_factors() const { return item_factors_; }

    // Unchecked hot-path score.
    double score_fast(UserId u, ItemId i) const {
        const double* p = user_factors_.data() + u * dim_;
        const double* q = item_factors_.data() + i * dim_;
        double s = 0.0;
        for (std::size_t k = 0; k < dim_; ++k) s += p[k] * q[k];
        return s;
    }

    bool all_finite() const;

    bool operator==(const FactorModel&) const = default;

private:
    std::size_t num_users_ = 0;
    std::size_t num_items_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> user_factors_;
    std::vector<double> item_factors_;
};

// Entries i.i.d. normal with mean 0 and standard deviation 0.1/sqrt(dim).
FactorModel init_model(std::size_t num_users, std::size_t num_items, std::size_t dim, std::uint64_t seed);

// Bounds-checked dot product.
double score(const FactorModel& model, UserId u, ItemId i);

// Numerically stable log(1 + exp(x)).
double softplus(double x);
double sigmoid(double x);

// BPR loss -ln sigma(g(u,pos) - g(u,neg)) + l2_reg * (|p_u|^2 + |q_pos|^2 + |q_neg|^2).
double bpr_loss(const FactorModel& model, UserId u, ItemId pos, ItemId neg, double l2_reg);

// Gradient of bpr_loss with respect to p_u, q_pos and q_neg written into the spans
// (each of length dim). Returns the loss at the current parameters.
double bpr_gradient(const FactorModel& model, UserId u, ItemId pos, ItemId neg, double l2_reg,
                    std::span<double> grad_user, std::span<double> grad_pos, std::span<double> grad_neg);

// One SGD step on a single (u, pos, neg) triple; returns the pre-step loss.
// Throws ErrorKind::Training when the gradient is not finite.
double bpr_step(FactorModel& model, UserId u, ItemId pos, ItemId neg, double learning_rate, double l2_reg);

struct CheckpointHeader {
    std::uint64_t num_users = 0;
    std::uint64_t num_items = 0;
    std::uint64_t dim = 0;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
};

// Little-endian binary: 8-byte magic, u32 version, five u64 header fields,
// then user factors and item factors as float64, row-major.
void save_checkpoint(const FactorModel& model, const CheckpointHeader& header, const std::filesystem::path& path);
FactorModel load_checkpoint(const std::filesystem::path& path, CheckpointHeader* header = nullptr);

}  // namespace aucns
