#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aucns/rng.hpp"

namespace aucns {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;

enum class RatingFormat { Ml100k, Ml1m, YahooR3 };

RatingFormat parse_rating_format(std::string_view name);
std::string_view to_string(RatingFormat format);

struct RatingRecord {
    UserId user = 0;
    ItemId item = 0;
    double rating = 0.0;
    std::int64_t timestamp = 0;  // 0 when the format has none
};

// Records with dense indices plus the maps back to the raw ids of the file.
struct RatingTable {
    std::vector<RatingRecord> records;
    std::vector<std::int64_t> user_ids;  // dense index -> raw id, ascending
    std::vector<std::int64_t> item_ids;
};

RatingTable load_ratings(const std::filesystem::path& path, RatingFormat format);
// Same parser over an in-memory buffer; used by the file loader and tests.
RatingTable parse_ratings(std::string_view text, RatingFormat format);

// Implicit-feedback train/test split. Positive sets are sorted and disjoint per user.
class InteractionDataset {
public:
    InteractionDataset() = default;
    InteractionDataset(std::size_t num_users, std::size_t num_items,
                       std::vector<std::vector<ItemId>> train_pos,
                       std::vector<std::vector<ItemId>> test_pos);

    std::size_t num_users() const { return num_users_; }
    std::size_t num_items() const { return num_items_; }

    std::span<const ItemId> train_items(UserId u) const { return train_pos_[u]; }
    std::span<const ItemId> test_items(UserId u) const { return test_pos_[u]; }
    const std::vector<std::vector<ItemId>>& train_pos() const { return train_pos_; }
    const std::vector<std::vector<ItemId>>& test_pos() const { return test_pos_; }

    bool is_train_positive(UserId u, ItemId i) const;
    bool is_test_positive(UserId u, ItemId i) const;

    std::size_t num_train() const { return num_train_; }
    std::size_t num_test() const { return num_test_; }
    // |I_u^-|: items the user has no training interaction with.
    std::size_t num_uninteracted(UserId u) const { return num_items_ - train_pos_[u].size(); }

    // Raw ids for reporting; empty when the dataset was built from indices.
    std::vector<std::int64_t> user_ids;
    std::vector<std::int64_t> item_ids;
    std::size_t excluded_users = 0;       // users without any interaction
    std::size_t dropped_test_pairs = 0;   // test pairs whose item never occurs in training

private:
    std::size_t num_users_ = 0;
    std::size_t num_items_ = 0;
    std::vector<std::vector<ItemId>> train_pos_;
    std::vector<std::vector<ItemId>> test_pos_;
    std::size_t num_train_ = 0;
    std::size_t num_test_ = 0;
};

InteractionDataset to_implicit_and_split(const RatingTable& table, double split_ratio, std::uint64_t seed);

// CSV "user,item,split" with raw ids; split is train, test or dropped.
void export_split_csv(const InteractionDataset& dataset, const std::filesystem::path& path);
InteractionDataset import_split_csv(const std::filesystem::path& path);

// View over I_u^-, the complement of a user's training positives.
class UninteractedPool {
public:
    UninteractedPool(std::span<const ItemId> sorted_positives, std::size_t num_items)
        : positives_(sorted_positives), num_items_(num_items) {}

    std::size_t size() const { return num_items_ - positives_.size(); }
    bool empty() const { return size() == 0; }
    bool contains(ItemId item) const;
    // The r-th un-interacted item in ascending index order, r < size().
    ItemId nth(std::size_t r) const;
    ItemId sample(Rng& rng) const { return nth(uniform_index(rng, size())); }

    std::span<const ItemId> positives() const { return positives_; }
    std::size_t num_items() const { return num_items_; }

private:
    std::span<const ItemId> positives_;
    std::size_t num_items_;
};

inline UninteractedPool uninteracted_pool(const InteractionDataset& dataset, UserId u) {
    return UninteractedPool(dataset.train_items(u), dataset.num_items());
}

struct PopularityProfile {
    std::vector<std::int64_t> pop;  // training interactions per item
    std::int64_t pop_max = 0;
    std::vector<ItemId> hot_set;    // sorted ascending
    std::vector<bool> is_hot;
    double hot_quantile = 0.0;
    std::int64_t hot_threshold = 0;  // smallest popularity inside hot_set

    bool hot(ItemId i) const { return is_hot[i]; }
};

PopularityProfile popularity_profile(const InteractionDataset& dataset, double hot_quantile);

}  // namespace aucns
