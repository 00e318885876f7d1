#include "aucns/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "aucns/error.hpp"

namespace aucns {

RatingFormat parse_rating_format(std::string_view name) {
    if (name == "ml100k") return RatingFormat::Ml100k;
    if (name == "ml1m") return RatingFormat::Ml1m;
    if (name == "yahoo_r3") return RatingFormat::YahooR3;
    throw Error(ErrorKind::Config, "unknown dataset format '" + std::string(name) +
                                       "' (expected ml100k, ml1m or yahoo_r3)");
}

std::string_view to_string(RatingFormat format) {
    switch (format) {
        case RatingFormat::Ml100k: return "ml100k";
        case RatingFormat::Ml1m: return "ml1m";
        case RatingFormat::YahooR3: return "yahoo_r3";
    }
    return "unknown";
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line, std::string_view delim) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + delim.size();
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, const char* what) {
    field = trim(field);
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
        throw ParseError(line_no, std::string("invalid ") + what + " '" + std::string(field) + "'");
    }
    return value;
}

struct RawRecord {
    std::int64_t user;
    std::int64_t item;
    double rating;
    std::int64_t timestamp;
};

std::vector<std::int64_t> dense_ids(const std::vector<RawRecord>& raw, bool users) {
    std::vector<std::int64_t> ids;
    ids.reserve(raw.size());
    for (const auto& r : raw) ids.push_back(users ? r.user : r.item);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

std::uint32_t index_of(const std::vector<std::int64_t>& ids, std::int64_t raw) {
    return static_cast<std::uint32_t>(std::lower_bound(ids.begin(), ids.end(), raw) - ids.begin());
}

}  // namespace

RatingTable parse_ratings(std::string_view text, RatingFormat format) {
    const std::string_view delim = format == RatingFormat::Ml1m ? "::" : "\t";
    const std::size_t min_fields = format == RatingFormat::YahooR3 ? 3 : 4;

    std::vector<RawRecord> raw;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = trim(text.substr(start, end - start));
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;

        auto fields = split_fields(line, delim);
        if (fields.size() < min_fields) {
            throw ParseError(line_no, "expected " + std::to_string(min_fields) + " fields, got " +
                                          std::to_string(fields.size()));
        }
        RawRecord r{};
        r.user = parse_number<std::int64_t>(fields[0], line_no, "user id");
        r.item = parse_number<std::int64_t>(fields[1], line_no, "item id");
        r.rating = parse_number<double>(fields[2], line_no, "rating");
        if (!std::isfinite(r.rating)) throw ParseError(line_no, "non-finite rating");
        if (min_fields == 4) r.timestamp = parse_number<std::int64_t>(fields[3], line_no, "timestamp");
        raw.push_back(r);
    }
    if (raw.empty()) throw Error(ErrorKind::EmptyDataset, "no rating records found");

    RatingTable table;
    table.user_ids = dense_ids(raw, true);
    table.item_ids = dense_ids(raw, false);
    table.records.reserve(raw.size());
    for (const auto& r : raw) {
        table.records.push_back({index_of(table.user_ids, r.user), index_of(table.item_ids, r.item), r.rating,
                                 r.timestamp});
    }
    return table;
}

RatingTable load_ratings(const std::filesystem::path& path, RatingFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_ratings(buffer.str(), format);
}

InteractionDataset::InteractionDataset(std::size_t num_users, std::size_t num_items,
                                       std::vector<std::vector<ItemId>> train_pos,
                                       std::vector<std::vector<ItemId>> test_pos)
    : num_users_(num_users), num_items_(num_items), train_pos_(std::move(train_pos)), test_pos_(std::move(test_pos)) {
    if (train_pos_.size() != num_users_ || test_pos_.size() != num_users_) {
        throw Error(ErrorKind::Config, "positive set count does not match num_users");
    }
    for (std::size_t u = 0; u < num_users_; ++u) {
        for (auto* set : {&train_pos_[u], &test_pos_[u]}) {
            std::sort(set->begin(), set->end());
            set->erase(std::unique(set->begin(), set->end()), set->end());
            if (!set->empty() && set->back() >= num_items_) {
                throw Error(ErrorKind::Index, "item index out of range for user " + std::to_string(u));
            }
        }
        num_train_ += train_pos_[u].size();
        num_test_ += test_pos_[u].size();
    }
}

bool InteractionDataset::is_train_positive(UserId u, ItemId i) const {
    return std::binary_search(train_pos_[u].begin(), train_pos_[u].end(), i);
}

bool InteractionDataset::is_test_positive(UserId u, ItemId i) const {
    return std::binary_search(test_pos_[u].begin(), test_pos_[u].end(), i);
}

InteractionDataset to_implicit_and_split(const RatingTable& table, double split_ratio, std::uint64_t seed) {
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
        throw Error(ErrorKind::Config, "split_ratio must lie in (0,1), got " + std::to_string(split_ratio));
    }
    if (table.records.empty()) throw Error(ErrorKind::EmptyDataset, "no rating records to split");

    const std::size_t num_users = table.user_ids.size();
    const std::size_t num_items = table.item_ids.size();

    std::vector<std::vector<ItemId>> items(num_users);
    for (const auto& r : table.records) items[r.user].push_back(r.item);

    Rng rng = named_stream(seed, "split");
    std::vector<std::vector<ItemId>> train(num_users), test(num_users);
    std::size_t excluded = 0;
    for (std::size_t u = 0; u < num_users; ++u) {
        auto& mine = items[u];
        std::sort(mine.begin(), mine.end());
        mine.erase(std::unique(mine.begin(), mine.end()), mine.end());
        if (mine.empty()) {
            ++excluded;
            continue;
        }
        std::shuffle(mine.begin(), mine.end(), rng);
        auto n_train = static_cast<std::size_t>(std::floor(split_ratio * static_cast<double>(mine.size()) + 1e-9));
        n_train = std::max<std::size_t>(n_train, 1);
        train[u].assign(mine.begin(), mine.begin() + static_cast<std::ptrdiff_t>(n_train));
        test[u].assign(mine.begin() + static_cast<std::ptrdiff_t>(n_train), mine.end());
    }

    // Test items never seen in training cannot be learned; drop them.
    std::vector<bool> seen(num_items, false);
    for (const auto& t : train)
        for (ItemId i : t) seen[i] = true;
    std::size_t dropped = 0;
    for (auto& t : test) {
        auto keep = std::remove_if(t.begin(), t.end(), [&](ItemId i) { return !seen[i]; });
        dropped += static_cast<std::size_t>(t.end() - keep);
        t.erase(keep, t.end());
    }

    InteractionDataset dataset(num_users, num_items, std::move(train), std::move(test));
    dataset.user_ids = table.user_ids;
    dataset.item_ids = table.item_ids;
    dataset.excluded_users = excluded;
    dataset.dropped_test_pairs = dropped;
    return dataset;
}

namespace {

std::int64_t raw_id(const std::vector<std::int64_t>& ids, std::size_t dense) {
    return ids.empty() ? static_cast<std::int64_t>(dense) : ids[dense];
}

}  // namespace

void export_split_csv(const InteractionDataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << "user,item,split\n";
    // Items that occur in no split row would vanish from the universe on import,
    // so every item without a positive is listed once under a sentinel row.
    std::vector<bool> listed(dataset.num_items(), false);
    for (std::size_t u = 0; u < dataset.num_users(); ++u) {
        for (ItemId i : dataset.train_items(static_cast<UserId>(u))) {
            out << raw_id(dataset.user_ids, u) << ',' << raw_id(dataset.item_ids, i) << ",train\n";
            listed[i] = true;
        }
        for (ItemId i : dataset.test_items(static_cast<UserId>(u))) {
            out << raw_id(dataset.user_ids, u) << ',' << raw_id(dataset.item_ids, i) << ",test\n";
            listed[i] = true;
        }
    }
    for (std::size_t i = 0; i < dataset.num_items(); ++i) {
        if (!listed[i] && dataset.num_users() > 0) {
            out << raw_id(dataset.user_ids, 0) << ',' << raw_id(dataset.item_ids, i) << ",dropped\n";
        }
    }
}

InteractionDataset import_split_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || trim(line) != "user,item,split") {
        throw ParseError(1, "expected header 'user,item,split'");
    }
    struct Row {
        std::int64_t user, item;
        int split;  // 0 train, 1 test, 2 dropped
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = trim(line);
        if (view.empty()) continue;
        auto fields = split_fields(view, ",");
        if (fields.size() != 3) throw ParseError(line_no, "expected 3 fields");
        Row row{parse_number<std::int64_t>(fields[0], line_no, "user id"),
                parse_number<std::int64_t>(fields[1], line_no, "item id"), 0};
        if (fields[2] == "train") row.split = 0;
        else if (fields[2] == "test") row.split = 1;
        else if (fields[2] == "dropped") row.split = 2;
        else throw ParseError(line_no, "unknown split '" + std::string(fields[2]) + "'");
        rows.push_back(row);
    }
    if (rows.empty()) throw Error(ErrorKind::EmptyDataset, "split file has no rows");

    std::vector<RawRecord> raw;
    raw.reserve(rows.size());
    for (const auto& r : rows) raw.push_back({r.user, r.item, 0.0, 0});
    auto user_ids = dense_ids(raw, true);
    auto item_ids = dense_ids(raw, false);

    std::vector<std::vector<ItemId>> train(user_ids.size()), test(user_ids.size());
    for (const auto& r : rows) {
        if (r.split == 2) continue;
        auto u = index_of(user_ids, r.user);
        auto i = index_of(item_ids, r.item);
        (r.split == 0 ? train : test)[u].push_back(i);
    }
    InteractionDataset dataset(user_ids.size(), item_ids.size(), std::move(train), std::move(test));
    dataset.user_ids = std::move(user_ids);
    dataset.item_ids = std::move(item_ids);
    return dataset;
}

bool UninteractedPool::contains(ItemId item) const {
    return item < num_items_ && !std::binary_search(positives_.begin(), positives_.end(), item);
}

ItemId UninteractedPool::nth(std::size_t r) const {
    // positives_[k] - k is non-decreasing; it counts the pool items below positives_[k].
    std::size_t lo = 0, hi = positives_.size();
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (positives_[mid] - mid <= r) lo = mid + 1;
        else hi = mid;
    }
    return static_cast<ItemId>(r + lo);
}

PopularityProfile popularity_profile(const InteractionDataset& dataset, double hot_quantile) {
    if (!(hot_quantile > 0.0 && hot_quantile < 1.0)) {
        throw Error(ErrorKind::Config, "hot_quantile must lie in (0,1), got " + std::to_string(hot_quantile));
    }
    if (dataset.num_train() == 0) throw Error(ErrorKind::EmptyDataset, "no training interactions");

    PopularityProfile profile;
    profile.hot_quantile = hot_quantile;
    profile.pop.assign(dataset.num_items(), 0);
    for (const auto& items : dataset.train_pos())
        for (ItemId i : items) ++profile.pop[i];
    profile.pop_max = *std::max_element(profile.pop.begin(), profile.pop.end());

    std::vector<ItemId> ranked;
    for (std::size_t i = 0; i < profile.pop.size(); ++i)
        if (profile.pop[i] > 0) ranked.push_back(static_cast<ItemId>(i));
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](ItemId a, ItemId b) { return profile.pop[a] > profile.pop[b]; });

    auto count = static_cast<std::size_t>(std::ceil(hot_quantile * static_cast<double>(ranked.size()) - 1e-9));
    count = std::clamp<std::size_t>(count, 1, ranked.size());
    profile.hot_set.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(count));
    profile.hot_threshold = profile.pop[profile.hot_set.back()];
    std::sort(profile.hot_set.begin(), profile.hot_set.end());
    profile.is_hot.assign(dataset.num_items(), false);
    for (ItemId i : profile.hot_set) profile.is_hot[i] = true;
    return profile;
}

}  // namespace aucns
