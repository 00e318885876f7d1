#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "aucns/data.hpp"
#include "aucns/error.hpp"
#include "test_util.hpp"

using namespace aucns;

namespace {

// Hand-written splitter used as an oracle for the "::" format.
std::vector<std::string> split_on(const std::string& line, const std::string& delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(delim, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + delim.size();
    }
    return out;
}

RatingTable table_for_user_counts(const std::vector<std::size_t>& counts) {
    std::ostringstream text;
    for (std::size_t u = 0; u < counts.size(); ++u)
        for (std::size_t i = 0; i < counts[u]; ++i) text << u + 1 << '\t' << i + 1 << "\t4\t0\n";
    return parse_ratings(text.str(), RatingFormat::Ml100k);
}

}  // namespace

TEST_CASE("ml100k line parses into a dense record") {
    auto t = parse_ratings("196\t242\t3\t881250949\n", RatingFormat::Ml100k);
    REQUIRE(t.records.size() == 1);
    CHECK(t.user_ids[t.records[0].user] == 196);
    CHECK(t.item_ids[t.records[0].item] == 242);
    CHECK(t.records[0].rating == 3.0);
    CHECK(t.records[0].timestamp == 881250949);
}

TEST_CASE("ml1m line matches a hand-written splitter") {
    const std::string line = "1::1193::5::978300760";
    auto fields = split_on(line, "::");
    REQUIRE(fields.size() == 4);
    auto t = parse_ratings(line + "\n", RatingFormat::Ml1m);
    REQUIRE(t.records.size() == 1);
    CHECK(t.user_ids[0] == std::stoll(fields[0]));
    CHECK(t.item_ids[0] == std::stoll(fields[1]));
    CHECK(t.records[0].rating == std::stod(fields[2]));
    CHECK(t.records[0].timestamp == std::stoll(fields[3]));
}

TEST_CASE("dense ids follow ascending raw ids") {
    auto t = parse_ratings("30\t7\t1\t0\n10\t9\t1\t0\n20\t7\t1\t0\n", RatingFormat::Ml100k);
    CHECK(t.user_ids == std::vector<std::int64_t>{10, 20, 30});
    CHECK(t.item_ids == std::vector<std::int64_t>{7, 9});
    CHECK(t.records[0].user == 2);
    CHECK(t.records[1].item == 1);
}

TEST_CASE("empty input is an empty-dataset error") {
    try {
        parse_ratings("", RatingFormat::Ml100k);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyDataset);
    }
    auto dir = testutil::scratch_dir("empty");
    std::ofstream(dir / "empty.data").close();
    CHECK_THROWS_AS(load_ratings(dir / "empty.data", RatingFormat::Ml100k), Error);
}

TEST_CASE("malformed line reports its line number") {
    try {
        parse_ratings("1\t2\t3\t4\n1\tx\t3\t4\n", RatingFormat::Ml100k);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.kind() == ErrorKind::Parse);
    }
    CHECK_THROWS_AS(parse_ratings("1\t2\n", RatingFormat::Ml100k), ParseError);
    CHECK_THROWS_AS(parse_ratings("1\t2\tnan\t4\n", RatingFormat::Ml100k), ParseError);
}

TEST_CASE("sample fixtures of every format load") {
    auto ml1m = load_ratings(testutil::fixture("ml1m_sample.dat"), RatingFormat::Ml1m);
    CHECK(ml1m.records.size() == 5);
    CHECK(ml1m.user_ids.size() == 3);
    CHECK(ml1m.item_ids == std::vector<std::int64_t>{661, 1193, 3068});

    auto yahoo = load_ratings(testutil::fixture("yahoo_r3_sample.txt"), RatingFormat::YahooR3);
    CHECK(yahoo.records.size() == 5);
    CHECK(yahoo.records[1].rating == 1.0);
    CHECK(yahoo.records[1].timestamp == 0);

    auto ml100k = load_ratings(testutil::fixture("ml100k_sample.data"), RatingFormat::Ml100k);
    CHECK(ml100k.records.size() == 4);
    CHECK(ml100k.user_ids == std::vector<std::int64_t>{22, 186, 196});
}

TEST_CASE("fixtures round-trip through the split CSV") {
    for (auto [name, fmt] : {std::pair{"ml1m_sample.dat", RatingFormat::Ml1m},
                             std::pair{"yahoo_r3_sample.txt", RatingFormat::YahooR3}}) {
        auto table = load_ratings(testutil::fixture(name), fmt);
        auto ds = to_implicit_and_split(table, 0.5, 3);
        auto dir = testutil::scratch_dir("roundtrip");
        export_split_csv(ds, dir / "split.csv");
        auto back = import_split_csv(dir / "split.csv");
        CHECK(back.num_users() == ds.num_users());
        CHECK(back.num_items() == ds.num_items());
        CHECK(back.train_pos() == ds.train_pos());
        CHECK(back.test_pos() == ds.test_pos());
        CHECK(back.user_ids == ds.user_ids);
        CHECK(back.item_ids == ds.item_ids);
    }
}

TEST_CASE("per-user split sizes") {
    auto table = table_for_user_counts({10, 1, 5});
    auto ds = to_implicit_and_split(table, 0.8, 7);
    CHECK(ds.train_items(0).size() == 8);
    CHECK(ds.test_items(0).size() + ds.dropped_test_pairs >= 2);
    CHECK(ds.train_items(1).size() == 1);
    CHECK(ds.test_items(1).empty());
    CHECK(ds.train_items(2).size() == 4);
}

TEST_CASE("split is deterministic and disjoint") {
    auto table = table_for_user_counts({20, 13, 7, 2, 9});
    auto a = to_implicit_and_split(table, 0.8, 11);
    auto b = to_implicit_and_split(table, 0.8, 11);
    CHECK(a.train_pos() == b.train_pos());
    CHECK(a.test_pos() == b.test_pos());
    auto c = to_implicit_and_split(table, 0.8, 12);
    CHECK(a.train_pos() != c.train_pos());
    for (std::size_t u = 0; u < a.num_users(); ++u) {
        CHECK_FALSE(a.train_items(static_cast<UserId>(u)).empty());
        for (ItemId i : a.test_items(static_cast<UserId>(u))) CHECK_FALSE(a.is_train_positive(static_cast<UserId>(u), i));
    }
    CHECK_THROWS_AS(to_implicit_and_split(table, 1.0, 1), Error);
    CHECK_THROWS_AS(to_implicit_and_split(table, 0.0, 1), Error);
}

TEST_CASE("test items unseen in training are dropped and counted") {
    // User 1 alone rates item 99; with one training slot it may land in test.
    auto table = parse_ratings("1\t1\t5\t0\n1\t2\t5\t0\n2\t1\t5\t0\n2\t99\t5\t0\n", RatingFormat::Ml100k);
    std::size_t dropped_total = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto ds = to_implicit_and_split(table, 0.5, seed);
        for (std::size_t u = 0; u < ds.num_users(); ++u)
            for (ItemId i : ds.test_items(static_cast<UserId>(u))) {
                bool seen = false;
                for (std::size_t v = 0; v < ds.num_users(); ++v) seen |= ds.is_train_positive(static_cast<UserId>(v), i);
                CHECK(seen);
            }
        dropped_total += ds.dropped_test_pairs;
    }
    CHECK(dropped_total > 0);
}

TEST_CASE("uninteracted pool enumerates the complement") {
    std::vector<ItemId> positives{0, 3, 4, 9};
    UninteractedPool pool(positives, 10);
    CHECK(pool.size() == 6);
    std::vector<ItemId> got;
    for (std::size_t r = 0; r < pool.size(); ++r) got.push_back(pool.nth(r));
    CHECK(got == std::vector<ItemId>{1, 2, 5, 6, 7, 8});
    CHECK(pool.contains(5));
    CHECK_FALSE(pool.contains(3));
}

TEST_CASE("hot set: all ties take the lowest indices") {
    std::vector<std::vector<ItemId>> train(1);
    for (ItemId i = 0; i < 100; ++i) train[0].push_back(i);
    auto ds = testutil::make_dataset(100, train);
    auto p = popularity_profile(ds, 0.15);
    REQUIRE(p.hot_set.size() == 15);
    for (ItemId i = 0; i < 15; ++i) CHECK(p.hot_set[i] == i);
}

TEST_CASE("hot set: pops [5,3,3,1] at quantile 0.25") {
    std::vector<std::vector<ItemId>> train(5);
    for (std::size_t u = 0; u < 5; ++u) train[u].push_back(0);
    for (std::size_t u = 0; u < 3; ++u) train[u].push_back(1);
    for (std::size_t u = 0; u < 3; ++u) train[u].push_back(2);
    train[0].push_back(3);
    auto ds = testutil::make_dataset(4, train);
    auto p = popularity_profile(ds, 0.25);
    CHECK(p.pop == std::vector<std::int64_t>{5, 3, 3, 1});
    CHECK(p.pop_max == 5);
    CHECK(p.hot_set == std::vector<ItemId>{0});
    CHECK(p.hot(0));
    CHECK_FALSE(p.hot(1));
    CHECK_THROWS_AS(popularity_profile(ds, 1.0), Error);
    CHECK_THROWS_AS(popularity_profile(ds, 0.0), Error);
}

TEST_CASE("ML-100K split statistics") {
    if (!testutil::have_ml100k()) {
        MESSAGE("ML-100K not found; run scripts/fetch_ml100k.py");
        return;
    }
    auto table = load_ratings(testutil::ml100k_path(), RatingFormat::Ml100k);
    CHECK(table.records.size() == 100000);
    CHECK(table.user_ids.size() == 943);
    CHECK(table.item_ids.size() == 1682);
    auto ds = to_implicit_and_split(table, 0.8, 1);
    double ratio = static_cast<double>(ds.num_train()) / static_cast<double>(ds.num_train() + ds.num_test() + ds.dropped_test_pairs);
    CHECK(ratio == doctest::Approx(0.8).epsilon(0.0125));
    auto p = popularity_profile(ds, 0.15);
    // Items without training interactions are not ranked, so the count sits a little under 252.
    CHECK(p.hot_set.size() >= 240);
    CHECK(p.hot_set.size() <= 253);
}
