#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "aucns/error.hpp"
#include "aucns/model.hpp"
#include "aucns/train.hpp"
#include "test_util.hpp"

using namespace aucns;

TEST_CASE("init is deterministic and zero-mean") {
    CHECK(init_model(5, 7, 4, 3) == init_model(5, 7, 4, 3));
    CHECK_FALSE(init_model(5, 7, 4, 3) == init_model(5, 7, 4, 4));
    CHECK_THROWS_AS(init_model(5, 7, 0, 3), Error);

    auto m = init_model(1000, 1000, 8, 1);
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto* v : {&m.user_factors(), &m.item_factors()})
        for (double x : *v) {
            sum += x;
            sq += x * x;
            ++n;
        }
    const double sigma = 0.1 / std::sqrt(8.0);
    CHECK(std::abs(sum / n) < 3.0 * sigma / std::sqrt(static_cast<double>(n)));
    CHECK(std::sqrt(sq / n) == doctest::Approx(sigma).epsilon(0.01));
}

TEST_CASE("score matches an elementwise oracle") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    FactorModel m(2, 3, 8);
    for (auto& x : m.user_factors()) x = nd(rng);
    for (auto& x : m.item_factors()) x = nd(rng);
    for (UserId u = 0; u < 2; ++u)
        for (ItemId i = 0; i < 3; ++i) {
            double oracle = 0.0;
            for (std::size_t k = 0; k < 8; ++k) oracle += m.user_factors()[u * 8 + k] * m.item_factors()[i * 8 + k];
            CHECK(std::abs(score(m, u, i) - oracle) < 1e-12);
        }
    CHECK_THROWS_AS(score(m, 2, 0), Error);
    CHECK_THROWS_AS(score(m, 0, 3), Error);
}

TEST_CASE("zero model has loss ln 2") {
    FactorModel m(1, 2, 4);
    CHECK(bpr_loss(m, 0, 0, 1, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("analytic BPR gradient matches central differences") {
    std::mt19937_64 rng(17);
    auto m = init_model(2, 3, 4, 9);
    for (auto& x : m.user_factors()) x *= 20;
    for (auto& x : m.item_factors()) x *= 20;
    const double reg = 0.01, h = 1e-5;
    std::vector<double> gu(4), gp(4), gn(4);
    bpr_gradient(m, 1, 0, 2, reg, gu, gp, gn);

    double worst = 0.0;
    auto check = [&](std::vector<double>& params, std::size_t offset, const std::vector<double>& analytic) {
        for (std::size_t k = 0; k < 4; ++k) {
            double saved = params[offset + k];
            params[offset + k] = saved + h;
            double up = bpr_loss(m, 1, 0, 2, reg);
            params[offset + k] = saved - h;
            double down = bpr_loss(m, 1, 0, 2, reg);
            params[offset + k] = saved;
            double numeric = (up - down) / (2 * h);
            worst = std::max(worst, std::abs(numeric - analytic[k]) / std::max(std::abs(numeric), 1e-8));
        }
    };
    check(m.user_factors(), 4, gu);
    check(m.item_factors(), 0, gp);
    check(m.item_factors(), 8, gn);
    CHECK(worst < 1e-4);
}

TEST_CASE("saturated margin gives a vanishing update") {
    FactorModel m(1, 2, 1);
    m.user_factors()[0] = 1.0;
    m.item_factors()[0] = 15.0;
    m.item_factors()[1] = -15.0;
    std::vector<double> gu(1), gp(1), gn(1);
    bpr_gradient(m, 0, 0, 1, 0.0, gu, gp, gn);
    CHECK(std::abs(gu[0]) < 1e-11);
    CHECK(std::abs(gp[0]) < 1e-11);
    CHECK(std::abs(gn[0]) < 1e-11);
}

TEST_CASE("regularization alone shrinks norms") {
    // pos == neg removes the ranking signal.
    auto m = init_model(1, 1, 6, 2);
    double prev = 0.0;
    for (double x : m.user_factors()) prev += x * x;
    for (int step = 0; step < 20; ++step) {
        bpr_step(m, 0, 0, 0, 0.1, 0.05);
        double now = 0.0;
        for (double x : m.user_factors()) now += x * x;
        CHECK(now < prev);
        prev = now;
    }
}

TEST_CASE("non-finite parameters raise a training error") {
    FactorModel m(1, 2, 2);
    m.user_factors()[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(bpr_step(m, 0, 0, 1, 0.1, 0.0), Error);
}

TEST_CASE("checkpoint round trip") {
    auto m = init_model(3, 4, 5, 8);
    auto dir = testutil::scratch_dir("ckpt");
    save_checkpoint(m, {3, 4, 5, 8, 0xabcdef}, dir / "m.bin");
    CheckpointHeader h;
    auto back = load_checkpoint(dir / "m.bin", &h);
    CHECK(back == m);
    CHECK(h.seed == 8);
    CHECK(h.config_hash == 0xabcdef);
    {
        std::ofstream bad(dir / "bad.bin", std::ios::binary);
        bad << "not a checkpoint";
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "bad.bin"), Error);
}

TEST_CASE("learning rate schedule") {
    TrainConfig c;
    CHECK(learning_rate_at(c, 0) == doctest::Approx(0.1));
    CHECK(learning_rate_at(c, 19) == doctest::Approx(0.1));
    CHECK(learning_rate_at(c, 20) == doctest::Approx(0.01));
    CHECK(learning_rate_at(c, 60) == doctest::Approx(0.001));
    CHECK(learning_rate_at(c, 99) == doctest::Approx(0.0001));
}

TEST_CASE("training config validation") {
    TrainConfig c;
    c.epochs = 0;
    CHECK_THROWS_AS(validate(c), Error);
    c = TrainConfig{};
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(validate(c), Error);
    c = TrainConfig{};
    c.l2_reg = -1.0;
    CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("training is deterministic on a toy dataset") {
    auto ds = testutil::make_dataset(8, {{0, 1, 2}, {2, 3}, {4, 5, 6}, {1, 7}});
    auto profile = popularity_profile(ds, 0.25);
    TrainConfig c;
    c.dim = 4;
    c.epochs = 5;
    c.batch_size = 3;
    for (auto kind : {SamplerKind::Rns, SamplerKind::Pns, SamplerKind::Dns, SamplerKind::Aucns}) {
        c.sampler.kind = kind;
        auto a = train(ds, profile, c);
        auto b = train(ds, profile, c);
        CHECK(a.model == b.model);
        CHECK(a.log.size() == 5);
        CHECK(a.telemetry.samples == 5 * ds.num_train());
    }
}

TEST_CASE("ML-100K RNS loss decreases over the first epochs") {
    if (!testutil::have_ml100k()) {
        MESSAGE("ML-100K not found; skipped");
        return;
    }
    auto table = load_ratings(testutil::ml100k_path(), RatingFormat::Ml100k);
    auto ds = to_implicit_and_split(table, 0.8, 1);
    auto profile = popularity_profile(ds, 0.15);
    TrainConfig c;
    c.epochs = 5;
    c.sampler.kind = SamplerKind::Rns;
    auto r = train(ds, profile, c);
    int rises = 0;
    for (std::size_t e = 1; e < r.log.size(); ++e)
        if (r.log[e].mean_loss >= r.log[e - 1].mean_loss) ++rises;
    CHECK(rises <= 1);
    CHECK(r.log.back().mean_loss < r.log.front().mean_loss);
}
