#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "netobs/baseline.hpp"
#include "netobs/error.hpp"
#include "netobs/power_law.hpp"
#include "support/oracles.hpp"

using namespace netobs;

namespace {

DegreeDistribution dist_of(std::vector<std::uint64_t> counts, std::int64_t len = 60'000'000) {
    DegreeDistribution d;
    d.window_len_us = len;
    d.counts = std::move(counts);
    for (auto c : d.counts) d.active_nodes += c;
    return d;
}

}  // namespace

TEST_CASE("recovers alpha and delta from inverse-CDF samples") {
    std::mt19937_64 rng(2024);
    const auto samples = oracle::sample_power_law(2.0, 1.0, 10'000, 100'000, rng);
    const auto m = fit_power_law(samples);
    CHECK(m.alpha >= 1.9);
    CHECK(m.alpha <= 2.1);
    CHECK(m.delta >= 0.5);
    CHECK(m.delta <= 1.5);
    CHECK(m.sample_count == 100'000);
    CHECK(fit_acceptable(m));
}

TEST_CASE("alpha error shrinks with sample count") {
    double err_small = 0.0, err_large = 0.0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        std::mt19937_64 rng(seed);
        auto small = oracle::sample_power_law(2.0, 1.0, 10'000, 1'000, rng);
        auto large = oracle::sample_power_law(2.0, 1.0, 10'000, 100'000, rng);
        err_small += std::abs(fit_power_law(small).alpha - 2.0);
        err_large += std::abs(fit_power_law(large).alpha - 2.0);
    }
    CHECK(err_large < err_small);
}

TEST_CASE("fit preconditions") {
    std::vector<std::uint64_t> same(500, 3);
    CHECK_THROWS_AS(fit_power_law(same), DegenerateDistributionError);
    std::vector<std::uint64_t> few{1, 2, 3, 4, 5};
    CHECK_THROWS_AS(fit_power_law(few), InsufficientDataError);
    std::vector<std::uint64_t> two(500, 1);
    for (std::size_t i = 0; i < two.size(); i += 2) two[i] = 2;
    CHECK_THROWS_AS(fit_power_law(two), DegenerateDistributionError);
}

TEST_CASE("uniform degrees are flagged as a poor fit") {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::uint64_t> u(1, 100);
    std::vector<std::uint64_t> xs(100'000);
    for (auto& x : xs) x = u(rng);
    const auto m = fit_power_law(xs);

    // KS distance computed directly from the empirical and model CDFs
    std::vector<double> emp(101, 0.0);
    for (auto x : xs) emp[x] += 1.0;
    double e = 0.0, c = 0.0, ks = 0.0;
    for (std::uint64_t d = 1; d <= m.d_max; ++d) {
        e += emp[d] / 1e5;
        c += m.norm * std::pow(d + m.delta, -m.alpha);
        ks = std::max(ks, std::abs(e - c));
    }
    CHECK(m.gof == doctest::Approx(ks).epsilon(1e-6));
    CHECK(m.gof > kGofRejectThreshold);
    CHECK_FALSE(fit_acceptable(m));
}

TEST_CASE("binned fit agrees with the raw fit on power-law data") {
    std::mt19937_64 rng(77);
    const auto samples = oracle::sample_power_law(1.8, 0.5, 4096, 50'000, rng);
    const auto dist = bin_degrees(samples, Direction::fan_out, 60'000'000);
    const auto m = fit_power_law(dist);
    CHECK(m.alpha == doctest::Approx(1.8).epsilon(0.08));
    CHECK(m.sample_count == 50'000);
    CHECK(m.gof < kGofRejectThreshold);
}

TEST_CASE("model_pdf") {
    const auto m = make_power_law(1.0, 0.0, 2);
    CHECK(model_pdf(m, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(model_pdf(m, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(model_pdf(m, 0), RangeError);
    CHECK_THROWS_AS(model_pdf(m, 3), RangeError);
    CHECK_THROWS_AS(make_power_law(0.0, 0.0, 10), ParameterError);
    CHECK_THROWS_AS(make_power_law(1.0, -1.0, 10), ParameterError);
}

TEST_CASE("random models normalize and decrease") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> a(0.3, 4.0), dl(0.0, 10.0);
    std::uniform_int_distribution<std::uint64_t> dm(1, 20'000);
    for (int i = 0; i < 50; ++i) {
        const auto m = make_power_law(a(rng), dl(rng), dm(rng));
        long double sum = 0.0L;
        double prev = 2.0;
        for (std::uint64_t d = 1; d <= m.d_max; ++d) {
            const double p = model_pdf(m, d);
            REQUIRE(std::isfinite(p));
            REQUIRE(p > 0.0);
            REQUIRE(p < prev);
            prev = p;
            sum += p;
        }
        CHECK(static_cast<double>(sum) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(model_cdf(m, m.d_max) == 1.0);
    }
}

TEST_CASE("power_sum tail approximation matches exact summation") {
    for (double alpha : {0.6, 1.0, 1.5, 2.0, 3.7}) {
        for (double delta : {0.0, 0.4, 7.5}) {
            long double exact = 0.0L;
            for (std::uint64_t d = 100'000; d >= 3; --d) exact += std::pow(d + (long double)delta, -(long double)alpha);
            CHECK(power_sum(alpha, delta, 3, 100'000) ==
                  doctest::Approx(static_cast<double>(exact)).epsilon(1e-11));
        }
    }
    CHECK(power_sum(2.0, 0.0, 5, 4) == 0.0);
}

TEST_CASE("expected bin counts") {
    const auto m = make_power_law(2.0, 1.0, 10'000);
    for (double v : expected_bin_counts(m, 0)) CHECK(v == 0.0);
    const auto e = expected_bin_counts(m, 10'000);
    double sum = 0.0;
    for (double v : e) sum += v;
    CHECK(sum == doctest::Approx(10'000.0).epsilon(1e-10));
    CHECK(std::abs(sum - 10'000.0) < 1e-6);

    // Monte-Carlo: counts of 10^4 sampled nodes per bin within 3 sigma of expectation
    std::mt19937_64 rng(31);
    oracle::PowerLawSampler s(2.0, 1.0, 10'000);
    std::vector<double> seen(e.size(), 0.0);
    for (int i = 0; i < 10'000; ++i) seen[oracle::log2_bin(s(rng))] += 1.0;
    for (std::size_t k = 0; k < e.size(); ++k) {
        const double p = e[k] / 10'000.0;
        const double sd = std::sqrt(10'000.0 * p * (1.0 - p));
        CHECK(std::abs(seen[k] - e[k]) <= 3.0 * sd + 1.0);
    }
}

TEST_CASE("model file round-trips") {
    std::mt19937_64 rng(4);
    auto m = fit_power_law(oracle::sample_power_law(2.2, 2.0, 1000, 5000, rng));
    std::stringstream ss;
    write_model(ss, m);
    CHECK(read_model(ss) == m);
    std::istringstream bad("alpha=2 delta=1 norm=0.5 dmax=10 samples=3\n");
    CHECK_THROWS_AS(read_model(bad), ParseError);
    std::istringstream neg("alpha=-2 delta=1 norm=0.5 dmax=10 samples=3 gof=0\n");
    CHECK_THROWS_AS(read_model(neg), ParseError);
}

TEST_CASE("variance baseline arithmetic") {
    SUBCASE("identical windows") {
        std::vector<DegreeDistribution> ws(5, dist_of({30, 12, 7, 2}));
        const auto b = train_variance_baseline(ws);
        for (const auto& s : b.bins) CHECK(s.var == 0.0);
        CHECK(b.at(2).mean == 7.0);
        CHECK(b.at(9).mean == 0.0);
    }
    SUBCASE("two windows") {
        std::vector<DegreeDistribution> ws{dist_of({4}), dist_of({6})};
        const auto b = train_variance_baseline(ws);
        CHECK(b.at(0).mean == 5.0);
        CHECK(b.at(0).var == 2.0);
        CHECK(b.training_window_count == 2);
    }
    SUBCASE("poisson bin counts") {
        std::mt19937_64 rng(10);
        std::poisson_distribution<std::uint64_t> pois(20.0);
        std::vector<DegreeDistribution> ws;
        for (int i = 0; i < 100; ++i) ws.push_back(dist_of({pois(rng)}));
        const auto b = train_variance_baseline(ws);
        CHECK(std::abs(b.at(0).mean - 20.0) <= 1.5);
        CHECK(std::abs(b.at(0).var - 20.0) <= 8.0);
    }
    SUBCASE("errors") {
        std::vector<DegreeDistribution> one{dist_of({4})};
        CHECK_THROWS_AS(train_variance_baseline(one), InsufficientDataError);
        std::vector<DegreeDistribution> mixed{dist_of({4}), dist_of({4}, 30'000'000)};
        CHECK_THROWS_AS(train_variance_baseline(mixed), ParameterError);
        auto fan_in = dist_of({4});
        fan_in.direction = Direction::fan_in;
        std::vector<DegreeDistribution> dirs{dist_of({4}), fan_in};
        CHECK_THROWS_AS(train_variance_baseline(dirs), BinningMismatchError);
    }
}

TEST_CASE("baseline file round-trips") {
    std::vector<DegreeDistribution> ws{dist_of({40, 10, 3}), dist_of({44, 9, 5, 1}), dist_of({39, 12})};
    const auto b = train_variance_baseline(ws);
    std::stringstream ss;
    write_baseline(ss, b);
    CHECK(ss.str().find("8 16") == std::string::npos);
    CHECK(ss.str().find("2 4 ") != std::string::npos);
    CHECK(read_baseline(ss) == b);
    std::istringstream bad("#baseline direction=fan_out windows=2 window_len_us=60\n3 4 1 1\n");
    CHECK_THROWS_AS(read_baseline(bad), Error);
}

TEST_CASE("fit is invariant to relabeling") {
    // relabeling permutes nodes but leaves the degree multiset intact
    std::mt19937_64 rng(1);
    auto xs = oracle::sample_power_law(2.0, 1.0, 2000, 5000, rng);
    auto ys = xs;
    std::shuffle(ys.begin(), ys.end(), rng);
    CHECK(fit_power_law(xs) == fit_power_law(ys));
}
