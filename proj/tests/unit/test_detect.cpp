#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "netobs/detect.hpp"
#include "netobs/error.hpp"
#include "support/oracles.hpp"

using namespace netobs;

namespace {

constexpr std::int64_t kLen = 60'000'000;

DegreeDistribution dist_of(std::vector<std::uint64_t> counts, Direction dir = Direction::fan_out) {
    DegreeDistribution d;
    d.direction = dir;
    d.window_len_us = kLen;
    d.counts = std::move(counts);
    for (auto c : d.counts) d.active_nodes += c;
    return d;
}

/// Model mass of each log2 bin, summed straight from the oracle pmf.
std::vector<double> bin_mass(const oracle::PowerLawSampler& s) {
    std::vector<double> mass;
    for (std::uint64_t d = 1; d <= s.d_max(); ++d) {
        const auto k = oracle::log2_bin(d);
        if (mass.size() <= k) mass.resize(k + 1, 0.0);
        mass[k] += s.pmf(d);
    }
    return mass;
}

/// Poisson counts per bin around fixed means.
std::vector<DegreeDistribution> noisy_series(const std::vector<double>& means, std::size_t n,
                                             std::mt19937_64& rng) {
    std::vector<DegreeDistribution> out;
    for (std::size_t w = 0; w < n; ++w) {
        std::vector<std::uint64_t> c;
        for (double m : means) c.push_back(std::poisson_distribution<std::uint64_t>(m)(rng));
        out.push_back(dist_of(std::move(c)));
    }
    return out;
}

const std::vector<double> kQuiet{4000, 1500, 700, 300, 120, 50, 20};

NodeId node(std::uint64_t v) { return NodeId(v); }

}  // namespace

TEST_CASE("config validation") {
    DetectionConfig c;
    CHECK_NOTHROW(c.validate());
    c.z_threshold = 0.0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.beacon_min_strength = 0.0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c.beacon_min_strength = 1.5;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c.beacon_min_strength = 1.0;
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("anomaly kind names round-trip") {
    for (auto k : {AnomalyKind::distribution, AnomalyKind::variance, AnomalyKind::beacon})
        CHECK(parse_anomaly_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_anomaly_kind("spike"), ParseError);
}

TEST_CASE("observed counts at their expectation raise nothing") {
    const auto model = make_power_law(2.0, 1.0, 10'000);
    const auto mass = bin_mass(oracle::PowerLawSampler(2.0, 1.0, 10'000));
    std::vector<std::uint64_t> counts;
    for (double m : mass) counts.push_back(static_cast<std::uint64_t>(std::llround(m * 50'000)));
    CHECK(detect_distribution_anomaly(dist_of(counts), model, {}).empty());
}

TEST_CASE("constructed bin excess scores its z value") {
    const auto model = make_power_law(2.0, 1.0, 10'000);
    const auto mass = bin_mass(oracle::PowerLawSampler(2.0, 1.0, 10'000));
    // N puts E = 100 in the (8,16] bin; the 100 extra nodes there come out of bin 0
    const double n = 100.0 / mass[4];
    std::vector<std::uint64_t> counts;
    for (double m : mass) counts.push_back(static_cast<std::uint64_t>(std::llround(m * n)));
    const auto extra = static_cast<std::uint64_t>(std::llround(10.0 * std::sqrt(mass[4] * n)));
    counts[4] += extra;
    counts[0] -= extra;
    const auto obs = dist_of(counts);
    const double e4 = mass[4] * static_cast<double>(obs.active_nodes);
    const double z = (static_cast<double>(counts[4]) - e4) / std::sqrt(e4);
    CHECK(e4 == doctest::Approx(100.0).epsilon(0.05));

    const auto found = detect_distribution_anomaly(obs, model, {}, 7);
    REQUIRE(found.size() == 1);
    CHECK(found[0].kind == AnomalyKind::distribution);
    CHECK(found[0].bin == std::optional<std::size_t>(4));
    CHECK(found[0].first_window == 7);
    CHECK(found[0].score == doctest::Approx(z).epsilon(1e-6));
    CHECK(std::abs(found[0].score - 10.0) <= 0.1);
    CHECK_FALSE(found[0].period_windows);
}

TEST_CASE("small bins are ignored and rejected models refused") {
    auto model = make_power_law(2.0, 1.0, 10'000);
    // 9 nodes in a bin that expects almost none: a huge z but below the population floor
    const auto obs = dist_of({1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 9});
    CHECK(detect_distribution_anomaly(obs, model, {}).empty());
    model.gof = 0.2;
    CHECK_THROWS_AS(detect_distribution_anomaly(obs, model, {}), ParameterError);
    auto bad = obs;
    bad.active_nodes += 1;
    CHECK_THROWS_AS(detect_distribution_anomaly(bad, make_power_law(2.0, 1.0, 10'000), {}),
                    BinningMismatchError);
}

TEST_CASE("background-only false alarms stay under twice the Gaussian tail") {
    const auto model = make_power_law(2.0, 1.0, 10'000);
    const oracle::PowerLawSampler sampler(2.0, 1.0, 10'000);
    const std::size_t bins = bin_mass(sampler).size();
    std::size_t alarms = 0;
    constexpr int kTrials = 100;
    for (int t = 0; t < kTrials; ++t) {
        std::mt19937_64 rng(1000 + t);
        std::vector<std::uint64_t> degrees(10'000);
        for (auto& d : degrees) d = sampler(rng);
        alarms += detect_distribution_anomaly(bin_degrees(degrees, Direction::fan_out, kLen), model, {}).size();
    }
    const double bound = oracle::normal_tail(3.0) * static_cast<double>(bins) * 2.0;
    CHECK(static_cast<double>(alarms) / kTrials <= bound);
}

TEST_CASE("raising the threshold never adds anomalies") {
    const auto model = make_power_law(2.0, 1.0, 10'000);
    const oracle::PowerLawSampler sampler(2.0, 1.5, 10'000);  // slightly off-model
    std::mt19937_64 rng(5);
    std::vector<std::uint64_t> degrees(20'000);
    for (auto& d : degrees) d = sampler(rng);
    const auto obs = bin_degrees(degrees, Direction::fan_out, kLen);
    std::size_t prev = SIZE_MAX;
    for (double z = 0.5; z <= 12.0; z += 0.5) {
        DetectionConfig c;
        c.z_threshold = z;
        const auto n = detect_distribution_anomaly(obs, model, c).size();
        CHECK(n <= prev);
        prev = n;
    }
}

TEST_CASE("consolidate folds windows per bin") {
    Anomaly a;
    a.bin = 4;
    a.score = 3.5;
    a.first_window = a.last_window = 12;
    a.excess_windows = {12};
    Anomaly b = a;
    b.first_window = b.last_window = 3;
    b.excess_windows = {3};
    b.score = 6.0;
    Anomaly c = a;
    c.bin = 2;
    const auto out = consolidate({a, b, c});
    REQUIRE(out.size() == 2);
    CHECK(out[0].bin == std::optional<std::size_t>(4));  // first window 3 sorts first
    CHECK(out[0].first_window == 3);
    CHECK(out[0].last_window == 12);
    CHECK(out[0].score == 6.0);
    CHECK(out[0].excess_windows == std::vector<std::size_t>{3, 12});
    CHECK(out[1].bin == std::optional<std::size_t>(2));
}

TEST_CASE("variance: the training series itself is not anomalous") {
    std::mt19937_64 rng(11);
    const auto series = noisy_series(kQuiet, 40, rng);
    const auto base = train_variance_baseline(series);
    CHECK(detect_variance_anomaly(series, base, {}).empty());
}

TEST_CASE("variance: uniform scaling is not anomalous") {
    std::mt19937_64 rng(12);
    const auto train = noisy_series(kQuiet, 40, rng);
    const auto base = train_variance_baseline(train);
    auto doubled = train;
    for (auto& d : doubled) {
        for (auto& c : d.counts) c *= 2;
        d.active_nodes *= 2;
    }
    // rescaled variance 4 var * (m / 2m)^2 equals the training variance
    CHECK(detect_variance_anomaly(doubled, base, {}).empty());
}

TEST_CASE("variance: periodic 75-source spikes flag the (8,16] bin") {
    std::mt19937_64 rng(13);
    const auto train = noisy_series(kQuiet, 40, rng);
    const auto base = train_variance_baseline(train);
    auto test = noisy_series(kQuiet, 100, rng);
    for (std::size_t w = 0; w < test.size(); w += 10) {
        test[w].counts[4] += 75;
        test[w].active_nodes += 75;
    }
    const auto found = detect_variance_anomaly(test, base, {}, 40);
    REQUIRE(found.size() == 1);
    CHECK(found[0].kind == AnomalyKind::variance);
    CHECK(found[0].bin == std::optional<std::size_t>(4));
    CHECK(found[0].first_window == 40);
    CHECK(found[0].last_window == 139);
    CHECK(found[0].score >= 3.0);
    CHECK(found[0].excess_windows.size() >= 10);
    CHECK(std::count(found[0].excess_windows.begin(), found[0].excess_windows.end(), 40) == 1);
}

TEST_CASE("variance preconditions") {
    std::mt19937_64 rng(14);
    const auto train = noisy_series(kQuiet, 10, rng);
    const auto base = train_variance_baseline(train);
    CHECK_THROWS_AS(detect_variance_anomaly(std::span(train).first(1), base, {}), InsufficientDataError);
    auto other = train;
    for (auto& d : other) d.direction = Direction::fan_in;
    CHECK_THROWS_AS(detect_variance_anomaly(other, base, {}), BinningMismatchError);
    auto longer = train;
    for (auto& d : longer) d.window_len_us = 2 * kLen;
    CHECK_THROWS_AS(detect_variance_anomaly(longer, base, {}), BinningMismatchError);
}

TEST_CASE("autocorrelation peak") {
    std::vector<double> spikes(100, 20.0);
    for (std::size_t i = 3; i < spikes.size(); i += 10) spikes[i] += 75.0;
    const auto p = autocorrelation_peak(spikes);
    REQUIRE(p);
    CHECK(p->lag == 10);
    CHECK(p->strength > 0.8);

    CHECK_FALSE(autocorrelation_peak(std::vector<double>(5, 1.0)));
    const auto flat = autocorrelation_peak(std::vector<double>(60, 7.0));
    REQUIRE(flat);
    CHECK(flat->lag == 0);

    // a level shift correlates at every short lag but has no period
    std::vector<double> step(60, 10.0);
    std::fill(step.begin() + 30, step.end(), 50.0);
    const auto s = autocorrelation_peak(step);
    REQUIRE(s);
    CHECK(s->lag == 0);
}

TEST_CASE("beacon period recovered from a spiking bin") {
    std::mt19937_64 rng(21);
    auto series = noisy_series(kQuiet, 100, rng);
    for (std::size_t w = 4; w < series.size(); w += 10) {
        series[w].counts[4] += 75;
        series[w].active_nodes += 75;
    }
    Anomaly parent;
    parent.kind = AnomalyKind::variance;
    parent.bin = 4;
    parent.first_window = 40;
    parent.last_window = 139;
    const auto r = detect_beacons(series, parent, {}, 40);
    REQUIRE(r.beacon);
    CHECK(r.reason.empty());
    CHECK(r.beacon->kind == AnomalyKind::beacon);
    REQUIRE(r.beacon->period_windows);
    CHECK(*r.beacon->period_windows >= 9);
    CHECK(*r.beacon->period_windows <= 11);
    CHECK(r.beacon->phase == 4);
    CHECK(r.beacon->score >= DetectionConfig{}.z_threshold);
    CHECK(r.beacon->bin == parent.bin);
}

TEST_CASE("beacon: none for constant, short or binless input") {
    std::vector<DegreeDistribution> flat(60, dist_of({100, 50, 20, 10, 5}));
    Anomaly parent;
    parent.bin = 3;
    parent.first_window = 0;
    parent.last_window = 59;
    auto r = detect_beacons(flat, parent, {});
    CHECK_FALSE(r.beacon);
    CHECK(r.reason.find("constant") != std::string::npos);

    parent.last_window = 4;
    r = detect_beacons(flat, parent, {});
    CHECK_FALSE(r.beacon);
    CHECK(r.reason.find("inconclusive") != std::string::npos);

    parent.bin.reset();
    r = detect_beacons(flat, parent, {});
    CHECK_FALSE(r.beacon);
    CHECK_FALSE(r.reason.empty());

    parent.bin = 3;
    parent.last_window = 60;
    CHECK_THROWS_AS(detect_beacons(flat, parent, {}), RangeError);
}

TEST_CASE("beacon false alarms on pure noise") {
    int emitted = 0;
    for (int t = 0; t < 100; ++t) {
        std::mt19937_64 rng(500 + t);
        const auto series = noisy_series(kQuiet, 100, rng);
        Anomaly parent;
        parent.bin = 4;
        parent.first_window = 0;
        parent.last_window = 99;
        if (detect_beacons(series, parent, {}).beacon) ++emitted;
    }
    CHECK(emitted <= 5);
}

namespace {

struct Injected {
    std::vector<TrafficMatrix> windows;
    std::set<NodeId> bg_nodes;
};

/// 2000 steady background sources (fixed links, degree 1..4) plus two actors
/// groups: A (40 sources x 10 dests) spikes at w % 10 == 0, B (30 sources x 40
/// dests) at w % 10 == 5.
Injected two_beacons(std::size_t n, bool inject) {
    Injected out;
    std::mt19937_64 rng(77);
    std::vector<std::vector<std::uint64_t>> links(2000);
    for (auto& l : links) {
        const auto deg = 1 + rng() % 4;
        for (std::uint64_t j = 0; j < deg; ++j) l.push_back(1'000'000 + rng() % 5000);
    }
    for (std::size_t w = 0; w < n; ++w) {
        MatrixBuilder b(static_cast<std::int64_t>(w) * kLen, kLen);
        for (std::size_t s = 0; s < links.size(); ++s)
            for (auto d : links[s]) b.add(node(10 + s), node(d), 1);
        if (inject && w % 10 == 0)
            for (std::uint64_t s = 0; s < 40; ++s)
                for (std::uint64_t d = 0; d < 10; ++d) b.add(node(5'000'000 + s), node(6'000'000 + d), 1);
        if (inject && w % 10 == 5)
            for (std::uint64_t s = 0; s < 30; ++s)
                for (std::uint64_t d = 0; d < 40; ++d) b.add(node(7'000'000 + s), node(8'000'000 + d), 1);
        out.windows.push_back(std::move(b).finish());
    }
    return out;
}

Anomaly spike_anomaly(std::size_t bin, std::size_t phase, std::size_t n) {
    Anomaly a;
    a.kind = AnomalyKind::variance;
    a.bin = bin;
    a.first_window = 0;
    a.last_window = n - 1;
    for (std::size_t w = phase; w < n; w += 10) a.excess_windows.push_back(w);
    return a;
}

}  // namespace

TEST_CASE("implicated nodes separate two disjoint beacons") {
    const auto data = two_beacons(60, true);
    const auto a = implicated_nodes(data.windows, spike_anomaly(4, 0, 60));
    const auto b = implicated_nodes(data.windows, spike_anomaly(6, 5, 60));
    REQUIRE(a.sources.size() == 40);
    REQUIRE(a.destinations.size() == 10);
    REQUIRE(b.sources.size() == 30);
    REQUIRE(b.destinations.size() == 40);
    for (auto s : a.sources) CHECK(s.value() / 1'000'000 == 5);
    for (auto d : a.destinations) CHECK(d.value() / 1'000'000 == 6);
    for (auto s : b.sources) CHECK(s.value() / 1'000'000 == 7);
    for (auto d : b.destinations) CHECK(d.value() / 1'000'000 == 8);
    CHECK(a.turnover == 0.0);
    CHECK(std::is_sorted(a.sources.begin(), a.sources.end()));
}

TEST_CASE("implicated nodes of a steady background are empty") {
    const auto data = two_beacons(60, false);
    const auto r = implicated_nodes(data.windows, spike_anomaly(2, 0, 60));
    CHECK(r.sources.empty());
    CHECK(r.destinations.empty());
}

TEST_CASE("anomaly listing order is window, bin, kind") {
    Anomaly a, b, c;
    a.first_window = 5;
    a.bin = 3;
    b.first_window = 5;
    b.bin = 4;
    c.first_window = 2;
    c.bin = 9;
    std::vector<Anomaly> v{a, b, c};
    std::sort(v.begin(), v.end(), anomaly_order);
    CHECK(v[0].first_window == 2);
    CHECK(v[1].bin == std::optional<std::size_t>(3));
    CHECK(v[2].bin == std::optional<std::size_t>(4));
}
