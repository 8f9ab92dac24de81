#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "netobs/classify.hpp"
#include "netobs/error.hpp"
#include "netobs/synth.hpp"

using namespace netobs;

namespace {

FeatureVector features(std::uint64_t src, std::uint64_t dst, double ppl, std::uint64_t ports = 1,
                       double periodicity = 0.0) {
    FeatureVector f;
    f.src_set_size = src;
    f.dst_set_size = dst;
    f.mean_packets_per_link = ppl;
    f.unique_dst_ports = ports;
    f.periodicity_strength = periodicity;
    return f;
}

constexpr std::int64_t kLen = 60'000'000;

/// 10 windows; sources 1..3 hit destination 100 with `packets` each in windows 2 and 5,
/// sources 10..59 talk to 200..209 at one packet every window.
std::vector<TrafficMatrix> toy_windows(std::uint64_t packets, std::uint64_t offset = 0) {
    std::vector<TrafficMatrix> out;
    for (std::int64_t w = 0; w < 10; ++w) {
        MatrixBuilder b(w * kLen, kLen);
        if (w == 2 || w == 5)
            for (std::uint64_t s = 1; s <= 3; ++s) b.add(NodeId(offset + s), NodeId(offset + 100), packets);
        for (std::uint64_t s = 10; s < 60; ++s) b.add(NodeId(offset + s), NodeId(offset + 200 + s % 10), 1);
        out.push_back(std::move(b).finish());
    }
    return out;
}

Anomaly toy_anomaly(std::uint64_t offset = 0) {
    Anomaly a;
    a.first_window = 0;
    a.last_window = 9;
    a.excess_windows = {2, 5};
    for (std::uint64_t s = 1; s <= 3; ++s) a.sources.push_back(NodeId(offset + s));
    a.destinations = {NodeId(offset + 100)};
    return a;
}

}  // namespace

TEST_CASE("label names round-trip") {
    for (auto l : {AttackLabel::DDoS, AttackLabel::P2P_DoS, AttackLabel::PortScan, AttackLabel::NetworkScan,
                   AttackLabel::BotCC_Beacon, AttackLabel::Unknown})
        CHECK(parse_attack_label(to_string(l)) == l);
    CHECK_THROWS_AS(parse_attack_label("Worm"), ParseError);
}

TEST_CASE("rule examples") {
    CHECK(classify(features(1000, 1, 50.0)) == AttackLabel::DDoS);
    CHECK(classify(features(1, 500, 1.0)) == AttackLabel::NetworkScan);
    CHECK(classify(features(1, 1, 1.0, 200)) == AttackLabel::PortScan);
    CHECK(classify(features(1, 1, 500.0, 2)) == AttackLabel::P2P_DoS);
    CHECK(classify(features(75, 10, 2.0, 1, 0.9)) == AttackLabel::BotCC_Beacon);
    CHECK(classify(features(40, 40, 2.0)) == AttackLabel::Unknown);
    CHECK(classify(FeatureVector{}) == AttackLabel::Unknown);
}

TEST_CASE("rule precedence and boundaries") {
    // periodic traffic wins over every other shape
    CHECK(classify(features(1000, 1, 50.0, 1, 0.5)) == AttackLabel::BotCC_Beacon);
    CHECK(classify(features(1000, 1, 50.0, 1, 0.49)) == AttackLabel::DDoS);
    CHECK(classify(features(99, 1, 50.0)) == AttackLabel::Unknown);
    CHECK(classify(features(1000, 4, 50.0)) == AttackLabel::Unknown);
    CHECK(classify(features(1000, 1, 15.9)) == AttackLabel::Unknown);
    // one link flooded across many ports reads as a port scan
    CHECK(classify(features(1, 1, 500.0, 64)) == AttackLabel::PortScan);
    CHECK(classify(features(1, 1, 500.0, 63)) == AttackLabel::P2P_DoS);
    CHECK(classify(features(1, 64, 3.0)) == AttackLabel::NetworkScan);
    CHECK(classify(features(1, 63, 3.0)) == AttackLabel::Unknown);
    CHECK(classify(features(1, 500, 3.5)) == AttackLabel::Unknown);

    RuleConfig r;
    r.ddos_min_sources = 50;
    CHECK(classify(features(60, 1, 50.0), r) == AttackLabel::DDoS);
}

TEST_CASE("rule config keys") {
    RuleConfig r;
    for (const auto& k : RuleConfig::keys()) CHECK_NOTHROW(r.set(k, "7"));
    CHECK(r.high_packets_per_link == 7.0);
    CHECK(r.few_endpoints == 7);
    CHECK_THROWS_AS(r.set("few_endpoints", "2.5"), ParseError);
    CHECK_THROWS_AS(r.set("few_endpoints", "-1"), ParseError);
    CHECK_THROWS_AS(r.set("beacon_min_periodicity", "x"), ParseError);
    CHECK_THROWS_AS(r.set("nonsense", "1"), ParseError);
    RuleConfig bad;
    bad.beacon_min_periodicity = 0.0;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    bad = {};
    bad.high_packets_per_link = 0.0;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("features of member traffic") {
    const auto windows = toy_windows(40);
    std::vector<FlowRecord> flows;
    for (auto w : {2, 5})
        for (std::uint16_t port = 1; port <= 5; ++port) {
            FlowRecord f;
            f.ts_us = w * kLen + port;
            f.src = NodeId(1);
            f.dst = NodeId(100);
            f.dst_port = port;
            flows.push_back(f);
        }
    FlowRecord outsider;  // a non-member link in the same window
    outsider.ts_us = 2 * kLen;
    outsider.src = NodeId(10);
    outsider.dst = NodeId(200);
    outsider.dst_port = 999;
    flows.push_back(outsider);

    const auto f = extract_features(toy_anomaly(), windows, flows);
    CHECK(f.src_set_size == 3);
    CHECK(f.dst_set_size == 1);
    CHECK(f.mean_packets_per_link == 40.0);
    CHECK(f.unique_dst_ports == 5);
    // member packets 120 of 170 in each excess window
    CHECK(f.traffic_share == doctest::Approx(120.0 / 170.0));
    // two spikes in ten windows are too few for a period
    CHECK(f.periodicity_strength == 0.0);
    CHECK(classify(f) == AttackLabel::P2P_DoS);
}

TEST_CASE("features ignore node identity") {
    const auto a = extract_features(toy_anomaly(), toy_windows(40), {});
    const auto b = extract_features(toy_anomaly(1'000'000), toy_windows(40, 1'000'000), {});
    CHECK(a == b);
    CHECK(classify(a) == classify(b));
}

TEST_CASE("empty anomaly and missing windows") {
    Anomaly empty;
    empty.first_window = 0;
    empty.last_window = 3;
    const auto f = extract_features(empty, toy_windows(4), {});
    CHECK(f == FeatureVector{});

    auto a = toy_anomaly();
    a.last_window = 12;
    CHECK_THROWS_AS(extract_features(a, toy_windows(4), {}), RangeError);
    a = toy_anomaly();
    a.excess_windows = {11};
    CHECK_THROWS_AS(extract_features(a, toy_windows(4), {}), RangeError);
    a = toy_anomaly();
    auto windows = toy_windows(4);
    windows[3] = TrafficMatrix{};  // no window at all
    CHECK_THROWS_AS(extract_features(a, windows, {}), RangeError);
}

TEST_CASE("ddos traffic share matches the injected fraction") {
    using namespace synth;
    ScenarioSpec s;
    s.seed = 4;
    s.windows = 2;
    s.background.n_sources = 2000;
    s.background.n_destinations = 4000;
    InjectionSpec d;
    d.kind = InjectionKind::ddos;
    d.start_window = 1;
    d.duration_windows = 1;
    d.packets_per_window = 9000;
    d.jitter = true;
    s.injections.push_back(d);
    const ScenarioGenerator g(s);
    const Anonymizer anon("share");
    const IdTable ids(g, anon);

    // ground truth straight from the labeled flows
    std::vector<SynthFlow> buf;
    g.window_flows(1, buf);
    double injected = 0, total = 0;
    for (const auto& f : buf) {
        total += static_cast<double>(f.packets);
        if (f.injection == 0) injected += static_cast<double>(f.packets);
    }

    Anomaly a;
    a.first_window = a.last_window = 1;
    a.excess_windows = {1};
    for (auto x : g.truth(0).sources) a.sources.push_back(ids.id(x));
    for (auto x : g.truth(0).destinations) a.destinations.push_back(ids.id(x));
    std::sort(a.sources.begin(), a.sources.end());
    const std::vector<TrafficMatrix> windows{g.window_matrix(0, ids), g.window_matrix(1, ids)};
    const auto f = extract_features(a, windows, {});
    CHECK(std::abs(f.traffic_share - injected / total) <= 0.01);
    CHECK(f.src_set_size == 1000);
    CHECK(f.dst_set_size == 1);
}

TEST_CASE("labeled suite samples") {
    const auto bucket = labeled_suite(0.1, 2);
    CHECK(bucket.fraction == 0.1);
    REQUIRE(bucket.samples.size() == 5);
    for (const auto& s : bucket.samples) {
        INFO(to_string(s.truth));
        CHECK(classify(s.features) == s.truth);
    }
    const auto beacon = std::find_if(bucket.samples.begin(), bucket.samples.end(),
                                     [](const LabeledSample& s) { return s.truth == AttackLabel::BotCC_Beacon; });
    REQUIRE(beacon != bucket.samples.end());
    CHECK(beacon->features.src_set_size == 75);
    CHECK(beacon->features.dst_set_size == 10);
    CHECK(beacon->features.periodicity_strength >= 0.5);

    const auto ddos = std::find_if(bucket.samples.begin(), bucket.samples.end(),
                                   [](const LabeledSample& s) { return s.truth == AttackLabel::DDoS; });
    REQUIRE(ddos != bucket.samples.end());
    CHECK(std::abs(ddos->features.traffic_share - 0.1) <= 0.01);

    CHECK_THROWS_AS(labeled_suite(0.0, 1), ParameterError);
    CHECK_THROWS_AS(labeled_suite(1.0, 1), ParameterError);
}

TEST_CASE("evaluate") {
    std::vector<FractionBucket> buckets(3);
    buckets[0].fraction = 0.1;
    buckets[0].samples = {{features(1000, 1, 50.0), AttackLabel::DDoS},
                          {features(1, 500, 1.0), AttackLabel::NetworkScan}};
    buckets[1].fraction = 0.01;
    buckets[1].samples = {{features(1000, 1, 50.0), AttackLabel::DDoS},
                          {features(40, 40, 2.0), AttackLabel::PortScan}};
    buckets[2].fraction = 0.5;  // empty
    const auto ev = evaluate(buckets);
    REQUIRE(ev.curve.size() == 2);
    CHECK(ev.curve[0] == AccuracyPoint{0.01, 0.5, 2});
    CHECK(ev.curve[1] == AccuracyPoint{0.1, 1.0, 2});
    REQUIRE(ev.warnings.size() == 1);
    CHECK(ev.warnings[0].find("0.5") != std::string::npos);

    std::ostringstream out;
    write_accuracy_curve(out, ev.curve);
    CHECK(out.str() == "fraction,accuracy,n\n0.01,0.5,2\n0.10000000000000001,1,2\n");
}
