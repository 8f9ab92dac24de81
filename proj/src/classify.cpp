#include "netobs/classify.hpp"

#include <absl/container/flat_hash_set.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "netobs/error.hpp"
#include "netobs/synth.hpp"

namespace netobs {

namespace {

constexpr AttackLabel kAllLabels[] = {AttackLabel::DDoS,        AttackLabel::P2P_DoS,
                                      AttackLabel::PortScan,    AttackLabel::NetworkScan,
                                      AttackLabel::BotCC_Beacon, AttackLabel::Unknown};

double parse_double(std::string_view key, std::string_view v) {
    const std::string s(v);
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(s, &used);
    } catch (const std::logic_error&) {
        used = 0;
    }
    if (used == 0 || used != s.size())
        throw ParseError("classify." + std::string(key) + ": expected a number, got '" + s + "'");
    return out;
}

std::uint64_t parse_count(std::string_view key, std::string_view v) {
    const double d = parse_double(key, v);
    if (d < 0 || d != std::floor(d) || d > 1e18)
        throw ParseError("classify." + std::string(key) + ": expected a non-negative integer, got '" +
                         std::string(v) + "'");
    return static_cast<std::uint64_t>(d);
}

}  // namespace

std::string_view to_string(AttackLabel l) {
    switch (l) {
        case AttackLabel::DDoS: return "DDoS";
        case AttackLabel::P2P_DoS: return "P2P_DoS";
        case AttackLabel::PortScan: return "PortScan";
        case AttackLabel::NetworkScan: return "NetworkScan";
        case AttackLabel::BotCC_Beacon: return "BotCC_Beacon";
        case AttackLabel::Unknown: return "Unknown";
    }
    return "Unknown";
}

AttackLabel parse_attack_label(std::string_view text) {
    for (auto l : kAllLabels)
        if (text == to_string(l)) return l;
    throw ParseError("unknown attack label '" + std::string(text) + "'");
}

void RuleConfig::validate() const {
    if (!(beacon_min_periodicity > 0.0 && beacon_min_periodicity <= 1.0))
        throw ParameterError("classify.beacon_min_periodicity must be in (0, 1]");
    if (!(periodicity_min_score >= 0.0)) throw ParameterError("classify.periodicity_min_score must be >= 0");
    if (!(high_packets_per_link > 0.0)) throw ParameterError("classify.high_packets_per_link must be > 0");
    if (!(network_scan_max_packets_per_link > 0.0))
        throw ParameterError("classify.network_scan_max_packets_per_link must be > 0");
}

std::vector<std::string> RuleConfig::keys() {
    return {"beacon_min_periodicity", "periodicity_min_score", "ddos_min_sources",
            "few_endpoints",          "high_packets_per_link", "port_scan_min_ports",
            "network_scan_min_targets", "network_scan_max_packets_per_link"};
}

void RuleConfig::set(std::string_view key, std::string_view value) {
    if (key == "beacon_min_periodicity") beacon_min_periodicity = parse_double(key, value);
    else if (key == "periodicity_min_score") periodicity_min_score = parse_double(key, value);
    else if (key == "ddos_min_sources") ddos_min_sources = parse_count(key, value);
    else if (key == "few_endpoints") few_endpoints = parse_count(key, value);
    else if (key == "high_packets_per_link") high_packets_per_link = parse_double(key, value);
    else if (key == "port_scan_min_ports") port_scan_min_ports = parse_count(key, value);
    else if (key == "network_scan_min_targets") network_scan_min_targets = parse_count(key, value);
    else if (key == "network_scan_max_packets_per_link") network_scan_max_packets_per_link = parse_double(key, value);
    else throw ParseError("unknown config key classify." + std::string(key));
}

FeatureVector extract_features(const Anomaly& anomaly, std::span<const TrafficMatrix> windows,
                               std::span<const FlowRecord> flows, const RuleConfig& rules) {
    if (anomaly.last_window < anomaly.first_window)
        throw RangeError("anomaly window range is reversed");
    std::vector<std::size_t> excess = anomaly.excess_windows;
    if (excess.empty())
        for (std::size_t w = anomaly.first_window; w <= anomaly.last_window; ++w) excess.push_back(w);
    auto require = [&](std::size_t w) {
        if (w >= windows.size() || !windows[w].has_window())
            throw RangeError("window " + std::to_string(w) + " needed by the anomaly is not available");
    };
    for (std::size_t w = anomaly.first_window; w <= anomaly.last_window; ++w) require(w);
    for (auto w : excess) require(w);

    FeatureVector f;
    f.src_set_size = anomaly.sources.size();
    f.dst_set_size = anomaly.destinations.size();
    if (anomaly.sources.empty() || anomaly.destinations.empty()) return f;

    const absl::flat_hash_set<NodeId> src(anomaly.sources.begin(), anomaly.sources.end());
    const absl::flat_hash_set<NodeId> dst(anomaly.destinations.begin(), anomaly.destinations.end());

    struct Member {
        std::uint64_t links = 0, packets = 0;
    };
    auto member_traffic = [&](const TrafficMatrix& m) {
        Member t;
        for (const auto& s : anomaly.sources)
            for (const auto& e : m.row(s))
                if (dst.contains(e.dst)) {
                    ++t.links;
                    t.packets += e.count;
                }
        return t;
    };

    std::vector<double> series;
    for (std::size_t w = anomaly.first_window; w <= anomaly.last_window; ++w)
        series.push_back(static_cast<double>(member_traffic(windows[w]).packets));

    std::uint64_t links = 0, packets = 0, total = 0;
    for (auto w : excess) {
        const auto t = member_traffic(windows[w]);
        links += t.links;
        packets += t.packets;
        total += windows[w].total_packets();
    }
    f.mean_packets_per_link = links ? static_cast<double>(packets) / static_cast<double>(links) : 0.0;
    f.traffic_share = total ? std::min(1.0, static_cast<double>(packets) / static_cast<double>(total)) : 0.0;

    if (!flows.empty()) {
        std::vector<std::pair<std::int64_t, std::int64_t>> spans;
        for (auto w : excess) spans.emplace_back(windows[w].window_start_us(), windows[w].window_end_us());
        std::sort(spans.begin(), spans.end());
        absl::flat_hash_set<std::uint16_t> ports;
        for (const auto& r : flows) {
            if (!src.contains(r.src) || !dst.contains(r.dst)) continue;
            auto it = std::upper_bound(spans.begin(), spans.end(), std::make_pair(r.ts_us, INT64_MAX));
            if (it == spans.begin() || r.ts_us >= std::prev(it)->second) continue;
            ports.insert(r.dst_port);
        }
        f.unique_dst_ports = ports.size();
    }

    if (const auto peak = autocorrelation_peak(series); peak && peak->lag > 0) {
        const double r = std::clamp(peak->strength, 0.0, 1.0);
        if (r * std::sqrt(static_cast<double>(series.size())) >= rules.periodicity_min_score)
            f.periodicity_strength = r;
    }
    return f;
}

AttackLabel classify(const FeatureVector& f, const RuleConfig& r) {
    const bool few_src = f.src_set_size >= 1 && f.src_set_size <= r.few_endpoints;
    const bool few_dst = f.dst_set_size >= 1 && f.dst_set_size <= r.few_endpoints;
    const bool high = f.mean_packets_per_link >= r.high_packets_per_link;
    const bool many_ports = f.unique_dst_ports >= r.port_scan_min_ports;
    if (f.periodicity_strength >= r.beacon_min_periodicity) return AttackLabel::BotCC_Beacon;
    if (f.src_set_size >= r.ddos_min_sources && few_dst && high) return AttackLabel::DDoS;
    // a single link hammered on many ports is a port scan, not a flood
    if (few_src && few_dst && high && !many_ports) return AttackLabel::P2P_DoS;
    if (few_src && few_dst && many_ports) return AttackLabel::PortScan;
    if (few_src && f.dst_set_size >= r.network_scan_min_targets &&
        f.mean_packets_per_link <= r.network_scan_max_packets_per_link)
        return AttackLabel::NetworkScan;
    return AttackLabel::Unknown;
}

Evaluation evaluate(std::span<const FractionBucket> buckets, const RuleConfig& rules) {
    rules.validate();
    Evaluation ev;
    for (const auto& b : buckets) {
        if (b.samples.empty()) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "attack fraction %g has no labeled samples; omitted", b.fraction);
            ev.warnings.emplace_back(buf);
            continue;
        }
        std::size_t correct = 0;
        for (const auto& s : b.samples) correct += classify(s.features, rules) == s.truth;
        ev.curve.push_back({b.fraction, static_cast<double>(correct) / static_cast<double>(b.samples.size()),
                            b.samples.size()});
    }
    std::stable_sort(ev.curve.begin(), ev.curve.end(),
                     [](const AccuracyPoint& a, const AccuracyPoint& b) { return a.fraction < b.fraction; });
    return ev;
}

void write_accuracy_curve(std::ostream& out, std::span<const AccuracyPoint> curve) {
    out << "fraction,accuracy,n\n";
    char buf[96];
    for (const auto& p : curve) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu\n", p.fraction, p.accuracy, p.n);
        out << buf;
    }
}

// --- labeled synthetic suite -------------------------------------------------

FractionBucket labeled_suite(double fraction, std::uint64_t seed) {
    using namespace synth;
    if (!(fraction > 0.0 && fraction < 1.0)) throw ParameterError("attack fraction must be in (0, 1)");

    ScenarioSpec base;
    base.seed = seed;
    const double background = ScenarioGenerator(base).expected_background_packets();
    const double attack = fraction * background / (1.0 - fraction);
    auto count = [](double x) { return static_cast<std::uint64_t>(std::max(1.0, std::round(x))); };

    FractionBucket bucket;
    bucket.fraction = fraction;
    const InjectionKind kinds[] = {InjectionKind::ddos, InjectionKind::p2p_dos, InjectionKind::port_scan,
                                   InjectionKind::network_scan, InjectionKind::botcc};
    const Anonymizer anon("suite-" + std::to_string(seed));
    for (auto kind : kinds) {
        ScenarioSpec s = base;
        InjectionSpec j;
        j.kind = kind;
        j.id = std::string(to_string(kind));
        j.jitter = true;
        s.windows = 3;
        j.start_window = 1;
        j.duration_windows = 2;
        AttackLabel truth = AttackLabel::Unknown;
        switch (kind) {
            case InjectionKind::ddos:
                j.n_sources = 1000;
                j.packets_per_window = count(attack);
                truth = AttackLabel::DDoS;
                break;
            case InjectionKind::p2p_dos:
                j.packets_per_window = count(attack);
                truth = AttackLabel::P2P_DoS;
                break;
            case InjectionKind::port_scan:
                j.n_ports = std::min<std::uint64_t>(65535, count(attack));
                j.packets_per_target = count(attack / static_cast<double>(j.n_ports));
                truth = AttackLabel::PortScan;
                break;
            case InjectionKind::network_scan:
                j.n_targets = count(attack);
                truth = AttackLabel::NetworkScan;
                break;
            case InjectionKind::botcc:
                s.windows = 40;
                j.start_window = 0;
                j.duration_windows = 40;
                j.n_clients = 75;
                j.n_cc = 10;
                j.period_windows = 10;
                j.packets_per_link = count(attack / 750.0);
                truth = AttackLabel::BotCC_Beacon;
                break;
        }
        s.injections.push_back(j);

        const ScenarioGenerator gen(s);
        const IdTable ids(gen, anon);
        const InjectionTruth& t = gen.truth(0);
        Anomaly a;
        a.kind = AnomalyKind::variance;
        a.first_window = j.start_window;
        a.last_window = j.start_window + j.duration_windows - 1;
        a.excess_windows = t.active_windows;
        for (auto x : t.sources) a.sources.push_back(ids.id(x));
        for (auto x : t.destinations) a.destinations.push_back(ids.id(x));
        std::sort(a.sources.begin(), a.sources.end());
        std::sort(a.destinations.begin(), a.destinations.end());

        std::vector<TrafficMatrix> windows;
        for (std::size_t w = 0; w < gen.windows(); ++w) windows.push_back(gen.window_matrix(w, ids));
        std::vector<FlowRecord> flows;
        std::vector<SynthFlow> buf;
        for (auto w : t.active_windows) {
            gen.window_flows(w, buf);
            for (const auto& fl : buf) flows.push_back(ids.record(fl));
        }
        bucket.samples.push_back({extract_features(a, windows, flows), truth});
    }
    return bucket;
}

}  // namespace netobs
