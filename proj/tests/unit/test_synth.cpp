#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "netobs/degree.hpp"
#include "netobs/error.hpp"
#include "netobs/power_law.hpp"
#include "netobs/scale.hpp"
#include "netobs/synth.hpp"

using namespace netobs;
using namespace netobs::synth;

namespace {

ScenarioSpec small(std::uint64_t seed = 3, std::size_t windows = 6) {
    ScenarioSpec s;
    s.seed = seed;
    s.windows = windows;
    s.background.n_sources = 500;
    s.background.n_destinations = 1000;
    return s;
}

InjectionSpec injection(InjectionKind kind, std::size_t start, std::size_t duration) {
    InjectionSpec i;
    i.kind = kind;
    i.id = std::string(to_string(kind));
    i.start_window = start;
    i.duration_windows = duration;
    return i;
}

std::vector<SynthFlow> flows_of(const ScenarioGenerator& g, std::size_t w) {
    std::vector<SynthFlow> out;
    g.window_flows(w, out);
    return out;
}

bool same_flow(const SynthFlow& a, const SynthFlow& b) {
    return a.ts_us == b.ts_us && a.src == b.src && a.dst == b.dst && a.src_port == b.src_port &&
           a.dst_port == b.dst_port && a.packets == b.packets && a.bytes == b.bytes &&
           a.injection == b.injection;
}

std::pair<std::string, std::string> outputs(const ScenarioSpec& s) {
    ScenarioGenerator g(s);
    std::ostringstream f, l;
    write_scenario_outputs(g, f, l);
    return {f.str(), l.str()};
}

}  // namespace

TEST_CASE("injection kind names round-trip") {
    for (auto k : {InjectionKind::botcc, InjectionKind::ddos, InjectionKind::p2p_dos, InjectionKind::port_scan,
                   InjectionKind::network_scan})
        CHECK(parse_injection_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_injection_kind("worm"), ParseError);
    CHECK(ipv4_text(kSourceBase) == "10.0.0.1");
    CHECK(ipv4_text(kActorBase) == "100.64.0.1");
}

TEST_CASE("same seed gives byte-identical outputs; another seed does not") {
    auto s = small();
    s.injections.push_back(injection(InjectionKind::port_scan, 1, 2));
    const auto a = outputs(s), b = outputs(s);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
    s.seed = 4;
    CHECK(outputs(s).first != a.first);
}

TEST_CASE("window output does not depend on generation order") {
    const ScenarioGenerator g(small());
    const auto w3 = flows_of(g, 3);
    (void)flows_of(g, 0);
    const auto again = flows_of(g, 3);
    REQUIRE(w3.size() == again.size());
    CHECK(std::equal(w3.begin(), w3.end(), again.begin(), same_flow));
}

TEST_CASE("zero sources give an empty stream") {
    auto s = small();
    s.background.n_sources = 0;
    const ScenarioGenerator g(s);
    for (std::size_t w = 0; w < g.windows(); ++w) CHECK(flows_of(g, w).empty());
    CHECK(g.expected_background_packets() == 0.0);
}

TEST_CASE("background fan-out refits to the generating exponent") {
    ScenarioSpec s;  // 10^4 sources, alpha 2, delta 1
    const ScenarioGenerator g(s);
    const auto fan_out = g.background_fan_out();
    CHECK(fan_out.size() == 10'000);
    const auto m = fit_power_law(fan_out);
    CHECK(m.alpha >= 1.9);
    CHECK(m.alpha <= 2.1);

    // and from the traffic itself: active sources show their full fan-out
    const Anonymizer anon("fit");
    const IdTable ids(g, anon);
    const auto seen = degree_values(g.window_matrix(0, ids), Direction::fan_out);
    const auto m2 = fit_power_law(seen);
    CHECK(m2.alpha >= 1.9);
    CHECK(m2.alpha <= 2.1);
    CHECK(static_cast<double>(seen.size()) == doctest::Approx(9000).epsilon(0.05));
}

TEST_CASE("background parameter errors") {
    auto s = small();
    s.background.alpha = 0.0;
    CHECK_THROWS_AS(ScenarioGenerator{s}, ParameterError);
    s = small();
    s.background.alpha = 0.9;  // infinite mean without a cap
    CHECK_THROWS_AS(ScenarioGenerator{s}, ParameterError);
    s.background.d_max = 50;
    CHECK_NOTHROW(ScenarioGenerator{s});
    s = small();
    s.background.delta = -1.0;
    CHECK_THROWS_AS(ScenarioGenerator{s}, ParameterError);
    s = small();
    s.windows = 0;
    CHECK_THROWS_AS(ScenarioGenerator{s}, ParameterError);
    s = small();
    s.background.d_max = 5000;  // above n_destinations
    CHECK_THROWS_AS(ScenarioGenerator{s}, ParameterError);
}

TEST_CASE("botcc spikes carry exactly n_clients x n_cc labeled flows") {
    auto s = small(5, 40);
    auto b = injection(InjectionKind::botcc, 5, 30);
    b.n_clients = 75;
    b.n_cc = 10;
    b.period_windows = 10;
    b.phase = 2;
    s.injections.push_back(b);
    const ScenarioGenerator g(s);
    const auto& t = g.truth(0);
    CHECK(t.active_windows == std::vector<std::size_t>{7, 17, 27});
    CHECK(t.sources.size() == 75);
    CHECK(t.destinations.size() == 10);
    for (std::size_t w = 0; w < g.windows(); ++w) {
        const auto fl = flows_of(g, w);
        const auto labeled = std::count_if(fl.begin(), fl.end(), [](const SynthFlow& f) { return f.injection == 0; });
        const bool spike = std::count(t.active_windows.begin(), t.active_windows.end(), w) == 1;
        CHECK(labeled == (spike ? 750 : 0));
        for (const auto& f : fl)
            if (f.injection == 0) {
                CHECK(std::binary_search(t.sources.begin(), t.sources.end(), f.src));
                CHECK(std::binary_search(t.destinations.begin(), t.destinations.end(), f.dst));
            }
    }
}

TEST_CASE("rotating clients draw a fresh set per spike") {
    auto s = small(5, 30);
    auto b = injection(InjectionKind::botcc, 0, 30);
    b.rotate_clients = true;
    s.injections.push_back(b);
    const ScenarioGenerator g(s);
    const auto a = g.spike_clients(0, 0), c = g.spike_clients(0, 10);
    CHECK(a.size() == 75);
    CHECK(c.size() == 75);
    std::vector<std::uint32_t> both;
    std::set_intersection(a.begin(), a.end(), c.begin(), c.end(), std::back_inserter(both));
    CHECK(both.empty());

    s.injections[0].rotate_clients = false;
    const ScenarioGenerator fixed(s);
    CHECK(fixed.spike_clients(0, 0) == fixed.spike_clients(0, 20));
}

TEST_CASE("a zero-length injection leaves the stream unchanged") {
    auto s = small();
    const auto plain = outputs(s).first;
    s.injections.push_back(injection(InjectionKind::ddos, 2, 0));
    const auto with = outputs(s);
    // the provenance line is the same too: injections are not listed there
    CHECK(with.first == plain);
    std::istringstream labels(with.second);
    std::string line;
    int lines = 0;
    while (std::getline(labels, line)) ++lines;
    CHECK(lines == 2);  // provenance and header only
}

TEST_CASE("port scan covers exactly n_ports distinct destination ports") {
    auto s = small();
    s.injections.push_back(injection(InjectionKind::port_scan, 1, 1));
    const ScenarioGenerator g(s);
    std::set<std::uint16_t> ports;
    std::set<std::pair<std::uint32_t, std::uint32_t>> links;
    for (const auto& f : flows_of(g, 1))
        if (f.injection == 0) {
            ports.insert(f.dst_port);
            links.insert({f.src, f.dst});
        }
    CHECK(ports.size() == 200);
    CHECK(links.size() == 1);
}

TEST_CASE("network scan fan-out lands in the (256,512] bin") {
    auto s = small();
    s.injections.push_back(injection(InjectionKind::network_scan, 2, 1));
    const ScenarioGenerator g(s);
    const Anonymizer anon("scan");
    const IdTable ids(g, anon);
    const auto m = g.window_matrix(2, ids);
    const NodeId scanner = ids.id(g.truth(0).sources.at(0));
    std::uint64_t fan_out = 0;
    for (const auto& nd : node_degrees(m, Direction::fan_out))
        if (nd.node == scanner) fan_out = nd.degree;
    CHECK(fan_out == 500);
    CHECK(bins::index_of(fan_out) == 9);
    CHECK(bins::lo(9) == 256);
    CHECK(bins::hi(9) == 512);

    for (const auto& f : flows_of(g, 2))
        if (f.injection == 0) CHECK(f.packets <= 3);
}

TEST_CASE("ddos defaults follow the scaled campaign bandwidth") {
    auto s = small();
    s.packet_budget = 50'000;
    s.injections.push_back(injection(InjectionKind::ddos, 0, 2));
    const ScenarioGenerator g(s);
    // campaign bandwidth in 1 KB packets over a 60 s window, times 1e-6
    const double expect = std::round(AdversaryParams{}.ddos_bandwidth_Bps / 1000.0 * 60.0 * 1e-6);
    CHECK(g.truth(0).packets_per_active_window == std::max<std::uint64_t>(1000, static_cast<std::uint64_t>(expect)));
    std::set<std::uint32_t> srcs, dsts;
    std::uint64_t packets = 0;
    for (const auto& f : flows_of(g, 0))
        if (f.injection == 0) {
            srcs.insert(f.src);
            dsts.insert(f.dst);
            packets += f.packets;
        }
    CHECK(srcs.size() == 1000);
    CHECK(dsts.size() == 1);
    CHECK(packets == g.truth(0).packets_per_active_window);
}

TEST_CASE("injection errors") {
    auto s = small();
    auto d = injection(InjectionKind::ddos, 0, 1);
    d.packets_per_window = 10'000'000;  // far above the background volume
    s.injections = {d};
    CHECK_THROWS_AS(ScenarioGenerator{s}, ParameterError);
    s.packet_budget = 20'000'000;
    CHECK_NOTHROW(ScenarioGenerator{s});

    s = small();
    d = injection(InjectionKind::ddos, 0, 1);
    d.packets_per_window = 2000;
    d.target = kSourceBase + 3;  // a background source
    s.injections = {d};
    CHECK_THROWS_AS(ScenarioGenerator{s}, ParameterError);
    s.injections[0].target = kActorBase + 5;
    CHECK_THROWS_AS(ScenarioGenerator{s}, ParameterError);
    s.injections[0].target = 0xC0A80001;  // 192.168.0.1 is free
    CHECK_NOTHROW(ScenarioGenerator{s});

    s = small();
    s.injections = {injection(InjectionKind::botcc, 4, 5)};  // past window 5
    CHECK_THROWS_AS(ScenarioGenerator{s}, ParameterError);
    s.injections = {injection(InjectionKind::network_scan, 0, 1)};
    s.injections[0].packets_per_target = 4;
    CHECK_THROWS_AS(ScenarioGenerator{s}, ParameterError);
    s.injections = {injection(InjectionKind::port_scan, 0, 1)};
    s.injections[0].n_ports = 70'000;
    CHECK_THROWS_AS(ScenarioGenerator{s}, ParameterError);

    const ScenarioGenerator g(small());
    CHECK_THROWS_AS(g.truth(0), RangeError);
    std::vector<SynthFlow> buf;
    CHECK_THROWS_AS(g.window_flows(6, buf), RangeError);
}

TEST_CASE("window_matrix equals build_window over the anonymized flows") {
    auto s = small(9, 12);
    s.injections.push_back(injection(InjectionKind::ddos, 1, 2));
    s.injections.push_back(injection(InjectionKind::network_scan, 2, 1));
    auto b = injection(InjectionKind::botcc, 0, 12);
    b.period_windows = 3;
    b.jitter = true;
    s.injections.push_back(b);
    const ScenarioGenerator g(s);
    const Anonymizer anon("eq");
    const IdTable ids(g, anon);
    for (std::size_t w = 0; w < 4; ++w) {
        std::vector<FlowRecord> recs;
        for (const auto& f : flows_of(g, w)) recs.push_back(ids.record(f));
        const auto ref = build_window(recs, g.window_start_us(w), s.window_len_us);
        CHECK(g.window_matrix(w, ids) == ref);
    }
    const ScenarioGenerator other(s);
    CHECK_THROWS_AS(other.window_matrix(0, ids), ParameterError);
}

TEST_CASE("ids match the text form of each address") {
    const ScenarioGenerator g(small());
    const Anonymizer anon("text");
    const IdTable ids(g, anon);
    for (std::uint32_t a : {kSourceBase, kSourceBase + 17, kDestinationBase + 3, kActorBase, 0x08080808u})
        CHECK(ids.id(a) == anon(ipv4_text(a)));
}

TEST_CASE("packets are conserved and every injected flow is labeled once") {
    auto s = small(11, 5);
    s.injections.push_back(injection(InjectionKind::p2p_dos, 0, 2));
    s.injections.push_back(injection(InjectionKind::port_scan, 3, 1));
    const ScenarioGenerator g(s);

    std::uint64_t bg = 0, injected = 0, flows = 0;
    std::map<std::size_t, std::string> expected_labels;
    for (std::size_t w = 0; w < g.windows(); ++w) {
        const auto fl = flows_of(g, w);
        CHECK(std::is_sorted(fl.begin(), fl.end(), [](const SynthFlow& a, const SynthFlow& b) {
            return a.ts_us < b.ts_us;
        }));
        for (const auto& f : fl) {
            CHECK(f.ts_us >= g.window_start_us(w));
            CHECK(f.ts_us < g.window_start_us(w) + s.window_len_us);
            CHECK(f.bytes >= f.packets);
            if (f.injection >= 0) {
                injected += f.packets;
                expected_labels[flows] = s.injections[static_cast<std::size_t>(f.injection)].id;
            } else {
                bg += f.packets;
            }
            ++flows;
        }
    }

    std::ostringstream fo, lo;
    const auto st = write_scenario_outputs(g, fo, lo);
    CHECK(st.flows == flows);
    CHECK(st.packets == bg + injected);
    CHECK(st.injected_packets == injected);
    CHECK(st.labeled == expected_labels.size());
    CHECK(injected == 2 * g.truth(0).packets_per_active_window + g.truth(1).packets_per_active_window);

    std::istringstream labels(lo.str());
    std::string line;
    std::getline(labels, line);
    CHECK(line.rfind("# netobs synth seed=11", 0) == 0);
    CHECK(line.find("scale_factor=1e-06") != std::string::npos);
    std::getline(labels, line);
    CHECK(line == "flow_index,label,injection_id");
    std::size_t rows = 0;
    while (std::getline(labels, line)) {
        const auto c1 = line.find(','), c2 = line.rfind(',');
        const auto idx = std::stoull(line.substr(0, c1));
        REQUIRE(expected_labels.count(idx) == 1);
        CHECK(line.substr(c2 + 1) == expected_labels[idx]);
        ++rows;
    }
    CHECK(rows == expected_labels.size());

    // the flow file reads back through the flow reader with the same packet total
    std::istringstream fin(fo.str());
    FlowReadOptions opts;
    opts.salt = "readback";
    FlowReader reader(fin, opts);
    FlowRecord r;
    std::uint64_t read_packets = 0, read_flows = 0;
    while (reader.next(r)) {
        read_packets += r.packets;
        ++read_flows;
    }
    CHECK(read_flows == flows);
    CHECK(read_packets == bg + injected);
}

TEST_CASE("scenario files round-trip") {
    auto s = small(42, 20);
    s.scale_factor = 2.5e-7;
    s.background.packets_per_link = 3.25;
    auto b = injection(InjectionKind::botcc, 0, 20);
    b.rotate_clients = true;
    b.phase = 3;
    s.injections.push_back(b);
    auto d = injection(InjectionKind::ddos, 4, 2);
    d.target = 0xC0A80001;
    d.jitter = true;
    s.injections.push_back(d);
    std::ostringstream out;
    write_scenario(out, s);
    std::istringstream in(out.str());
    CHECK(read_scenario(in) == s);
}

TEST_CASE("scenario file errors name the line") {
    std::istringstream bad_key("[scenario]\nseed=1\nwindowz=3\n");
    try {
        read_scenario(bad_key);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::istringstream bad_value("[background]\nalpha=two\n");
    CHECK_THROWS_AS(read_scenario(bad_value), ParseError);
    std::istringstream orphan("[injection]\n");
    CHECK_NOTHROW(read_scenario(orphan));

    ScenarioSpec s;
    set_scenario_key(s, "scenario", "seed", "17");
    set_scenario_key(s, "background", "alpha", "2.5");
    CHECK(s.seed == 17);
    CHECK(s.background.alpha == 2.5);
    CHECK_THROWS_AS(set_scenario_key(s, "injection", "n_cc", "4"), ParseError);
    CHECK_THROWS_AS(set_scenario_key(s, "nowhere", "seed", "4"), ParseError);
}

TEST_CASE("the stock beacon scenario") {
    const auto s = beacon_scenario(7);
    CHECK(s.seed == 7);
    CHECK(s.background.n_sources == 10'000);
    CHECK(s.background.alpha == 2.0);
    CHECK(s.background.delta == 1.0);
    REQUIRE(s.injections.size() == 1);
    CHECK(s.injections[0].n_clients == 75);
    CHECK(s.injections[0].n_cc == 10);
    CHECK(s.injections[0].period_windows == 10);
    CHECK(s.injections[0].duration_windows == 100);
}

// --- growth ---------------------------------------------------------------

TEST_CASE("infection curve starts at i0, never shrinks and caps at the population") {
    GrowthParams p;
    p.initial_infected = 5;
    p.population = 400;
    const auto c = infection_curve(p, 0.3, 1);
    CHECK(c.size() == p.windows - p.infection_start);
    CHECK(c.front() == 5);
    CHECK(std::is_sorted(c.begin(), c.end()));
    CHECK(c.back() == 400);

    const auto flat = infection_curve(p, 0.0, 1);
    CHECK(std::all_of(flat.begin(), flat.end(), [](std::uint64_t i) { return i == 5; }));
}

TEST_CASE("infection curve mean tracks i0 e^(r t)") {
    GrowthParams p;
    p.initial_infected = 10;
    p.windows = 60;
    const double r = 0.05;
    constexpr int kSeeds = 400;
    std::vector<double> mean(p.windows - p.infection_start, 0.0);
    for (int s = 0; s < kSeeds; ++s) {
        const auto c = infection_curve(p, r, 100 + s);
        for (std::size_t t = 0; t < c.size(); ++t) mean[t] += static_cast<double>(c[t]) / kSeeds;
    }
    for (std::size_t t : {10u, 20u, 39u})
        CHECK(mean[t] == doctest::Approx(10.0 * std::exp(r * static_cast<double>(t))).epsilon(0.05));
}

TEST_CASE("growth parameter errors") {
    GrowthParams p;
    CHECK_THROWS_AS(infection_curve(p, -0.1, 1), ParameterError);
    CHECK_THROWS_AS(infection_curve(p, std::nan(""), 1), ParameterError);
    auto q = p;
    q.initial_infected = 0;
    CHECK_THROWS_AS(infection_curve(q, 0.1, 1), ParameterError);
    q = p;
    q.infection_start = 1;
    CHECK_THROWS_AS(infection_curve(q, 0.1, 1), ParameterError);
    q = p;
    q.windows = q.infection_start;
    CHECK_THROWS_AS(infection_curve(q, 0.1, 1), ParameterError);
    q = p;
    q.population = kActorPoolSize;
    CHECK_THROWS_AS(infection_curve(q, 0.1, 1), ParameterError);
}

TEST_CASE("zero growth below the prevalence threshold") {
    GrowthParams p;
    p.windows = 60;
    p.initial_infected = 1;
    auto r = run_growth_experiment(p, 0.0, {Regime::endpoint, Regime::network}, 3);
    REQUIRE(r.size() == 2);
    CHECK(r[0].regime == Regime::endpoint);
    CHECK_FALSE(r[0].t_detect);
    // one client beaconing to 3 controllers is lost in the background
    CHECK_FALSE(r[1].t_detect);
    CHECK(r[1].growth_rate == 0.0);
    CHECK(r[1].seed == 3);

    // 300 clients at fan-out 3 push the (2,4] bin far past its expectation at once
    p.initial_infected = 300;
    r = run_growth_experiment(p, 0.0, {Regime::network, Regime::endpoint}, 3);
    CHECK(r[0].regime == Regime::network);
    REQUIRE(r[0].t_detect);
    CHECK(*r[0].t_detect == 0);
    CHECK(r[0].infected_at_detect == 300);
    CHECK_FALSE(r[1].t_detect);
}

TEST_CASE("endpoint detection lands a fixed lag after the threshold crossing") {
    GrowthParams p;
    const auto curve = infection_curve(p, 0.1, 8);
    const auto r = run_growth_experiment(p, 0.1, {Regime::endpoint}, 8);
    REQUIRE(r[0].t_detect);
    const auto cross = static_cast<std::size_t>(
        std::find_if(curve.begin(), curve.end(), [&](auto i) { return i >= p.prevalence_threshold; }) - curve.begin());
    CHECK(*r[0].t_detect == cross + p.signature_lag_windows);
    CHECK(r[0].infected_at_detect == curve[*r[0].t_detect]);
}

TEST_CASE("network observation detects before endpoint signatures") {
    GrowthParams p;
    std::vector<std::size_t> te, tn;
    int smaller = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto r = run_growth_experiment(p, 0.1, {Regime::endpoint, Regime::network}, seed);
        REQUIRE(r[0].t_detect);
        REQUIRE(r[1].t_detect);
        te.push_back(*r[0].t_detect);
        tn.push_back(*r[1].t_detect);
        if (r[1].infected_at_detect < r[0].infected_at_detect) ++smaller;
    }
    std::sort(te.begin(), te.end());
    std::sort(tn.begin(), tn.end());
    CHECK(tn[10] < te[10]);
    CHECK(smaller >= 19);
}
