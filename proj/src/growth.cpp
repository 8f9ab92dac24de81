#include <absl/container/flat_hash_set.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "netobs/error.hpp"
#include "netobs/stream_rng.hpp"
#include "netobs/synth.hpp"

namespace netobs::synth {

namespace {

constexpr std::uint64_t kGrowthStream = 5;

void check(const GrowthParams& p, double growth_rate) {
    if (!(growth_rate >= 0.0) || !std::isfinite(growth_rate))
        throw ParameterError("growth: growth_rate must be finite and >= 0");
    if (p.initial_infected == 0 || p.initial_infected > p.population)
        throw ParameterError("growth: initial_infected must be in [1, population]");
    if (p.infection_start < 2) throw ParameterError("growth: infection_start must leave >= 2 training windows");
    if (p.windows <= p.infection_start) throw ParameterError("growth: windows must exceed infection_start");
    if (p.n_cc == 0) throw ParameterError("growth: n_cc must be >= 1");
    if (p.population + p.n_cc > kActorPoolSize) throw ParameterError("growth: population exceeds the actor pool");
    p.detect.validate();
}

GrowthExperimentResult endpoint_regime(const GrowthParams& p, const std::vector<std::uint64_t>& curve) {
    GrowthExperimentResult r;
    r.regime = Regime::endpoint;
    auto hit = std::find_if(curve.begin(), curve.end(), [&](std::uint64_t i) { return i >= p.prevalence_threshold; });
    if (hit == curve.end()) return r;
    const auto t = static_cast<std::size_t>(hit - curve.begin()) + p.signature_lag_windows;
    if (t >= curve.size()) return r;
    r.t_detect = t;
    r.infected_at_detect = curve[t];
    return r;
}

GrowthExperimentResult network_regime(const GrowthParams& p, const std::vector<std::uint64_t>& curve,
                                      std::uint64_t seed) {
    GrowthExperimentResult r;
    r.regime = Regime::network;

    ScenarioSpec spec;
    spec.seed = seed;
    spec.windows = p.windows;
    spec.background.n_sources = p.background_sources;
    spec.background.n_destinations = 2 * p.background_sources;
    const ScenarioGenerator gen(spec);
    const Anonymizer anon("growth-" + std::to_string(seed));
    const IdTable ids(gen, anon);

    std::vector<NodeId> controllers, clients;
    absl::flat_hash_set<NodeId> infected_ids;
    for (std::uint64_t k = 0; k < p.n_cc; ++k) controllers.push_back(ids.id(kActorBase + static_cast<std::uint32_t>(k)));

    std::vector<TrafficMatrix> windows;
    std::vector<std::uint64_t> pooled;
    for (std::size_t w = 0; w < p.infection_start; ++w) {
        windows.push_back(gen.window_matrix(w, ids));
        for (auto d : degree_values(windows.back(), Direction::fan_out)) pooled.push_back(d);
    }
    const PowerLawModel model = fit_power_law(std::span<const std::uint64_t>(pooled));

    for (std::size_t t = 0; t < curve.size(); ++t) {
        const std::size_t w = p.infection_start + t;
        TrafficMatrix m = gen.window_matrix(w, ids);
        while (clients.size() < curve[t])
        {
            clients.push_back(ids.id(kActorBase + static_cast<std::uint32_t>(p.n_cc + clients.size())));
            infected_ids.insert(clients.back());
        }
        std::vector<MatrixEntry> beacons;
        beacons.reserve(clients.size() * controllers.size());
        for (const auto& c : clients)
            for (const auto& cc : controllers) beacons.push_back({c, cc, 1});
        if (!beacons.empty()) {
            const auto n = beacons.size();
            m = merge(m, TrafficMatrix::from_entries(m.window_start_us(), m.window_len_us(), std::move(beacons), n));
        }
        windows.push_back(std::move(m));

        const auto found = detect_distribution_anomaly(degree_distribution(windows.back(), Direction::fan_out), model,
                                                       p.detect, w);
        for (auto a : found) {
            a.excess_windows = {w};
            const auto members = implicated_nodes(windows, a);
            // only a detection if the pursued nodes include infected ones
            const bool infected = std::any_of(members.sources.begin(), members.sources.end(),
                                              [&](NodeId s) { return infected_ids.contains(s); });
            if (infected) {
                r.t_detect = t;
                r.infected_at_detect = curve[t];
                return r;
            }
        }
    }
    return r;
}

}  // namespace

std::string_view to_string(Regime r) { return r == Regime::endpoint ? "endpoint" : "network"; }

std::vector<std::uint64_t> infection_curve(const GrowthParams& p, double growth_rate, std::uint64_t seed) {
    check(p, growth_rate);
    StreamRng rng(stream_key(seed, kGrowthStream));
    const double factor = std::expm1(growth_rate);
    std::vector<std::uint64_t> curve(p.windows - p.infection_start);
    std::uint64_t infected = p.initial_infected;
    for (auto& c : curve) {
        c = infected;
        const double mean = static_cast<double>(infected) * factor;
        const std::uint64_t added = mean > 0.0 ? std::poisson_distribution<std::uint64_t>(mean)(rng) : 0;
        infected = std::min(p.population, infected + added);
    }
    return curve;
}

std::vector<GrowthExperimentResult> run_growth_experiment(const GrowthParams& p, double growth_rate,
                                                          const std::vector<Regime>& regimes,
                                                          std::uint64_t seed) {
    const auto curve = infection_curve(p, growth_rate, seed);
    std::vector<GrowthExperimentResult> out;
    for (Regime reg : regimes) {
        auto r = reg == Regime::endpoint ? endpoint_regime(p, curve) : network_regime(p, curve, seed);
        r.growth_rate = growth_rate;
        r.seed = seed;
        out.push_back(r);
    }
    return out;
}

}  // namespace netobs::synth
