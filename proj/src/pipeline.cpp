#include "netobs/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <tuple>

#include <absl/container/flat_hash_set.h>

#include "netobs/error.hpp"

namespace netobs {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    const std::int64_t q = a / b;
    return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

void set_members(Anomaly& a, std::span<const TrafficMatrix> windows) {
    auto m = implicated_nodes(windows, a);
    a.sources = std::move(m.sources);
    a.destinations = std::move(m.destinations);
    a.turnover = m.turnover;
}

}  // namespace

std::vector<TrafficMatrix> build_windows(std::span<const FlowRecord> flows, std::int64_t len_us) {
    if (len_us <= 0) throw ParameterError("window length must be > 0");
    if (flows.empty()) return {};
    std::int64_t lo = flows.front().ts_us, hi = lo;
    for (const auto& f : flows) {
        lo = std::min(lo, f.ts_us);
        hi = std::max(hi, f.ts_us);
    }
    const std::int64_t t0 = floor_div(lo, len_us) * len_us;
    const auto n = static_cast<std::size_t>((hi - t0) / len_us) + 1;
    std::vector<MatrixBuilder> builders;
    builders.reserve(n);
    for (std::size_t w = 0; w < n; ++w) builders.emplace_back(t0 + static_cast<std::int64_t>(w) * len_us, len_us);
    for (std::size_t i = 0; i < flows.size(); ++i)
        builders[static_cast<std::size_t>((flows[i].ts_us - t0) / len_us)].add(flows[i], i);
    std::vector<TrafficMatrix> out;
    out.reserve(n);
    for (auto& b : builders) out.push_back(std::move(b).finish());
    return out;
}

AnalysisResult analyze(std::span<const TrafficMatrix> windows, const AnalysisConfig& cfg, const FlowSource& flows,
                       const StageCallback& on_stage) {
    cfg.detection.validate();
    cfg.rules.validate();
    if (cfg.train_windows < 2) throw ParameterError("train_windows must be >= 2");

    AnalysisResult res;
    res.window_count = windows.size();
    res.train_windows = cfg.train_windows;
    res.fits[0].direction = Direction::fan_out;
    res.fits[1].direction = Direction::fan_in;
    if (windows.size() < cfg.train_windows + 2) {
        res.warnings.push_back(std::to_string(windows.size()) + " windows; need " +
                               std::to_string(cfg.train_windows + 2) +
                               " (training plus 2) before anything can be detected");
        return res;
    }
    const std::size_t n = windows.size(), train = cfg.train_windows;

    auto done = [&](const char* stage) {
        res.stages.emplace_back(stage);
        if (on_stage) on_stage(stage, res);
    };

    std::array<std::vector<DegreeDistribution>, 2> dists;
    for (std::size_t d = 0; d < 2; ++d) {
        auto& fit = res.fits[d];
        dists[d].reserve(n);
        std::vector<std::uint64_t> pooled;
        for (std::size_t w = 0; w < n; ++w) {
            if (w >= train) {
                dists[d].push_back(degree_distribution(windows[w], fit.direction));
                continue;
            }
            auto values = degree_values(windows[w], fit.direction);
            dists[d].push_back(bin_degrees(values, fit.direction, windows[w].window_len_us()));
            pooled.insert(pooled.end(), values.begin(), values.end());
        }
        const std::string dir(to_string(fit.direction));
        try {
            fit.model = fit_power_law(std::span<const std::uint64_t>(pooled));
            fit.usable = fit_acceptable(*fit.model);
            if (!fit.usable) {
                char buf[160];
                std::snprintf(buf, sizeof buf,
                              "%s fit has KS distance %.4f above %.2f; distribution detection skipped",
                              dir.c_str(), fit.model->gof, kGofRejectThreshold);
                res.warnings.emplace_back(buf);
            }
        } catch (const InsufficientDataError& e) {
            res.warnings.push_back(dir + " fit skipped: " + e.what());
        } catch (const DegenerateDistributionError& e) {
            res.warnings.push_back(dir + " fit skipped: " + e.what());
        }
    }
    done("fit");
    for (std::size_t d = 0; d < 2; ++d)
        res.fits[d].baseline = train_variance_baseline(std::span<const DegreeDistribution>(dists[d]).first(train));
    done("baseline");

    std::vector<Anomaly> found;
    for (std::size_t d = 0; d < 2; ++d) {
        const auto& fit = res.fits[d];
        if (fit.usable) {
            std::vector<Anomaly> per_window;
            for (std::size_t w = train; w < n; ++w)
                for (auto& a : detect_distribution_anomaly(dists[d][w], *fit.model, cfg.detection, w))
                    per_window.push_back(std::move(a));
            for (auto& a : consolidate(std::move(per_window))) found.push_back(std::move(a));
        }
        for (auto& a : detect_variance_anomaly(std::span<const DegreeDistribution>(dists[d]).subspan(train),
                                               fit.baseline, cfg.detection, train))
            found.push_back(std::move(a));
    }
    for (auto& a : found) set_members(a, windows);

    // one beacon per (direction, bin), strongest parent wins
    std::map<std::pair<Direction, std::size_t>, Anomaly> by_bin;
    for (const auto& a : found) {
        const std::size_t d = a.direction == Direction::fan_out ? 0 : 1;
        auto br = detect_beacons(dists[d], a, cfg.detection, 0);
        if (!br.beacon) continue;
        auto key = std::make_pair(a.direction, *br.beacon->bin);
        auto it = by_bin.find(key);
        if (it == by_bin.end() || br.beacon->score > it->second.score) by_bin[key] = std::move(*br.beacon);
    }
    std::vector<Anomaly> beacons;
    for (auto& [key, b] : by_bin) {
        set_members(b, windows);
        beacons.push_back(std::move(b));
    }
    // the same actors seen from both directions are one beacon
    std::stable_sort(beacons.begin(), beacons.end(), [](const Anomaly& a, const Anomaly& b) {
        if (a.score != b.score) return a.score > b.score;
        return anomaly_order(a, b);
    });
    std::vector<Anomaly> kept;
    for (auto& b : beacons) {
        const bool dup = !b.sources.empty() && std::any_of(kept.begin(), kept.end(), [&](const Anomaly& k) {
            return k.sources == b.sources && k.destinations == b.destinations;
        });
        if (!dup) kept.push_back(std::move(b));
    }
    for (auto& b : kept) found.push_back(std::move(b));
    std::sort(found.begin(), found.end(), anomaly_order);
    done("detect");

    std::map<std::size_t, std::vector<FlowRecord>> cache;
    for (auto& a : found) {
        // only member links matter to extract_features
        std::vector<FlowRecord> relevant;
        if (flows && !a.sources.empty() && !a.destinations.empty()) {
            const absl::flat_hash_set<NodeId> src(a.sources.begin(), a.sources.end());
            const absl::flat_hash_set<NodeId> dst(a.destinations.begin(), a.destinations.end());
            std::vector<std::size_t> ws = a.excess_windows;
            if (ws.empty())
                for (std::size_t w = a.first_window; w <= a.last_window; ++w) ws.push_back(w);
            for (auto w : ws) {
                if (w >= n) continue;
                auto it = cache.find(w);
                if (it == cache.end()) it = cache.emplace(w, flows(w)).first;
                for (const auto& r : it->second)
                    if (src.contains(r.src) && dst.contains(r.dst)) relevant.push_back(r);
            }
        }
        ReportedAnomaly r;
        r.features = extract_features(a, windows, relevant, cfg.rules);
        r.label = classify(r.features, cfg.rules);
        r.anomaly = std::move(a);
        res.anomalies.push_back(std::move(r));
    }
    done("classify");
    return res;
}

}  // namespace netobs
