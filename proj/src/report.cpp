#include "netobs/report.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>

#include "netobs/error.hpp"
#include "netobs/version.hpp"

namespace netobs {

using nlohmann::json;

namespace {
const std::string kReportFormat = "netobs-report/" + std::to_string(kReportFormatVersion);
}

ReportFormat parse_report_format(std::string_view text) {
    if (text == "text") return ReportFormat::text;
    if (text == "json") return ReportFormat::json;
    if (text == "plotdata") return ReportFormat::plotdata;
    throw UsageError("unknown report format '" + std::string(text) + "' (expected text|json|plotdata)");
}

Report make_report(const AnalysisResult& r, bool emit_members) {
    Report out;
    out.window_count = r.window_count;
    out.train_windows = r.train_windows;
    out.members_emitted = emit_members;
    out.warnings = r.warnings;
    for (const auto& f : r.fits) out.fits.push_back({f.direction, f.model, f.usable});
    for (const auto& ra : r.anomalies) {
        const Anomaly& a = ra.anomaly;
        AnomalyRecord rec;
        rec.kind = a.kind;
        rec.direction = a.direction;
        rec.first_window = a.first_window;
        rec.last_window = a.last_window;
        rec.bin = a.bin;
        rec.score = a.score;
        rec.period = a.period_windows;
        rec.source_count = a.sources.size();
        rec.dest_count = a.destinations.size();
        rec.turnover = a.turnover;
        rec.label = ra.label;
        rec.features = ra.features;
        if (emit_members) {
            rec.sources = a.sources;
            rec.destinations = a.destinations;
        }
        out.anomalies.push_back(std::move(rec));
    }
    return out;
}

// --- json -------------------------------------------------------------------

namespace {

json ids_json(const std::vector<NodeId>& ids) {
    json a = json::array();
    for (auto id : ids) a.push_back(id.hex());
    return a;
}

std::vector<NodeId> ids_from(const json& a) {
    std::vector<NodeId> out;
    for (const auto& v : a) {
        auto id = NodeId::from_hex(v.get<std::string>());
        if (!id) throw ParseError("report: bad node id '" + v.get<std::string>() + "'");
        out.push_back(*id);
    }
    return out;
}

json model_json(const PowerLawModel& m) {
    return {{"alpha", m.alpha}, {"delta", m.delta}, {"norm", m.norm}, {"d_max", m.d_max},
            {"samples", m.sample_count}, {"gof", m.gof}};
}

PowerLawModel model_from(const json& j) {
    PowerLawModel m;
    m.alpha = j.at("alpha").get<double>();
    m.delta = j.at("delta").get<double>();
    m.norm = j.at("norm").get<double>();
    m.d_max = j.at("d_max").get<std::uint64_t>();
    m.sample_count = j.at("samples").get<std::uint64_t>();
    m.gof = j.at("gof").get<double>();
    return m;
}

json features_json(const FeatureVector& f) {
    return {{"src_set_size", f.src_set_size},
            {"dst_set_size", f.dst_set_size},
            {"mean_packets_per_link", f.mean_packets_per_link},
            {"unique_dst_ports", f.unique_dst_ports},
            {"periodicity_strength", f.periodicity_strength},
            {"traffic_share", f.traffic_share}};
}

FeatureVector features_from(const json& j) {
    FeatureVector f;
    f.src_set_size = j.at("src_set_size").get<std::uint64_t>();
    f.dst_set_size = j.at("dst_set_size").get<std::uint64_t>();
    f.mean_packets_per_link = j.at("mean_packets_per_link").get<double>();
    f.unique_dst_ports = j.at("unique_dst_ports").get<std::uint64_t>();
    f.periodicity_strength = j.at("periodicity_strength").get<double>();
    f.traffic_share = j.at("traffic_share").get<double>();
    return f;
}

}  // namespace

json to_json(const Report& r) {
    json fits = json::array();
    for (const auto& f : r.fits) {
        json e = {{"direction", std::string(to_string(f.direction))}, {"usable", f.usable}};
        e["model"] = f.model ? model_json(*f.model) : json(nullptr);
        fits.push_back(std::move(e));
    }
    json anomalies = json::array();
    for (const auto& a : r.anomalies) {
        json e;
        e["kind"] = std::string(to_string(a.kind));
        e["direction"] = std::string(to_string(a.direction));
        e["window_range"] = {a.first_window, a.last_window};
        e["bin"] = a.bin ? json{bins::lo(*a.bin), bins::hi(*a.bin)} : json(nullptr);
        e["score"] = a.score;
        e["period"] = a.period ? json(*a.period) : json(nullptr);
        e["source_count"] = a.source_count;
        e["dest_count"] = a.dest_count;
        e["turnover"] = a.turnover;
        e["label"] = std::string(to_string(a.label));
        e["features"] = features_json(a.features);
        if (a.sources) e["sources"] = ids_json(*a.sources);
        if (a.destinations) e["destinations"] = ids_json(*a.destinations);
        anomalies.push_back(std::move(e));
    }
    return {{"format", kReportFormat},
            {"window_count", r.window_count},
            {"train_windows", r.train_windows},
            {"members_emitted", r.members_emitted},
            {"fits", fits},
            {"anomalies", anomalies},
            {"warnings", r.warnings}};
}

Report report_from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != kReportFormat)
            throw ParseError("report: unsupported format '" + j.at("format").get<std::string>() + "'");
        Report r;
        r.window_count = j.at("window_count").get<std::size_t>();
        r.train_windows = j.at("train_windows").get<std::size_t>();
        r.members_emitted = j.at("members_emitted").get<bool>();
        for (const auto& f : j.at("fits")) {
            FitRecord fr;
            fr.direction = parse_direction(f.at("direction").get<std::string>());
            fr.usable = f.at("usable").get<bool>();
            if (!f.at("model").is_null()) fr.model = model_from(f.at("model"));
            r.fits.push_back(std::move(fr));
        }
        for (const auto& e : j.at("anomalies")) {
            AnomalyRecord a;
            a.kind = parse_anomaly_kind(e.at("kind").get<std::string>());
            a.direction = parse_direction(e.at("direction").get<std::string>());
            a.first_window = e.at("window_range").at(0).get<std::size_t>();
            a.last_window = e.at("window_range").at(1).get<std::size_t>();
            if (!e.at("bin").is_null())
                a.bin = bins::index_of_bounds(e.at("bin").at(0).get<std::uint64_t>(),
                                              e.at("bin").at(1).get<std::uint64_t>());
            a.score = e.at("score").get<double>();
            if (!e.at("period").is_null()) a.period = e.at("period").get<std::size_t>();
            a.source_count = e.at("source_count").get<std::size_t>();
            a.dest_count = e.at("dest_count").get<std::size_t>();
            a.turnover = e.at("turnover").get<double>();
            a.label = parse_attack_label(e.at("label").get<std::string>());
            a.features = features_from(e.at("features"));
            if (e.contains("sources")) a.sources = ids_from(e.at("sources"));
            if (e.contains("destinations")) a.destinations = ids_from(e.at("destinations"));
            r.anomalies.push_back(std::move(a));
        }
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
}

void write_json_report(std::ostream& out, const Report& r) { out << to_json(r).dump(2) << '\n'; }

Report read_json_report(std::istream& in) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
    return report_from_json(j);
}

// --- text -------------------------------------------------------------------

void write_text_report(std::ostream& out, const Report& r) {
    char buf[256];
    out << "windows " << r.window_count << " (training " << r.train_windows << ")\n";
    for (const auto& f : r.fits) {
        if (f.model) {
            std::snprintf(buf, sizeof buf, "fit %-7s alpha=%.4f delta=%.4f gof=%.4f%s\n",
                          std::string(to_string(f.direction)).c_str(), f.model->alpha, f.model->delta,
                          f.model->gof, f.usable ? "" : " (rejected)");
            out << buf;
        } else {
            out << "fit " << to_string(f.direction) << " none\n";
        }
    }
    out << r.anomalies.size() << (r.anomalies.size() == 1 ? " anomaly\n" : " anomalies\n");
    for (const auto& a : r.anomalies) {
        std::string bin = "-";
        if (a.bin) bin = "(" + std::to_string(bins::lo(*a.bin)) + "," + std::to_string(bins::hi(*a.bin)) + "]";
        std::snprintf(buf, sizeof buf,
                      "  windows %zu-%zu  bin %-12s %-12s %-7s score %7.2f  period %-3s  src %zu  dst %zu  %s\n",
                      a.first_window, a.last_window, bin.c_str(), std::string(to_string(a.kind)).c_str(),
                      std::string(to_string(a.direction)).c_str(), a.score,
                      a.period ? std::to_string(*a.period).c_str() : "-", a.source_count, a.dest_count,
                      std::string(to_string(a.label)).c_str());
        out << buf;
        if (a.sources) {
            out << "    sources:";
            for (auto id : *a.sources) out << ' ' << id.hex();
            out << '\n';
        }
        if (a.destinations) {
            out << "    destinations:";
            for (auto id : *a.destinations) out << ' ' << id.hex();
            out << '\n';
        }
    }
    for (const auto& w : r.warnings) out << "warning: " << w << '\n';
}

// --- plot data --------------------------------------------------------------

void write_degree_plot(std::ostream& out, const TrafficMatrix& m, Direction dir,
                       const std::optional<PowerLawModel>& model) {
    std::map<std::uint64_t, std::uint64_t> hist;
    for (auto d : degree_values(m, dir)) ++hist[d];
    out << "d,count,model_p\n";
    char buf[96];
    for (const auto& [d, c] : hist) {
        const double p = model && d <= model->d_max ? model_pdf(*model, d) : 0.0;
        std::snprintf(buf, sizeof buf, "%llu,%llu,%.17g\n", static_cast<unsigned long long>(d),
                      static_cast<unsigned long long>(c), p);
        out << buf;
    }
}

void write_bin_series(std::ostream& out, std::span<const DegreeDistribution> series, std::size_t first_index) {
    std::size_t width = 0;
    for (const auto& d : series) width = std::max(width, d.bin_count());
    out << "window,bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < series.size(); ++i)
        for (std::size_t k = 0; k < width; ++k)
            out << first_index + i << ',' << bins::lo(k) << ',' << bins::hi(k) << ',' << series[i].count(k) << '\n';
}

}  // namespace netobs
