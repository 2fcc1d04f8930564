#include "selfprior/report.hpp"

#include "selfprior/discrete_world.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <optional>

namespace selfprior::harness {

using nlohmann::json;

namespace {

constexpr std::size_t kDefaultPolicies = 81;

void check_version(const Trace& trace) {
    if (trace.header.protocol_version != kProtocolVersion)
        throw ReportError("trace protocol_version " + std::to_string(trace.header.protocol_version) +
                          " is not supported (this build reads version " + std::to_string(kProtocolVersion) + ")");
    if (trace.header.kind != "discrete" && trace.header.kind != "continuous")
        throw ReportError("trace kind '" + trace.header.kind + "' is not supported");
}

std::string num(double x) {
    if (!std::isfinite(x)) return "";
    return json(x).dump();
}

class Csv {
public:
    Csv(const std::filesystem::path& path, ReportFiles& files) : out_(path), path_(path) {
        if (!out_) throw ReportError("cannot write '" + path.string() + "'");
        files.files.push_back(path);
    }
    ~Csv() { out_.flush(); }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
        ++rows_;
    }
    std::size_t rows() const { return rows_; }

private:
    std::ofstream out_;
    std::filesystem::path path_;
    std::size_t rows_ = 0;
};

std::optional<double> hand_sticker_distance(const TraceRecord& r) {
    if (r.hand.size() != 2 || r.sticker.size() != 2) return std::nullopt;
    return std::hypot(r.hand[0] - r.sticker[0], r.hand[1] - r.sticker[1]);
}

void write_manifest(const std::filesystem::path& out_dir, json manifest, ReportFiles& files) {
    const auto path = out_dir / "manifest.json";
    std::ofstream out(path);
    out << manifest.dump(1) << '\n';
    if (!out) throw ReportError("cannot write '" + path.string() + "'");
    files.files.push_back(path);
}

void emit_discrete(const Trace& trace, const std::filesystem::path& dir, ReportFiles& files, json& rows) {
    Csv prior(dir / "self_prior.csv", files);
    std::vector<std::string> head{"t"};
    for (std::size_t o = 0; o < discrete::kNumObservations; ++o) head.push_back("c" + std::to_string(o));
    prior.row(head);

    std::size_t policies = kDefaultPolicies;
    for (const auto& r : trace.records)
        if (r.diagnostics && !r.diagnostics->efe_totals.empty()) {
            policies = r.diagnostics->efe_totals.size();
            break;
        }
    Csv efe(dir / "efe.csv", files);
    head = {"t", "phase"};
    for (std::size_t k = 0; k < policies; ++k) head.push_back("efe_" + std::to_string(k));
    head.push_back("chosen");
    efe.row(head);

    Csv pos(dir / "positions.csv", files);
    pos.row({"t", "phase", "hand", "sticker"});

    for (const auto& r : trace.records) {
        const std::string t = std::to_string(r.t);
        pos.row({t, r.phase, r.hand.empty() ? "" : num(r.hand[0]), r.sticker.empty() ? "" : num(r.sticker[0])});
        if (!r.diagnostics) continue;
        const auto& d = *r.diagnostics;
        if (!d.self_prior.empty()) {
            std::vector<std::string> cells{t};
            for (double c : d.self_prior) cells.push_back(num(c));
            prior.row(cells);
        }
        if (!d.efe_totals.empty()) {
            if (d.efe_totals.size() != policies) throw ReportError("trace mixes policy counts at t=" + t);
            std::vector<std::string> cells{t, r.phase};
            for (double g : d.efe_totals) cells.push_back(num(g));
            cells.push_back(d.chosen_policy ? std::to_string(*d.chosen_policy) : "");
            efe.row(cells);
        }
    }
    rows = {{"self_prior.csv", prior.rows() - 1}, {"efe.csv", efe.rows() - 1}, {"positions.csv", pos.rows() - 1}};
}

void emit_continuous(const Trace& trace, const std::filesystem::path& dir, ReportFiles& files, json& rows) {
    Csv pos(dir / "positions.csv", files);
    pos.row({"t", "hand_u", "hand_v", "sticker_u", "sticker_v", "distance"});
    Csv proxy(dir / "efe_proxy.csv", files);
    proxy.row({"t", "efe_proxy"});
    for (const auto& r : trace.records) {
        const std::string t = std::to_string(r.t);
        const auto dist = hand_sticker_distance(r);
        pos.row({t, r.hand.size() == 2 ? num(r.hand[0]) : "", r.hand.size() == 2 ? num(r.hand[1]) : "",
                 r.sticker.size() == 2 ? num(r.sticker[0]) : "", r.sticker.size() == 2 ? num(r.sticker[1]) : "",
                 dist ? num(*dist) : ""});
        if (r.diagnostics && r.diagnostics->efe_proxy) proxy.row({t, num(*r.diagnostics->efe_proxy)});
    }
    rows = {{"positions.csv", pos.rows() - 1}, {"efe_proxy.csv", proxy.rows() - 1}};
}

struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
    double stddev() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0; }
};

}  // namespace

ReportFiles emit_report(const Trace& trace, const std::filesystem::path& out_dir) {
    check_version(trace);
    std::filesystem::create_directories(out_dir);
    ReportFiles files;
    json rows;
    if (trace.header.kind == "discrete") emit_discrete(trace, out_dir, files, rows);
    else emit_continuous(trace, out_dir, files, rows);
    write_manifest(out_dir,
                   json{{"protocol_version", kProtocolVersion},
                        {"kind", trace.header.kind},
                        {"config_hash", trace.header.config_hash},
                        {"seeds", {{"model", trace.header.seed_model}, {"env", trace.header.seed_env}}},
                        {"records", trace.records.size()},
                        {"rows", rows}},
                   files);
    return files;
}

ReportFiles emit_aggregate_report(const std::vector<Trace>& traces, const std::filesystem::path& out_dir) {
    std::map<std::int64_t, std::pair<Moments, Moments>> by_t;
    json seeds = json::array();
    for (const auto& trace : traces) {
        check_version(trace);
        if (trace.header.kind != "continuous") throw ReportError("aggregate reports take continuous traces only");
        seeds.push_back({{"model", trace.header.seed_model}, {"env", trace.header.seed_env}});
        for (const auto& r : trace.records) {
            auto& [dist, proxy] = by_t[r.t];
            if (const auto d = hand_sticker_distance(r)) dist.add(*d);
            if (r.diagnostics && r.diagnostics->efe_proxy) proxy.add(*r.diagnostics->efe_proxy);
        }
    }
    std::filesystem::create_directories(out_dir);
    ReportFiles files;
    {
        Csv agg(out_dir / "aggregate.csv", files);
        agg.row({"t", "distance_mean", "distance_std", "distance_n", "efe_proxy_mean", "efe_proxy_std", "efe_proxy_n"});
        for (const auto& [t, m] : by_t) {
            const auto& [dist, proxy] = m;
            const auto cell = [](const Moments& x, double v) { return x.n ? num(v) : std::string(); };
            agg.row({std::to_string(t), cell(dist, dist.mean), cell(dist, dist.stddev()), std::to_string(dist.n),
                     cell(proxy, proxy.mean), cell(proxy, proxy.stddev()), std::to_string(proxy.n)});
        }
    }
    write_manifest(out_dir, json{{"protocol_version", kProtocolVersion}, {"runs", traces.size()}, {"seeds", seeds}}, files);
    return files;
}

}  // namespace selfprior::harness
