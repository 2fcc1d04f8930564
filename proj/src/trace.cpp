#include "selfprior/trace.hpp"

#include <cmath>
#include <cstdio>

namespace selfprior {

using nlohmann::json;

double quantize6(double x) {
    const double q = std::round(x * 1e6) / 1e6;
    return q == 0.0 ? 0.0 : q;  // no negative zero on the wire
}

std::vector<double> quantize6(const std::vector<double>& xs) {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = quantize6(xs[i]);
    return out;
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void to_json(json& j, const TraceHeader& h) {
    j = json{{"type", "header"},         {"protocol_version", h.protocol_version},
             {"kind", h.kind},           {"config_hash", h.config_hash},
             {"seeds", {{"model", h.seed_model}, {"env", h.seed_env}}},
             {"config", h.config},       {"labels", h.labels}};
}

void from_json(const json& j, TraceHeader& h) {
    if (j.value("type", "") != "header") throw TraceError("missing trace header");
    h.protocol_version = j.at("protocol_version").get<int>();
    h.kind = j.at("kind").get<std::string>();
    h.config_hash = j.at("config_hash").get<std::string>();
    h.seed_model = j.at("seeds").at("model").get<std::uint64_t>();
    h.seed_env = j.at("seeds").at("env").get<std::uint64_t>();
    h.config = j.value("config", json::object());
    h.labels = j.value("labels", json::object());
}

void to_json(json& j, const TraceRecord& r) {
    json obs = json::object();
    if (r.observation.index) obs["index"] = *r.observation.index;
    if (!r.observation.tactile.empty()) obs["tactile"] = r.observation.tactile;
    if (!r.observation.proprio.empty()) obs["proprio"] = r.observation.proprio;
    j = json{{"t", r.t},          {"phase", r.phase}, {"action", r.action}, {"accepted", r.accepted},
             {"observation", obs}, {"event", r.event}, {"hand", r.hand},     {"sticker", r.sticker}};
    if (r.diagnostics) {
        const auto& d = *r.diagnostics;
        json dj{{"surprise", d.surprise}};
        if (!d.efe_totals.empty()) dj["efe"] = d.efe_totals;
        if (d.chosen_policy) dj["chosen_policy"] = *d.chosen_policy;
        if (!d.self_prior.empty()) dj["self_prior"] = d.self_prior;
        if (d.efe_proxy) dj["efe_proxy"] = *d.efe_proxy;
        j["diagnostics"] = std::move(dj);
    }
}

void from_json(const json& j, TraceRecord& r) {
    r.t = j.at("t").get<std::int64_t>();
    r.phase = j.value("phase", "");
    r.action = j.at("action").get<std::vector<double>>();
    r.accepted = j.at("accepted").get<bool>();
    const auto& obs = j.at("observation");
    r.observation = {};
    if (obs.contains("index")) r.observation.index = obs.at("index").get<std::size_t>();
    if (obs.contains("tactile")) r.observation.tactile = obs.at("tactile").get<std::vector<double>>();
    if (obs.contains("proprio")) r.observation.proprio = obs.at("proprio").get<std::vector<double>>();
    r.event = j.at("event").get<std::string>();
    r.hand = j.value("hand", std::vector<double>{});
    r.sticker = j.value("sticker", std::vector<double>{});
    r.diagnostics.reset();
    if (j.contains("diagnostics")) {
        const auto& dj = j.at("diagnostics");
        StepDiagnostics d;
        d.surprise = dj.value("surprise", false);
        d.efe_totals = dj.value("efe", std::vector<double>{});
        if (dj.contains("chosen_policy")) d.chosen_policy = dj.at("chosen_policy").get<std::size_t>();
        d.self_prior = dj.value("self_prior", std::vector<double>{});
        if (dj.contains("efe_proxy")) d.efe_proxy = dj.at("efe_proxy").get<double>();
        r.diagnostics = std::move(d);
    }
}

void write_trace(const std::filesystem::path& path, const TraceHeader& header, const std::vector<TraceRecord>& records) {
    TraceWriter writer(path, header);
    for (const auto& r : records) writer.append(r);
    writer.close();
}

Trace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw TraceError("cannot open trace '" + path.string() + "'");
    Trace trace;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::int64_t last_t = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            if (!have_header) {
                trace.header = j.get<TraceHeader>();
                if (trace.header.protocol_version != kProtocolVersion)
                    throw TraceError("unsupported protocol_version " + std::to_string(trace.header.protocol_version));
                have_header = true;
                continue;
            }
            auto record = j.get<TraceRecord>();
            if (record.t <= last_t) throw TraceError("t is not strictly increasing");
            last_t = record.t;
            trace.records.push_back(std::move(record));
        } catch (const std::exception& e) {
            throw TraceError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) throw TraceError(path.string() + ": empty trace, no header line");
    return trace;
}

TraceWriter::TraceWriter(const std::filesystem::path& path, const TraceHeader& header) : out_(path), path_(path) {
    if (!out_) throw TraceError("cannot write trace '" + path.string() + "'");
    out_ << json(header).dump() << '\n';
}

void TraceWriter::append(const TraceRecord& record) {
    if (record.t <= last_t_) throw TraceError("trace records must have strictly increasing t");
    last_t_ = record.t;
    out_ << json(record).dump() << '\n';
}

void TraceWriter::close() {
    out_.flush();
    if (!out_) throw TraceError("write failed for '" + path_.string() + "'");
    out_.close();
}

}  // namespace selfprior
