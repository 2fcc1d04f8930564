#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfprior {

inline constexpr int kProtocolVersion = 1;

/// Raised for unreadable or malformed trace files. The message names the line.
class TraceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rounds to 6 decimal digits, the textual precision of traces and the wire protocol.
double quantize6(double x);
std::vector<double> quantize6(const std::vector<double>& xs);

/// 64-bit FNV-1a of a string, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

struct TraceHeader {
    int protocol_version = kProtocolVersion;
    std::string kind;  ///< "discrete" or "continuous"
    std::string config_hash;
    std::uint64_t seed_model = 0;
    std::uint64_t seed_env = 0;
    nlohmann::json config = nlohmann::json::object();  ///< full config echo for replay
    nlohmann::json labels = nlohmann::json::object();  ///< free-form run labels

    friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

struct TraceObservation {
    std::optional<std::size_t> index;  ///< discrete observation code
    std::vector<double> tactile;       ///< continuous: 2,400 values, row-major
    std::vector<double> proprio;       ///< continuous: shoulder, elbow, height

    friend bool operator==(const TraceObservation&, const TraceObservation&) = default;
};

struct StepDiagnostics {
    std::vector<double> efe_totals;
    std::optional<std::size_t> chosen_policy;
    bool surprise = false;
    std::vector<double> self_prior;  ///< snapshot of C, empty when not snapshotted
    std::optional<double> efe_proxy;

    friend bool operator==(const StepDiagnostics&, const StepDiagnostics&) = default;
};

struct TraceRecord {
    std::int64_t t = 0;
    std::string phase;
    std::vector<double> action;  ///< discrete: {index}; continuous: 3 deltas
    bool accepted = true;
    TraceObservation observation;
    std::string event = "none";
    std::vector<double> hand;     ///< discrete: {position}; continuous: local {u, v}
    std::vector<double> sticker;  ///< empty when absent; discrete {position}; continuous {u, v}
    std::optional<StepDiagnostics> diagnostics;

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct Trace {
    TraceHeader header;
    std::vector<TraceRecord> records;
};

void to_json(nlohmann::json& j, const TraceHeader& h);
void from_json(const nlohmann::json& j, TraceHeader& h);
void to_json(nlohmann::json& j, const TraceRecord& r);
void from_json(const nlohmann::json& j, TraceRecord& r);

/// One header line followed by one line per record.
void write_trace(const std::filesystem::path& path, const TraceHeader& header, const std::vector<TraceRecord>& records);
Trace read_trace(const std::filesystem::path& path);

/// Incremental writer for long runs.
class TraceWriter {
public:
    TraceWriter(const std::filesystem::path& path, const TraceHeader& header);
    void append(const TraceRecord& record);
    void close();

private:
    std::ofstream out_;
    std::filesystem::path path_;
    std::int64_t last_t_ = -1;
};

}  // namespace selfprior
