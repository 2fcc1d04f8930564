#include "doctest.h"
#include "oracles.hpp"
#include "scratch_dir.hpp"

#include "selfprior/collection.hpp"
#include "selfprior/report.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <fstream>
#include <sstream>
#include <thread>

using namespace selfprior;
using namespace selfprior::harness;
using nlohmann::json;

namespace {

CollectionConfig small_collection(std::uint64_t model, std::uint64_t env) {
    CollectionConfig c;
    c.seed_model = model;
    c.seed_env = env;
    c.episodes = 6;
    c.episode_length = 25;
    c.buffer_capacity = 4;
    return c;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> csv_header(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::string line, cell;
    std::getline(in, line);
    std::vector<std::string> out;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

std::size_t csv_rows(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) ++n;
    return n - 1;
}

// Answers `act` requests with a fixed action on `connections` sequential connections.
class FakePolicy {
public:
    explicit FakePolicy(std::size_t connections) {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        REQUIRE(::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
        REQUIRE(::listen(fd_, 4) == 0);
        socklen_t len = sizeof addr;
        ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = ntohs(addr.sin_port);
        thread_ = std::thread([this, connections] {
            for (std::size_t c = 0; c < connections; ++c) {
                const int conn = ::accept(fd_, nullptr, nullptr);
                if (conn < 0) return;
                serve(conn);
                ::close(conn);
            }
        });
    }
    ~FakePolicy() {
        thread_.join();
        ::close(fd_);
    }
    std::uint16_t port() const { return port_; }
    std::size_t requests() const { return requests_; }

private:
    void serve(int conn) {
        std::string buffer;
        char chunk[65536];
        for (;;) {
            const auto n = ::read(conn, chunk, sizeof chunk);
            if (n <= 0) return;
            buffer.append(chunk, static_cast<std::size_t>(n));
            for (auto nl = buffer.find('\n'); nl != std::string::npos; nl = buffer.find('\n')) {
                const auto req = json::parse(buffer.substr(0, nl));
                buffer.erase(0, nl + 1);
                CHECK(req["cmd"] == "act");
                CHECK(req["args"]["observation"]["tactile"].size() == 2400);
                CHECK(req["args"]["observation"]["proprio"].size() == 3);
                ++requests_;
                const auto reply = json{{"id", req["id"]}, {"ok", true}, {"action", {0.2, 0.0, -0.25}}, {"efe_proxy", 1.5}}.dump() + "\n";
                CHECK(::write(conn, reply.data(), reply.size()) == static_cast<ssize_t>(reply.size()));
            }
        }
    }

    int fd_ = -1;
    std::uint16_t port_ = 0;
    std::thread thread_;
    std::size_t requests_ = 0;
};

Trace continuous_trace(std::uint64_t seed, std::size_t n, double offset) {
    Trace t;
    t.header.kind = "continuous";
    t.header.seed_model = seed;
    for (std::size_t k = 0; k < n; ++k) {
        TraceRecord r;
        r.t = static_cast<std::int64_t>(k);
        r.action = {0, 0, 0};
        r.hand = {10.0 + offset + static_cast<double>(k), 15.0};
        r.sticker = {10.0, 15.0};
        r.diagnostics.emplace();
        r.diagnostics->efe_proxy = offset;
        t.records.push_back(r);
    }
    return t;
}

}  // namespace

TEST_SUITE("collection-report") {

TEST_CASE("episode plans follow the configured proportions") {
    CollectionConfig c;
    c.seed_model = 12;
    c.seed_env = 13;
    c.episodes = 1000;
    const auto plans = plan_collection(c);
    double sticker = 0.0, policy = 0.0;
    for (const auto& p : plans) {
        sticker += p.sticker;
        policy += p.use_policy;
    }
    CHECK(oracle::within_3_sigma(sticker, 1000, 0.5));
    CHECK(oracle::within_3_sigma(policy, 1000, 0.5));
    auto other_env = c;
    other_env.seed_env = 14;
    const auto q = plan_collection(other_env);
    for (std::size_t k = 0; k < plans.size(); ++k) {
        CHECK(q[k].sticker == plans[k].sticker);
        CHECK(q[k].action_seed == plans[k].action_seed);
        CHECK(q[k].env_seed != plans[k].env_seed);
    }
}

TEST_CASE("random-only collection is reproducible and bounded by the ring") {
    ScratchDir a("coll"), b("coll");
    std::ostringstream log;
    const auto cfg = small_collection(1, 2);
    const auto ra = run_continuous_collection(cfg, a.path(), log);
    const auto rb = run_continuous_collection(cfg, b.path(), log);
    CHECK(log.str().empty());
    CHECK(ra.episodes.size() == 6);
    CHECK(ra.retained.size() == 4);
    CHECK(ra.retained.front().index == 2);
    CHECK_FALSE(std::filesystem::exists(a / "episode_000000.ndjson"));
    CHECK_FALSE(std::filesystem::exists(a / "episode_000001.ndjson"));
    for (const auto& e : ra.retained) {
        CHECK(e.action_source == "random");
        CHECK(slurp(e.file) == slurp(b / e.file.filename().string()));
        const auto trace = read_trace(e.file);
        CHECK(trace.header.kind == "continuous");
        CHECK(trace.header.labels["episode"] == e.index);
        CHECK(trace.header.labels["sticker"] == e.sticker);
        REQUIRE(trace.records.size() == 25);
        for (const auto& r : trace.records) {
            CHECK(r.observation.tactile.size() == 2400);
            CHECK(r.observation.proprio.size() == 3);
            CHECK(r.action.size() == 3);
            CHECK(std::abs(r.action[0]) <= 0.05);
            CHECK(std::abs(r.action[2]) <= 0.5);
            CHECK(r.hand.size() == 2);
            CHECK((r.sticker.empty() || r.sticker.size() == 2));
        }
        if (!e.sticker) CHECK(trace.records.front().sticker.empty());
    }
    const auto manifest = json::parse(slurp(a / "collection.json"));
    CHECK(manifest["episodes_written"] == 6);
    CHECK(manifest["retained"].size() == 4);
}

TEST_CASE("an unreachable endpoint falls back to random actions") {
    ScratchDir dir("coll");
    auto cfg = small_collection(3, 4);
    cfg.policy_episode_probability = 1.0;
    // Bind and release a port so nothing is listening on it.
    std::uint16_t port = 0;
    {
        FakePolicy closed(0);
        port = closed.port();
    }
    cfg.policy_endpoint = "127.0.0.1:" + std::to_string(port);
    std::ostringstream log;
    CHECK_NOTHROW(run_continuous_collection(cfg, dir.path() / "x", log));
    std::ostringstream log2;
    ScratchDir dir2("coll");
    const auto r = run_continuous_collection(cfg, dir2.path(), log2);
    CHECK(r.fallbacks == 6);
    for (const auto& e : r.episodes) CHECK(e.action_source == "random_fallback");
    CHECK(log2.str().find("warning") != std::string::npos);
}

TEST_CASE("policy episodes use the endpoint's actions") {
    auto cfg = small_collection(5, 6);
    std::size_t policy_episodes = 0;
    for (const auto& p : plan_collection(cfg)) policy_episodes += p.use_policy;
    REQUIRE(policy_episodes > 0);
    ScratchDir dir("coll");
    std::ostringstream log;
    CollectionResult r;
    std::size_t requests = 0;
    {
        FakePolicy server(policy_episodes);
        cfg.policy_endpoint = "127.0.0.1:" + std::to_string(server.port());
        r = run_continuous_collection(cfg, dir.path(), log);
        requests = server.requests();
    }
    CHECK(r.fallbacks == 0);
    CHECK(requests == policy_episodes * cfg.episode_length);
    for (const auto& e : r.retained) {
        const auto trace = read_trace(e.file);
        for (const auto& rec : trace.records) {
            if (e.action_source == "policy") {
                CHECK(rec.action == std::vector<double>{0.05, 0.0, -0.25});
                CHECK(rec.diagnostics->efe_proxy == 1.5);
            } else {
                CHECK_FALSE(rec.diagnostics.has_value());
            }
        }
    }
}

TEST_CASE("discrete report columns") {
    ScratchDir dir("report");
    Trace t;
    t.header.kind = "discrete";
    TraceRecord r;
    r.t = 0;
    r.phase = "probe2:1";
    r.action = {1};
    r.observation.index = 4;
    r.hand = {4};
    r.diagnostics.emplace();
    r.diagnostics->efe_totals.assign(81, 2.0);
    r.diagnostics->chosen_policy = 7;
    r.diagnostics->self_prior.assign(40, 0.025);
    t.records = {r};
    emit_report(t, dir.path());
    CHECK(csv_header(dir / "efe.csv").size() == 2 + 81 + 1);
    CHECK(csv_header(dir / "efe.csv").back() == "chosen");
    CHECK(csv_header(dir / "self_prior.csv").size() == 41);
    CHECK(csv_rows(dir / "efe.csv") == 1);
    CHECK(csv_rows(dir / "positions.csv") == 1);
    const auto m = json::parse(slurp(dir / "manifest.json"));
    CHECK(m["records"] == 1);

    ScratchDir empty("report");
    Trace e;
    e.header.kind = "discrete";
    emit_report(e, empty.path());
    CHECK(csv_header(empty / "efe.csv").size() == 84);
    CHECK(csv_rows(empty / "efe.csv") == 0);
    CHECK(csv_rows(empty / "self_prior.csv") == 0);
}

TEST_CASE("report rejects foreign traces") {
    ScratchDir dir("report");
    Trace t;
    t.header.kind = "discrete";
    t.header.protocol_version = 2;
    CHECK_THROWS_AS(emit_report(t, dir.path()), ReportError);
    t.header.protocol_version = 1;
    t.header.kind = "video";
    CHECK_THROWS_AS(emit_report(t, dir.path()), ReportError);
    Trace d;
    d.header.kind = "discrete";
    CHECK_THROWS_AS(emit_aggregate_report({d}, dir.path()), ReportError);
}

TEST_CASE("aggregate mean and sample deviation over 64 traces") {
    ScratchDir dir("report");
    std::vector<Trace> traces;
    for (int k = 0; k < 64; ++k) traces.push_back(continuous_trace(static_cast<std::uint64_t>(k), 5, k));
    emit_aggregate_report(traces, dir.path());
    std::ifstream in(dir / "aggregate.csv");
    std::string line;
    std::getline(in, line);
    oracle::Vec offsets;
    for (int k = 0; k < 64; ++k) offsets.push_back(k);
    const double mean = 31.5;
    double ss = 0.0;
    for (double x : offsets) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / 63.0);
    for (int t = 0; t < 5; ++t) {
        REQUIRE(std::getline(in, line));
        std::stringstream row(line);
        std::vector<double> cells;
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
        REQUIRE(cells.size() == 7);
        CHECK(cells[0] == t);
        CHECK(cells[1] == doctest::Approx(mean + t).epsilon(1e-12));
        CHECK(cells[2] == doctest::Approx(sd).epsilon(1e-12));
        CHECK(cells[3] == 64);
        CHECK(cells[4] == doctest::Approx(mean).epsilon(1e-12));
        CHECK(cells[5] == doctest::Approx(sd).epsilon(1e-12));
        CHECK(cells[6] == 64);
    }
    const auto m = json::parse(slurp(dir / "manifest.json"));
    CHECK(m["runs"] == 64);
}

}
