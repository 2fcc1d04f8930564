// Acceptance gate: one PASS/FAIL line per primary criterion, details indented
// underneath. Exits nonzero when any criterion fails.

#include "oracles.hpp"

#include "selfprior/collection.hpp"
#include "selfprior/continuous_world.hpp"
#include "selfprior/discrete_agent.hpp"
#include "selfprior/experiment.hpp"
#include "selfprior/gateway.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

using namespace selfprior;
namespace d = selfprior::discrete;
namespace c = selfprior::continuous;
namespace h = selfprior::harness;
using nlohmann::json;

namespace {

constexpr std::size_t kSeeds = 100;

class Clock {
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Verdict {
    std::string name;
    bool pass = true;
    std::vector<std::string> details;

    // Records a sub-check; the criterion passes only if all of them do.
    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        details.push_back(std::string(ok ? "ok    " : "FAILED") + "  " + what);
    }
    void info(const std::string& what) { details.push_back("info    " + what); }
};

void report(const Verdict& v) {
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << v.name << '\n';
    for (const auto& line : v.details) std::cout << "      " << line << '\n';
    std::cout.flush();
}

Eigen::VectorXd to_eigen(const oracle::Vec& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())); }

Eigen::MatrixXd to_eigen(const oracle::Mat& m) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m[0].size()));
    for (std::size_t r = 0; r < m.size(); ++r)
        for (std::size_t k = 0; k < m[0].size(); ++k) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = m[r][k];
    return out;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ------------------------------------------------------------ discrete

Verdict null_response() {
    Verdict v{"null response"};
    Clock clock;
    h::DiscreteExperimentConfig cfg;
    h::DiscreteDriver driver(cfg);
    driver.probe(1, 30'000, "null", true);
    double worst = 0.0;
    std::array<double, 3> freq{};
    std::size_t steps = 0;
    for (const auto& r : driver.records()) {
        if (!r.diagnostics || r.diagnostics->efe_totals.empty()) continue;
        const auto& g = r.diagnostics->efe_totals;
        worst = std::max(worst, *std::max_element(g.begin(), g.end()) - *std::min_element(g.begin(), g.end()));
        freq[static_cast<std::size_t>(r.action[0])] += 1.0;
        ++steps;
    }
    const double secs = clock.seconds();
    v.check(steps == 30'000, fmt("%zu planning steps with the uniform self-prior", steps));
    v.check(worst < 1e-9, fmt("max spread of the 81 EFE totals %.3g (< 1e-9)", worst));
    const double sd = std::sqrt(30'000.0 * (1.0 / 3.0) * (2.0 / 3.0));
    for (std::size_t a = 0; a < 3; ++a)
        v.check(oracle::within_3_sigma(freq[a], 30'000, 1.0 / 3.0),
                fmt("%s chosen %.0f times, %+.2f sigma from 10000", d::action_name(d::action_from_index(a)).c_str(), freq[a],
                    (freq[a] - 10'000.0) / sd));
    v.check(secs < 10.0, fmt("runtime %.2f s (< 10 s)", secs));
    return v;
}

struct Sweep {
    std::vector<h::RunSummary> runs;
    double seconds = 0.0;
};

Sweep seed_sweep() {
    Clock clock;
    Sweep s;
    s.runs = h::run_seed_sweep(h::DiscreteExperimentConfig{}, kSeeds);
    s.seconds = clock.seconds();
    return s;
}

std::size_t reached_within(const Sweep& s, const std::string& probe, std::size_t steps) {
    std::size_t n = 0;
    for (const auto& r : s.runs)
        if (const auto* p = r.probe(probe); p && p->latency && *p->latency <= steps) ++n;
    return n;
}

Verdict reaching(const Sweep& s) {
    Verdict v{"reaching emergence"};
    const std::size_t reached = reached_within(s, "probe2:1", 10);
    std::size_t argmin_ok = 0;
    double latency_sum = 0.0;
    for (const auto& r : s.runs) {
        const auto* p = r.probe("probe2:1");
        argmin_ok += p->attach_argmin_end_hand == 1;
        if (p->latency) latency_sum += static_cast<double>(*p->latency);
    }
    v.check(reached >= 95, fmt("hand reached position 1 within 10 steps in %zu/100 runs (>= 95)", reached));
    v.check(argmin_ok == kSeeds, fmt("attach-time minimum-EFE policy ends at hand 1 in %zu/100 runs (100)", argmin_ok));
    v.info(fmt("mean latency %.2f steps", latency_sum / static_cast<double>(kSeeds)));
    v.check(s.seconds < 120.0, fmt("100-seed run %.1f s (< 120 s)", s.seconds));
    return v;
}

Verdict habituation(const Sweep& s) {
    Verdict v{"habituation"};
    const std::size_t reached = reached_within(s, "probe4:1", 10);
    v.check(reached >= 95, fmt("probe at 1 reached within 10 steps in %zu/100 runs (>= 95)", reached));

    double spread1 = 0.0, spread3 = 0.0, attach1 = 0.0, attach3 = 0.0;
    std::size_t per_seed_ok = 0;
    std::vector<double> distance(s.runs.front().probe("probe4:3")->hands.size(), 0.0);
    for (const auto& r : s.runs) {
        const auto* p1 = r.probe("probe4:1");
        const auto* p3 = r.probe("probe4:3");
        spread1 += p1->mean_spread;
        spread3 += p3->mean_spread;
        attach1 += p1->attach_spread;
        attach3 += p3->attach_spread;
        per_seed_ok += p3->mean_spread < 0.1 * p1->mean_spread;
        for (std::size_t k = 0; k < distance.size(); ++k) distance[k] += std::abs(p3->hands[k] - 3) / static_cast<double>(kSeeds);
    }
    const double ratio = spread3 / spread1;
    v.check(ratio < 0.10, fmt("window-mean EFE spread at 3 is %.1f%% of the spread at 1 (< 10%%)", 100.0 * ratio));
    v.info(fmt("per-seed window-mean ratio below 10%% in %zu/100 runs", per_seed_ok));
    v.info(fmt("attach-step spread ratio %.1f%%", 100.0 * attach3 / attach1));

    const auto trend = h::linear_trend(distance);
    v.check(trend.ci_contains(0.0), fmt("mean |hand-3| slope %.5f per step, 95%% CI [%.5f, %.5f] (must contain 0)", trend.slope,
                                        trend.ci_low, trend.ci_high));
    v.info(fmt("mean |hand-3| first step %.3f, last step %.3f", distance.front(), distance.back()));
    v.check(s.seconds < 300.0, fmt("100-seed run %.1f s (< 300 s)", s.seconds));
    return v;
}

Verdict self_prior_formation(const Sweep& s) {
    Verdict v{"self-prior formation"};
    const auto free = h::sticker_free_codes();
    const auto at3 = h::touch_at_3_codes();
    const auto foreign = h::foreign_touch_at_3_codes();
    double min_free = 1.0, min_ratio = 1e300, sum_ratio = 0.0, min_foreign = 1e300;
    for (const auto& r : s.runs) {
        const auto& c1 = r.phase("babble1")->self_prior_end;
        const auto& c3 = r.phase("babble3")->self_prior_end;
        min_free = std::min(min_free, h::mass_on(c1, free));
        const double ratio = h::mass_on(c3, at3) / h::mass_on(c1, at3);
        min_ratio = std::min(min_ratio, ratio);
        sum_ratio += ratio;
        min_foreign = std::min(min_foreign, h::mass_on(c3, foreign) / h::mass_on(c1, foreign));
    }
    v.info(fmt("%zu sticker-free reachable codes by enumeration", free.size()));
    v.check(min_free >= 0.95, fmt("phase-1 mass on sticker-free codes, min over runs %.4f (>= 0.95)", min_free));
    v.check(min_ratio >= 5.0, fmt("touch-at-3 mass phase-3 / phase-1, min over runs %.2f, mean %.2f (>= 5)", min_ratio,
                                  sum_ratio / static_cast<double>(kSeeds)));
    v.info(fmt("touch at 3 with hand elsewhere: ratio min %.1f", min_foreign));
    return v;
}

Verdict exact_inference() {
    Verdict v{"exact-inference oracles"};
    Clock clock;
    std::mt19937_64 rng(7001);
    double worst_post = 0.0, worst_efe = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t ns = 2 + static_cast<std::size_t>(trial % 19);
        const std::size_t no = 2 + static_cast<std::size_t>((trial * 7) % 39);
        const auto A = oracle::random_column_stochastic(no, ns, rng);
        const auto B = oracle::random_column_stochastic(ns, ns, rng);
        const auto phi = oracle::random_simplex(ns, rng);
        const std::size_t o = static_cast<std::size_t>(trial) % no;
        const d::GenerativeModel model{to_eigen(A), {to_eigen(B)}};
        const auto got = d::update_posterior(ProbVector(to_eigen(phi)), 0, o, model);
        const auto expect = oracle::bayes_posterior(A, B, phi, o);
        for (std::size_t k = 0; k < ns; ++k) worst_post = std::max(worst_post, std::abs(got.belief[k] - expect[k]));
    }
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t ns = 2 + static_cast<std::size_t>(trial % 19);
        const std::size_t no = 2 + static_cast<std::size_t>((trial * 11) % 39);
        const auto A = oracle::random_column_stochastic(no, ns, rng);
        const auto B = oracle::random_column_stochastic(ns, ns, rng);
        const auto phi = oracle::random_simplex(ns, rng);
        const auto C = oracle::random_simplex(no, rng);
        const d::GenerativeModel model{to_eigen(A), {to_eigen(B)}};
        const double got = d::expected_free_energy_step(ProbVector(to_eigen(phi)), 0, model, ProbVector(to_eigen(C)));
        worst_efe = std::max(worst_efe, std::abs(got - oracle::efe_brute_force(A, B, phi, C)));
    }
    const double secs = clock.seconds();
    v.check(worst_post < 1e-10, fmt("posterior vs closed-form Bayes, 1000 models, max error %.3g (< 1e-10)", worst_post));
    v.check(worst_efe < 1e-10, fmt("two-term EFE vs brute-force expectation, 1000 models, max error %.3g (< 1e-10)", worst_efe));
    v.check(secs < 30.0, fmt("runtime %.2f s (< 30 s)", secs));
    return v;
}

// ------------------------------------------------------------ continuous

c::ContinuousWorldState random_state(RandomStream& rng) {
    c::ContinuousWorldState s;
    s.pose = {rng.uniform(c::Body::shoulder_min, c::Body::shoulder_max), rng.uniform(c::Body::elbow_min, c::Body::elbow_max),
              rng.uniform(c::Body::height_min, c::Body::height_max)};
    if (rng.uniform() < 0.5) s.sticker = c::Sticker{c::random_sticker_center(rng), 0};
    return s;
}

c::Vec2 hand_local(const c::ContinuousWorldState& s) { return c::forearm_local_coords(c::forward_kinematics(s.pose)); }

bool removal_streak_semantics() {
    RandomStream rng(31);
    c::ContinuousWorldState s;
    for (;;) {
        s = c::reset_world(rng, c::NoSticker{});
        const auto uv = hand_local(s);
        if (uv.x > 12 && uv.x < 68 && uv.y > 8 && uv.y < 22) break;
    }
    const auto uv = hand_local(s);
    const c::Vec2 away{uv.x > 40 ? 6.0 : 74.0, 15.0};
    bool ok = true;

    auto a = s;
    a.sticker = c::Sticker{uv, 0};
    for (int k = 1; k <= 10; ++k) {
        const auto r = c::update_sticker_contact(a);
        ok = ok && r.removed == (k == 10);
        a = r.state;
    }
    ok = ok && !a.sticker;

    auto b = s;
    b.sticker = c::Sticker{uv, 0};
    const auto run = [&](int n, c::Vec2 where) {
        b.sticker->center = where;
        for (int k = 0; k < n; ++k) {
            const auto r = c::update_sticker_contact(b);
            ok = ok && !r.removed;
            b = r.state;
        }
    };
    run(9, uv);
    run(1, away);
    run(9, uv);
    return ok && b.sticker.has_value() && b.sticker->contact_streak == 9;
}

Verdict continuous_conformance() {
    Verdict v{"continuous-world conformance"};
    Clock clock;
    RandomStream rng(2718);

    bool bounds = true, monotone = true;
    for (int trial = 0; trial < 10'000; ++trial) {
        const auto s = random_state(rng);
        const auto f = c::render_tactile(s);
        for (double x : f.flat()) bounds = bounds && x >= 0.0 && x <= 1.0;
        auto up = s;
        up.pose.height = std::min(c::Body::height_max, s.pose.height + rng.uniform(0.0, 5.0));
        const auto g = c::render_tactile(up);
        for (std::size_t k = 0; k < c::kTactileCells; ++k) monotone = monotone && g.flat()[k] <= f.flat()[k];
    }
    v.check(bounds, "tactile values in [0, 1] over 10000 random states");
    v.check(monotone, "raising the hand never increases any cell (10000 states)");

    bool safe = true;
    std::size_t rejected = 0, accepted = 0;
    for (int episode = 0; episode < 20; ++episode) {
        auto s = c::reset_world(rng, c::RandomSticker{});
        for (int t = 0; t < 5'000; ++t) {
            const c::ContinuousAction a{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-1.0, 1.0)};
            const auto r = c::apply_action(s, a);
            if (r.accepted) {
                ++accepted;
                safe = safe && c::distance_to_band(hand_local(r.state)) <= c::Body::band_margin && r.state.pose.within_limits();
            } else {
                ++rejected;
                safe = safe && r.state == s;
            }
            s = r.state;
        }
    }
    v.check(safe && rejected > 0,
            fmt("15 mm constraint held over %zu accepted steps; %zu rejected steps left the state unchanged", accepted, rejected));
    v.check(removal_streak_semantics(), "sticker removed on the 10th consecutive contact step; 9, 1 away, 9 keeps it");

    Clock ik;
    const auto coverage = c::workspace_coverage();
    v.check(coverage.covered == c::kTactileCells,
            fmt("workspace covers %zu/2400 cells within joint limits (%zu poses, %.1f s)", coverage.covered,
                coverage.poses_evaluated, ik.seconds()));

    const auto root = std::filesystem::temp_directory_path() / ("selfprior_acceptance_" + std::to_string(::getpid()));
    h::CollectionConfig cfg;
    cfg.seed_model = 41;
    cfg.seed_env = 42;
    cfg.episodes = 4;
    cfg.episode_length = 200;
    std::ostringstream log;
    h::run_continuous_collection(cfg, root / "a", log);
    h::run_continuous_collection(cfg, root / "b", log);
    bool identical = true;
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(root / "a")) {
        ++files;
        identical = identical && slurp(e.path()) == slurp(root / "b" / e.path().filename());
    }
    std::filesystem::remove_all(root);
    v.check(identical && files == 5, fmt("seeded collection replays byte-identically (%zu files)", files));

    const double secs = clock.seconds();
    v.check(secs < 300.0, fmt("runtime %.1f s (< 300 s)", secs));
    return v;
}

// ------------------------------------------------------------ gateway

std::vector<std::string> transcript(gateway::WorldKind kind) {
    const auto req = [](std::int64_t id, const std::string& cmd, json args) {
        return json{{"id", id}, {"cmd", cmd}, {"args", std::move(args)}}.dump();
    };
    std::vector<std::string> lines{req(1, "hello", json::object()), req(2, "reset", {{"sticker", "random"}})};
    RandomStream a(5);
    std::int64_t id = 3;
    for (int k = 0; k < 200; ++k) {
        if (kind == gateway::WorldKind::Discrete) {
            lines.push_back(req(id++, "step", {{"action", static_cast<int>(a.below(3))}}));
            if (k == 50) lines.push_back(req(id++, "place_sticker", {{"position", 2}}));
        } else {
            lines.push_back(req(id++, "step", {{"action", {a.uniform(-0.05, 0.05), a.uniform(-0.05, 0.05), a.uniform(-0.5, 0.5)}}}));
            if (k == 50) lines.push_back(req(id++, "place_sticker", {{"u", 30.0}, {"v", 12.0}}));
        }
        if (k == 120) lines.push_back(req(id++, "remove_sticker", json::object()));
    }
    lines.push_back(req(id, "close", json::object()));
    return lines;
}

std::string replay(gateway::WorldKind kind, std::uint64_t seed, const std::vector<std::string>& lines) {
    std::stringstream in, out;
    for (const auto& l : lines) in << l << '\n';
    gateway::serve_stream(in, out, gateway::Session(kind, seed));
    return out.str();
}

Verdict gateway_determinism() {
    Verdict v{"gateway determinism"};
    for (auto kind : {gateway::WorldKind::Discrete, gateway::WorldKind::Continuous}) {
        const auto lines = transcript(kind);
        const auto first = replay(kind, 77, lines);
        v.check(first == replay(kind, 77, lines),
                fmt("%s: identical seed and transcript give byte-identical responses (%zu bytes)", gateway::kind_name(kind).c_str(),
                    first.size()));

        const auto solo_b = replay(kind, 78, lines);
        gateway::Session a(kind, 77), b(kind, 78);
        std::string out_a, out_b;
        for (const auto& l : lines) {
            out_a += a.handle_line(l) + "\n";
            out_b += b.handle_line(l) + "\n";
        }
        v.check(out_a == first && out_b == solo_b, fmt("%s: interleaved sessions match their solo replays", gateway::kind_name(kind).c_str()));
    }

    const auto lines = transcript(gateway::WorldKind::Continuous);
    const auto expect = replay(gateway::WorldKind::Continuous, 79, lines);
    gateway::Server server("127.0.0.1", 0, [] { return gateway::Session(gateway::WorldKind::Continuous, 79); });
    std::thread loop([&] { server.run(); });
    std::vector<std::string> got(2);
    {
        std::vector<std::thread> clients;
        for (std::size_t k = 0; k < got.size(); ++k)
            clients.emplace_back([&, k] {
                gateway::LineClient client("127.0.0.1", server.port());
                for (const auto& l : lines) got[k] += client.request(l) + "\n";
            });
        for (auto& t : clients) t.join();
    }
    server.stop();
    loop.join();
    v.check(got[0] == expect && got[1] == expect, "two concurrent TCP connections each match the in-process replay");
    return v;
}

}  // namespace

int main() {
    std::vector<Verdict> verdicts;
    const auto run = [&](Verdict v) {
        report(v);
        verdicts.push_back(std::move(v));
    };
    run(null_response());
    const auto sweep = seed_sweep();
    run(reaching(sweep));
    run(habituation(sweep));
    run(self_prior_formation(sweep));
    run(exact_inference());
    run(continuous_conformance());
    run(gateway_determinism());

    std::size_t passed = 0;
    for (const auto& v : verdicts) passed += v.pass;
    std::cout << "\n" << passed << "/" << verdicts.size() << " criteria passed\n";
    return passed == verdicts.size() ? 0 : 1;
}
