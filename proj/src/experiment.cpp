#include "selfprior/experiment.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

namespace selfprior::harness {

using nlohmann::json;
namespace d = selfprior::discrete;

// ---------------------------------------------------------------- schedule

void Schedule::validate() const {
    std::int64_t last = -1;
    for (const auto& e : events) {
        if (e.step < 0) throw ConfigError("schedule step " + std::to_string(e.step) + " is negative");
        if (e.step <= last)
            throw ConfigError("schedule steps must be strictly increasing (" + std::to_string(last) + " then " +
                              std::to_string(e.step) + ")");
        last = e.step;
    }
}

d::CaregiverEvent Schedule::at(std::int64_t step) const {
    const auto it = std::lower_bound(events.begin(), events.end(), step,
                                     [](const ScheduledEvent& e, std::int64_t s) { return e.step < s; });
    return it != events.end() && it->step == step ? it->event : d::CaregiverEvent::none();
}

// ---------------------------------------------------------------- config

namespace {

void check_keys(const json& section, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!section.is_object()) throw ConfigError("'" + where + "' must be an object");
    for (const auto& [key, _] : section.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            throw ConfigError("unknown key '" + where + "." + key + "'");
    }
}

template <class T>
void read(const json& section, const std::string& where, const char* key, T& out) {
    if (!section.contains(key)) return;
    try {
        out = section.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("'" + where + "." + key + "' has the wrong type");
    }
}

}  // namespace

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint) {
    const auto colon = endpoint.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint.size())
        throw ConfigError("policy endpoint '" + endpoint + "' is not host:port");
    int port = 0;
    try {
        std::size_t used = 0;
        port = std::stoi(endpoint.substr(colon + 1), &used);
        if (used != endpoint.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw ConfigError("policy endpoint '" + endpoint + "' has a bad port");
    }
    if (port <= 0 || port > 65535) throw ConfigError("policy endpoint '" + endpoint + "' has a bad port");
    return {endpoint.substr(0, colon), static_cast<std::uint16_t>(port)};
}

namespace {

void check_position(int p, const std::string& what) {
    if (p < 1 || p > d::kSensorCount) throw ConfigError(what + " must be an arm position 1..3, got " + std::to_string(p));
}

json schedule_to_json(const Schedule& s) {
    json out = json::array();
    for (const auto& e : s.events) out.push_back({{"step", e.step}, {"event", e.event.str()}});
    return out;
}

Schedule schedule_from_json(const json& j) {
    if (!j.is_array()) throw ConfigError("'discrete.habituation_schedule' must be an array");
    Schedule s;
    for (const auto& e : j) {
        check_keys(e, "discrete.habituation_schedule[]", {"step", "event"});
        if (!e.contains("step") || !e.contains("event"))
            throw ConfigError("schedule entries need 'step' and 'event'");
        ScheduledEvent ev;
        read(e, "discrete.habituation_schedule[]", "step", ev.step);
        try {
            ev.event = d::CaregiverEvent::parse(e.at("event").get<std::string>());
        } catch (const std::exception& ex) {
            throw ConfigError(std::string("bad schedule event: ") + ex.what());
        }
        s.events.push_back(ev);
    }
    return s;
}

}  // namespace

void validate(const DiscreteExperimentConfig& c) {
    if (c.horizon < 1 || c.horizon > 8) throw ConfigError("horizon must be in 1..8");
    if (!(c.temperature > 0.0) || !std::isfinite(c.temperature)) throw ConfigError("temperature must be positive");
    check_position(c.habituation_sticker, "habituation_sticker");
    check_position(c.null_probe_position, "null_probe_position");
    for (int p : c.probes_after_babble) check_position(p, "probes_after_babble entry");
    for (int p : c.probes_after_habituation) check_position(p, "probes_after_habituation entry");
    if (c.probe_start_hand < 0 || c.probe_start_hand >= d::kHandPositions)
        throw ConfigError("probe_start_hand must be in 0..4");
    if (c.probe_window < 1) throw ConfigError("probe_window must be at least 1");
    if (c.snapshot_interval < 1) throw ConfigError("snapshot_interval must be at least 1");
    c.habituation_schedule.validate();
    for (const auto& e : c.habituation_schedule.events) {
        if (static_cast<std::size_t>(e.step) >= c.habituation_steps)
            throw ConfigError("schedule step " + std::to_string(e.step) + " falls outside the " +
                              std::to_string(c.habituation_steps) + "-step habituation phase");
    }
}

void validate(const CollectionConfig& c) {
    if (c.episode_length < 1) throw ConfigError("episode_length must be at least 1");
    if (c.buffer_capacity < 1) throw ConfigError("buffer_capacity must be at least 1");
    for (double p : {c.policy_episode_probability, c.sticker_episode_probability})
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("episode probabilities must lie in [0, 1]");
    if (!c.policy_endpoint.empty()) parse_endpoint(c.policy_endpoint);
}

ExperimentConfig parse_config(const json& doc) {
    check_keys(doc, "config", {"kind", "seeds", "output_dir", "discrete", "collection"});
    ExperimentConfig cfg;
    read(doc, "config", "kind", cfg.kind);
    if (cfg.kind != "discrete" && cfg.kind != "continuous")
        throw ConfigError("kind must be \"discrete\" or \"continuous\", got \"" + cfg.kind + "\"");
    if (doc.contains("output_dir")) {
        std::string dir;
        read(doc, "config", "output_dir", dir);
        cfg.output_dir = dir;
    }
    std::uint64_t seed_model = 0;
    std::uint64_t seed_env = 0;
    if (doc.contains("seeds")) {
        const auto& s = doc.at("seeds");
        check_keys(s, "seeds", {"model", "env"});
        read(s, "seeds", "model", seed_model);
        read(s, "seeds", "env", seed_env);
    }

    const char* wrong = cfg.kind == "discrete" ? "collection" : "discrete";
    if (doc.contains(wrong))
        throw ConfigError(std::string("section '") + wrong + "' is not valid for kind \"" + cfg.kind + "\"");

    if (cfg.kind == "discrete") {
        auto& c = cfg.discrete;
        c.seed_model = seed_model;
        c.seed_env = seed_env;
        if (doc.contains("discrete")) {
            const auto& s = doc.at("discrete");
            const std::string w = "discrete";
            check_keys(s, w,
                       {"horizon", "temperature", "babble_steps", "habituation_steps", "habituation_sticker",
                        "null_probe_position", "probes_after_babble", "probes_after_habituation", "probe_start_hand",
                        "probe_window", "freeze_self_prior", "snapshot_interval", "habituation_schedule"});
            read(s, w, "horizon", c.horizon);
            read(s, w, "temperature", c.temperature);
            read(s, w, "babble_steps", c.babble_steps);
            read(s, w, "habituation_steps", c.habituation_steps);
            read(s, w, "habituation_sticker", c.habituation_sticker);
            read(s, w, "null_probe_position", c.null_probe_position);
            read(s, w, "probes_after_babble", c.probes_after_babble);
            read(s, w, "probes_after_habituation", c.probes_after_habituation);
            read(s, w, "probe_start_hand", c.probe_start_hand);
            read(s, w, "probe_window", c.probe_window);
            read(s, w, "freeze_self_prior", c.freeze_self_prior);
            read(s, w, "snapshot_interval", c.snapshot_interval);
            if (s.contains("habituation_schedule")) c.habituation_schedule = schedule_from_json(s.at("habituation_schedule"));
        }
        validate(c);
    } else {
        auto& c = cfg.collection;
        c.seed_model = seed_model;
        c.seed_env = seed_env;
        if (doc.contains("collection")) {
            const auto& s = doc.at("collection");
            const std::string w = "collection";
            check_keys(s, w,
                       {"episodes", "episode_length", "buffer_capacity", "policy_episode_probability",
                        "sticker_episode_probability", "policy_endpoint"});
            read(s, w, "episodes", c.episodes);
            read(s, w, "episode_length", c.episode_length);
            read(s, w, "buffer_capacity", c.buffer_capacity);
            read(s, w, "policy_episode_probability", c.policy_episode_probability);
            read(s, w, "sticker_episode_probability", c.sticker_episode_probability);
            read(s, w, "policy_endpoint", c.policy_endpoint);
        }
        validate(c);
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(doc);
}

json to_json(const DiscreteExperimentConfig& c) {
    return json{{"kind", "discrete"},
                {"seeds", {{"model", c.seed_model}, {"env", c.seed_env}}},
                {"discrete",
                 {{"horizon", c.horizon},
                  {"temperature", c.temperature},
                  {"babble_steps", c.babble_steps},
                  {"habituation_steps", c.habituation_steps},
                  {"habituation_sticker", c.habituation_sticker},
                  {"null_probe_position", c.null_probe_position},
                  {"probes_after_babble", c.probes_after_babble},
                  {"probes_after_habituation", c.probes_after_habituation},
                  {"probe_start_hand", c.probe_start_hand},
                  {"probe_window", c.probe_window},
                  {"freeze_self_prior", c.freeze_self_prior},
                  {"snapshot_interval", c.snapshot_interval},
                  {"habituation_schedule", schedule_to_json(c.habituation_schedule)}}}};
}

json to_json(const CollectionConfig& c) {
    return json{{"kind", "continuous"},
                {"seeds", {{"model", c.seed_model}, {"env", c.seed_env}}},
                {"collection",
                 {{"episodes", c.episodes},
                  {"episode_length", c.episode_length},
                  {"buffer_capacity", c.buffer_capacity},
                  {"policy_episode_probability", c.policy_episode_probability},
                  {"sticker_episode_probability", c.sticker_episode_probability},
                  {"policy_endpoint", c.policy_endpoint}}}};
}

// ---------------------------------------------------------------- code sets

std::vector<std::size_t> sticker_free_codes() {
    std::set<std::size_t> codes;
    for (int h = 0; h < d::kHandPositions; ++h) codes.insert(d::observe(d::DiscreteWorldState(h, std::nullopt)).index);
    return {codes.begin(), codes.end()};
}

std::vector<std::size_t> touch_at_3_codes() {
    std::vector<std::size_t> out;
    for (std::size_t o = 0; o < d::kNumObservations; ++o)
        if (d::decode_observation(d::DiscreteObservation(o)).first.bits[2]) out.push_back(o);
    return out;
}

std::vector<std::size_t> foreign_touch_at_3_codes() {
    std::vector<std::size_t> out;
    for (std::size_t o : touch_at_3_codes())
        if (d::decode_observation(d::DiscreteObservation(o)).second != 3) out.push_back(o);
    return out;
}

double mass_on(const std::vector<double>& distribution, const std::vector<std::size_t>& codes) {
    double m = 0.0;
    for (std::size_t c : codes) m += distribution.at(c);
    return m;
}

// ---------------------------------------------------------------- summary

const PhaseSummary* RunSummary::phase(const std::string& name) const {
    for (const auto& p : phases)
        if (p.phase == name) return &p;
    return nullptr;
}

const ProbeResult* RunSummary::probe(const std::string& name) const {
    for (const auto& p : probes)
        if (p.phase == name) return &p;
    return nullptr;
}

namespace {

int end_hand(int start, const d::Policy& policy) {
    for (std::size_t a : policy.actions) start = std::clamp(start + static_cast<int>(a) - 1, 0, d::kHandPositions - 1);
    return start;
}

double spread_of(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

ProbeResult summarize_probe(const std::string& phase, const std::vector<const TraceRecord*>& recs) {
    ProbeResult p;
    p.phase = phase;
    const TraceRecord* attach = nullptr;
    for (const auto* r : recs)
        if (r->event.rfind("attach:", 0) == 0 && r->action.empty()) attach = r;
    if (!attach || attach->sticker.empty()) throw TraceError("probe phase '" + phase + "' has no attach record");
    p.position = static_cast<int>(attach->sticker[0]);
    p.start_hand = static_cast<int>(attach->hand.at(0));
    if (p.start_hand == p.position) p.latency = 0;

    std::size_t k = 0;
    double spread_sum = 0.0;
    for (const auto* r : recs) {
        if (r->action.empty() || !r->diagnostics || r->diagnostics->efe_totals.empty()) continue;
        const auto& totals = r->diagnostics->efe_totals;
        if (k == 0) {
            p.attach_totals = totals;
            p.attach_spread = spread_of(totals);
            p.attach_argmin = static_cast<std::size_t>(std::min_element(totals.begin(), totals.end()) - totals.begin());
            std::size_t horizon = 0;
            for (std::size_t n = 1; n < totals.size(); n *= d::kNumActions) ++horizon;
            const auto report = d::make_report(totals, d::kNumActions, horizon);
            p.attach_argmin_end_hand = end_hand(p.start_hand, report.policy(p.attach_argmin));
        }
        spread_sum += spread_of(totals);
        ++k;
        const int hand = static_cast<int>(r->hand.at(0));
        p.hands.push_back(hand);
        if (!p.latency && hand == p.position) p.latency = k;
    }
    p.mean_spread = k ? spread_sum / static_cast<double>(k) : 0.0;
    return p;
}

}  // namespace

RunSummary summarize_trace(const Trace& trace) {
    RunSummary s;
    std::vector<std::string> order;
    std::map<std::string, std::vector<const TraceRecord*>> by_phase;
    for (const auto& r : trace.records) {
        auto [it, fresh] = by_phase.try_emplace(r.phase);
        if (fresh) order.push_back(r.phase);
        it->second.push_back(&r);
        if (r.event == "remove") ++s.removal_events;
        if (r.diagnostics && !r.diagnostics->self_prior.empty()) s.snapshots.emplace_back(r.t, r.diagnostics->self_prior);
    }
    for (const auto& name : order) {
        const auto& recs = by_phase[name];
        PhaseSummary ps;
        ps.phase = name;
        ps.observation_histogram.assign(d::kNumObservations, 0.0);
        bool planned = false;
        for (const auto* r : recs) {
            if (r->diagnostics) {
                const auto& diag = *r->diagnostics;
                if (diag.surprise) ++ps.surprises;
                if (!diag.self_prior.empty()) ps.self_prior_end = diag.self_prior;
                if (!diag.efe_totals.empty()) {
                    planned = true;
                    const auto [lo, hi] = std::minmax_element(diag.efe_totals.begin(), diag.efe_totals.end());
                    ps.efe_min.push_back(*lo);
                    ps.efe_max.push_back(*hi);
                    ps.efe_chosen.push_back(diag.chosen_policy ? diag.efe_totals.at(*diag.chosen_policy) : *lo);
                }
            }
            if (r->action.empty()) continue;
            ++ps.steps;
            if (r->observation.index) ps.observation_histogram.at(*r->observation.index) += 1.0;
        }
        s.phases.push_back(std::move(ps));
        if (planned) s.probes.push_back(summarize_probe(name, recs));
    }
    return s;
}

json to_json(const RunSummary& s) {
    json phases = json::array();
    for (const auto& p : s.phases)
        phases.push_back({{"phase", p.phase},
                          {"steps", p.steps},
                          {"observation_histogram", p.observation_histogram},
                          {"self_prior_end", p.self_prior_end},
                          {"efe_min", p.efe_min},
                          {"efe_max", p.efe_max},
                          {"efe_chosen", p.efe_chosen},
                          {"surprises", p.surprises}});
    json probes = json::array();
    for (const auto& p : s.probes)
        probes.push_back({{"phase", p.phase},
                          {"position", p.position},
                          {"start_hand", p.start_hand},
                          {"latency", p.latency ? json(*p.latency) : json("inf")},
                          {"attach_spread", p.attach_spread},
                          {"mean_spread", p.mean_spread},
                          {"attach_argmin", p.attach_argmin},
                          {"attach_argmin_end_hand", p.attach_argmin_end_hand},
                          {"hands", p.hands},
                          {"attach_totals", p.attach_totals}});
    json snaps = json::array();
    for (const auto& [t, c] : s.snapshots) snaps.push_back({{"t", t}, {"self_prior", c}});
    return json{{"phases", phases}, {"probes", probes}, {"snapshots", snaps}, {"removal_events", s.removal_events}};
}

RunSummary summary_from_json(const json& j) {
    RunSummary s;
    for (const auto& p : j.at("phases")) {
        PhaseSummary ps;
        ps.phase = p.at("phase").get<std::string>();
        ps.steps = p.at("steps").get<std::size_t>();
        ps.observation_histogram = p.at("observation_histogram").get<std::vector<double>>();
        ps.self_prior_end = p.at("self_prior_end").get<std::vector<double>>();
        ps.efe_min = p.at("efe_min").get<std::vector<double>>();
        ps.efe_max = p.at("efe_max").get<std::vector<double>>();
        ps.efe_chosen = p.at("efe_chosen").get<std::vector<double>>();
        ps.surprises = p.at("surprises").get<std::size_t>();
        s.phases.push_back(std::move(ps));
    }
    for (const auto& p : j.at("probes")) {
        ProbeResult pr;
        pr.phase = p.at("phase").get<std::string>();
        pr.position = p.at("position").get<int>();
        pr.start_hand = p.at("start_hand").get<int>();
        if (p.at("latency").is_number()) pr.latency = p.at("latency").get<std::size_t>();
        pr.attach_spread = p.at("attach_spread").get<double>();
        pr.mean_spread = p.at("mean_spread").get<double>();
        pr.attach_argmin = p.at("attach_argmin").get<std::size_t>();
        pr.attach_argmin_end_hand = p.at("attach_argmin_end_hand").get<int>();
        pr.hands = p.at("hands").get<std::vector<int>>();
        pr.attach_totals = p.at("attach_totals").get<std::vector<double>>();
        s.probes.push_back(std::move(pr));
    }
    for (const auto& sn : j.at("snapshots"))
        s.snapshots.emplace_back(sn.at("t").get<std::int64_t>(), sn.at("self_prior").get<std::vector<double>>());
    s.removal_events = j.at("removal_events").get<std::size_t>();
    return s;
}

// ---------------------------------------------------------------- driver

DiscreteDriver::DiscreteDriver(const DiscreteExperimentConfig& config)
    : config_(config),
      agent_(d::AgentConfig{config.horizon, config.temperature, false}),
      world_(config.probe_start_hand, std::nullopt),
      model_rng_(config.seed_model),
      env_rng_(config.seed_env) {
    validate(config_);
}

TraceHeader DiscreteDriver::header() const {
    TraceHeader h;
    h.kind = "discrete";
    h.seed_model = config_.seed_model;
    h.seed_env = config_.seed_env;
    h.config = to_json(config_);
    h.config_hash = fnv1a_hex(h.config.dump());
    return h;
}

TraceRecord& DiscreteDriver::record_step(const std::string& phase, std::optional<std::size_t> action,
                                         const std::string& event, bool surprise) {
    TraceRecord r;
    r.t = t_++;
    r.phase = phase;
    if (action) r.action = {static_cast<double>(*action)};
    r.observation.index = d::observe(world_).index;
    r.event = event;
    r.hand = {static_cast<double>(world_.hand)};
    if (world_.sticker) r.sticker = {static_cast<double>(*world_.sticker)};
    StepDiagnostics diag;
    diag.surprise = surprise;
    if (r.t % static_cast<std::int64_t>(config_.snapshot_interval) == 0) {
        const auto c = agent_.self_prior().values();
        diag.self_prior.assign(c.data(), c.data() + c.size());
    }
    r.diagnostics = std::move(diag);
    records_.push_back(std::move(r));
    return records_.back();
}

void DiscreteDriver::snapshot_last() {
    if (records_.empty()) return;
    auto& diag = *records_.back().diagnostics;
    const auto c = agent_.self_prior().values();
    diag.self_prior.assign(c.data(), c.data() + c.size());
}

void DiscreteDriver::reset_world(std::optional<int> sticker, const std::string& phase) {
    world_ = d::DiscreteWorldState(static_cast<int>(env_rng_.below(d::kHandPositions)), sticker);
    const bool surprise = agent_.settle(d::observe(world_).index);
    record_step(phase, std::nullopt, "reset", surprise);
}

void DiscreteDriver::babble(std::size_t steps, const std::string& phase, const Schedule& schedule) {
    const bool frozen = agent_.config().freeze_self_prior;
    agent_.config().freeze_self_prior = false;
    for (std::size_t k = 0; k < steps; ++k) {
        const std::size_t a = model_rng_.below(d::kNumActions);
        const auto event = schedule.at(static_cast<std::int64_t>(k));
        world_ = d::step_world(world_, d::action_from_index(a), event);
        const bool surprise = agent_.observe(d::observe(world_).index, a);
        record_step(phase, a, event.str(), surprise);
    }
    agent_.config().freeze_self_prior = frozen;
    snapshot_last();
}

ProbeResult DiscreteDriver::probe(int position, std::size_t window, const std::string& phase, bool freeze_self_prior) {
    const bool frozen = agent_.config().freeze_self_prior;
    agent_.config().freeze_self_prior = freeze_self_prior;

    world_ = d::DiscreteWorldState(config_.probe_start_hand, std::nullopt);
    agent_.settle(d::observe(world_).index);
    record_step(phase, std::nullopt, "reset", false);

    const auto attach = d::CaregiverEvent::attach(position);
    world_ = d::DiscreteWorldState(world_.hand, position);
    const bool attach_surprise = agent_.observe(d::observe(world_).index, std::nullopt);
    record_step(phase, std::nullopt, attach.str(), attach_surprise);

    for (std::size_t k = 0; k < window; ++k) {
        const auto report = agent_.plan();
        const auto choice = d::select_action(report, model_rng_);
        world_ = d::step_world(world_, d::action_from_index(choice.first_action));
        const bool surprise = agent_.observe(d::observe(world_).index, choice.first_action);
        auto& r = record_step(phase, choice.first_action, "none", surprise);
        r.diagnostics->efe_totals = report.totals;
        r.diagnostics->chosen_policy = choice.policy;
    }
    snapshot_last();
    agent_.config().freeze_self_prior = frozen;

    std::vector<const TraceRecord*> recs;
    for (const auto& r : records_)
        if (r.phase == phase) recs.push_back(&r);
    return summarize_probe(phase, recs);
}

// ---------------------------------------------------------------- runs

namespace {

std::string probe_name(int phase, int position) { return "probe" + std::to_string(phase) + ":" + std::to_string(position); }

}  // namespace

DiscreteRun run_discrete_experiment(const DiscreteExperimentConfig& config) {
    DiscreteDriver driver(config);
    const bool freeze = config.freeze_self_prior;

    // The null probe must see the initial uniform C, so counting is off there.
    driver.probe(config.null_probe_position, config.probe_window, probe_name(0, config.null_probe_position), true);

    driver.reset_world(std::nullopt, "babble1");
    driver.babble(config.babble_steps, "babble1");
    for (int p : config.probes_after_babble) driver.probe(p, config.probe_window, probe_name(2, p), freeze);

    driver.reset_world(config.habituation_sticker, "babble3");
    driver.babble(config.habituation_steps, "babble3", config.habituation_schedule);
    for (int p : config.probes_after_habituation) driver.probe(p, config.probe_window, probe_name(4, p), freeze);

    DiscreteRun run;
    run.final_counts = driver.agent().counts();
    run.trace.header = driver.header();
    run.trace.records = driver.take_records();
    run.summary = summarize_trace(run.trace);
    return run;
}

std::vector<RunSummary> run_seed_sweep(const DiscreteExperimentConfig& base, std::size_t count) {
    validate(base);
    std::vector<RunSummary> out(count);
    const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t k = 0; k < n; ++k) {
        auto cfg = base;
        cfg.seed_model = base.seed_model + static_cast<std::uint64_t>(k);
        cfg.seed_env = base.seed_env + static_cast<std::uint64_t>(k);
        out[static_cast<std::size_t>(k)] = run_discrete_experiment(cfg).summary;
    }
    return out;
}

void write_run(const DiscreteRun& run, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_trace(dir / "trace.ndjson", run.trace.header, run.trace.records);
    std::ofstream out(dir / "summary.json");
    out << to_json(run.summary).dump(1) << '\n';
    if (!out) throw TraceError("cannot write summary under '" + dir.string() + "'");
}

LinearTrend linear_trend(const std::vector<double>& y) {
    const std::size_t n = y.size();
    if (n < 3) throw std::invalid_argument("linear_trend needs at least 3 points");
    const double xbar = (static_cast<double>(n) - 1.0) / 2.0;
    const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = static_cast<double>(i) - xbar;
        sxx += dx * dx;
        sxy += dx * (y[i] - ybar);
    }
    LinearTrend t;
    t.slope = sxy / sxx;
    const double intercept = ybar - t.slope * xbar;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - intercept - t.slope * static_cast<double>(i);
        sse += r * r;
    }
    const double se = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
    const boost::math::students_t dist(static_cast<double>(n - 2));
    const double q = boost::math::quantile(dist, 0.975);
    t.ci_low = t.slope - q * se;
    t.ci_high = t.slope + q * se;
    return t;
}

}  // namespace selfprior::harness
