#pragma once

#include "selfprior/categorical.hpp"
#include "selfprior/discrete_agent.hpp"
#include "selfprior/discrete_world.hpp"
#include "selfprior/trace.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfprior::harness {

/// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ScheduledEvent {
    std::int64_t step = 0;  ///< step offset within the segment the schedule drives
    discrete::CaregiverEvent event;
};

/// Caregiver events keyed by strictly increasing step.
struct Schedule {
    std::vector<ScheduledEvent> events;

    /// Throws ConfigError if steps are negative or not strictly increasing.
    void validate() const;
    discrete::CaregiverEvent at(std::int64_t step) const;
};

struct DiscreteExperimentConfig {
    std::uint64_t seed_model = 0;
    std::uint64_t seed_env = 0;
    std::size_t horizon = 4;
    double temperature = 1.0;
    std::size_t babble_steps = 10'000;
    std::size_t habituation_steps = 20'000;
    int habituation_sticker = 3;
    int null_probe_position = 1;
    std::vector<int> probes_after_babble{1, 3};
    std::vector<int> probes_after_habituation{1, 3};
    int probe_start_hand = 4;
    std::size_t probe_window = 50;
    /// Keep the self-prior fixed during probes (it always updates while babbling).
    bool freeze_self_prior = false;
    std::size_t snapshot_interval = 1'000;
    /// Extra caregiver events, offsets into the habituation babble.
    Schedule habituation_schedule;
};

struct CollectionConfig {
    std::uint64_t seed_model = 0;
    std::uint64_t seed_env = 0;
    std::size_t episodes = 100;
    std::size_t episode_length = 1'000;
    std::size_t buffer_capacity = 450;
    double policy_episode_probability = 0.5;
    double sticker_episode_probability = 0.5;
    /// "host:port" of an action server; empty means random-only collection.
    std::string policy_endpoint;
};

/// Top-level config file contents. `kind` selects which section is valid.
struct ExperimentConfig {
    std::string kind = "discrete";
    DiscreteExperimentConfig discrete;
    CollectionConfig collection;
    std::filesystem::path output_dir = "out";
};

/// Parses and validates a config document; throws ConfigError naming the offending key.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Full config documents (kind, seeds and section) that parse_config accepts back.
nlohmann::json to_json(const DiscreteExperimentConfig& config);
nlohmann::json to_json(const CollectionConfig& config);
void validate(const DiscreteExperimentConfig& config);
void validate(const CollectionConfig& config);
/// Splits "host:port"; throws ConfigError.
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint);

/// Observation codes produced by some world state with no sticker.
std::vector<std::size_t> sticker_free_codes();
/// Codes whose touch at position 3 cannot come from the hand (hand != 3).
std::vector<std::size_t> foreign_touch_at_3_codes();
/// Every code with the position-3 sensor active.
std::vector<std::size_t> touch_at_3_codes();
double mass_on(const std::vector<double>& distribution, const std::vector<std::size_t>& codes);

struct ProbeResult {
    std::string phase;
    int position = 0;
    int start_hand = 0;
    std::optional<std::size_t> latency;  ///< empty: never reached within the window
    double attach_spread = 0.0;          ///< max - min EFE total at the attach step
    double mean_spread = 0.0;            ///< per-step spread averaged over the window
    std::size_t attach_argmin = 0;       ///< lowest-EFE policy at the attach step
    int attach_argmin_end_hand = 0;      ///< where that policy leaves the hand
    std::vector<int> hands;              ///< hand position at each step of the window
    std::vector<double> attach_totals;

    friend bool operator==(const ProbeResult&, const ProbeResult&) = default;
};

struct PhaseSummary {
    std::string phase;
    std::size_t steps = 0;
    std::vector<double> observation_histogram;  ///< 40 codes, counts within the phase
    std::vector<double> self_prior_end;         ///< C after the phase's last step
    std::vector<double> efe_min;                ///< per planning step
    std::vector<double> efe_max;
    std::vector<double> efe_chosen;
    std::size_t surprises = 0;

    friend bool operator==(const PhaseSummary&, const PhaseSummary&) = default;
};

struct RunSummary {
    std::vector<PhaseSummary> phases;
    std::vector<ProbeResult> probes;
    std::vector<std::pair<std::int64_t, std::vector<double>>> snapshots;
    std::size_t removal_events = 0;

    const PhaseSummary* phase(const std::string& name) const;
    const ProbeResult* probe(const std::string& phase) const;
    friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

nlohmann::json to_json(const RunSummary& summary);
RunSummary summary_from_json(const nlohmann::json& j);

/// Recomputes the run summary from a discrete trace alone.
RunSummary summarize_trace(const Trace& trace);

/// Steps an agent and a discrete world together and records the trace.
class DiscreteDriver {
public:
    explicit DiscreteDriver(const DiscreteExperimentConfig& config);

    /// Uniform-random actions; the self-prior is counted on every step.
    void babble(std::size_t steps, const std::string& phase, const Schedule& schedule = {});

    /// Puts the hand at the start position with no sticker, lets the agent settle
    /// its belief on that observation, then attaches a sticker at `position` and
    /// plans every step for `window` steps.
    ProbeResult probe(int position, std::size_t window, const std::string& phase, bool freeze_self_prior);

    /// Resets the world to a sticker state with the hand drawn from the
    /// environment stream.
    void reset_world(std::optional<int> sticker, const std::string& phase);

    DiscreteExperimentConfig& config() { return config_; }
    discrete::DiscreteAgent& agent() { return agent_; }
    const discrete::DiscreteWorldState& world() const { return world_; }
    const std::vector<TraceRecord>& records() const { return records_; }
    std::vector<TraceRecord> take_records() { return std::move(records_); }
    TraceHeader header() const;

private:
    TraceRecord& record_step(const std::string& phase, std::optional<std::size_t> action, const std::string& event,
                             bool surprise);
    void snapshot_last();

    DiscreteExperimentConfig config_;
    discrete::DiscreteAgent agent_;
    discrete::DiscreteWorldState world_;
    RandomStream model_rng_;
    RandomStream env_rng_;
    std::int64_t t_ = 0;
    std::vector<TraceRecord> records_;
};

struct DiscreteRun {
    Trace trace;
    RunSummary summary;
    discrete::SelfPriorCounts final_counts;
};

/// Null probe with the initial uniform self-prior, sticker-free babbling,
/// probes, babbling with a fixed sticker, probes again.
DiscreteRun run_discrete_experiment(const DiscreteExperimentConfig& config);

/// Summaries of independent runs with seeds (seed_model + k, seed_env + k),
/// k in [0, count). Runs execute in parallel; each run is sequential.
std::vector<RunSummary> run_seed_sweep(const DiscreteExperimentConfig& base, std::size_t count);

/// Writes trace.ndjson and summary.json under `dir`.
void write_run(const DiscreteRun& run, const std::filesystem::path& dir);

struct LinearTrend {
    double slope = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    bool ci_contains(double x) const { return ci_low <= x && x <= ci_high; }
};

/// OLS slope of y against 0..n-1 with a two-sided 95% confidence interval.
LinearTrend linear_trend(const std::vector<double>& y);

}  // namespace selfprior::harness
