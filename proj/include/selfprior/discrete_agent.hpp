#pragma once

#include "selfprior/categorical.hpp"
#include "selfprior/discrete_world.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace selfprior::discrete {

/// Evidence below which an observation counts as impossible under the
/// predictive prior.
inline constexpr double kSurpriseEvidence = 1e-9;

/// Likelihood A (observations x states) and one transition matrix B_a
/// (states x states) per action. All matrices are column-stochastic.
struct GenerativeModel {
    Eigen::MatrixXd likelihood;
    std::vector<Eigen::MatrixXd> transitions;

    /// Throws std::invalid_argument if shapes disagree or a column is not a distribution.
    void validate() const;
    std::size_t num_states() const { return static_cast<std::size_t>(likelihood.cols()); }
    std::size_t num_observations() const { return static_cast<std::size_t>(likelihood.rows()); }
    std::size_t num_actions() const { return transitions.size(); }

    /// Entropy of each likelihood column, H[A].
    Eigen::VectorXd likelihood_entropies() const;

    /// The arm world's A and B, known exactly by the agent.
    static GenerativeModel arm_world();
};

struct PosteriorUpdate {
    ProbVector belief;
    /// Set when the observation has (numerically) zero probability under the
    /// predictive prior. The belief then falls back to the normalized likelihood.
    bool surprising = false;
};

/// phi = softmax(log(A^T o) + log(predictive)), logs floored at kLogFloor.
PosteriorUpdate update_posterior_from_predictive(const ProbVector& predictive, std::size_t observation,
                                                 const GenerativeModel& model);

/// Predictive prior B_a phi_prev followed by update_posterior_from_predictive.
PosteriorUpdate update_posterior(const ProbVector& previous, std::size_t action, std::size_t observation,
                                 const GenerativeModel& model);

/// Observation counts behind the self-prior. Every count starts at one.
class SelfPriorCounts {
public:
    explicit SelfPriorCounts(std::size_t num_observations = kNumObservations);

    void record(std::size_t observation);
    std::span<const double> counts() const { return counts_; }
    double total() const;
    std::size_t num_recorded() const { return recorded_; }
    ProbVector distribution() const;

private:
    std::vector<double> counts_;
    std::size_t recorded_ = 0;
};

SelfPriorCounts update_self_prior(SelfPriorCounts counts, std::size_t observation);
ProbVector self_prior_distribution(const SelfPriorCounts& counts);

struct EfeTerms {
    double ambiguity = 0.0;  ///< (B_a phi) . H[A]
    double risk = 0.0;       ///< KL[A B_a phi || C]
    double total() const { return ambiguity + risk; }
};

/// One-step expected free energy of taking `action` from belief `belief`.
EfeTerms expected_free_energy_terms(const ProbVector& belief, std::size_t action, const GenerativeModel& model,
                                    const ProbVector& self_prior);
double expected_free_energy_step(const ProbVector& belief, std::size_t action, const GenerativeModel& model,
                                 const ProbVector& self_prior);

/// Action sequence of fixed length.
struct Policy {
    std::vector<std::size_t> actions;
};

/// All num_actions^horizon sequences. Policy k has first action k / num_actions^(horizon-1).
std::vector<Policy> enumerate_policies(std::size_t num_actions, std::size_t horizon);

struct PlanningReport {
    std::vector<double> totals;  ///< summed EFE per policy, enumeration order
    ProbVector probabilities;    ///< softmax(-totals / temperature)
    std::size_t horizon = 0;
    std::size_t num_actions = 0;

    std::size_t argmin() const;
    double spread() const;
    std::size_t first_action(std::size_t policy) const;
    Policy policy(std::size_t index) const;
};

/// Rolls the belief through B for every policy and sums the per-step EFE.
/// Policies are evaluated in parallel with OpenMP.
PlanningReport evaluate_policies(const ProbVector& belief, const GenerativeModel& model, const ProbVector& self_prior,
                                 std::size_t horizon, double temperature = 1.0);

/// Serial reference for evaluate_policies; kept for testing and benchmarks.
PlanningReport evaluate_policies_serial(const ProbVector& belief, const GenerativeModel& model,
                                        const ProbVector& self_prior, std::size_t horizon, double temperature = 1.0);

/// Builds a report from precomputed totals.
PlanningReport make_report(std::vector<double> totals, std::size_t num_actions, std::size_t horizon,
                           double temperature = 1.0);

struct PolicyChoice {
    std::size_t policy = 0;
    std::size_t first_action = 0;
};

/// Samples a policy from the report and returns it with its first action.
PolicyChoice select_action(const PlanningReport& report, RandomStream& rng);

struct AgentConfig {
    std::size_t horizon = 4;
    double temperature = 1.0;
    bool freeze_self_prior = false;
};

/// Belief + self-prior state machine for the arm world.
class DiscreteAgent {
public:
    explicit DiscreteAgent(AgentConfig config = {}, GenerativeModel model = GenerativeModel::arm_world());

    /// Incorporates an observation. `previous_action` is empty for the first
    /// observation after a reset. Returns true when the observation was surprising.
    bool observe(std::size_t observation, std::optional<std::size_t> previous_action);

    /// Forget the belief (uniform) but keep the self-prior.
    void reset_belief();

    /// Uniform belief conditioned on one observation; the self-prior is not counted.
    bool settle(std::size_t observation);

    PlanningReport plan() const;

    const ProbVector& belief() const { return belief_; }
    const SelfPriorCounts& counts() const { return counts_; }
    ProbVector self_prior() const { return counts_.distribution(); }
    const AgentConfig& config() const { return config_; }
    AgentConfig& config() { return config_; }
    const GenerativeModel& model() const { return model_; }

private:
    AgentConfig config_;
    GenerativeModel model_;
    ProbVector belief_;
    SelfPriorCounts counts_;
};

}  // namespace selfprior::discrete
