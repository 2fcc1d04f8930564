#include "selfprior/discrete_agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace selfprior::discrete {

namespace {

void check_column_stochastic(const Eigen::MatrixXd& m, const char* what) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if ((m.col(c).array() < 0.0).any() || std::abs(m.col(c).sum() - 1.0) > kSimplexTolerance)
            throw std::invalid_argument(std::string(what) + ": column " + std::to_string(c) + " is not a distribution");
    }
}

// Precomputed quantities shared by every rollout of one planning call.
struct RolloutContext {
    const GenerativeModel& model;
    Eigen::VectorXd column_entropy;
    Eigen::VectorXd log_prior;
};

double step_cost(const RolloutContext& ctx, const Eigen::VectorXd& predicted_states) {
    const double ambiguity = predicted_states.dot(ctx.column_entropy);
    const Eigen::VectorXd predicted_obs = ctx.model.likelihood * predicted_states;
    double risk = 0.0;
    for (Eigen::Index o = 0; o < predicted_obs.size(); ++o) {
        const double q = predicted_obs[o];
        if (q > 0.0) risk += q * (std::log(q) - ctx.log_prior[o]);
    }
    return ambiguity + risk;
}

double rollout_total(const RolloutContext& ctx, const Eigen::VectorXd& belief, std::size_t policy,
                     std::size_t num_actions, std::size_t horizon) {
    // Decode base-num_actions digits, most significant digit first.
    std::size_t stride = 1;
    for (std::size_t k = 1; k < horizon; ++k) stride *= num_actions;
    Eigen::VectorXd phi = belief;
    double total = 0.0;
    std::size_t rest = policy;
    for (std::size_t k = 0; k < horizon; ++k) {
        const std::size_t action = rest / stride;
        rest %= stride;
        if (stride > 1) stride /= num_actions;
        phi = ctx.model.transitions[action] * phi;
        total += step_cost(ctx, phi);
    }
    return total;
}

RolloutContext make_context(const GenerativeModel& model, const ProbVector& belief, const ProbVector& self_prior) {
    if (belief.size() != model.num_states()) throw std::invalid_argument("belief dimension does not match model");
    if (self_prior.size() != model.num_observations())
        throw std::invalid_argument("self-prior dimension does not match model");
    return RolloutContext{model, model.likelihood_entropies(), clamped_log(self_prior.values())};
}

std::size_t policy_count(std::size_t num_actions, std::size_t horizon) {
    if (horizon == 0) throw std::invalid_argument("planning horizon must be at least 1");
    std::size_t n = 1;
    for (std::size_t k = 0; k < horizon; ++k) n *= num_actions;
    return n;
}

}  // namespace

void GenerativeModel::validate() const {
    if (likelihood.size() == 0) throw std::invalid_argument("GenerativeModel: empty likelihood");
    if (transitions.empty()) throw std::invalid_argument("GenerativeModel: no transition matrices");
    check_column_stochastic(likelihood, "likelihood");
    for (const auto& b : transitions) {
        if (b.rows() != likelihood.cols() || b.cols() != likelihood.cols())
            throw std::invalid_argument("GenerativeModel: transition shape does not match state count");
        check_column_stochastic(b, "transition");
    }
}

Eigen::VectorXd GenerativeModel::likelihood_entropies() const {
    Eigen::VectorXd h(likelihood.cols());
    for (Eigen::Index s = 0; s < likelihood.cols(); ++s) {
        double acc = 0.0;
        for (Eigen::Index o = 0; o < likelihood.rows(); ++o) {
            const double p = likelihood(o, s);
            if (p > 0.0) acc -= p * std::log(p);
        }
        h[s] = acc;
    }
    return h;
}

GenerativeModel GenerativeModel::arm_world() {
    auto b = build_transition_matrices();
    return GenerativeModel{build_likelihood_matrix(), {b.begin(), b.end()}};
}

PosteriorUpdate update_posterior_from_predictive(const ProbVector& predictive, std::size_t observation,
                                                 const GenerativeModel& model) {
    if (observation >= model.num_observations()) throw std::invalid_argument("observation index out of range");
    if (predictive.size() != model.num_states()) throw std::invalid_argument("belief dimension does not match model");
    const Eigen::VectorXd likelihood_row = model.likelihood.row(static_cast<Eigen::Index>(observation)).transpose();
    const double evidence = likelihood_row.dot(predictive.values());
    if (evidence < kSurpriseEvidence) {
        // The floored product would split mass between "the prior was right" and
        // "the likelihood is right"; only the latter explains the observation.
        return {softmax(LogitsVector(clamped_log(likelihood_row))), true};
    }
    return {softmax(LogitsVector(clamped_log(likelihood_row) + clamped_log(predictive.values()))), false};
}

PosteriorUpdate update_posterior(const ProbVector& previous, std::size_t action, std::size_t observation,
                                 const GenerativeModel& model) {
    if (action >= model.num_actions()) throw std::invalid_argument("action index out of range");
    if (previous.size() != model.num_states()) throw std::invalid_argument("belief dimension does not match model");
    Eigen::VectorXd predictive = model.transitions[action] * previous.values();
    predictive /= predictive.sum();
    return update_posterior_from_predictive(ProbVector(std::move(predictive)), observation, model);
}

SelfPriorCounts::SelfPriorCounts(std::size_t num_observations) : counts_(num_observations, 1.0) {
    if (num_observations == 0) throw std::invalid_argument("SelfPriorCounts: need at least one observation");
}

void SelfPriorCounts::record(std::size_t observation) {
    if (observation >= counts_.size()) throw std::invalid_argument("observation index out of range");
    counts_[observation] += 1.0;
    ++recorded_;
}

double SelfPriorCounts::total() const {
    double t = 0.0;
    for (double c : counts_) t += c;
    return t;
}

ProbVector SelfPriorCounts::distribution() const { return normalize_counts(counts_); }

SelfPriorCounts update_self_prior(SelfPriorCounts counts, std::size_t observation) {
    counts.record(observation);
    return counts;
}

ProbVector self_prior_distribution(const SelfPriorCounts& counts) { return counts.distribution(); }

EfeTerms expected_free_energy_terms(const ProbVector& belief, std::size_t action, const GenerativeModel& model,
                                    const ProbVector& self_prior) {
    if (action >= model.num_actions()) throw std::invalid_argument("action index out of range");
    const auto ctx = make_context(model, belief, self_prior);
    const Eigen::VectorXd predicted = model.transitions[action] * belief.values();
    EfeTerms terms;
    terms.ambiguity = predicted.dot(ctx.column_entropy);
    terms.risk = step_cost(ctx, predicted) - terms.ambiguity;
    return terms;
}

double expected_free_energy_step(const ProbVector& belief, std::size_t action, const GenerativeModel& model,
                                 const ProbVector& self_prior) {
    return expected_free_energy_terms(belief, action, model, self_prior).total();
}

std::vector<Policy> enumerate_policies(std::size_t num_actions, std::size_t horizon) {
    const std::size_t n = policy_count(num_actions, horizon);
    std::vector<Policy> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        out[k].actions.resize(horizon);
        std::size_t rest = k;
        for (std::size_t d = horizon; d-- > 0;) {
            out[k].actions[d] = rest % num_actions;
            rest /= num_actions;
        }
    }
    return out;
}

std::size_t PlanningReport::argmin() const {
    return static_cast<std::size_t>(std::min_element(totals.begin(), totals.end()) - totals.begin());
}

double PlanningReport::spread() const {
    const auto [lo, hi] = std::minmax_element(totals.begin(), totals.end());
    return *hi - *lo;
}

std::size_t PlanningReport::first_action(std::size_t policy) const {
    std::size_t stride = 1;
    for (std::size_t k = 1; k < horizon; ++k) stride *= num_actions;
    return policy / stride;
}

Policy PlanningReport::policy(std::size_t index) const {
    Policy p;
    p.actions.resize(horizon);
    for (std::size_t d = horizon; d-- > 0;) {
        p.actions[d] = index % num_actions;
        index /= num_actions;
    }
    return p;
}

PlanningReport make_report(std::vector<double> totals, std::size_t num_actions, std::size_t horizon,
                           double temperature) {
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
    if (totals.size() != policy_count(num_actions, horizon))
        throw std::invalid_argument("expected " + std::to_string(policy_count(num_actions, horizon)) + " policy totals, got " +
                                    std::to_string(totals.size()));
    Eigen::VectorXd logits(static_cast<Eigen::Index>(totals.size()));
    for (std::size_t k = 0; k < totals.size(); ++k) logits[static_cast<Eigen::Index>(k)] = -totals[k] / temperature;
    auto probabilities = softmax(LogitsVector(std::move(logits)));
    return PlanningReport{std::move(totals), std::move(probabilities), horizon, num_actions};
}

PlanningReport evaluate_policies(const ProbVector& belief, const GenerativeModel& model, const ProbVector& self_prior,
                                 std::size_t horizon, double temperature) {
    const std::size_t na = model.num_actions();
    const std::size_t n = policy_count(na, horizon);
    const auto ctx = make_context(model, belief, self_prior);
    std::vector<double> totals(n);
    const auto count = static_cast<long>(n);
#pragma omp parallel for schedule(static)
    for (long k = 0; k < count; ++k)
        totals[static_cast<std::size_t>(k)] = rollout_total(ctx, belief.values(), static_cast<std::size_t>(k), na, horizon);
    return make_report(std::move(totals), na, horizon, temperature);
}

PlanningReport evaluate_policies_serial(const ProbVector& belief, const GenerativeModel& model,
                                        const ProbVector& self_prior, std::size_t horizon, double temperature) {
    const std::size_t na = model.num_actions();
    const auto policies = enumerate_policies(na, horizon);
    std::vector<double> totals;
    totals.reserve(policies.size());
    for (const auto& policy : policies) {
        ProbVector phi = belief;
        double total = 0.0;
        for (std::size_t action : policy.actions) {
            total += expected_free_energy_step(phi, action, model, self_prior);
            Eigen::VectorXd next = model.transitions[action] * phi.values();
            next /= next.sum();
            phi = ProbVector(std::move(next));
        }
        totals.push_back(total);
    }
    return make_report(std::move(totals), na, horizon, temperature);
}

PolicyChoice select_action(const PlanningReport& report, RandomStream& rng) {
    const auto pick = sample_categorical(report.probabilities, rng);
    return {pick.index, report.first_action(pick.index)};
}

DiscreteAgent::DiscreteAgent(AgentConfig config, GenerativeModel model)
    : config_(config),
      model_(std::move(model)),
      belief_(ProbVector::uniform(model_.num_states())),
      counts_(model_.num_observations()) {
    model_.validate();
}

bool DiscreteAgent::observe(std::size_t observation, std::optional<std::size_t> previous_action) {
    auto update = previous_action ? update_posterior(belief_, *previous_action, observation, model_)
                                  : update_posterior_from_predictive(belief_, observation, model_);
    belief_ = std::move(update.belief);
    if (!config_.freeze_self_prior) counts_.record(observation);
    return update.surprising;
}

void DiscreteAgent::reset_belief() { belief_ = ProbVector::uniform(model_.num_states()); }

bool DiscreteAgent::settle(std::size_t observation) {
    reset_belief();
    auto update = update_posterior_from_predictive(belief_, observation, model_);
    belief_ = std::move(update.belief);
    return update.surprising;
}

PlanningReport DiscreteAgent::plan() const {
    return evaluate_policies(belief_, model_, counts_.distribution(), config_.horizon, config_.temperature);
}

}  // namespace selfprior::discrete
