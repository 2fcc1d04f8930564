#include "selfprior/collection.hpp"

#include "selfprior/continuous_world.hpp"
#include "selfprior/gateway.hpp"

#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <random>

namespace selfprior::harness {

using nlohmann::json;
namespace c = selfprior::continuous;

namespace {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t episode) {
    std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                      static_cast<std::uint32_t>(episode), static_cast<std::uint32_t>(episode >> 32)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::string episode_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "episode_%06zu.ndjson", index);
    return buf;
}

TraceObservation observe(const c::ContinuousWorldState& state) {
    TraceObservation o;
    o.tactile = quantize6(c::render_tactile(state).flat());
    const auto p = c::proprioception(state);
    o.proprio = quantize6(std::vector<double>(p.begin(), p.end()));
    return o;
}

// Asks the policy endpoint for one action; throws on any protocol failure.
struct PolicyClient {
    gateway::LineClient client;
    std::int64_t next_id = 1;

    PolicyClient(const std::string& host, std::uint16_t port) : client(host, port) {}

    std::pair<c::ContinuousAction, std::optional<double>> act(const TraceObservation& obs) {
        const json reply = client.request(
            json{{"id", next_id++}, {"cmd", "act"}, {"args", {{"observation", {{"tactile", obs.tactile}, {"proprio", obs.proprio}}}}}});
        if (!reply.value("ok", false)) throw std::runtime_error("policy endpoint refused: " + reply.value("error", std::string("?")));
        const auto a = reply.at("action").get<std::vector<double>>();
        if (a.size() != 3) throw std::runtime_error("policy endpoint returned a malformed action");
        std::optional<double> proxy;
        if (reply.contains("efe_proxy") && reply.at("efe_proxy").is_number()) proxy = reply.at("efe_proxy").get<double>();
        return {c::ContinuousAction{a[0], a[1], a[2]}, proxy};
    }
};

}  // namespace

std::vector<EpisodePlan> plan_collection(const CollectionConfig& config) {
    validate(config);
    RandomStream flags(config.seed_model);
    std::vector<EpisodePlan> plans(config.episodes);
    for (std::size_t k = 0; k < config.episodes; ++k) {
        auto& p = plans[k];
        p.index = k;
        p.use_policy = flags.uniform() < config.policy_episode_probability;
        p.sticker = flags.uniform() < config.sticker_episode_probability;
        p.env_seed = derive_seed(config.seed_env, k);
        p.action_seed = derive_seed(config.seed_model, k);
    }
    return plans;
}

CollectionResult run_continuous_collection(const CollectionConfig& config, const std::filesystem::path& out_dir,
                                           std::ostream& log) {
    const auto plans = plan_collection(config);
    std::filesystem::create_directories(out_dir);
    std::optional<std::pair<std::string, std::uint16_t>> endpoint;
    if (!config.policy_endpoint.empty()) endpoint = parse_endpoint(config.policy_endpoint);

    CollectionResult result;
    for (const auto& plan : plans) {
        EpisodeInfo info;
        info.index = plan.index;
        info.sticker = plan.sticker;
        info.file = out_dir / episode_name(plan.index);
        info.action_source = "random";

        std::unique_ptr<PolicyClient> policy;
        // Without an endpoint the run is random-only and the policy draw is ignored.
        if (plan.use_policy && endpoint) {
            try {
                policy = std::make_unique<PolicyClient>(endpoint->first, endpoint->second);
                info.action_source = "policy";
            } catch (const std::exception& e) {
                log << "warning: episode " << plan.index << ": " << e.what() << "; collecting with random actions\n";
                info.action_source = "random_fallback";
                ++result.fallbacks;
            }
        }

        RandomStream env(plan.env_seed);
        RandomStream actions(plan.action_seed);
        auto state = c::reset_world(env, plan.sticker ? c::StickerMode{c::RandomSticker{}} : c::StickerMode{c::NoSticker{}});

        TraceHeader header;
        header.kind = "continuous";
        header.seed_model = config.seed_model;
        header.seed_env = config.seed_env;
        header.config = to_json(config);
        header.config_hash = fnv1a_hex(header.config.dump());
        header.labels = json{{"episode", plan.index}, {"sticker", plan.sticker}, {"action_source", info.action_source}};
        if (state.sticker) header.labels["sticker_center"] = quantize6(std::vector<double>{state.sticker->center.x, state.sticker->center.y});
        TraceWriter writer(info.file, header);

        TraceObservation obs = observe(state);
        for (std::size_t t = 0; t < config.episode_length; ++t) {
            c::ContinuousAction action;
            std::optional<double> proxy;
            if (policy) {
                try {
                    std::tie(action, proxy) = policy->act(obs);
                } catch (const std::exception& e) {
                    log << "warning: episode " << plan.index << " step " << t << ": " << e.what()
                        << "; finishing with random actions\n";
                    policy.reset();
                    ++result.fallbacks;
                }
            }
            if (!policy) {
                action = c::ContinuousAction{actions.uniform(-c::Body::max_joint_step, c::Body::max_joint_step),
                                             actions.uniform(-c::Body::max_joint_step, c::Body::max_joint_step),
                                             actions.uniform(-c::Body::max_height_step, c::Body::max_height_step)};
            }
            action = action.clipped();
            const auto res = c::step(state, action);
            state = res.state;
            obs = observe(state);

            TraceRecord r;
            r.t = static_cast<std::int64_t>(t);
            r.phase = "episode";
            r.action = quantize6(std::vector<double>{action.d_shoulder, action.d_elbow, action.d_height});
            r.accepted = res.accepted;
            r.observation = obs;
            r.event = res.sticker_removed ? "remove" : "none";
            const auto hand = c::forearm_local_coords(c::forward_kinematics(state.pose));
            r.hand = quantize6(std::vector<double>{hand.x, hand.y});
            if (state.sticker) r.sticker = quantize6(std::vector<double>{state.sticker->center.x, state.sticker->center.y});
            if (proxy) {
                r.diagnostics.emplace();
                r.diagnostics->efe_proxy = proxy;
            }
            if (res.sticker_removed) ++info.removals;
            writer.append(r);
        }
        writer.close();

        result.episodes.push_back(info);
        result.retained.push_back(info);
        if (result.retained.size() > config.buffer_capacity) {
            std::filesystem::remove(result.retained.front().file);
            result.retained.erase(result.retained.begin());
        }
    }

    json manifest{{"config", to_json(config)}, {"episodes_written", result.episodes.size()}, {"fallbacks", result.fallbacks}};
    json retained = json::array();
    for (const auto& e : result.retained)
        retained.push_back({{"episode", e.index},
                            {"file", e.file.filename().string()},
                            {"sticker", e.sticker},
                            {"action_source", e.action_source},
                            {"removals", e.removals}});
    manifest["retained"] = std::move(retained);
    std::ofstream out(out_dir / "collection.json");
    out << manifest.dump(1) << '\n';
    return result;
}

}  // namespace selfprior::harness
