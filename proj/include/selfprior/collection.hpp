#pragma once

#include "selfprior/experiment.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace selfprior::harness {

struct EpisodePlan {
    std::size_t index = 0;
    bool use_policy = false;
    bool sticker = false;
    std::uint64_t env_seed = 0;     ///< world reset stream for this episode
    std::uint64_t action_seed = 0;  ///< random-action stream for this episode
};

/// Per-episode source and sticker draws. Flags come from the model seed,
/// world seeds from the environment seed.
std::vector<EpisodePlan> plan_collection(const CollectionConfig& config);

struct EpisodeInfo {
    std::size_t index = 0;
    std::filesystem::path file;
    bool sticker = false;
    std::string action_source;  ///< "random", "policy" or "random_fallback"
    std::size_t removals = 0;
};

struct CollectionResult {
    std::vector<EpisodeInfo> episodes;  ///< every episode written, in order
    std::vector<EpisodeInfo> retained;  ///< still on disk after ring eviction
    std::size_t fallbacks = 0;
};

/// Writes episode_NNNNNN.ndjson files (one trace each) under `out_dir`, keeping
/// at most buffer_capacity episodes on disk, plus collection.json.
///
/// Policy episodes ask the endpoint for actions with
///   {"id": n, "cmd": "act", "args": {"observation": {"tactile": [...], "proprio": [...]}}}
/// and expect {"id": n, "ok": true, "action": [3 numbers], "efe_proxy"?: number}.
/// If the endpoint cannot be reached the episode is collected with random
/// actions and a warning goes to `log`.
CollectionResult run_continuous_collection(const CollectionConfig& config, const std::filesystem::path& out_dir,
                                           std::ostream& log);

}  // namespace selfprior::harness
