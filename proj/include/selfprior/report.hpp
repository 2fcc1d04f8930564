#pragma once

#include "selfprior/trace.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfprior::harness {

/// Trace that the report writer cannot interpret (wrong protocol version or kind).
class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ReportFiles {
    std::vector<std::filesystem::path> files;
};

/// Plain CSV plus manifest.json.
///
/// discrete:   self_prior.csv (t, c0..c39), efe.csv (t, phase, efe_0..efe_80,
///             chosen), positions.csv (t, phase, hand, sticker)
/// continuous: positions.csv (t, hand_u, hand_v, sticker_u, sticker_v,
///             distance), efe_proxy.csv (t, efe_proxy)
ReportFiles emit_report(const Trace& trace, const std::filesystem::path& out_dir);

/// Per-step mean and sample standard deviation across continuous traces of
/// hand-sticker distance and EFE proxy: aggregate.csv plus manifest.json.
ReportFiles emit_aggregate_report(const std::vector<Trace>& traces, const std::filesystem::path& out_dir);

}  // namespace selfprior::harness
