#include "selfprior/gateway.hpp"

#include <stdexcept>

namespace selfprior::gateway {

using nlohmann::json;

namespace {

// Thrown inside dispatch; becomes an ok:false response.
struct RequestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json error_response(const json& id, const std::string& error) {
    return json{{"id", id}, {"ok", false}, {"error", error}};
}

double number_arg(const json& args, const char* key) {
    if (!args.is_object() || !args.contains(key) || !args.at(key).is_number())
        throw RequestError(std::string("bad_args: '") + key + "' must be a number");
    return args.at(key).get<double>();
}

}  // namespace

std::string kind_name(WorldKind kind) { return kind == WorldKind::Discrete ? "discrete" : "continuous"; }

WorldKind parse_kind(const std::string& name) {
    if (name == "discrete") return WorldKind::Discrete;
    if (name == "continuous") return WorldKind::Continuous;
    throw std::invalid_argument("unknown environment kind '" + name + "'");
}

Session::Session(WorldKind kind, std::uint64_t seed) : kind_(kind), rng_(seed) {}

std::string Session::handle_line(const std::string& line) {
    json request;
    try {
        request = json::parse(line);
    } catch (const json::parse_error&) {
        return error_response(nullptr, "malformed: not valid JSON").dump();
    }
    return handle_message(request).dump();
}

json Session::handle_message(const json& request) {
    if (!request.is_object()) return error_response(nullptr, "malformed: request must be an object");
    if (!request.contains("id") || !request.at("id").is_number_integer())
        return error_response(request.value("id", json(nullptr)), "bad_id: id must be an integer");
    const auto id = request.at("id").get<std::int64_t>();
    if (last_id_ && id <= *last_id_) return error_response(id, "non_increasing_id");
    last_id_ = id;
    if (closed_) return error_response(id, "session_closed");
    if (!request.contains("cmd") || !request.at("cmd").is_string())
        return error_response(id, "malformed: cmd must be a string");
    const json args = request.value("args", json::object());
    try {
        json body = dispatch(request.at("cmd").get<std::string>(), args);
        body["id"] = id;
        body["ok"] = true;
        return body;
    } catch (const RequestError& e) {
        return error_response(id, e.what());
    } catch (const std::invalid_argument& e) {
        return error_response(id, std::string("bad_args: ") + e.what());
    } catch (const json::exception& e) {
        return error_response(id, std::string("bad_args: ") + e.what());
    }
}

json Session::dispatch(const std::string& cmd, const json& args) {
    if (cmd == "hello") return json{{"protocol_version", kProtocolVersion}, {"kind", kind_name(kind_)}};
    if (cmd == "close") {
        closed_ = true;
        return json::object();
    }
    if (cmd == "reset") return reset(args);
    if (cmd != "step" && cmd != "place_sticker" && cmd != "remove_sticker") throw RequestError("unknown_cmd: " + cmd);
    if (!world_) throw RequestError("not_reset");
    if (cmd == "step") return step(args);
    if (cmd == "place_sticker") return place_sticker(args);
    return remove_sticker();
}

json Session::reset(const json& args) {
    if (!args.is_object()) throw RequestError("bad_args: args must be an object");
    std::optional<RandomStream> local;
    if (args.contains("seed")) local.emplace(args.at("seed").get<std::uint64_t>());
    RandomStream& rng = local ? *local : rng_;

    if (kind_ == WorldKind::Discrete) {
        const int hand = args.contains("hand") ? args.at("hand").get<int>() : static_cast<int>(rng.below(discrete::kHandPositions));
        std::optional<int> sticker;
        if (args.contains("sticker") && !args.at("sticker").is_null()) sticker = args.at("sticker").get<int>();
        world_ = discrete::DiscreteWorldState(hand, sticker);
    } else {
        continuous::StickerMode mode = continuous::NoSticker{};
        if (args.contains("sticker")) {
            const auto& s = args.at("sticker");
            if (s.is_string() && s.get<std::string>() == "random") mode = continuous::RandomSticker{};
            else if (s.is_string() && s.get<std::string>() == "none") mode = continuous::NoSticker{};
            else if (s.is_object()) mode = continuous::StickerAt{number_arg(s, "u"), number_arg(s, "v")};
            else if (!s.is_null()) throw RequestError("bad_args: sticker must be \"none\", \"random\" or {u, v}");
        }
        world_ = continuous::reset_world(rng, mode);
    }
    return json{{"observation", observation_payload()}, {"info", info_payload(true, false)}};
}

json Session::step(const json& args) {
    if (!args.is_object() || !args.contains("action")) throw RequestError("bad_args: missing action");
    const auto& a = args.at("action");
    if (kind_ == WorldKind::Discrete) {
        discrete::DiscreteAction action;
        if (a.is_string()) action = discrete::parse_action(a.get<std::string>());
        else if (a.is_number_integer()) action = discrete::action_from_index(a.get<std::size_t>());
        else throw RequestError("bad_args: discrete action must be a name or index");
        auto& w = std::get<discrete::DiscreteWorldState>(*world_);
        w = discrete::step_world(w, action);
        return json{{"observation", observation_payload()}, {"info", info_payload(true, false)}};
    }
    if (!a.is_array() || a.size() != 3) throw RequestError("bad_args: continuous action must be 3 numbers");
    for (const auto& x : a)
        if (!x.is_number()) throw RequestError("bad_args: continuous action must be 3 numbers");
    const continuous::ContinuousAction action{a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
    auto& w = std::get<continuous::ContinuousWorldState>(*world_);
    const auto result = continuous::step(w, action);
    w = result.state;
    return json{{"observation", observation_payload()}, {"info", info_payload(result.accepted, result.sticker_removed)}};
}

json Session::place_sticker(const json& args) {
    if (kind_ == WorldKind::Discrete) {
        if (!args.is_object() || !args.contains("position") || !args.at("position").is_number_integer())
            throw RequestError("bad_args: 'position' must be an integer");
        auto& w = std::get<discrete::DiscreteWorldState>(*world_);
        w = discrete::step_world(w, discrete::DiscreteAction::Stay,
                                 discrete::CaregiverEvent::attach(args.at("position").get<int>()));
    } else {
        auto& w = std::get<continuous::ContinuousWorldState>(*world_);
        const double u = number_arg(args, "u");
        const double v = number_arg(args, "v");
        if (!continuous::sticker_position_valid(u, v))
            throw RequestError("invalid_sticker_position: centre must be at least 4 mm from every band edge");
        w = continuous::place_sticker(w, u, v);
    }
    return json{{"info", info_payload(true, false)}};
}

json Session::remove_sticker() {
    if (kind_ == WorldKind::Discrete) std::get<discrete::DiscreteWorldState>(*world_).sticker.reset();
    else std::get<continuous::ContinuousWorldState>(*world_).sticker.reset();
    return json{{"info", info_payload(true, false)}};
}

json Session::observation_payload() const {
    if (kind_ == WorldKind::Discrete) {
        const auto& w = std::get<discrete::DiscreteWorldState>(*world_);
        const auto o = discrete::observe(w);
        const auto [touch, hand] = discrete::decode_observation(o);
        return json{{"index", o.index}, {"touch", touch.str()}, {"hand", hand}};
    }
    const auto& w = std::get<continuous::ContinuousWorldState>(*world_);
    const auto frame = continuous::render_tactile(w);
    const auto proprio = continuous::proprioception(w);
    return json{{"tactile", quantize6(frame.flat())},
                {"proprio", quantize6(std::vector<double>(proprio.begin(), proprio.end()))}};
}

json Session::info_payload(bool accepted, bool removed) const {
    bool present = false;
    if (world_) {
        if (kind_ == WorldKind::Discrete) present = std::get<discrete::DiscreteWorldState>(*world_).sticker.has_value();
        else present = std::get<continuous::ContinuousWorldState>(*world_).sticker.has_value();
    }
    return json{{"accepted", accepted}, {"sticker_removed", removed}, {"sticker_present", present}};
}

}  // namespace selfprior::gateway
