#include "liftguard/wire.hpp"

#include <json.hpp>

#include "liftguard/dataset.hpp"

namespace liftguard::wire {

using nlohmann::json;

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::BadFrame: return "bad_frame";
        case ErrorCode::Proto: return "proto";
        case ErrorCode::Internal: return "internal";
    }
    return "internal";
}

ClientMessage parse_client_message(std::string_view text) {
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ProtocolError(ErrorCode::Proto, "message is not a JSON object");
    }
    const auto type = j.find("type");
    if (type == j.end() || !type->is_string()) {
        throw ProtocolError(ErrorCode::Proto, "message has no \"type\"");
    }
    const auto& name = type->get_ref<const std::string&>();
    if (name == "hello") {
        const auto proto = j.find("proto");
        if (proto == j.end() || !proto->is_number_integer()) {
            throw ProtocolError(ErrorCode::Proto, "hello needs an integer \"proto\"");
        }
        return Hello{proto->get<int>()};
    }
    if (name == "frame") {
        try {
            return Frame{frame_from_json(j)};
        } catch (const ValidationError& e) {
            throw ProtocolError(ErrorCode::BadFrame, e.what());
        }
    }
    throw ProtocolError(ErrorCode::Proto, "unknown message type '" + name + "'");
}

std::string hello_message(int proto) { return json{{"type", "hello"}, {"proto", proto}}.dump(); }

std::string frame_message(const PoseFrame& frame) {
    json j = frame_to_json(frame);
    j["type"] = "frame";
    return j.dump();
}

std::string ready_message(std::string_view session_id) {
    return json{{"type", "ready"}, {"session", session_id}, {"warmup", kWindowLength}}.dump();
}

std::string prediction_message(const SessionUpdate& update) {
    const auto& p = update.prediction;
    return json{{"type", "prediction"},
                {"t", p.window_end_ms},
                {"label", liftguard::to_string(p.label)},
                {"probs", {p.probs[0], p.probs[1]}},
                {"confidence", p.confidence},
                {"risk",
                 {{"level", liftguard::to_string(update.risk.level)}, {"score", update.risk.score}}}}
        .dump();
}

std::string error_message(ErrorCode code, std::string_view detail) {
    return json{{"type", "error"}, {"code", to_string(code)}, {"detail", detail}}.dump();
}

}  // namespace liftguard::wire
