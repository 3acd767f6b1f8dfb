#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "liftguard/errors.hpp"
#include "liftguard/pose.hpp"
#include "liftguard/session.hpp"

namespace liftguard::wire {

// One JSON object per text message.
//   client: {"type":"hello","proto":1}
//           {"type":"frame","t":<ms>,"lm":[[x,y,z,v] x 33]}
//   server: {"type":"ready","session":"<id>","warmup":30}
//           {"type":"prediction","t":..,"label":"good"|"bad","probs":[pg,pb],
//            "confidence":c,"risk":{"level":"low"|"medium"|"high","score":s}}
//           {"type":"error","code":"bad_frame"|"proto"|"internal","detail":".."}

inline constexpr int kProtocolVersion = 1;

enum class ErrorCode { BadFrame, Proto, Internal };

std::string_view to_string(ErrorCode code);

class ProtocolError : public Error {
public:
    ProtocolError(ErrorCode code, const std::string& detail) : Error(detail), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

struct Hello {
    int proto = kProtocolVersion;
};

struct Frame {
    PoseFrame frame;
};

using ClientMessage = std::variant<Hello, Frame>;

/// Malformed envelopes raise Proto; well-formed frames with bad payloads
/// raise BadFrame.
ClientMessage parse_client_message(std::string_view text);

std::string hello_message(int proto = kProtocolVersion);
std::string frame_message(const PoseFrame& frame);
std::string ready_message(std::string_view session_id);
std::string prediction_message(const SessionUpdate& update);
std::string error_message(ErrorCode code, std::string_view detail);

}  // namespace liftguard::wire
