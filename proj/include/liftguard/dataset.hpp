#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "liftguard/pose.hpp"

namespace liftguard {

// Frame lines: {"t": <int ms>, "lm": [[x, y, z, v] x 33]}

/// Throws ValidationError on malformed JSON or a wrong landmark count.
PoseFrame parse_frame_line(std::string_view line);
PoseFrame frame_from_json(const nlohmann::json& j);
nlohmann::json frame_to_json(const PoseFrame& frame);
/// Single line, no trailing newline. Numbers keep the shortest decimal form
/// that reads back to the same double.
std::string format_frame_line(const PoseFrame& frame);

/// Blank lines are skipped. Errors carry the file name and 1-based line.
std::vector<PoseFrame> read_clip(const std::filesystem::path& path);
void write_clip(const std::filesystem::path& path, const std::vector<PoseFrame>& frames);

struct ClipEntry {
    Posture label = Posture::Good;
    std::string clip_id;  // file stem
    std::size_t frame_count = 0;
};

struct DatasetManifest {
    std::filesystem::path root;
    std::vector<ClipEntry> clips;

    std::size_t count(Posture label) const;
    nlohmann::json to_json() const;
};

struct LoadOptions {
    bool filter_head = true;
    bool canonicalize = false;
    std::size_t window_len = kWindowLength;
    std::size_t stride = kWindowLength;
};

struct LoadedDataset {
    std::vector<LabeledSequence> sequences;
    DatasetManifest manifest;
};

/// Reads <root>/good/*.jsonl and <root>/bad/*.jsonl. Ordering is class
/// (good first), then clip id, then window start.
LoadedDataset load_dataset(const std::filesystem::path& root, const LoadOptions& options = {});

/// Windows of one clip, feature extraction and optional canonicalization
/// applied per frame.
std::vector<SequenceWindow> clip_windows(const std::vector<PoseFrame>& frames,
                                         const LoadOptions& options,
                                         std::string_view source_id = {});

}  // namespace liftguard
