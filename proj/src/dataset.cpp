#include "liftguard/dataset.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "liftguard/errors.hpp"

namespace liftguard {

namespace fs = std::filesystem;

PoseFrame frame_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("frame must be a JSON object");
    const auto t = j.find("t");
    const auto lm = j.find("lm");
    if (t == j.end() || !t->is_number_integer()) {
        throw ValidationError("frame needs an integer \"t\"");
    }
    if (lm == j.end() || !lm->is_array()) throw ValidationError("frame needs an \"lm\" array");
    if (lm->size() != kLandmarkCount) {
        throw ValidationError(
            fmt::format("frame has {} landmarks, expected {}", lm->size(), kLandmarkCount));
    }
    PoseFrame frame;
    frame.timestamp_ms = t->get<std::int64_t>();
    frame.landmarks.reserve(kLandmarkCount);
    for (std::size_t i = 0; i < lm->size(); ++i) {
        const auto& q = (*lm)[i];
        if (!q.is_array() || q.size() != kValuesPerLandmark) {
            throw ValidationError(fmt::format("landmark {} is not an [x, y, z, v] quadruple", i));
        }
        for (const auto& v : q) {
            if (!v.is_number()) {
                throw ValidationError(fmt::format("landmark {} has a non-numeric component", i));
            }
        }
        frame.landmarks.push_back(
            {q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()});
    }
    validate(frame);
    return frame;
}

PoseFrame parse_frame_line(std::string_view line) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ValidationError("frame line is not valid JSON");
    return frame_from_json(j);
}

nlohmann::json frame_to_json(const PoseFrame& frame) {
    nlohmann::json lm = nlohmann::json::array();
    for (const auto& p : frame.landmarks) lm.push_back({p.x, p.y, p.z, p.visibility});
    return {{"t", frame.timestamp_ms}, {"lm", std::move(lm)}};
}

std::string format_frame_line(const PoseFrame& frame) { return frame_to_json(frame).dump(); }

std::vector<PoseFrame> read_clip(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError(fmt::format("cannot open clip '{}'", path.string()));
    std::vector<PoseFrame> frames;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            frames.push_back(parse_frame_line(line));
        } catch (const ValidationError& e) {
            throw DatasetError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        }
    }
    return frames;
}

void write_clip(const fs::path& path, const std::vector<PoseFrame>& frames) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DatasetError(fmt::format("cannot write clip '{}'", path.string()));
    for (const auto& f : frames) out << format_frame_line(f) << '\n';
    if (!out) throw DatasetError(fmt::format("failed writing clip '{}'", path.string()));
}

std::size_t DatasetManifest::count(Posture label) const {
    return static_cast<std::size_t>(std::count_if(
        clips.begin(), clips.end(), [label](const ClipEntry& c) { return c.label == label; }));
}

nlohmann::json DatasetManifest::to_json() const {
    nlohmann::json clip_list = nlohmann::json::array();
    for (const auto& c : clips) {
        clip_list.push_back(
            {{"class", to_string(c.label)}, {"clip_id", c.clip_id}, {"frames", c.frame_count}});
    }
    return {{"root", root.string()},
            {"classes", {"good", "bad"}},
            {"counts", {{"good", count(Posture::Good)}, {"bad", count(Posture::Bad)}}},
            {"clips", std::move(clip_list)}};
}

std::vector<SequenceWindow> clip_windows(const std::vector<PoseFrame>& frames,
                                         const LoadOptions& options, std::string_view source_id) {
    std::vector<FeatureVector> features;
    features.reserve(frames.size());
    for (const auto& f : frames) {
        features.push_back(
            extract_features(options.canonicalize ? canonicalize(f) : f, options.filter_head));
    }
    return build_windows(features, options.window_len, options.stride, source_id);
}

LoadedDataset load_dataset(const fs::path& root, const LoadOptions& options) {
    if (!fs::is_directory(root)) {
        throw DatasetError(fmt::format("dataset root '{}' is not a directory", root.string()));
    }
    LoadedDataset out;
    out.manifest.root = root;
    for (Posture label : {Posture::Good, Posture::Bad}) {
        const fs::path dir = root / std::string(to_string(label));
        if (!fs::is_directory(dir)) {
            throw DatasetError(fmt::format("missing class folder '{}'", dir.string()));
        }
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
                files.push_back(entry.path());
            }
        }
        if (files.empty()) {
            throw DatasetError(fmt::format("class '{}' has no clips in '{}'", to_string(label),
                                           dir.string()));
        }
        std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
            return a.stem().string() < b.stem().string();
        });
        for (const auto& file : files) {
            const auto frames = read_clip(file);
            const std::string clip_id = file.stem().string();
            if (frames.size() < options.window_len) {
                throw DatasetError(fmt::format("clip '{}' has {} frames, needs at least {}",
                                               file.string(), frames.size(), options.window_len));
            }
            out.manifest.clips.push_back({label, clip_id, frames.size()});
            const std::string source = fmt::format("{}/{}", to_string(label), clip_id);
            for (auto& w : clip_windows(frames, options, source)) {
                out.sequences.push_back({std::move(w), label});
            }
        }
    }
    return out;
}

}  // namespace liftguard
