#include "liftguard/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <pthread.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "liftguard/dataset.hpp"
#include "liftguard/errors.hpp"
#include "liftguard/model_io.hpp"
#include "liftguard/service.hpp"
#include "liftguard/synthetic.hpp"
#include "liftguard/training.hpp"

namespace liftguard::cli {

namespace fs = std::filesystem;

namespace {

void configure_logging(bool verbose) {
    static auto logger = [] {
        auto l = spdlog::stderr_color_mt("liftguard");
        l->set_pattern("[%l] %v");
        return l;
    }();
    spdlog::set_default_logger(logger);
    auto level = spdlog::level::info;
    if (const char* env = std::getenv("LIFTGUARD_LOG")) level = spdlog::level::from_str(env);
    if (verbose) level = spdlog::level::debug;
    spdlog::set_level(level);
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DatasetError(fmt::format("cannot write '{}'", path.string()));
    out << text;
}

struct GenArgs {
    fs::path out;
    std::size_t n = 62;
    double style_mix = 0.5;
    double noise = 0.005;
    double yaw = 30.0;
    double scale_min = 0.85;
    double scale_max = 1.15;
};

int cmd_gen(const GenArgs& a, std::uint64_t seed, std::ostream& out) {
    SyntheticConfig cfg;
    cfg.n_sequences = a.n;
    cfg.style_mix = a.style_mix;
    cfg.noise_std = a.noise;
    cfg.camera_yaw_deg = {-a.yaw, a.yaw};
    cfg.subject_scale = {a.scale_min, a.scale_max};
    cfg.seed = seed;
    cfg.validate();

    std::error_code ec;
    for (const char* cls : {"good", "bad"}) {
        fs::create_directories(a.out / cls, ec);
        if (ec) {
            throw DatasetError(fmt::format("cannot create '{}': {}", (a.out / cls).string(), ec.message()));
        }
    }
    if (a.n == 0) spdlog::warn("--n 0: writing an empty dataset tree");

    const auto clips = generate_synthetic(cfg);
    DatasetManifest manifest;
    manifest.root = a.out;
    std::size_t disagreements = 0;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        const Posture label = oracle_label(clips[i].frames);
        if (label != style_posture(clips[i].style)) ++disagreements;
        const std::string clip_id = fmt::format("clip_{:04d}", i);
        write_clip(a.out / std::string(to_string(label)) / (clip_id + ".jsonl"), clips[i].frames);
        manifest.clips.push_back({label, clip_id, clips[i].frames.size()});
    }
    const auto summary = manifest.to_json();
    write_text_file(a.out / "manifest.json", summary.dump(2) + "\n");
    if (disagreements > 0) {
        spdlog::info("{} clip(s) labeled against their generating style by the oracle", disagreements);
    }
    out << nlohmann::json{{"root", a.out.string()},
                          {"good", manifest.count(Posture::Good)},
                          {"bad", manifest.count(Posture::Bad)}}
               .dump()
        << '\n';
    return kExitOk;
}

struct TrainArgs {
    fs::path data;
    fs::path model_out;
    std::size_t epochs = 150;
    double lr = 0.001;
    double early_stop = 0.95;
    std::size_t patience = 5;
    double test_frac = 0.25;
    double clip_norm = 5.0;
    std::size_t batch_size = 0;
    std::vector<std::size_t> lstm_units{64, 128, 64};
    std::vector<std::size_t> dense_units{64, 32};
    bool full_landmarks = false;
    bool canonicalize = false;
};

int cmd_train(const TrainArgs& a, std::uint64_t seed, std::ostream& out) {
    TrainingConfig cfg;
    cfg.epochs = a.epochs;
    cfg.learning_rate = a.lr;
    cfg.early_stop_threshold = a.early_stop;
    cfg.early_stop_patience = a.patience;
    cfg.test_fraction = a.test_frac;
    cfg.grad_clip_norm = a.clip_norm;
    cfg.batch_size = a.batch_size;
    cfg.seed = seed;
    cfg.validate();

    ArchitectureConfig arch;
    arch.filter_head = !a.full_landmarks;
    arch.canonicalize = a.canonicalize;
    arch.input_width = arch.filter_head ? kBodyFeatureWidth : kFullFeatureWidth;
    arch.lstm_units = a.lstm_units;
    arch.dense_units = a.dense_units;
    arch.dense_units.push_back(kClassCount);
    arch.validate();

    LoadOptions load;
    load.filter_head = arch.filter_head;
    load.canonicalize = arch.canonicalize;
    const auto dataset = load_dataset(a.data, load);
    spdlog::info("loaded {} windows from {} clips ({} good, {} bad)", dataset.sequences.size(),
                 dataset.manifest.clips.size(), dataset.manifest.count(Posture::Good),
                 dataset.manifest.count(Posture::Bad));

    const auto result = train(dataset.sequences, arch, cfg, [](const EpochRecord& r) {
        spdlog::debug("epoch {:4d}  loss {:.6f}  accuracy {:.4f}", r.epoch, r.mean_loss,
                      r.categorical_accuracy);
    });
    const auto& hist = result.history;
    spdlog::info("training stopped after {} epochs ({})", hist.epochs.size(),
                 hist.stop_reason == StopReason::EarlyStopped ? "early stop" : "epochs exhausted");

    const EvalReport report = evaluate(result.model, result.split.test);
    const fs::path dir = a.model_out.has_parent_path() ? a.model_out.parent_path() : fs::path(".");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DatasetError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
    save_model(result.model, a.model_out);
    {
        std::ofstream csv(dir / "history.csv", std::ios::binary | std::ios::trunc);
        if (!csv) throw DatasetError(fmt::format("cannot write '{}'", (dir / "history.csv").string()));
        hist.write_csv(csv);
    }
    write_text_file(dir / "report.json", to_json(report).dump() + "\n");

    out << fmt::format("accuracy {} ({}/{} held-out windows)\n", report.accuracy,
                       report.confusion.correct(), report.confusion.total());
    return kExitOk;
}

int cmd_eval(const fs::path& model_path, const fs::path& data, const std::optional<fs::path>& report_path,
             std::ostream& out) {
    const ModelParams model = load_model(model_path);
    LoadOptions load;
    load.filter_head = model.arch.filter_head;
    load.canonicalize = model.arch.canonicalize;
    const auto dataset = load_dataset(data, load);
    const std::string text = to_json(evaluate(model, dataset.sequences)).dump();
    if (report_path) write_text_file(*report_path, text + "\n");
    out << text << '\n';
    return kExitOk;
}

int cmd_predict(const fs::path& model_path, const fs::path& input, std::size_t stride,
                std::ostream& out) {
    const ModelParams model = load_model(model_path);
    const auto frames = read_clip(input);
    LoadOptions load;
    load.filter_head = model.arch.filter_head;
    load.canonicalize = model.arch.canonicalize;
    load.stride = stride;
    const auto windows = clip_windows(frames, load, input.stem().string());
    if (windows.empty()) {
        spdlog::warn("'{}' has {} frames, fewer than one {}-frame window", input.string(),
                     frames.size(), kWindowLength);
    }
    for (std::size_t k = 0; k < windows.size(); ++k) {
        const auto& w = windows[k];
        const ClassProbs p = model_forward(model, w);
        const auto end = w.start_index + w.frames.size() - 1;
        out << nlohmann::json{{"window", k},
                              {"start", w.start_index},
                              {"t", frames[end].timestamp_ms},
                              {"label", to_string(p.predicted())},
                              {"probs", {p[0], p[1]}},
                              {"confidence", p.confidence()}}
                   .dump()
            << '\n';
    }
    return kExitOk;
}

int cmd_serve(const fs::path& model_path, ServiceOptions options) {
    // Block termination signals before workers spawn so only sigwait sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);
    auto service = serve(model_path, std::move(options));
    int received = 0;
    sigwait(&signals, &received);
    spdlog::info("signal {} received, shutting down", received);
    service->stop();
    pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out) {
    CLI::App app{"Lifting-posture sequence classifier and live risk service", "liftguard"};
    app.require_subcommand(1);
    std::uint64_t seed = 0;
    bool verbose = false;
    app.add_option("--seed", seed, "Seed for every random draw")->capture_default_str();
    app.add_flag("-v,--verbose", verbose, "Debug-level diagnostics");

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic dataset tree");
    gen_cmd->add_option("--out", gen.out, "Output directory")->required();
    gen_cmd->add_option("--n", gen.n, "Number of clips")->capture_default_str();
    gen_cmd->add_option("--style-mix", gen.style_mix, "Fraction of squat clips")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    gen_cmd->add_option("--noise", gen.noise, "Landmark noise std (normalized units)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    gen_cmd->add_option("--yaw", gen.yaw, "Camera yaw drawn from [-yaw, yaw] degrees")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    gen_cmd->add_option("--scale-min", gen.scale_min, "Smallest subject scale")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gen_cmd->add_option("--scale-max", gen.scale_max, "Largest subject scale")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train on a dataset tree and evaluate the held-out split");
    train_cmd->add_option("--data", tr.data, "Dataset root")->required()->check(CLI::ExistingDirectory);
    train_cmd->add_option("--out", tr.model_out, "Model file; history.csv and report.json go beside it")
        ->required();
    train_cmd->add_option("--epochs", tr.epochs, "Maximum epochs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train_cmd->add_option("--lr", tr.lr, "Adam learning rate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train_cmd->add_option("--early-stop", tr.early_stop, "Training accuracy that stops the run")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train_cmd->add_option("--patience", tr.patience, "Epochs the early-stop accuracy must hold")
        ->capture_default_str();
    train_cmd->add_option("--test-frac", tr.test_frac, "Held-out fraction")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    train_cmd->add_option("--clip-norm", tr.clip_norm, "Global gradient-norm clip (0 disables)")
        ->capture_default_str();
    train_cmd->add_option("--batch-size", tr.batch_size, "Mini-batch size (0 = full batch)")
        ->capture_default_str();
    train_cmd->add_option("--lstm-units", tr.lstm_units, "LSTM layer widths")
        ->delimiter(',')
        ->capture_default_str();
    train_cmd->add_option("--dense-units", tr.dense_units, "Hidden dense widths before the 2-way head")
        ->delimiter(',')
        ->capture_default_str();
    train_cmd->add_flag("--full-landmarks", tr.full_landmarks, "Keep the 11 head landmarks (132 features)");
    train_cmd->add_flag("--canonicalize", tr.canonicalize, "Hip-centred, torso-scaled coordinates");

    fs::path eval_model, eval_data;
    std::optional<fs::path> eval_report;
    auto* eval_cmd = app.add_subcommand("eval", "Score a model on every window of a dataset tree");
    eval_cmd->add_option("--model", eval_model, "Model file")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--data", eval_data, "Dataset root")->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--report", eval_report, "Also write the report here");

    fs::path predict_model, predict_input;
    std::size_t predict_stride = kWindowLength;
    auto* predict_cmd = app.add_subcommand("predict", "Classify each window of a frame file");
    predict_cmd->add_option("--model", predict_model, "Model file")->required()->check(CLI::ExistingFile);
    predict_cmd->add_option("--input", predict_input, "Frame file (.jsonl)")->required()->check(CLI::ExistingFile);
    predict_cmd->add_option("--stride", predict_stride, "Frames between window starts")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    fs::path serve_model;
    ServiceOptions serve_opts;
    double timeout_s = 60.0;
    auto* serve_cmd = app.add_subcommand("serve", "Run the live risk service");
    serve_cmd->add_option("--model", serve_model, "Model file")->required()->check(CLI::ExistingFile);
    serve_cmd->add_option("--port", serve_opts.port, "TCP port")->capture_default_str();
    serve_cmd->add_option("--address", serve_opts.address, "Bind address")->capture_default_str();
    serve_cmd->add_option("--stride", serve_opts.session.stride, "Frames between predictions")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    serve_cmd->add_option("--threads", serve_opts.threads, "Worker threads")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    serve_cmd->add_option("--log-length", serve_opts.session.risk.log_length, "Predictions used for risk")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    serve_cmd->add_option("--session-timeout", timeout_s, "Seconds without frames before a session expires")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, std::cerr);
        return code == 0 ? kExitOk : kExitUsage;
    }
    configure_logging(verbose);

    try {
        if (*gen_cmd) return cmd_gen(gen, seed, out);
        if (*train_cmd) return cmd_train(tr, seed, out);
        if (*eval_cmd) return cmd_eval(eval_model, eval_data, eval_report, out);
        if (*predict_cmd) return cmd_predict(predict_model, predict_input, predict_stride, out);
        if (*serve_cmd) {
            serve_opts.session_timeout =
                std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000.0));
            return cmd_serve(serve_model, std::move(serve_opts));
        }
    } catch (const ConfigError& e) {
        spdlog::error("{}", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace liftguard::cli
