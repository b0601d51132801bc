// spectra: frequency-domain grayscale enhancement, toy CNN training, and
// classification metrics over the 4-class MRI layout.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spectra/cnn.hpp"
#include "spectra/dft.hpp"
#include "spectra/enhance.hpp"
#include "spectra/image_io.hpp"
#include "spectra/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spectra;

namespace {

int log_level() {
    static const int level = [] {
        const char* env = std::getenv("SPECTRA_LOG");
        if (!env) return 0;
        const std::string s(env);
        if (s == "debug" || s == "2") return 2;
        if (s == "info" || s == "1") return 1;
        return 0;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[spectra] " << msg << "\n";
}

// Everything needed to replay a run; written next to the outputs.
struct RunManifest {
    std::string command;
    json config;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;
    double duration_ms = 0.0;
    json extra;

    void write(const fs::path& path) const {
        json j;
        j["command"] = command;
        j["config"] = config;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        j["seed"] = seed;
        j["tool_version"] = SPECTRA_VERSION;
        j["duration_ms"] = duration_ms;
        if (!extra.is_null()) j["stats"] = extra;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoFailure("cannot write manifest: " + path.string());
        out << j.dump(2) << "\n";
    }
};

class Stopwatch {
public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(clock::now() - start_).count();
    }

private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_ = clock::now();
};

json config_json(const EnhanceConfig& cfg) {
    return json{{"filter", to_string(cfg.filter)}, {"cutoff", cfg.cutoff},
                {"order", cfg.order},              {"alpha", cfg.alpha},
                {"pre_smooth", cfg.pre_smooth_sigma}, {"brightness", cfg.brightness},
                {"contrast", cfg.contrast},        {"equalize", cfg.equalize}};
}

struct SharedFlags {
    std::string filter = "gaussian";
    EnhanceConfig cfg;
    std::string config_file;

    void attach(CLI::App* cmd) {
        cmd->add_option("--filter", filter, "Low-pass filter kind: ideal|gaussian|butterworth")
            ->check(CLI::IsMember({"ideal", "gaussian", "butterworth"}))
            ->capture_default_str();
        cmd->add_option("--cutoff", cfg.cutoff, "Normalized cutoff radius in (0,1]")
            ->capture_default_str();
        cmd->add_option("--order", cfg.order, "Butterworth order")->capture_default_str();
        cmd->add_option("--alpha", cfg.alpha, "Detail gain for the subtracted low-pass component")
            ->capture_default_str();
        cmd->add_option("--pre-smooth", cfg.pre_smooth_sigma,
                        "Gaussian pre-smoothing sigma in pixels (0 = off)")
            ->capture_default_str();
        cmd->add_option("--brightness", cfg.brightness, "Brightness shift in [-1,1]")
            ->capture_default_str();
        cmd->add_option("--contrast", cfg.contrast, "Contrast gain (> 0)")
            ->capture_default_str();
        cmd->add_option("--equalize", cfg.equalize, "Histogram equalization on/off")
            ->capture_default_str();
        cmd->add_option("--config", config_file,
                        "key = value config file; explicit flags override it");
    }

    EnhanceConfig resolve(CLI::App* cmd) {
        EnhanceConfig out = cfg;
        if (!config_file.empty()) {
            out = EnhanceConfig::from_kv_file(config_file);
            // flags given on the command line win over the file
            if (cmd->count("--filter")) out.filter = filter_kind_from_string(filter);
            if (cmd->count("--cutoff")) out.cutoff = cfg.cutoff;
            if (cmd->count("--order")) out.order = cfg.order;
            if (cmd->count("--alpha")) out.alpha = cfg.alpha;
            if (cmd->count("--pre-smooth")) out.pre_smooth_sigma = cfg.pre_smooth_sigma;
            if (cmd->count("--brightness")) out.brightness = cfg.brightness;
            if (cmd->count("--contrast")) out.contrast = cfg.contrast;
            if (cmd->count("--equalize")) out.equalize = cfg.equalize;
        } else {
            out.filter = filter_kind_from_string(filter);
        }
        out.validate();
        return out;
    }
};

int cmd_enhance(const std::string& input, const std::string& output, const EnhanceConfig& cfg,
                std::uint64_t seed) {
    Stopwatch watch;
    const ImageGrid img = load_grayscale(input);
    const ImageGrid out = enhance(img, cfg);
    save_grayscale(out, output);
    log_info("enhanced " + input + " -> " + output);

    RunManifest manifest{"enhance", config_json(cfg), {input}, {output}, seed};
    manifest.duration_ms = watch.ms();
    manifest.write(fs::path(output).string() + ".manifest.json");
    return 0;
}

int cmd_batch(const std::string& dataset_root, const std::string& output_root,
              const EnhanceConfig& cfg, std::uint64_t seed, unsigned jobs) {
    Stopwatch watch;
    const DatasetManifest manifest = scan_dataset(dataset_root, Split::train);
    fs::create_directories(output_root);

    const auto& entries = manifest.entries();
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> ok{0};
    std::mutex failures_mutex;
    std::vector<std::string> failures;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= entries.size()) return;
            const auto& entry = entries[i];
            try {
                const fs::path rel = fs::relative(entry.path, dataset_root);
                fs::path out_path = fs::path(output_root) / rel;
                out_path.replace_extension(".png");
                fs::create_directories(out_path.parent_path());
                save_grayscale(enhance(load_grayscale(entry.path), cfg), out_path);
                ok.fetch_add(1);
            } catch (const Error& e) {
                std::lock_guard<std::mutex> lock(failures_mutex);
                failures.push_back(entry.path.string() + ": " + e.what());
            }
        }
    };

    jobs = std::max(1u, jobs);
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();

    std::sort(failures.begin(), failures.end());
    for (const std::string& f : failures) std::cerr << "skipped: " << f << "\n";
    log_info(std::to_string(ok.load()) + "/" + std::to_string(entries.size()) +
             " images enhanced");

    RunManifest run{"batch", config_json(cfg), {dataset_root}, {output_root}, seed};
    run.config["jobs"] = jobs;
    run.extra = json{{"images_total", entries.size()},
                     {"images_enhanced", ok.load()},
                     {"failures", failures}};
    run.duration_ms = watch.ms();
    run.write(fs::path(output_root) / "run_manifest.json");

    if (ok.load() == 0) {
        std::cerr << "error: no image could be enhanced\n";
        return 1;
    }
    return 0;
}

int cmd_spectrum(const std::string& input, const std::string& output) {
    Stopwatch watch;
    const ImageGrid img = load_grayscale(input);
    const Spectrum spec = center(dft_forward(img));
    ImageGrid logmag = magnitude(spec);
    for (double& v : logmag.data()) v = std::log(1.0 + v);
    save_grayscale(normalize_minmax(logmag), output);

    RunManifest manifest{"spectrum", json::object(), {input}, {output}, 0};
    manifest.duration_ms = watch.ms();
    manifest.write(fs::path(output).string() + ".manifest.json");
    return 0;
}

int cmd_metrics(const std::string& predictions_path, const std::string& report_path) {
    Stopwatch watch;
    const std::vector<PredictionRecord> records = read_predictions(predictions_path);
    if (records.empty()) throw EmptyInput("no prediction rows in " + predictions_path);
    const MetricsReport report = compute_report(records);
    write_report(report, report_path);
    log_info("report written to " + report_path);

    RunManifest manifest{"metrics", json::object(), {predictions_path}, {report_path}, 0};
    manifest.duration_ms = watch.ms();
    manifest.write(fs::path(report_path).string() + ".manifest.json");
    return 0;
}

fs::path find_split_dir(const fs::path& root, const char* name) {
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        std::string folded = entry.path().filename().string();
        std::transform(folded.begin(), folded.end(), folded.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (folded == name) return entry.path();
    }
    throw MissingClassDirectory("no '" + std::string(name) + "' split under " + root.string());
}

int cmd_train_toy(const std::string& dataset_root, const std::string& out_dir, int size,
                  int filters1, int filters2, double dropout_rate, const TrainConfig& cfg) {
    Stopwatch watch;
    const DatasetManifest train_manifest = scan_dataset(find_split_dir(dataset_root, "train"),
                                                        Split::train);
    const DatasetManifest test_manifest = scan_dataset(find_split_dir(dataset_root, "test"),
                                                       Split::test);
    fs::create_directories(out_dir);

    auto to_tensor = [size](const fs::path& path) {
        const ImageGrid img = resize_bilinear(load_grayscale(path), size, size);
        Tensor3 t(1, size, size);
        t.data() = img.data();
        return t;
    };

    std::vector<std::pair<Tensor3, int>> train_set;
    train_set.reserve(train_manifest.size());
    for (const auto& entry : train_manifest.entries())
        train_set.emplace_back(to_tensor(entry.path), entry.label.index);
    log_info(std::to_string(train_set.size()) + " training images at " + std::to_string(size) +
             "x" + std::to_string(size));

    MicroCnn net(size, size, filters1, filters2, dropout_rate, cfg.seed);
    const std::vector<EpochStats> trace = net.train(train_set, cfg);

    const fs::path model_path = fs::path(out_dir) / "model.txt";
    const fs::path trace_path = fs::path(out_dir) / "trace.csv";
    const fs::path pred_path = fs::path(out_dir) / "predictions.csv";
    net.save(model_path);
    write_trace_csv(trace, trace_path);

    // Predictions over the test split, compatible with `spectra metrics`.
    std::ofstream pred(pred_path, std::ios::binary);
    if (!pred) throw IoFailure("cannot write " + pred_path.string());
    pred << "id,true_label,pred_label,score_0,score_1,score_2,score_3\n";
    for (const auto& entry : test_manifest.entries()) {
        const std::vector<double> probs = net.forward(to_tensor(entry.path), Mode::eval);
        const int argmax = static_cast<int>(
            std::max_element(probs.begin(), probs.end()) - probs.begin());
        pred << fs::relative(entry.path, dataset_root).generic_string() << ','
             << entry.label.name() << ',' << ClassLabel{argmax}.name();
        char buf[32];
        for (double q : probs) {
            std::snprintf(buf, sizeof buf, ",%.12g", q);
            pred << buf;
        }
        pred << '\n';
    }
    pred.close();

    RunManifest manifest{"train-toy",
                         json{{"size", size},
                              {"filters1", filters1},
                              {"filters2", filters2},
                              {"dropout", dropout_rate},
                              {"learning_rate", cfg.learning_rate},
                              {"epochs", cfg.epochs},
                              {"batch_size", cfg.batch_size}},
                         {dataset_root},
                         {model_path.string(), trace_path.string(), pred_path.string()},
                         cfg.seed};
    if (!trace.empty())
        manifest.extra = json{{"final_loss", trace.back().loss},
                              {"final_accuracy", trace.back().accuracy}};
    manifest.duration_ms = watch.ms();
    manifest.write(fs::path(out_dir) / "run_manifest.json");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency-domain grayscale enhancement, toy CNN training, and "
                 "classification metrics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(SPECTRA_VERSION));

    std::uint64_t seed = 0;
    unsigned jobs = 1;
    app.add_option("--seed", seed, "Seed for every random draw")->capture_default_str();
    app.add_option("--jobs", jobs, "Worker count for batch runs")->capture_default_str();

    std::string input, output;

    CLI::App* enhance_cmd = app.add_subcommand("enhance", "Enhance one grayscale image");
    enhance_cmd->add_option("input", input, "Input PNG/JPEG")->required();
    enhance_cmd->add_option("output", output, "Output PNG")->required();
    SharedFlags enhance_flags;
    enhance_flags.attach(enhance_cmd);

    CLI::App* batch_cmd =
        app.add_subcommand("batch", "Enhance a 4-class dataset tree into a mirrored layout");
    batch_cmd->add_option("dataset_root", input, "Directory holding the four class dirs")
        ->required();
    batch_cmd->add_option("output_root", output, "Mirror output directory")->required();
    SharedFlags batch_flags;
    batch_flags.attach(batch_cmd);

    CLI::App* spectrum_cmd =
        app.add_subcommand("spectrum", "Write the centered log-magnitude spectrum");
    spectrum_cmd->add_option("input", input, "Input PNG/JPEG")->required();
    spectrum_cmd->add_option("output", output, "Output PNG")->required();

    CLI::App* train_cmd = app.add_subcommand("train-toy", "Train the micro-CNN on a "
                                                          "train/test dataset tree");
    std::string train_out = "train_out";
    int size = 32, filters1 = 4, filters2 = 8, epochs = 10, batch_size = 8;
    double lr = 0.05, dropout_rate = 0.0;
    train_cmd->add_option("dataset_root", input, "Directory holding train/ and test/ splits")
        ->required();
    train_cmd->add_option("--out", train_out, "Output directory")->capture_default_str();
    train_cmd->add_option("--size", size, "Square input size (multiple of 4)")
        ->capture_default_str();
    train_cmd->add_option("--filters1", filters1, "Filters in the first conv block")
        ->capture_default_str();
    train_cmd->add_option("--filters2", filters2, "Filters in the second conv block")
        ->capture_default_str();
    train_cmd->add_option("--dropout", dropout_rate, "Dropout rate in [0,1)")
        ->capture_default_str();
    train_cmd->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    train_cmd->add_option("--lr", lr, "Learning rate")->capture_default_str();
    train_cmd->add_option("--batch-size", batch_size, "Minibatch size")->capture_default_str();

    CLI::App* metrics_cmd =
        app.add_subcommand("metrics", "Confusion matrix and scalar metrics from a predictions CSV");
    metrics_cmd->add_option("predictions", input, "Prediction CSV")->required();
    metrics_cmd->add_option("report", output, "Report JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (enhance_cmd->parsed())
            return cmd_enhance(input, output, enhance_flags.resolve(enhance_cmd), seed);
        if (batch_cmd->parsed())
            return cmd_batch(input, output, batch_flags.resolve(batch_cmd), seed, jobs);
        if (spectrum_cmd->parsed()) return cmd_spectrum(input, output);
        if (train_cmd->parsed()) {
            TrainConfig cfg;
            cfg.learning_rate = lr;
            cfg.epochs = epochs;
            cfg.batch_size = batch_size;
            cfg.seed = seed;
            return cmd_train_toy(input, train_out, size, filters1, filters2, dropout_rate, cfg);
        }
        if (metrics_cmd->parsed()) return cmd_metrics(input, output);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
