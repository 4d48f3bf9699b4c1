#include "huruf/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "huruf/evaluation.hpp"
#include "huruf/inference.hpp"
#include "huruf/model_store.hpp"
#include "huruf/service.hpp"
#include "huruf/training.hpp"

namespace huruf {

namespace fs = std::filesystem;

namespace {

fs::path default_model_root() {
    if (const char* env = std::getenv("HURUF_MODEL_DIR"); env && *env) return env;
    return "models";
}

struct DataArgs {
    std::string images;
    std::string labels;
    std::string val_images;
    std::string val_labels;
    double val_fraction = 0.1;
    bool header = false;
    std::size_t side = 64;
    std::size_t head = 28;
};

void add_data_flags(CLI::App* cmd, DataArgs& a, bool with_validation) {
    cmd->add_option("--images", a.images, "Images CSV (one sample per row, 0-255)")->required();
    cmd->add_option("--labels", a.labels, "Labels CSV (one integer per row)")->required();
    cmd->add_flag("--header", a.header, "Skip a header row in both CSV files");
    cmd->add_option("--side", a.side, "Model input side length")->capture_default_str();
    cmd->add_option("--head", a.head, "Number of classes")->check(CLI::IsMember({10, 28}))->capture_default_str();
    if (with_validation) {
        cmd->add_option("--val-images", a.val_images, "Validation images CSV (default: held-out slice)");
        cmd->add_option("--val-labels", a.val_labels, "Validation labels CSV");
        cmd->add_option("--val-fraction", a.val_fraction, "Held-out fraction when no validation files are given")
            ->check(CLI::Range(0.0, 1.0))
            ->capture_default_str();
    }
}

std::pair<Dataset, Dataset> load_train_val(const DataArgs& a, std::uint64_t seed, std::ostream& err) {
    CsvOptions opts;
    opts.side = a.side;
    opts.header = a.header;
    opts.notice = [&err](std::string_view msg) { err << "notice: " << msg << '\n'; };
    const LabelMap map = LabelMap::for_head(a.head);
    Dataset train = load_csv_pair(a.images, a.labels, map, opts, Split::train);
    if (!a.val_images.empty() || !a.val_labels.empty()) {
        if (a.val_images.empty() || a.val_labels.empty()) {
            throw ParameterError("--val-images and --val-labels must be given together");
        }
        return {std::move(train), load_csv_pair(a.val_images, a.val_labels, map, opts, Split::test)};
    }
    return split_holdout(train, a.val_fraction, seed);
}

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

nlohmann::json prediction_json(const Prediction& p) {
    nlohmann::json topk = nlohmann::json::array();
    for (const auto& r : p.topk) topk.push_back({{"name", r.name}, {"index", r.index}, {"probability", r.probability}});
    return {{"label", p.label}, {"class_index", p.class_index}, {"probabilities", p.probabilities}, {"topk", topk}};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Handwritten Arabic character and digit recognition"};
    app.name("huruf");
    app.require_subcommand(1);

    // train
    DataArgs train_data;
    TrainConfig train_cfg;
    std::string train_model;
    std::string optimizer = "adam", initializer = "uniform", activation = "relu";
    std::size_t workers = 1;
    auto* train = app.add_subcommand("train", "Train a model and save it");
    add_data_flags(train, train_data, true);
    train->add_option("--model", train_model, "Output model directory (default $HURUF_MODEL_DIR/<kind>)");
    train->add_option("--epochs", train_cfg.epochs)->capture_default_str();
    train->add_option("--batch", train_cfg.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--lr", train_cfg.learning_rate)->check(CLI::NonNegativeNumber)->capture_default_str();
    train->add_option("--seed", train_cfg.seed)->capture_default_str();
    train->add_option("--optimizer", optimizer)->check(CLI::IsMember({"adam", "rmsprop", "nadam", "adagrad"}))->capture_default_str();
    train->add_option("--init", initializer)->check(CLI::IsMember({"uniform", "normal"}))->capture_default_str();
    train->add_option("--activation", activation)->check(CLI::IsMember({"relu", "tanh", "linear"}))->capture_default_str();
    train->add_option("--jobs", workers, "Worker threads within a batch")->check(CLI::PositiveNumber)->capture_default_str();

    // gridsearch
    DataArgs grid_data;
    TrainConfig grid_cfg = TrainConfig::grid_probe();
    std::string checkpoint = "gridsearch.jsonl";
    std::size_t grid_jobs = 1;
    auto* grid = app.add_subcommand("gridsearch", "Train all 24 optimizer/initializer/activation combinations");
    add_data_flags(grid, grid_data, true);
    grid->add_option("--checkpoint", checkpoint, "Line-delimited JSON progress file")->capture_default_str();
    grid->add_option("--epochs", grid_cfg.epochs)->capture_default_str();
    grid->add_option("--batch", grid_cfg.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
    grid->add_option("--lr", grid_cfg.learning_rate)->check(CLI::NonNegativeNumber)->capture_default_str();
    grid->add_option("--seed", grid_cfg.seed)->capture_default_str();
    grid->add_option("--jobs", grid_jobs, "Combos trained in parallel")->check(CLI::PositiveNumber)->capture_default_str();

    // eval
    std::string eval_model, eval_images, eval_labels, report_path, confusion_path;
    bool eval_header = false;
    auto* eval = app.add_subcommand("eval", "Class-wise report of a model on a labelled set");
    eval->add_option("--model", eval_model, "Model directory")->required();
    eval->add_option("--images", eval_images)->required();
    eval->add_option("--labels", eval_labels)->required();
    eval->add_flag("--header", eval_header);
    eval->add_option("--report", report_path, "Write the structured report (JSON) here");
    eval->add_option("--confusion", confusion_path, "Write the confusion matrix (CSV) here");

    // predict
    std::string predict_model, predict_images;
    std::size_t predict_row = 0, topk = 3;
    bool predict_header = false, upright = false, as_json = false;
    auto* predict = app.add_subcommand("predict", "Classify one image row");
    predict->add_option("--model", predict_model, "Model directory")->required();
    predict->add_option("--images", predict_images, "CSV file holding the pixel row(s), values 0-255")->required();
    predict->add_option("--row", predict_row, "Row to classify (0-based)")->capture_default_str();
    predict->add_option("--topk", topk)->capture_default_str();
    predict->add_flag("--header", predict_header);
    predict->add_flag("--upright", upright, "Pixels are already upright (skip the dataset orientation fix)");
    predict->add_flag("--json", as_json, "Print the prediction as JSON");

    // serve
    std::string model_dir, letters_dir, digits_dir, static_dir, host = "0.0.0.0", cors = "*";
    int port = 8700;
    auto* serve = app.add_subcommand("serve", "Serve the models over HTTP");
    serve->add_option("--model-dir", model_dir, "Directory holding digits/ and letters/ (default $HURUF_MODEL_DIR)");
    serve->add_option("--letters", letters_dir, "Letters model directory");
    serve->add_option("--digits", digits_dir, "Digits model directory");
    serve->add_option("--port", port)->check(CLI::Range(0, 65535))->capture_default_str();
    serve->add_option("--host", host)->capture_default_str();
    serve->add_option("--cors-origin", cors, "Allowed origin; empty disables CORS headers")->capture_default_str();
    serve->add_option("--static-dir", static_dir, "Static UI assets served under /app");

    std::vector<std::string> argv_storage{"huruf"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_storage) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*train) {
            train_cfg.optimizer = parse_optimizer(optimizer);
            train_cfg.initializer = parse_initializer(initializer);
            train_cfg.activation = parse_activation(activation);
            const ModelSpec spec = ModelSpec::with_head(train_data.head, train_data.side);
            auto [tr, val] = load_train_val(train_data, train_cfg.seed, err);
            out << describe(train_cfg) << " epochs=" << train_cfg.epochs << " batch=" << train_cfg.batch_size
                << " lr=" << train_cfg.learning_rate << " seed=" << train_cfg.seed << '\n';
            out << "train samples=" << tr.size() << " validation samples=" << val.size() << '\n';
            if (train_cfg.epochs == 0) err << "warning: --epochs 0 saves the initialized parameters untrained\n";

            FitOptions fo;
            fo.workers = workers;
            fo.on_epoch = [&](std::size_t epoch, const EpochRecord& r) {
                out << "epoch " << epoch + 1 << "/" << train_cfg.epochs << " loss=" << fixed(r.train_loss, 4)
                    << " accuracy=" << fixed(r.train_accuracy, 4) << " val_accuracy=" << fixed(r.val_accuracy, 4)
                    << std::endl;
            };
            FitResult result = fit(spec, tr, val, train_cfg, fo);
            ModelSpec trained = spec;
            trained.activation = train_cfg.activation;
            const fs::path dest = train_model.empty() ? default_model_root() / model_kind(spec.num_classes)
                                                      : fs::path(train_model);
            save_model(result.params, trained, SaveMeta{tr.classes.names, train_cfg}, dest);
            out << "saved model to " << dest.string() << '\n';
            return 0;
        }

        if (*grid) {
            const ModelSpec spec = ModelSpec::with_head(grid_data.head, grid_data.side);
            auto [tr, val] = load_train_val(grid_data, grid_cfg.seed, err);
            GridOptions go;
            go.checkpoint = fs::path(checkpoint);
            go.jobs = grid_jobs;
            go.base = grid_cfg;
            go.on_result = [&](const GridResult& r) {
                err << "combo " << r.combo << " " << describe(r.config) << " val_accuracy=" << fixed(r.val_accuracy, 4)
                    << (r.failed ? " FAILED: " + r.error : "") << '\n';
            };
            const std::vector<GridResult> results = grid_search(spec, tr, val, grid_cfg.seed, go);
            out << "rank combo optimizer initializer activation val_accuracy wall_time status\n";
            for (std::size_t i = 0; i < results.size(); ++i) {
                const GridResult& r = results[i];
                out << i + 1 << ' ' << r.combo << ' ' << to_string(r.config.optimizer) << ' '
                    << to_string(r.config.initializer) << ' ' << to_string(r.config.activation) << ' '
                    << fixed(r.val_accuracy, 4) << ' ' << fixed(r.wall_time, 2) << ' ' << (r.failed ? "failed" : "ok")
                    << '\n';
            }
            return 0;
        }

        if (*eval) {
            StoredModel stored = load_model(eval_model);
            CsvOptions opts;
            opts.side = stored.spec.input_side;
            opts.header = eval_header;
            opts.notice = [&err](std::string_view msg) { err << "notice: " << msg << '\n'; };
            const Dataset ds = load_csv_pair(eval_images, eval_labels, LabelMap{stored.manifest.class_names}, opts,
                                             Split::test);
            const Model<float> model(stored.spec, std::move(stored.params));
            const auto [report, cm] = evaluate_model(model, ds);
            out << render_report(report);
            if (!report_path.empty()) {
                std::ofstream f(report_path);
                f << report_to_json(report, cm).dump(2) << '\n';
                if (!f) throw StorageError("cannot write " + report_path);
            }
            if (!confusion_path.empty()) {
                std::ofstream f(confusion_path);
                f << confusion_csv(cm, stored.manifest.class_names);
                if (!f) throw StorageError("cannot write " + confusion_path);
            }
            return 0;
        }

        if (*predict) {
            const StoredModel stored = load_model(predict_model);
            std::ifstream in(predict_images);
            if (!in) throw FormatError("cannot open " + predict_images);
            std::string line;
            std::size_t target = predict_row + (predict_header ? 1 : 0);
            for (std::size_t r = 0; r <= target; ++r) {
                if (!std::getline(in, line)) {
                    throw FormatError(predict_images + " has no row " + std::to_string(predict_row));
                }
            }
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const std::vector<float> raw = parse_pixel_row(line, target + 1);
            Tensor4<float> img;
            if (upright) {
                std::vector<float> t = raw;
                const std::size_t side = stored.spec.input_side;
                if (t.size() != side * side) {
                    throw ParameterError("expected " + std::to_string(side * side) + " pixels, got " +
                                         std::to_string(t.size()));
                }
                img = scale(Tensor4<float>(Shape4{1, side, side, 1}, std::move(t)), 1.0f / 255.0f);
            } else {
                img = decode_row(raw, stored.spec.input_side);
            }
            const Model<float> model(stored.spec, stored.params);
            const Prediction p = predict_pixels(model, stored.manifest.class_names, img.values(), topk);
            if (as_json) {
                out << prediction_json(p).dump() << '\n';
            } else {
                for (const auto& r : p.topk) out << r.name << '\t' << fixed(r.probability, 4) << '\n';
            }
            return 0;
        }

        if (*serve) {
            std::map<std::string, StoredModel> models;
            if (!letters_dir.empty()) models.emplace("letters", load_model(letters_dir));
            if (!digits_dir.empty()) models.emplace("digits", load_model(digits_dir));
            if (letters_dir.empty() && digits_dir.empty()) {
                models = load_model_dir(model_dir.empty() ? default_model_root() : fs::path(model_dir));
            }
            ServiceOptions so;
            so.cors_origin = cors;
            if (!static_dir.empty()) so.static_dir = fs::path(static_dir);
            InferenceService service(std::move(models), so);
            HttpServer server(service);
            const int bound = server.bind(host, port);
            if (bound < 0) throw StorageError("cannot bind " + host + ":" + std::to_string(port));
            err << "serving " << service.health().body["models"].size() << " model(s) on " << host << ":" << bound
                << '\n';
            return server.serve() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace huruf
