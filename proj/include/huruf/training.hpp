#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "huruf/data.hpp"
#include "huruf/model.hpp"
#include "huruf/random.hpp"

namespace huruf {

enum class OptimizerKind { adam, rmsprop, nadam, adagrad };
enum class InitKind { uniform, normal };

std::string to_string(OptimizerKind kind);
std::string to_string(InitKind kind);
OptimizerKind parse_optimizer(const std::string& name);
InitKind parse_initializer(const std::string& name);

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::adam;
    InitKind initializer = InitKind::uniform;
    ActivationKind activation = ActivationKind::relu;
    std::size_t epochs = 20;
    std::size_t batch_size = 20;
    double learning_rate = 1e-3;
    std::uint64_t seed = kDefaultSeed;

    /// Short-run settings used for every grid combination.
    static TrainConfig grid_probe();

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// "optimizer=adam initializer=uniform activation=relu"
std::string describe(const TrainConfig& cfg);

/// Kernel and dense weights drawn i.i.d. from U(-0.05, 0.05) or N(0, 0.05^2);
/// biases and beta zero, gamma one. Deterministic in (spec, kind, seed).
template <typename T>
ParameterSet<T> init_params(const ModelSpec& spec, InitKind kind, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Optimizers

struct OptimizerConstants {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double rho = 0.9;
    double epsilon = 1e-7;
    double nadam_schedule_decay = 0.004;
};

template <typename T>
struct OptimizerState {
    OptimizerKind kind = OptimizerKind::adam;
    OptimizerConstants constants{};
    std::vector<std::vector<T>> first;   // Adam/Nadam first moment
    std::vector<std::vector<T>> second;  // second moment or squared-gradient accumulator
    std::uint64_t step = 0;
    double momentum_product = 1.0;  // Nadam's running product of momentum factors

    explicit OptimizerState(OptimizerKind k = OptimizerKind::adam, OptimizerConstants c = {})
        : kind(k), constants(c) {}
};

/// Applies one update of the selected rule to every parameter view. Throws
/// NumericError naming the first tensor with a non-finite gradient, before
/// anything is modified.
template <typename T>
void optimizer_step(OptimizerState<T>& state, const std::vector<ParamView<T>>& params,
                    const std::vector<ParamView<T>>& grads, double learning_rate);

// ---------------------------------------------------------------------------
// Training loop

struct EpochRecord {
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct FitOptions {
    std::size_t workers = 1;
    std::function<void(std::size_t epoch, const EpochRecord&)> on_epoch;
};

struct FitResult {
    ParameterSet<float> params;
    std::vector<EpochRecord> history;
    std::uint64_t steps = 0;
};

/// Mini-batch training of spec (with the activation taken from cfg). Throws
/// TrainingError naming epoch and batch when the loss stops being finite.
FitResult fit(const ModelSpec& spec, const Dataset& train, const Dataset& val, const TrainConfig& cfg,
              const FitOptions& options = {});

/// Eval-mode accuracy over ds, batched.
double accuracy(const Model<float>& model, const Dataset& ds, std::size_t batch_size = 64);

// ---------------------------------------------------------------------------
// Grid search

inline constexpr std::size_t kGridSize = 24;

/// The 4 x 2 x 3 grid in index order (optimizer major, activation minor),
/// every combo carrying its own derived seed.
std::vector<TrainConfig> grid_configs(const TrainConfig& base);

struct GridResult {
    std::size_t combo = 0;
    TrainConfig config;
    double val_accuracy = 0.0;
    double wall_time = 0.0;
    std::vector<EpochRecord> history;
    bool failed = false;
    std::string error;
};

struct ComboOutcome {
    double val_accuracy = 0.0;
    std::vector<EpochRecord> history;
};

/// Trains one combo. The default runs fit() on the grid's datasets.
using ComboTrainer = std::function<ComboOutcome(std::size_t combo, const TrainConfig& cfg)>;

struct GridOptions {
    std::optional<std::filesystem::path> checkpoint;
    std::size_t jobs = 1;
    TrainConfig base = TrainConfig::grid_probe();
    ComboTrainer trainer;
    std::function<void(const GridResult&)> on_result;
};

/// Trains all 24 combos (skipping those already in the checkpoint), appends
/// one line per finished combo, and returns every result sorted by validation
/// accuracy descending (combo index breaks ties).
std::vector<GridResult> grid_search(const ModelSpec& spec, const Dataset& train, const Dataset& val,
                                    std::uint64_t seed, const GridOptions& options = {});

/// Checkpoint line codec.
std::string grid_result_to_line(const GridResult& r);
std::optional<GridResult> grid_result_from_line(const std::string& line);

}  // namespace huruf
