#include "huruf/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

namespace huruf {

std::string to_string(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::adam: return "adam";
        case OptimizerKind::rmsprop: return "rmsprop";
        case OptimizerKind::nadam: return "nadam";
        case OptimizerKind::adagrad: return "adagrad";
    }
    return "unknown";
}

std::string to_string(InitKind kind) { return kind == InitKind::uniform ? "uniform" : "normal"; }

OptimizerKind parse_optimizer(const std::string& name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "rmsprop") return OptimizerKind::rmsprop;
    if (name == "nadam") return OptimizerKind::nadam;
    if (name == "adagrad") return OptimizerKind::adagrad;
    throw ParameterError("unknown optimizer '" + name + "' (expected adam, rmsprop, nadam or adagrad)");
}

InitKind parse_initializer(const std::string& name) {
    if (name == "uniform") return InitKind::uniform;
    if (name == "normal") return InitKind::normal;
    throw ParameterError("unknown initializer '" + name + "' (expected uniform or normal)");
}

TrainConfig TrainConfig::grid_probe() {
    TrainConfig c;
    c.epochs = 5;
    return c;
}

std::string describe(const TrainConfig& cfg) {
    return "optimizer=" + to_string(cfg.optimizer) + " initializer=" + to_string(cfg.initializer) +
           " activation=" + to_string(cfg.activation);
}

template <typename T>
ParameterSet<T> init_params(const ModelSpec& spec, InitKind kind, std::uint64_t seed) {
    ParameterSet<T> p = make_parameters<T>(spec);
    std::mt19937_64 rng(derive_seed(seed, {static_cast<std::uint64_t>(kind)}));
    std::uniform_real_distribution<double> uniform(-0.05, 0.05);
    std::normal_distribution<double> normal(0.0, 0.05);

    auto fill = [&](std::span<T> values) {
        for (T& v : values) v = static_cast<T>(kind == InitKind::uniform ? uniform(rng) : normal(rng));
    };
    for (auto& blk : p.blocks) fill(blk.conv.kernels.values());
    fill(p.head.weights.values());
    return p;
}

template <typename T>
void optimizer_step(OptimizerState<T>& state, const std::vector<ParamView<T>>& params,
                    const std::vector<ParamView<T>>& grads, double learning_rate) {
    if (params.size() != grads.size()) throw ShapeError("optimizer: parameter and gradient lists differ in length");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].values.size() != grads[i].values.size()) {
            throw ShapeError("optimizer: gradient for " + params[i].name + " has the wrong size");
        }
        for (T g : grads[i].values)
            if (!std::isfinite(static_cast<double>(g))) {
                throw NumericError("non-finite gradient in " + params[i].name);
            }
    }
    if (state.first.empty() && state.second.empty()) {
        state.first.resize(params.size());
        state.second.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (state.kind == OptimizerKind::adam || state.kind == OptimizerKind::nadam) {
                state.first[i].assign(params[i].values.size(), T(0));
            }
            state.second[i].assign(params[i].values.size(), T(0));
        }
    } else if (state.second.size() != params.size()) {
        throw ShapeError("optimizer state does not match the parameter list");
    }

    const OptimizerConstants& k = state.constants;
    const double t = static_cast<double>(state.step + 1);
    const T b1 = static_cast<T>(k.beta1);
    const T b2 = static_cast<T>(k.beta2);
    const T eps = static_cast<T>(k.epsilon);

    for (std::size_t i = 0; i < params.size(); ++i) {
        std::span<T> p = params[i].values;
        std::span<const T> g = grads[i].values;
        std::vector<T>& v = state.second[i];
        if (v.size() != p.size()) throw ShapeError("optimizer slot for " + params[i].name + " has the wrong size");

        switch (state.kind) {
            case OptimizerKind::adam: {
                std::vector<T>& m = state.first[i];
                const T lr_t = static_cast<T>(learning_rate * std::sqrt(1.0 - std::pow(k.beta2, t)) /
                                              (1.0 - std::pow(k.beta1, t)));
                for (std::size_t j = 0; j < p.size(); ++j) {
                    m[j] = b1 * m[j] + (T(1) - b1) * g[j];
                    v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
                    p[j] -= lr_t * m[j] / (std::sqrt(v[j]) + eps);
                }
                break;
            }
            case OptimizerKind::nadam: {
                std::vector<T>& m = state.first[i];
                const double mu_t = k.beta1 * (1.0 - 0.5 * std::pow(0.96, t * k.nadam_schedule_decay));
                const double mu_next = k.beta1 * (1.0 - 0.5 * std::pow(0.96, (t + 1.0) * k.nadam_schedule_decay));
                const double sched_new = state.momentum_product * mu_t;
                const double sched_next = sched_new * mu_next;
                const T g_scale = static_cast<T>(1.0 / (1.0 - sched_new));
                const T m_scale = static_cast<T>(1.0 / (1.0 - sched_next));
                const T v_scale = static_cast<T>(1.0 / (1.0 - std::pow(k.beta2, t)));
                const T c_grad = static_cast<T>(1.0 - mu_t);
                const T c_mom = static_cast<T>(mu_next);
                const T lr = static_cast<T>(learning_rate);
                for (std::size_t j = 0; j < p.size(); ++j) {
                    m[j] = b1 * m[j] + (T(1) - b1) * g[j];
                    v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
                    const T m_bar = c_grad * g[j] * g_scale + c_mom * m[j] * m_scale;
                    p[j] -= lr * m_bar / (std::sqrt(v[j] * v_scale) + eps);
                }
                break;
            }
            case OptimizerKind::rmsprop: {
                const T rho = static_cast<T>(k.rho);
                const T lr = static_cast<T>(learning_rate);
                for (std::size_t j = 0; j < p.size(); ++j) {
                    v[j] = rho * v[j] + (T(1) - rho) * g[j] * g[j];
                    p[j] -= lr * g[j] / (std::sqrt(v[j]) + eps);
                }
                break;
            }
            case OptimizerKind::adagrad: {
                const T lr = static_cast<T>(learning_rate);
                for (std::size_t j = 0; j < p.size(); ++j) {
                    v[j] += g[j] * g[j];
                    p[j] -= lr * g[j] / (std::sqrt(v[j]) + eps);
                }
                break;
            }
        }
    }
    if (state.kind == OptimizerKind::nadam) {
        state.momentum_product *= k.beta1 * (1.0 - 0.5 * std::pow(0.96, t * k.nadam_schedule_decay));
    }
    ++state.step;
}

double accuracy(const Model<float>& model, const Dataset& ds, std::size_t batch_size) {
    if (ds.size() == 0) return 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < ds.size(); start += batch_size) {
        const std::size_t end = std::min(ds.size(), start + batch_size);
        std::vector<std::size_t> idx(end - start);
        for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = start + k;
        const Batch b = gather(ds, idx);
        const Matrix<float> probs = model.predict(b.x);
        for (std::size_t r = 0; r < probs.rows(); ++r)
            if (argmax(probs.row(r)) == ds.labels[start + r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

FitResult fit(const ModelSpec& spec, const Dataset& train, const Dataset& val, const TrainConfig& cfg,
              const FitOptions& options) {
    if (train.size() == 0 || val.size() == 0) throw ParameterError("training and validation sets must be nonempty");
    if (train.classes.class_count() != spec.num_classes || val.classes.class_count() != spec.num_classes) {
        throw ShapeError("dataset has " + std::to_string(train.classes.class_count()) + " classes but the model head has " +
                         std::to_string(spec.num_classes));
    }
    if (cfg.batch_size == 0) throw ParameterError("batch size must be at least 1");
    if (!(cfg.learning_rate >= 0.0)) throw ParameterError("learning rate must be non-negative");

    ModelSpec s = spec;
    s.activation = cfg.activation;
    Model<float> model(s, init_params<float>(s, cfg.initializer, cfg.seed));
    model.set_workers(options.workers);
    OptimizerState<float> opt(cfg.optimizer);

    FitResult result;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        BatchIterator batches(train, cfg.batch_size, cfg.seed, epoch);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t b = 0; !batches.done(); ++b) {
            const Batch batch = batches.next();
            const Matrix<float> probs = model.forward(batch.x, Mode::train, derive_seed(cfg.seed, {epoch, b, 0xd5}));
            const double loss = cross_entropy_loss(probs, batch.y);
            if (!std::isfinite(loss)) {
                throw TrainingError("loss diverged at epoch " + std::to_string(epoch + 1) + ", batch " +
                                    std::to_string(b + 1));
            }
            loss_sum += loss * static_cast<double>(probs.rows());
            for (std::size_t r = 0; r < probs.rows(); ++r)
                if (argmax(probs.row(r)) == train.labels[batch.indices[r]]) ++correct;

            ParameterSet<float> grads = model.backward(batch.y);
            try {
                optimizer_step(opt, model.params().trainable(), grads.trainable(), cfg.learning_rate);
            } catch (const NumericError& e) {
                throw TrainingError(std::string(e.what()) + " at epoch " + std::to_string(epoch + 1) + ", batch " +
                                    std::to_string(b + 1));
            }
        }
        EpochRecord rec;
        rec.train_loss = loss_sum / static_cast<double>(train.size());
        rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
        rec.val_accuracy = accuracy(model, val);
        result.history.push_back(rec);
        if (options.on_epoch) options.on_epoch(epoch, rec);
    }
    result.steps = opt.step;
    result.params = std::move(model.params());
    return result;
}

std::vector<TrainConfig> grid_configs(const TrainConfig& base) {
    constexpr OptimizerKind optimizers[] = {OptimizerKind::adam, OptimizerKind::rmsprop, OptimizerKind::nadam,
                                            OptimizerKind::adagrad};
    constexpr InitKind inits[] = {InitKind::uniform, InitKind::normal};
    constexpr ActivationKind activations[] = {ActivationKind::relu, ActivationKind::tanh, ActivationKind::linear};
    std::vector<TrainConfig> out;
    for (OptimizerKind o : optimizers)
        for (InitKind i : inits)
            for (ActivationKind a : activations) {
                TrainConfig c = base;
                c.optimizer = o;
                c.initializer = i;
                c.activation = a;
                c.seed = derive_seed(base.seed, {out.size()});
                out.push_back(c);
            }
    return out;
}

namespace {

nlohmann::json history_to_json(const std::vector<EpochRecord>& h) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : h) arr.push_back({{"loss", e.train_loss}, {"accuracy", e.train_accuracy}, {"val_accuracy", e.val_accuracy}});
    return arr;
}

}  // namespace

std::string grid_result_to_line(const GridResult& r) {
    nlohmann::json j;
    j["combo"] = r.combo;
    j["optimizer"] = to_string(r.config.optimizer);
    j["initializer"] = to_string(r.config.initializer);
    j["activation"] = to_string(r.config.activation);
    j["epochs"] = r.config.epochs;
    j["batch_size"] = r.config.batch_size;
    j["learning_rate"] = r.config.learning_rate;
    j["seed"] = r.config.seed;
    j["val_accuracy"] = r.val_accuracy;
    j["wall_time"] = r.wall_time;
    j["status"] = r.failed ? "failed" : "ok";
    if (r.failed) j["error"] = r.error;
    j["history"] = history_to_json(r.history);
    return j.dump();
}

std::optional<GridResult> grid_result_from_line(const std::string& line) {
    const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    try {
        GridResult r;
        r.combo = j.at("combo").get<std::size_t>();
        r.config.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
        r.config.initializer = parse_initializer(j.at("initializer").get<std::string>());
        r.config.activation = parse_activation(j.at("activation").get<std::string>());
        r.config.epochs = j.at("epochs").get<std::size_t>();
        r.config.batch_size = j.at("batch_size").get<std::size_t>();
        r.config.learning_rate = j.at("learning_rate").get<double>();
        r.config.seed = j.at("seed").get<std::uint64_t>();
        r.val_accuracy = j.at("val_accuracy").get<double>();
        r.wall_time = j.at("wall_time").get<double>();
        r.failed = j.at("status").get<std::string>() != "ok";
        if (r.failed) r.error = j.value("error", "");
        for (const auto& e : j.at("history")) {
            r.history.push_back({e.at("loss").get<double>(), e.at("accuracy").get<double>(),
                                 e.at("val_accuracy").get<double>()});
        }
        return r;
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    } catch (const ParameterError&) {
        return std::nullopt;
    }
}

namespace {

// Reads every complete record and rewrites the file without a torn tail.
std::map<std::size_t, GridResult> load_checkpoint(const std::filesystem::path& path,
                                                  const std::vector<TrainConfig>& configs) {
    std::map<std::size_t, GridResult> done;
    std::ifstream in(path);
    if (!in) return done;
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    std::vector<std::string> kept;
    std::size_t start = 0;
    while (start < content.size()) {
        const std::size_t nl = content.find('\n', start);
        if (nl == std::string::npos) break;  // unterminated tail: the interrupted write
        std::string line = content.substr(start, nl - start);
        start = nl + 1;
        auto r = grid_result_from_line(line);
        if (!r) continue;
        if (r->combo >= configs.size() || !(r->config == configs[r->combo])) {
            throw ParameterError("checkpoint " + path.string() + " holds combo " + std::to_string(r->combo) +
                                 " for a different grid; remove it to start over");
        }
        if (done.emplace(r->combo, *r).second) kept.push_back(std::move(line));
    }

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        for (const auto& l : kept) out << l << '\n';
        if (!out) throw StorageError("cannot rewrite checkpoint " + path.string());
    }
    std::filesystem::rename(tmp, path);
    return done;
}

}  // namespace

std::vector<GridResult> grid_search(const ModelSpec& spec, const Dataset& train, const Dataset& val,
                                    std::uint64_t seed, const GridOptions& options) {
    TrainConfig base = options.base;
    base.seed = seed;
    const std::vector<TrainConfig> configs = grid_configs(base);

    std::map<std::size_t, GridResult> done;
    if (options.checkpoint) done = load_checkpoint(*options.checkpoint, configs);

    ComboTrainer trainer = options.trainer;
    if (!trainer) {
        trainer = [&](std::size_t, const TrainConfig& cfg) {
            FitResult f = fit(spec, train, val, cfg);
            ComboOutcome o;
            o.val_accuracy = f.history.empty() ? 0.0 : f.history.back().val_accuracy;
            o.history = std::move(f.history);
            return o;
        };
    }

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < configs.size(); ++i)
        if (!done.count(i)) pending.push_back(i);

    std::ofstream log;
    if (options.checkpoint) {
        log.open(*options.checkpoint, std::ios::app);
        if (!log) throw StorageError("cannot open checkpoint " + options.checkpoint->string());
    }
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors;

    auto worker = [&] {
        while (true) {
            const std::size_t slot = next.fetch_add(1);
            if (slot >= pending.size()) return;
            const std::size_t combo = pending[slot];
            GridResult r;
            r.combo = combo;
            r.config = configs[combo];
            const auto t0 = std::chrono::steady_clock::now();
            try {
                ComboOutcome o = trainer(combo, r.config);
                r.val_accuracy = o.val_accuracy;
                r.history = std::move(o.history);
            } catch (const TrainingError& e) {
                r.failed = true;
                r.error = e.what();
            } catch (const NumericError& e) {
                r.failed = true;
                r.error = e.what();
            } catch (...) {
                std::lock_guard lock(mu);
                errors.push_back(std::current_exception());
                return;
            }
            r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

            std::lock_guard lock(mu);
            if (log.is_open()) {
                log << grid_result_to_line(r) << '\n';
                log.flush();
            }
            if (options.on_result) options.on_result(r);
            done.emplace(combo, std::move(r));
        }
    };

    const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, pending.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    if (!errors.empty()) std::rethrow_exception(errors.front());

    std::vector<GridResult> results;
    for (auto& [combo, r] : done) results.push_back(std::move(r));
    std::stable_sort(results.begin(), results.end(), [](const GridResult& a, const GridResult& b) {
        return a.val_accuracy > b.val_accuracy;
    });
    return results;
}

template ParameterSet<float> init_params<float>(const ModelSpec&, InitKind, std::uint64_t);
template ParameterSet<double> init_params<double>(const ModelSpec&, InitKind, std::uint64_t);
template void optimizer_step<float>(OptimizerState<float>&, const std::vector<ParamView<float>>&,
                                    const std::vector<ParamView<float>>&, double);
template void optimizer_step<double>(OptimizerState<double>&, const std::vector<ParamView<double>>&,
                                     const std::vector<ParamView<double>>&, double);

}  // namespace huruf
