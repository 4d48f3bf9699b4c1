#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "huruf/data.hpp"
#include "huruf/model.hpp"

namespace huruf {

/// K x K counts; rows are true classes, columns predicted classes.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t classes = 0) : k_(classes), counts_(classes * classes, 0) {}

    std::size_t classes() const { return k_; }
    std::uint64_t& at(std::size_t truth, std::size_t predicted) { return counts_[truth * k_ + predicted]; }
    std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * k_ + predicted]; }

    std::uint64_t total() const;
    std::uint64_t row_sum(std::size_t truth) const;
    std::uint64_t col_sum(std::size_t predicted) const;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t k_;
    std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                          std::size_t classes);

struct ClassMetrics {
    std::string name;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
};

struct MetricAverages {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct ClassReport {
    std::vector<ClassMetrics> classes;
    double accuracy = 0.0;
    MetricAverages macro;
    MetricAverages weighted;
    std::uint64_t total = 0;
};

/// Per-class precision TP/(TP+FP), recall TP/(TP+FN) and F1 = 2PR/(P+R);
/// any zero denominator yields 0. Names default to the class index.
ClassReport class_metrics(const ConfusionMatrix& cm, const std::vector<std::string>& names = {});

/// Eval-mode predictions over ds in dataset order; argmax ties go to the
/// lowest class index.
std::pair<ClassReport, ConfusionMatrix> evaluate_model(const Model<float>& model, const Dataset& ds,
                                                       std::size_t batch_size = 64);

/// Fixed-width table, metrics rounded to 2 decimals, with the accuracy /
/// macro avg / weighted avg footer.
std::string render_report(const ClassReport& report);

nlohmann::json report_to_json(const ClassReport& report, const ConfusionMatrix& cm);
ClassReport report_from_json(const nlohmann::json& j);

/// Header row of predicted class names, then one row per true class.
std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& names);

}  // namespace huruf
