#include "huruf/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace huruf {

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
    std::uint64_t t = 0;
    for (std::size_t p = 0; p < k_; ++p) t += at(truth, p);
    return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t predicted) const {
    std::uint64_t t = 0;
    for (std::size_t r = 0; r < k_; ++r) t += at(r, predicted);
    return t;
}

ConfusionMatrix confusion(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                          std::size_t classes) {
    if (truth.size() != predicted.size()) {
        throw ShapeError("confusion: " + std::to_string(truth.size()) + " true labels vs " +
                         std::to_string(predicted.size()) + " predictions");
    }
    ConfusionMatrix cm(classes);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= classes || predicted[i] >= classes) {
            throw LabelError("confusion: sample " + std::to_string(i) + " has a label outside [0, " +
                             std::to_string(classes) + ")");
        }
        ++cm.at(truth[i], predicted[i]);
    }
    return cm;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1_score(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

ClassReport class_metrics(const ConfusionMatrix& cm, const std::vector<std::string>& names) {
    const std::size_t k = cm.classes();
    ClassReport rep;
    rep.total = cm.total();
    std::uint64_t trace = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const std::uint64_t tp = cm.at(c, c);
        trace += tp;
        ClassMetrics m;
        m.name = c < names.size() ? names[c] : std::to_string(c);
        m.support = cm.row_sum(c);
        m.precision = ratio(tp, cm.col_sum(c));
        m.recall = ratio(tp, m.support);
        m.f1 = f1_score(m.precision, m.recall);
        rep.classes.push_back(std::move(m));
    }
    rep.accuracy = ratio(trace, rep.total);
    if (k > 0) {
        for (const auto& m : rep.classes) {
            rep.macro.precision += m.precision;
            rep.macro.recall += m.recall;
            rep.macro.f1 += m.f1;
            const double w = static_cast<double>(m.support);
            rep.weighted.precision += w * m.precision;
            rep.weighted.recall += w * m.recall;
            rep.weighted.f1 += w * m.f1;
        }
        rep.macro.precision /= static_cast<double>(k);
        rep.macro.recall /= static_cast<double>(k);
        rep.macro.f1 /= static_cast<double>(k);
        const double total = static_cast<double>(rep.total);
        if (rep.total > 0) {
            rep.weighted.precision /= total;
            rep.weighted.recall /= total;
            rep.weighted.f1 /= total;
        }
    }
    return rep;
}

std::pair<ClassReport, ConfusionMatrix> evaluate_model(const Model<float>& model, const Dataset& ds,
                                                       std::size_t batch_size) {
    const std::size_t k = model.spec().num_classes;
    if (ds.classes.class_count() != k) {
        throw ShapeError("model head has " + std::to_string(k) + " classes but the dataset has " +
                         std::to_string(ds.classes.class_count()));
    }
    std::vector<std::size_t> predicted(ds.size());
    for (std::size_t start = 0; start < ds.size(); start += batch_size) {
        const std::size_t end = std::min(ds.size(), start + batch_size);
        std::vector<std::size_t> idx(end - start);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
        const Matrix<float> probs = model.predict(gather(ds, idx).x);
        for (std::size_t r = 0; r < probs.rows(); ++r) predicted[start + r] = argmax(probs.row(r));
    }
    ConfusionMatrix cm = confusion(ds.labels, predicted, k);
    ClassReport rep = class_metrics(cm, ds.classes.names);
    return {std::move(rep), std::move(cm)};
}

std::string render_report(const ClassReport& report) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-6s %-12s %9s %9s %9s %9s\n", "Class", "Label", "Precision", "Recall",
                  "F1-score", "Support");
    out << line;
    for (std::size_t c = 0; c < report.classes.size(); ++c) {
        const auto& m = report.classes[c];
        std::snprintf(line, sizeof line, "%-6zu %-12s %9.2f %9.2f %9.2f %9llu\n", c, m.name.c_str(), m.precision,
                      m.recall, m.f1, static_cast<unsigned long long>(m.support));
        out << line;
    }
    const auto total = static_cast<unsigned long long>(report.total);
    std::snprintf(line, sizeof line, "%-19s %9s %9s %9.2f %9llu\n", "Accuracy", "", "", report.accuracy, total);
    out << line;
    std::snprintf(line, sizeof line, "%-19s %9.2f %9.2f %9.2f %9llu\n", "Macro Avg", report.macro.precision,
                  report.macro.recall, report.macro.f1, total);
    out << line;
    std::snprintf(line, sizeof line, "%-19s %9.2f %9.2f %9.2f %9llu\n", "Weighted Avg", report.weighted.precision,
                  report.weighted.recall, report.weighted.f1, total);
    out << line;
    return out.str();
}

nlohmann::json report_to_json(const ClassReport& report, const ConfusionMatrix& cm) {
    nlohmann::json j;
    nlohmann::json classes = nlohmann::json::array();
    for (std::size_t c = 0; c < report.classes.size(); ++c) {
        const auto& m = report.classes[c];
        classes.push_back({{"index", c},
                           {"name", m.name},
                           {"precision", m.precision},
                           {"recall", m.recall},
                           {"f1", m.f1},
                           {"support", m.support}});
    }
    j["classes"] = std::move(classes);
    j["accuracy"] = report.accuracy;
    j["total"] = report.total;
    j["macro_avg"] = {{"precision", report.macro.precision}, {"recall", report.macro.recall}, {"f1", report.macro.f1}};
    j["weighted_avg"] = {{"precision", report.weighted.precision},
                         {"recall", report.weighted.recall},
                         {"f1", report.weighted.f1}};
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t t = 0; t < cm.classes(); ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t p = 0; p < cm.classes(); ++p) row.push_back(cm.at(t, p));
        rows.push_back(std::move(row));
    }
    j["confusion"] = std::move(rows);
    return j;
}

ClassReport report_from_json(const nlohmann::json& j) {
    ClassReport r;
    for (const auto& c : j.at("classes")) {
        r.classes.push_back({c.at("name").get<std::string>(), c.at("precision").get<double>(),
                             c.at("recall").get<double>(), c.at("f1").get<double>(),
                             c.at("support").get<std::uint64_t>()});
    }
    r.accuracy = j.at("accuracy").get<double>();
    r.total = j.at("total").get<std::uint64_t>();
    const auto& ma = j.at("macro_avg");
    r.macro = {ma.at("precision").get<double>(), ma.at("recall").get<double>(), ma.at("f1").get<double>()};
    const auto& wa = j.at("weighted_avg");
    r.weighted = {wa.at("precision").get<double>(), wa.at("recall").get<double>(), wa.at("f1").get<double>()};
    return r;
}

std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& names) {
    auto name = [&](std::size_t c) { return c < names.size() ? names[c] : std::to_string(c); };
    std::ostringstream out;
    out << "true\\predicted";
    for (std::size_t p = 0; p < cm.classes(); ++p) out << ',' << name(p);
    out << '\n';
    for (std::size_t t = 0; t < cm.classes(); ++t) {
        out << name(t);
        for (std::size_t p = 0; p < cm.classes(); ++p) out << ',' << cm.at(t, p);
        out << '\n';
    }
    return out.str();
}

}  // namespace huruf
