#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "huruf/evaluation.hpp"
#include "huruf/training.hpp"
#include "oracles.hpp"

using namespace huruf;

namespace {

std::vector<std::size_t> draw_labels(std::size_t n, std::size_t k, std::mt19937_64& rng) {
    std::vector<std::size_t> v(n);
    for (auto& x : v) x = rng() % k;
    return v;
}

std::string row_of(const std::string& table, const std::string& label) {
    std::istringstream in(table);
    for (std::string line; std::getline(in, line);)
        if (line.find(label) != std::string::npos) return line;
    return {};
}

}  // namespace

TEST(Metrics, TwoClassPositiveRow) {
    ConfusionMatrix cm(2);
    cm.at(0, 0) = 88;
    cm.at(0, 1) = 12;
    cm.at(1, 1) = 100;
    const auto rep = class_metrics(cm);
    EXPECT_DOUBLE_EQ(rep.classes[0].precision, 1.0);
    EXPECT_DOUBLE_EQ(rep.classes[0].recall, 0.88);
    EXPECT_DOUBLE_EQ(rep.classes[0].f1, 2 * 0.88 / 1.88);
    EXPECT_EQ(rep.classes[0].support, 100u);
}

TEST(Metrics, ZaRowAtTwoDecimals) {
    // 120 test samples per letter; 105 recognised, none borrowed from other letters
    ConfusionMatrix cm(28);
    cm.at(10, 10) = 105;
    cm.at(10, 12) = 15;
    for (std::size_t c = 0; c < 28; ++c)
        if (c != 10) cm.at(c, c) += 120;
    const auto rep = class_metrics(cm, LabelMap::letters().names);
    EXPECT_EQ(rep.classes[10].name, "zain");
    const std::string line = row_of(render_report(rep), "zain");
    EXPECT_NE(line.find("1.00      0.88      0.93"), std::string::npos) << line;
}

TEST(Metrics, HandCountedThreeClass) {
    const std::vector<std::size_t> truth{0, 0, 0, 1, 1, 2, 2, 2, 2};
    const std::vector<std::size_t> pred{0, 0, 1, 1, 2, 2, 2, 0, 2};
    const auto cm = confusion(truth, pred, 3);
    EXPECT_EQ(cm.at(0, 0), 2u);
    EXPECT_EQ(cm.at(0, 1), 1u);
    EXPECT_EQ(cm.at(2, 0), 1u);
    EXPECT_EQ(cm.total(), 9u);
    const auto rep = class_metrics(cm);
    EXPECT_DOUBLE_EQ(rep.classes[0].precision, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(rep.classes[0].recall, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(rep.classes[1].precision, 0.5);
    EXPECT_DOUBLE_EQ(rep.classes[1].recall, 0.5);
    EXPECT_DOUBLE_EQ(rep.classes[2].precision, 0.75);
    EXPECT_DOUBLE_EQ(rep.classes[2].recall, 0.75);
    EXPECT_DOUBLE_EQ(rep.accuracy, 6.0 / 9.0);
}

TEST(Metrics, EmptyInputAndAbsentClasses) {
    const auto rep = class_metrics(confusion(std::vector<std::size_t>{}, std::vector<std::size_t>{}, 4));
    EXPECT_EQ(rep.total, 0u);
    EXPECT_EQ(rep.accuracy, 0.0);
    for (const auto& m : rep.classes) {
        EXPECT_EQ(m.precision, 0.0);
        EXPECT_EQ(m.recall, 0.0);
        EXPECT_EQ(m.f1, 0.0);
    }
    // class 2 never occurs and is never predicted
    const auto r2 = class_metrics(confusion(std::vector<std::size_t>{0, 1}, std::vector<std::size_t>{1, 1}, 3));
    EXPECT_EQ(r2.classes[0].precision, 0.0);
    EXPECT_EQ(r2.classes[2].f1, 0.0);
    EXPECT_EQ(r2.classes[2].support, 0u);
}

TEST(Metrics, PerfectClassifier) {
    std::mt19937_64 rng(4);
    const auto truth = draw_labels(300, 10, rng);
    const auto rep = class_metrics(confusion(truth, truth, 10));
    EXPECT_EQ(rep.accuracy, 1.0);
    for (const auto& m : rep.classes) {
        if (m.support == 0) continue;
        EXPECT_EQ(m.precision, 1.0);
        EXPECT_EQ(m.recall, 1.0);
        EXPECT_EQ(m.f1, 1.0);
    }
}

TEST(Metrics, BruteForceRecount) {
    std::mt19937_64 rng(20221018);
    for (std::size_t k : {2u, 10u, 28u}) {
        const auto truth = draw_labels(1000, k, rng);
        const auto pred = draw_labels(1000, k, rng);
        const auto rep = class_metrics(confusion(truth, pred, k));
        const auto oracle = test::recount(truth, pred, k);
        EXPECT_EQ(rep.accuracy, oracle.accuracy);
        for (std::size_t c = 0; c < k; ++c) {
            EXPECT_EQ(rep.classes[c].precision, oracle.precision[c]);
            EXPECT_EQ(rep.classes[c].recall, oracle.recall[c]);
            EXPECT_EQ(rep.classes[c].f1, oracle.f1[c]);
            EXPECT_EQ(rep.classes[c].support, oracle.support[c]);
        }
    }
}

TEST(Metrics, AccuracyIsSupportWeightedRecallAndBounds) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 2 + rng() % 12;
        const auto truth = draw_labels(1 + rng() % 400, k, rng);
        auto pred = truth;
        for (auto& p : pred)
            if (rng() % 3 == 0) p = rng() % k;
        const auto cm = confusion(truth, pred, k);
        const auto rep = class_metrics(cm);
        EXPECT_NEAR(rep.accuracy, rep.weighted.recall, 1e-12);
        EXPECT_GE(rep.macro.f1, 0.0);
        EXPECT_LE(rep.macro.f1, 1.0);
        std::uint64_t sum = 0;
        for (std::size_t t = 0; t < k; ++t) sum += cm.row_sum(t);
        EXPECT_EQ(sum, truth.size());
    }
}

TEST(Metrics, RelabellingPermutesPerClassMetrics) {
    std::mt19937_64 rng(9);
    const std::size_t k = 6;
    const auto truth = draw_labels(500, k, rng);
    const auto pred = draw_labels(500, k, rng);
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> t2(truth.size()), p2(pred.size());
    for (std::size_t i = 0; i < truth.size(); ++i) t2[i] = perm[truth[i]], p2[i] = perm[pred[i]];
    const auto a = class_metrics(confusion(truth, pred, k));
    const auto b = class_metrics(confusion(t2, p2, k));
    for (std::size_t c = 0; c < k; ++c) {
        EXPECT_EQ(a.classes[c].f1, b.classes[perm[c]].f1);
        EXPECT_EQ(a.classes[c].support, b.classes[perm[c]].support);
    }
    EXPECT_NEAR(a.macro.f1, b.macro.f1, 1e-12);
    EXPECT_EQ(a.accuracy, b.accuracy);
}

TEST(Report, FooterAndSerialisation) {
    const std::vector<std::size_t> truth{0, 1, 1, 2, 2, 2};
    const std::vector<std::size_t> pred{0, 1, 2, 2, 2, 0};
    const auto cm = confusion(truth, pred, 3);
    const auto rep = class_metrics(cm, {"sifr", "wahid", "ithnayn"});
    const std::string text = render_report(rep);
    EXPECT_NE(row_of(text, "Accuracy").find("0.67"), std::string::npos);
    EXPECT_NE(row_of(text, "Macro Avg").find("6"), std::string::npos);
    EXPECT_FALSE(row_of(text, "Weighted Avg").empty());
    EXPECT_NE(row_of(text, "wahid").find("1.00      0.50      0.67"), std::string::npos) << text;

    const auto j = report_to_json(rep, cm);
    const auto back = report_from_json(nlohmann::json::parse(j.dump()));
    ASSERT_EQ(back.classes.size(), 3u);
    for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_EQ(back.classes[c].name, rep.classes[c].name);
        EXPECT_EQ(back.classes[c].f1, rep.classes[c].f1);
        EXPECT_EQ(back.classes[c].support, rep.classes[c].support);
    }
    EXPECT_EQ(back.accuracy, rep.accuracy);
    EXPECT_EQ(back.macro.f1, rep.macro.f1);
    EXPECT_EQ(back.weighted.precision, rep.weighted.precision);

    EXPECT_EQ(confusion_csv(cm, {"sifr", "wahid", "ithnayn"}),
              "true\\predicted,sifr,wahid,ithnayn\nsifr,1,0,0\nwahid,0,1,1\nithnayn,1,0,2\n");
}

TEST(EvaluateModel, MemorisedSetScoresPerfectly) {
    const Dataset ds = test::make_blobs(12, 16, 3, 5);
    ModelSpec spec = ModelSpec::with_head(3, 16);
    spec.filters = {4, 6, 8, 8};
    TrainConfig cfg;
    cfg.batch_size = 1;
    cfg.epochs = 150;
    const auto fitted = fit(spec, ds, ds, cfg);
    Model<float> model(spec, fitted.params);
    const auto [rep, cm] = evaluate_model(model, ds, 5);
    EXPECT_EQ(rep.accuracy, 1.0);
    EXPECT_EQ(cm.total(), 12u);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(cm.at(c, c), 4u);
    EXPECT_EQ(rep.classes[1].name, "blob1");
}

TEST(EvaluateModel, HeadMismatch) {
    const Dataset ds = test::make_blobs(4, 16, 3, 5);
    ModelSpec spec = ModelSpec::with_head(10, 16);
    spec.filters = {2, 2, 2, 2};
    Model<float> model(spec, init_params<float>(spec, InitKind::uniform, 1));
    EXPECT_THROW(evaluate_model(model, ds), ShapeError);
}
