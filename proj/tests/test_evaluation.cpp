#include "stagcn/evaluation.hpp"

#include "test_util.hpp"

#include <doctest.h>

using namespace stagcn;

namespace {

std::vector<GraphSnapshot> labeled_snapshots(std::mt19937_64& rng, int classes, int per_class) {
    std::vector<GraphSnapshot> out;
    for (int c = 0; c < classes; ++c) {
        for (int k = 0; k < per_class; ++k) {
            WindowSegment w;
            w.samples = testing::random_matrix(20, 4, rng);
            w.samples.col(0).array() += 2.0 * c;  // class-dependent mean on node 0
            w.label = c;
            out.push_back(build_snapshot(w));
        }
    }
    return out;
}

}  // namespace

TEST_CASE("all predictions correct") {
    const auto r = report_from_predictions({0, 1, 2, 2}, {0, 1, 2, 2}, {"normal", "F4", "F9"});
    CHECK(r.per_class_acc == std::vector<double>{100.0, 100.0, 100.0});
    CHECK(r.macro_average == 100.0);
}

TEST_CASE("hand-counted two-class report") {
    std::vector<int> truth, pred;
    for (int i = 0; i < 10; ++i) {
        truth.push_back(0);
        pred.push_back(i < 9 ? 0 : 1);
    }
    for (int i = 0; i < 10; ++i) {
        truth.push_back(1);
        pred.push_back(i < 7 ? 1 : 0);
    }
    const auto r = report_from_predictions(truth, pred, {"a", "b"});
    CHECK(r.per_class_acc[0] == doctest::Approx(90.0));
    CHECK(r.per_class_acc[1] == doctest::Approx(70.0));
    CHECK(r.macro_average == doctest::Approx(80.0));
    CHECK(r.confusion == std::vector<std::vector<std::size_t>>{{9, 1}, {3, 7}});
    CHECK(r.counts == std::vector<std::size_t>{10, 10});
}

TEST_CASE("text report mirrors the per-fault table layout") {
    const auto r = report_from_predictions({0, 1, 2}, {0, 1, 1}, {"F4", "F9", "F11"});
    const auto text = r.to_text();
    CHECK(text.find("Ave.") != std::string::npos);
    CHECK(text.find("F4") != std::string::npos);
    CHECK(text.find("F11") != std::string::npos);
    // Single-row layout: class columns then Ave. on the header line.
    const auto header = text.find("Method");
    REQUIRE(header != std::string::npos);
    const auto line = text.substr(header, text.find('\n', header) - header);
    CHECK(line.find("F4") < line.find("F9"));
    CHECK(line.find("F9") < line.find("F11"));
    CHECK(line.find("F11") < line.find("Ave."));
    CHECK(text.find("This method") != std::string::npos);
    CHECK(text.find("66.7") != std::string::npos);
}

TEST_CASE("classes without samples are excluded from the average") {
    const auto r = report_from_predictions({0, 0, 2}, {0, 1, 2}, {"a", "b", "c"});
    CHECK(r.excluded == std::vector<bool>{false, true, false});
    CHECK(r.macro_average == doctest::Approx(75.0));
    CHECK(r.to_text().find("excluded") != std::string::npos);
}

TEST_CASE("evaluate error paths") {
    const auto model = init_model(3, 4, 2, 0);
    CHECK_THROWS_AS(evaluate(model, {}), DataError);
    std::mt19937_64 rng(1);
    auto snaps = labeled_snapshots(rng, 2, 2);
    snaps[0].label = 2;
    CHECK_THROWS_AS(evaluate(model, snaps), DataError);
    CHECK_THROWS_AS(evaluate(model, labeled_snapshots(rng, 2, 1), {"only-one"}), DataError);
}

TEST_CASE("property: confusion conservation and accuracy bounds") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        const int c = static_cast<int>(rng() % 4 + 2);
        const auto model = init_model(3, 6, c, rng());
        const auto snaps = labeled_snapshots(rng, c, static_cast<int>(rng() % 5 + 1));
        const auto r = evaluate(model, snaps);
        std::size_t total = 0;
        for (std::size_t i = 0; i < r.confusion.size(); ++i) {
            std::size_t row = 0;
            for (auto cell : r.confusion[i]) row += cell;
            CHECK(row == r.counts[i]);
            total += row;
        }
        CHECK(total == snaps.size());
        const auto [lo, hi] = std::minmax_element(r.per_class_acc.begin(), r.per_class_acc.end());
        CHECK(*lo >= 0.0);
        CHECK(*hi <= 100.0);
        CHECK(r.macro_average >= *lo - 1e-12);
        CHECK(r.macro_average <= *hi + 1e-12);
        CHECK_NOTHROW(validate_report_json(r.to_json()));
        CHECK(evaluate(model, snaps).to_json().dump() == r.to_json().dump());
        CHECK(evaluate(model, snaps).to_text() == r.to_text());
    }
}

TEST_CASE("report schema validation catches broken documents") {
    const auto good = report_from_predictions({0, 1}, {0, 0}, {"a", "b"}).to_json();
    CHECK_NOTHROW(validate_report_json(good));
    auto missing = good;
    missing.erase("confusion");
    CHECK_THROWS_WITH_AS(validate_report_json(missing), doctest::Contains("confusion"), DataError);
    auto wrong = good;
    wrong["counts"] = {5, 5};
    CHECK_THROWS_AS(validate_report_json(wrong), DataError);
    auto mistyped = good;
    mistyped["macro_average"] = "high";
    CHECK_THROWS_AS(validate_report_json(mistyped), DataError);
}

TEST_CASE("class scaling experiment") {
    std::mt19937_64 rng(3);
    const auto all_train = labeled_snapshots(rng, 4, 12);
    const auto all_test = labeled_snapshots(rng, 4, 6);
    auto subset = [](const std::vector<GraphSnapshot>& s, int classes) {
        std::vector<GraphSnapshot> out;
        for (const auto& x : s) {
            if (x.label < classes) out.push_back(x);
        }
        return out;
    };
    const std::vector<std::string> names{"normal", "f1", "f2", "f3"};
    std::vector<ScalingSetting> settings{
        {{names.begin(), names.begin() + 2}, subset(all_train, 2), subset(all_test, 2)},
        {names, all_train, all_test},
    };
    const ModelFactory factory = [](const ScalingSetting& s) {
        auto model = init_model(3, 8, static_cast<int>(s.class_names.size()), 1);
        TrainingConfig config;
        config.epochs = 20;
        fit(model, s.train, config);
        return model;
    };

    const auto result = class_scaling_experiment(factory, settings);
    REQUIRE(result.reports.size() == 2);
    CHECK(result.reports[0].class_names.size() == 2);
    CHECK(result.reports[1].class_names.size() == 4);
    CHECK(result.summary.find("trend") != std::string::npos);
    CHECK((result.trend == "decreasing" || result.trend == "increasing" || result.trend == "flat"));

    const auto again = class_scaling_experiment(factory, settings);
    for (std::size_t i = 0; i < 2; ++i) CHECK(again.reports[i].to_json().dump() == result.reports[i].to_json().dump());

    CHECK_THROWS_AS(class_scaling_experiment(factory, {settings[0]}), DataError);
    CHECK_THROWS_AS(class_scaling_experiment(factory, {settings[1], settings[0]}), DataError);
    auto renamed = settings;
    renamed[1].class_names[0] = "other";
    CHECK_THROWS_AS(class_scaling_experiment(factory, renamed), DataError);
}
