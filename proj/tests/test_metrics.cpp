#include "uxprobe/errors.hpp"
#include "uxprobe/metrics.hpp"

#include <doctest.h>

#include <array>
#include <random>

using namespace uxprobe;
using namespace uxprobe::metrics;

namespace {

// Independent oracle: the published formula written out literally, summing
// the five odd-item and five even-item contributions in floating point.
// Kept separate from the implementation on purpose.
double sus_oracle(const std::array<int, 10>& q) {
    double odd = 0.0, even = 0.0;
    for (int n = 1; n <= 5; ++n) {
        odd += q[2 * n - 2] - 1;   // Q_{2n-1}
        even += 5 - q[2 * n - 1];  // Q_{2n}
    }
    return 2.5 * (odd + even);
}

std::array<int, 10> random_responses(std::mt19937& rng) {
    std::uniform_int_distribution<int> d(1, 5);
    std::array<int, 10> q{};
    for (int& v : q) v = d(rng);
    return q;
}

}  // namespace

TEST_CASE("compute_sus trivial anchors") {
    CHECK(compute_sus(SusResponses::from_items(std::array<int, 10>{3, 3, 3, 3, 3, 3, 3, 3, 3, 3}))
              .value() == doctest::Approx(50.0));
    CHECK(compute_sus(SusResponses::from_items(std::array<int, 10>{5, 1, 5, 1, 5, 1, 5, 1, 5, 1}))
              .value() == doctest::Approx(100.0));
    CHECK(compute_sus(SusResponses::from_items(std::array<int, 10>{1, 5, 1, 5, 1, 5, 1, 5, 1, 5}))
              .value() == doctest::Approx(0.0));
}

TEST_CASE("compute_sus matches the direct-summation oracle exactly") {
    std::mt19937 rng(20260809);
    for (int i = 0; i < 1000; ++i) {
        std::array<int, 10> q = random_responses(rng);
        SusScore got = compute_sus(SusResponses::from_items(q));
        CHECK(got.value() == sus_oracle(q));  // exact: both are multiples of 2.5
        CHECK(got.is_multiple_of_2_5());
        CHECK(got.value() >= 0.0);
        CHECK(got.value() <= 100.0);
    }
}

TEST_CASE("compute_sus exhaustive slice: item 1 varies, items 2-10 fixed at 3") {
    // Hand computation: odd sum = (q-1)+2+2+2+2, even sum = 2*5,
    // so SUS = 2.5 * (q + 17).
    const double expected[] = {45.0, 47.5, 50.0, 52.5, 55.0};
    for (int q = 1; q <= 5; ++q) {
        std::array<int, 10> items{q, 3, 3, 3, 3, 3, 3, 3, 3, 3};
        CHECK(compute_sus(SusResponses::from_items(items)).value() == expected[q - 1]);
    }
}

TEST_CASE("compute_sus monotone per item") {
    std::mt19937 rng(99);
    for (int i = 0; i < 200; ++i) {
        std::array<int, 10> q = random_responses(rng);
        double base = compute_sus(SusResponses::from_items(q)).value();
        for (int idx = 0; idx < 10; ++idx) {
            if (q[idx] == 5) continue;
            std::array<int, 10> bumped = q;
            bumped[idx] += 1;
            double after = compute_sus(SusResponses::from_items(bumped)).value();
            if (idx % 2 == 0) {
                CHECK(after >= base);  // odd item (1-based): non-decreasing
            } else {
                CHECK(after <= base);  // even item: non-increasing
            }
        }
    }
}

TEST_CASE("SusResponses validation names the offending index") {
    CHECK_THROWS_WITH_AS(SusResponses::from_items(std::vector<int>{3, 3, 3}),
                         doctest::Contains("exactly 10"), ValidationError);
    CHECK_THROWS_WITH_AS(
        SusResponses::from_items(std::array<int, 10>{3, 3, 3, 3, 3, 3, 6, 3, 3, 3}),
        doctest::Contains("item 7"), ValidationError);
    CHECK_THROWS_AS(SusResponses::from_items(std::array<int, 10>{0, 3, 3, 3, 3, 3, 3, 3, 3, 3}),
                    ValidationError);
}

TEST_CASE("grade_sus reproduces the curved grading scale") {
    struct Row {
        double lower;
        double interior;
        const char* grade;
        int lo, hi;
    };
    // Each published row, probed at its lower bound and an interior point.
    const Row rows[] = {
        {84.1, 92.5, "A+", 96, 100}, {80.8, 82.5, "A", 90, 95},  {78.9, 80.0, "A-", 85, 89},
        {77.2, 78.0, "B+", 80, 84},  {74.1, 75.0, "B", 70, 79},  {72.6, 73.0, "B-", 65, 69},
        {71.1, 72.0, "C+", 60, 64},  {65.0, 70.0, "C", 41, 59},  {62.7, 63.0, "C-", 35, 40},
        {51.7, 55.0, "D", 15, 34},   {0.0, 40.0, "F", 0, 14},
    };
    for (const Row& r : rows) {
        for (double probe : {r.lower, r.interior}) {
            CgsGrade g = grade_sus(SusScore::from_value(probe));
            CHECK(g.label() == r.grade);
            CHECK(g.percentile_lo == r.lo);
            CHECK(g.percentile_hi == r.hi);
        }
    }
}

TEST_CASE("grade_sus case-study anchors") {
    CHECK(grade_sus(SusScore::from_value(55.0)).label() == "D");
    CHECK(grade_sus(SusScore::from_value(87.5)).label() == "A+");
    CgsGrade c = grade_sus(SusScore::from_value(65.0));
    CHECK(c.label() == "C");
    CHECK(c.percentile_lo == 41);
    CHECK(c.percentile_hi == 59);
    CHECK(grade_sus(SusScore::from_value(100.0)).label() == "A+");
}

TEST_CASE("grade_sus closes the published gaps deterministically") {
    // 84.0 is graded A, 84.05 still A (the A+ band starts at 84.1 inclusive);
    // 62.65 falls in D's half-open band.
    CHECK(grade_sus(SusScore::from_value(84.0)).label() == "A");
    CHECK(grade_sus(SusScore::from_value(84.05)).label() == "A");
    CHECK(grade_sus(SusScore::from_value(84.1)).label() == "A+");
    CHECK(grade_sus(SusScore::from_value(62.65)).label() == "D");
    CHECK(grade_sus(SusScore::from_value(51.69)).label() == "F");
    CHECK(grade_sus(SusScore::from_value(51.7)).label() == "D");
}

TEST_CASE("grade_sus is monotone in the score") {
    const Grade order[] = {Grade::F,     Grade::D,      Grade::CMinus, Grade::C,
                           Grade::CPlus, Grade::BMinus, Grade::B,      Grade::BPlus,
                           Grade::AMinus, Grade::A,     Grade::APlus};
    auto rank = [&](Grade g) {
        for (std::size_t i = 0; i < std::size(order); ++i) {
            if (order[i] == g) return static_cast<int>(i);
        }
        return -1;
    };
    int prev = -1;
    for (int milli = 0; milli <= 100000; milli += 100) {
        int r = rank(grade_sus(SusScore::from_milli(milli)).grade);
        CHECK(r >= prev);
        prev = r;
    }
}

TEST_CASE("SusScore range validation") {
    CHECK_THROWS_AS(SusScore::from_value(-0.1), ValidationError);
    CHECK_THROWS_AS(SusScore::from_value(100.5), ValidationError);
}

TEST_CASE("classify_step thresholds") {
    CHECK(classify_step(SeqRating::of(7)) == StepClass::success);
    CHECK(classify_step(SeqRating::of(3)) == StepClass::friction);
    CHECK(classify_step(SeqRating::of(5)) == StepClass::neutral);
    CHECK(classify_step(SeqRating::of(6)) == StepClass::neutral);  // 6 < 6.5
    CHECK(classify_step(SeqRating::of(4)) == StepClass::neutral);  // 4 > 3.3
    CHECK(classify_step(SeqRating::of(1)) == StepClass::friction);
    // Real-valued thresholds for fractional aggregates.
    CHECK(classify_seq_value(6.5) == StepClass::success);
    CHECK(classify_seq_value(6.49) == StepClass::neutral);
    CHECK(classify_seq_value(3.3) == StepClass::friction);
    CHECK(classify_seq_value(3.31) == StepClass::neutral);
}

TEST_CASE("SeqRating validation") {
    CHECK_THROWS_AS(SeqRating::of(0), ValidationError);
    CHECK_THROWS_AS(SeqRating::of(8), ValidationError);
}

namespace {

std::vector<SeqRating> ratings(std::initializer_list<int> values) {
    std::vector<SeqRating> out;
    for (int v : values) out.push_back(SeqRating::of(v));
    return out;
}

}  // namespace

TEST_CASE("aggregate_seq on the 14-step case-study series") {
    auto series = ratings({7, 7, 7, 1, 2, 6, 7, 6, 1, 1, 1, 7, 6, 3});
    SeqSummary s = aggregate_seq(series);
    CHECK(s.count == 14);
    CHECK(s.mean == doctest::Approx(62.0 / 14.0).epsilon(1e-12));
    CHECK(s.min.value() == 1);
    CHECK(s.friction_steps == std::vector<std::size_t>{4, 5, 9, 10, 11, 14});
    CHECK(s.success_steps == std::vector<std::size_t>{1, 2, 3, 7, 12});
    CHECK_FALSE(s.good_experience);
}

TEST_CASE("aggregate_seq on the 4-step guideline-discovery series") {
    SeqSummary s = aggregate_seq(ratings({7, 5, 6, 6}));
    CHECK(s.count == 4);
    CHECK(s.mean == doctest::Approx(6.0));
    CHECK(s.good_experience);
    CHECK(s.friction_steps.empty());
}

TEST_CASE("aggregate_seq uniform best case") {
    SeqSummary s = aggregate_seq(ratings({7, 7, 7, 7}));
    CHECK(s.mean == doctest::Approx(7.0));
    CHECK(s.friction_steps.empty());
    CHECK(s.success_steps == std::vector<std::size_t>{1, 2, 3, 4});
    CHECK(s.good_experience);
}

TEST_CASE("aggregate_seq rejects an empty series") {
    CHECK_THROWS_WITH_AS(aggregate_seq({}), "no assessed steps", ValidationError);
}

TEST_CASE("aggregate_seq boundary: mean exactly at the good-experience threshold") {
    SeqSummary s = aggregate_seq(ratings({5, 6}));  // mean 5.5
    CHECK(s.good_experience);
    SeqSummary below = aggregate_seq(ratings({5, 5, 6}));  // mean 5.33…
    CHECK_FALSE(below.good_experience);
}

TEST_CASE("classify_step and aggregate_seq agree") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> len(1, 30), val(1, 7);
    for (int i = 0; i < 200; ++i) {
        std::vector<SeqRating> series;
        int n = len(rng);
        for (int j = 0; j < n; ++j) series.push_back(SeqRating::of(val(rng)));
        SeqSummary s = aggregate_seq(series);
        for (std::size_t idx : s.friction_steps) {
            CHECK(series[idx - 1].value() <= 3);
            CHECK(classify_step(series[idx - 1]) == StepClass::friction);
        }
        for (std::size_t idx : s.success_steps) {
            CHECK(series[idx - 1].value() == 7);
            CHECK(classify_step(series[idx - 1]) == StepClass::success);
        }
        std::size_t neutral = s.count - s.friction_steps.size() - s.success_steps.size();
        for (std::size_t j = 0; j < series.size(); ++j) {
            if (classify_step(series[j]) == StepClass::neutral) {
                CHECK(neutral > 0);
                --neutral;
            }
        }
        CHECK(neutral == 0);
    }
}
