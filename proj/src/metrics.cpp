#include "uxprobe/metrics.hpp"

#include "uxprobe/errors.hpp"

#include <algorithm>
#include <cmath>

namespace uxprobe::metrics {

SusResponses SusResponses::from_items(const std::vector<int>& items) {
    if (items.size() != 10) {
        throw ValidationError("SUS responses must have exactly 10 items, got " +
                              std::to_string(items.size()));
    }
    std::array<int, 10> arr{};
    std::copy(items.begin(), items.end(), arr.begin());
    return from_items(arr);
}

SusResponses SusResponses::from_items(const std::array<int, 10>& items) {
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i] < 1 || items[i] > 5) {
            throw ValidationError("SUS item " + std::to_string(i + 1) + " out of range [1,5]: " +
                                  std::to_string(items[i]));
        }
    }
    SusResponses r;
    r.items_ = items;
    return r;
}

SusScore SusScore::from_value(double value) {
    if (!(value >= 0.0 && value <= 100.0)) {
        throw ValidationError("SUS score out of range [0,100]: " + std::to_string(value));
    }
    return SusScore(static_cast<std::int64_t>(std::llround(value * 1000.0)));
}

SusScore SusScore::from_milli(std::int64_t milli) {
    if (milli < 0 || milli > 100000) {
        throw ValidationError("SUS score (milli) out of range: " + std::to_string(milli));
    }
    return SusScore(milli);
}

std::string_view grade_label(Grade g) {
    switch (g) {
        case Grade::APlus: return "A+";
        case Grade::A: return "A";
        case Grade::AMinus: return "A-";
        case Grade::BPlus: return "B+";
        case Grade::B: return "B";
        case Grade::BMinus: return "B-";
        case Grade::CPlus: return "C+";
        case Grade::C: return "C";
        case Grade::CMinus: return "C-";
        case Grade::D: return "D";
        case Grade::F: return "F";
    }
    return "?";
}

std::string_view step_class_label(StepClass c) {
    switch (c) {
        case StepClass::success: return "success";
        case StepClass::neutral: return "neutral";
        case StepClass::friction: return "friction";
    }
    return "?";
}

SeqRating SeqRating::of(int value) {
    if (value < 1 || value > 7) {
        throw ValidationError("SEQ rating out of range [1,7]: " + std::to_string(value));
    }
    return SeqRating(value);
}

SusScore compute_sus(const SusResponses& responses) {
    // Raw sum is an integer in [0,40]; the 2.5 multiplier becomes *2500 in
    // thousandths, keeping the score exact.
    std::int64_t raw = 0;
    for (std::size_t n = 1; n <= 10; ++n) {
        int q = responses.item(n);
        raw += (n % 2 == 1) ? (q - 1) : (5 - q);
    }
    return SusScore::from_milli(raw * 2500);
}

namespace {

struct GradeBand {
    std::int64_t lower_milli;  // inclusive lower bound
    Grade grade;
    int pct_lo;
    int pct_hi;
};

// Ascending lower bounds; each band is [lower, next lower).
constexpr GradeBand kBands[] = {
    {0, Grade::F, 0, 14},        {51700, Grade::D, 15, 34},   {62700, Grade::CMinus, 35, 40},
    {65000, Grade::C, 41, 59},   {71100, Grade::CPlus, 60, 64}, {72600, Grade::BMinus, 65, 69},
    {74100, Grade::B, 70, 79},   {77200, Grade::BPlus, 80, 84}, {78900, Grade::AMinus, 85, 89},
    {80800, Grade::A, 90, 95},   {84100, Grade::APlus, 96, 100},
};

}  // namespace

CgsGrade grade_sus(SusScore score) {
    const GradeBand* band = &kBands[0];
    for (const GradeBand& b : kBands) {
        if (score.milli() >= b.lower_milli) band = &b;
    }
    return CgsGrade{band->grade, band->pct_lo, band->pct_hi};
}

StepClass classify_seq_value(double seq) {
    if (seq >= kSeqSuccessThreshold) return StepClass::success;
    if (seq <= kSeqFrictionThreshold) return StepClass::friction;
    return StepClass::neutral;
}

StepClass classify_step(SeqRating seq) { return classify_seq_value(seq.value()); }

SeqSummary aggregate_seq(const std::vector<SeqRating>& series) {
    if (series.empty()) throw ValidationError("no assessed steps");
    SeqSummary out;
    out.count = series.size();
    long long sum = 0;
    int min_v = 7;
    for (std::size_t i = 0; i < series.size(); ++i) {
        int v = series[i].value();
        sum += v;
        min_v = std::min(min_v, v);
        switch (classify_step(series[i])) {
            case StepClass::success: out.success_steps.push_back(i + 1); break;
            case StepClass::friction: out.friction_steps.push_back(i + 1); break;
            case StepClass::neutral: break;
        }
    }
    out.mean = static_cast<double>(sum) / static_cast<double>(series.size());
    out.min = SeqRating::of(min_v);
    out.good_experience = out.mean >= kGoodExperienceMean;
    return out;
}

}  // namespace uxprobe::metrics
