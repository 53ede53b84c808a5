#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace uxprobe::metrics {

/// The ten Likert answers (1..5) to the System Usability Scale items, in
/// questionnaire order. Item numbering is 1-based everywhere.
class SusResponses {
public:
    static SusResponses from_items(const std::vector<int>& items);
    static SusResponses from_items(const std::array<int, 10>& items);

    /// 1-based accessor.
    int item(std::size_t n) const { return items_.at(n - 1); }
    const std::array<int, 10>& items() const { return items_; }

private:
    SusResponses() = default;
    std::array<int, 10> items_{};
};

/// A SUS score in [0, 100]. Held as an integer count of thousandths so the
/// grading comparisons and report rendering are decimal-exact and bit-stable
/// across platforms.
class SusScore {
public:
    static SusScore from_value(double value);
    static SusScore from_milli(std::int64_t milli);

    double value() const { return static_cast<double>(milli_) / 1000.0; }
    std::int64_t milli() const { return milli_; }

    /// True when the score is an integer multiple of 2.5 (always holds for a
    /// score computed from a single response set).
    bool is_multiple_of_2_5() const { return milli_ % 2500 == 0; }

private:
    explicit SusScore(std::int64_t milli) : milli_(milli) {}
    std::int64_t milli_ = 0;
};

enum class Grade { APlus, A, AMinus, BPlus, B, BMinus, CPlus, C, CMinus, D, F };

std::string_view grade_label(Grade g);

/// A Sauro-Lewis curved-grading-scale row: letter grade plus the percentile
/// range of systems scoring in that band.
struct CgsGrade {
    Grade grade;
    int percentile_lo;
    int percentile_hi;

    std::string_view label() const { return grade_label(grade); }
    bool operator==(const CgsGrade&) const = default;
};

/// Single Ease Question rating on the 1..7 scale.
class SeqRating {
public:
    static SeqRating of(int value);
    int value() const { return value_; }
    bool operator==(const SeqRating&) const = default;

private:
    explicit SeqRating(int v) : value_(v) {}
    int value_ = 1;
};

enum class StepClass { success, neutral, friction };

std::string_view step_class_label(StepClass c);

struct SeqSummary {
    double mean = 0.0;
    SeqRating min = SeqRating::of(1);
    std::size_t count = 0;
    std::vector<std::size_t> friction_steps;  // 1-based step indices
    std::vector<std::size_t> success_steps;   // 1-based step indices
    bool good_experience = false;
};

/// SUS = 2.5 * (sum over odd items of (Q-1) + sum over even items of (5-Q)).
/// Pure; throws ValidationError via SusResponses construction for bad input.
SusScore compute_sus(const SusResponses& responses);

/// Map a score onto the curved grading scale. Bands are half-open
/// [lower, next_lower) so the published table's numeric gaps cannot leave a
/// score ungraded; the top band is closed at 100.
CgsGrade grade_sus(SusScore score);

/// Step classification thresholds: success at >= 6.5, friction at <= 3.3.
/// Kept as real comparisons so fractional aggregate ratings classify
/// consistently with integer ones.
StepClass classify_seq_value(double seq);
StepClass classify_step(SeqRating seq);

/// Aggregate a session's per-step ratings. good_experience is mean >= 5.5.
/// Throws ValidationError on an empty series ("no assessed steps").
SeqSummary aggregate_seq(const std::vector<SeqRating>& series);

inline constexpr double kSeqSuccessThreshold = 6.5;
inline constexpr double kSeqFrictionThreshold = 3.3;
inline constexpr double kGoodExperienceMean = 5.5;

}  // namespace uxprobe::metrics
