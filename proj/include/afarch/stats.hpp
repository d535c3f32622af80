#pragma once

#include <afarch/random.hpp>

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace afarch {

/// Order-statistic median; the mean of the two central values for even
/// sizes. Throws std::invalid_argument on empty input.
double median(std::span<const double> xs);

struct PermutationTestResult {
    double observed = 0.0;  // |median(a) - median(b)|
    double p_value = 1.0;
    int rounds = 0;
    int exceed_count = 0;
};

inline constexpr int kPermutationRounds = 10000;

/// Two-sided Monte-Carlo permutation test on the absolute difference of
/// medians: p = (1 + #{round statistic >= observed}) / (rounds + 1).
PermutationTestResult permutation_test_medians(std::span<const double> a, std::span<const double> b,
                                               int rounds, Rng& rng);

/// "!!" for p < 0.001, "!" for p < 0.05, otherwise empty.
std::string_view significance_markers(double p);

enum class LayerBucket { input = 0, hidden = 1, output = 2 };
std::string_view bucket_name(LayerBucket bucket);

struct FrequencyEntry {
    std::string name;
    int count = 0;
    double frequency = 0.0;
};

/// Entries of each bucket sorted by count descending, then name.
struct FrequencyTable {
    std::array<std::vector<FrequencyEntry>, 3> buckets;
    std::array<int, 3> totals{};

    const std::vector<FrequencyEntry>& bucket(LayerBucket b) const {
        return buckets[static_cast<std::size_t>(b)];
    }
    /// Frequency of `name` in a bucket, 0 when absent.
    double frequency(LayerBucket b, std::string_view name) const;
    std::vector<FrequencyEntry> top(LayerBucket b, std::size_t k) const;
};

/// Position 0 is the input bucket, the last position the output bucket and
/// everything between is pooled as hidden. All architectures must share one
/// length >= 3 (std::invalid_argument otherwise).
FrequencyTable af_frequency_table(const std::vector<std::vector<std::string>>& architectures);

}  // namespace afarch
