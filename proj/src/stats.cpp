#include <afarch/stats.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace afarch {

double median(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("median of an empty list");
    std::vector<double> v(xs.begin(), xs.end());
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return (lower + upper) / 2.0;
}

PermutationTestResult permutation_test_medians(std::span<const double> a, std::span<const double> b,
                                               int rounds, Rng& rng) {
    if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("permutation test needs >= 2 values per group");
    if (rounds < 1) throw std::invalid_argument("permutation test needs >= 1 round");

    PermutationTestResult result;
    result.rounds = rounds;
    result.observed = std::abs(median(a) - median(b));
    // absorbs rounding in the median averages
    const double threshold = result.observed - 1e-12 * std::max(1.0, result.observed);

    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::span<const double> all(pooled);
    for (int r = 0; r < rounds; ++r) {
        std::shuffle(pooled.begin(), pooled.end(), rng);
        const double stat = std::abs(median(all.first(a.size())) - median(all.subspan(a.size())));
        if (stat >= threshold) ++result.exceed_count;
    }
    result.p_value = (1.0 + result.exceed_count) / (1.0 + rounds);
    return result;
}

std::string_view significance_markers(double p) {
    if (p < 0.001) return "!!";
    if (p < 0.05) return "!";
    return "";
}

std::string_view bucket_name(LayerBucket bucket) {
    switch (bucket) {
    case LayerBucket::input: return "input";
    case LayerBucket::hidden: return "hidden";
    case LayerBucket::output: return "output";
    }
    return "?";
}

double FrequencyTable::frequency(LayerBucket b, std::string_view name) const {
    for (const auto& e : bucket(b))
        if (e.name == name) return e.frequency;
    return 0.0;
}

std::vector<FrequencyEntry> FrequencyTable::top(LayerBucket b, std::size_t k) const {
    const auto& entries = bucket(b);
    return {entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(std::min(k, entries.size()))};
}

FrequencyTable af_frequency_table(const std::vector<std::vector<std::string>>& architectures) {
    if (architectures.empty()) throw std::invalid_argument("frequency table of no architectures");
    const std::size_t L = architectures.front().size();
    if (L < 3) throw std::invalid_argument("frequency table needs architectures of length >= 3");

    std::array<std::map<std::string, int>, 3> counts;
    for (const auto& arch : architectures) {
        if (arch.size() != L) throw std::invalid_argument("architectures of mixed lengths");
        for (std::size_t i = 0; i < L; ++i) {
            const auto bucket = i == 0 ? LayerBucket::input : (i + 1 == L ? LayerBucket::output : LayerBucket::hidden);
            ++counts[static_cast<std::size_t>(bucket)][arch[i]];
        }
    }

    FrequencyTable table;
    for (std::size_t b = 0; b < 3; ++b) {
        int total = 0;
        for (const auto& [name, c] : counts[b]) total += c;
        table.totals[b] = total;
        auto& entries = table.buckets[b];
        for (const auto& [name, c] : counts[b])
            entries.push_back({name, c, static_cast<double>(c) / static_cast<double>(total)});
        std::stable_sort(entries.begin(), entries.end(),
                         [](const FrequencyEntry& x, const FrequencyEntry& y) { return x.count > y.count; });
    }
    return table;
}

}  // namespace afarch
