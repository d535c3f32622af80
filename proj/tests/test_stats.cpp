#include <afarch/reports.hpp>
#include <afarch/stats.hpp>

#include <doctest.h>

#include <bit>
#include <cmath>

using namespace afarch;

namespace {

// Exact two-sided p over every relabeling that keeps the group sizes.
double enumerated_p(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    const int n = static_cast<int>(pooled.size()), na = static_cast<int>(a.size());
    const double observed = std::abs(median(a) - median(b));
    long total = 0, extreme = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (std::popcount(mask) != na) continue;
        std::vector<double> ga, gb;
        for (int i = 0; i < n; ++i) ((mask >> i) & 1u ? ga : gb).push_back(pooled[static_cast<std::size_t>(i)]);
        ++total;
        extreme += std::abs(median(ga) - median(gb)) >= observed - 1e-12;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("median") {
    CHECK(median(std::vector<double>{3, 1, 2}) == 2.0);
    CHECK(median(std::vector<double>{1, 2, 3, 4}) == 2.5);
    CHECK(median(std::vector<double>{7}) == 7.0);
    CHECK_THROWS_AS(median(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("permutation test: identical groups and the add-one floor") {
    Rng rng(1);
    const std::vector<double> g{1, 2, 3};
    const auto r = permutation_test_medians(g, g, kPermutationRounds, rng);
    CHECK(r.observed == 0.0);
    CHECK(r.p_value == 1.0);
    const auto few = permutation_test_medians(std::vector<double>{0, 0, 0}, std::vector<double>{5, 5, 5}, 10, rng);
    CHECK(few.p_value >= 1.0 / 11.0);
    CHECK(few.rounds == 10);
    CHECK_THROWS(permutation_test_medians(std::vector<double>{1}, g, 10, rng));
}

TEST_CASE("permutation test agrees with exhaustive enumeration") {
    const std::vector<double> a{0, 0, 0, 0}, b{1, 1, 1, 1};
    const double exact = enumerated_p(a, b);
    // With the median statistic only the 2-2 relabelings (36 of 70) tie at 0.
    CHECK(exact == doctest::Approx(34.0 / 70.0));
    for (std::uint64_t s = 0; s < 20; ++s) {
        Rng rng(s);
        const auto r = permutation_test_medians(a, b, kPermutationRounds, rng);
        CHECK(r.observed == 1.0);
        CHECK(std::abs(r.p_value - exact) <= 0.02);
    }
}

TEST_CASE("Monte-Carlo p stays within three standard errors for tiny groups") {
    const std::vector<std::pair<std::vector<double>, std::vector<double>>> cases = {
        {{0.1, 0.5, 0.3, 0.9}, {0.7, 0.8, 1.1, 0.95, 0.6}},
        {{1, 2, 3}, {2.5, 4, 6, 8}},
        {{0.2, 0.2, 0.4, 0.1, 0.3}, {0.25, 0.45, 0.5, 0.6, 0.55}},
    };
    for (const auto& [a, b] : cases) {
        const double exact = enumerated_p(a, b);
        const double se = std::sqrt(exact * (1 - exact) / kPermutationRounds);
        int inside = 0;
        for (std::uint64_t s = 0; s < 20; ++s) {
            Rng rng(100 + s);
            const double p = permutation_test_medians(a, b, kPermutationRounds, rng).p_value;
            inside += std::abs(p - exact) <= 3 * se + 1.0 / (kPermutationRounds + 1);
        }
        CAPTURE(exact);
        CHECK(inside >= 19);
    }
}

TEST_CASE("permutation test is symmetric in its groups") {
    const std::vector<double> a{0.81, 0.79, 0.9, 0.85}, b{0.5, 0.62, 0.55, 0.58, 0.6};
    Rng r1(3), r2(3);
    const auto ab = permutation_test_medians(a, b, 2000, r1);
    const auto ba = permutation_test_medians(b, a, 2000, r2);
    CHECK(ab.observed == ba.observed);
    CHECK(std::abs(ab.p_value - ba.p_value) <= 0.03);
}

TEST_CASE("significance markers") {
    CHECK(significance_markers(0.0005) == "!!");
    CHECK(significance_markers(0.03) == "!");
    CHECK(significance_markers(0.05) == "");
    CHECK(significance_markers(0.001) == "!");
    CHECK(significance_markers(1.0) == "");
}

TEST_CASE("frequency table hand examples") {
    const auto t = af_frequency_table({{"A", "B", "C"}, {"A", "D", "C"}});
    CHECK(t.frequency(LayerBucket::input, "A") == 1.0);
    CHECK(t.frequency(LayerBucket::hidden, "B") == 0.5);
    CHECK(t.frequency(LayerBucket::hidden, "D") == 0.5);
    CHECK(t.frequency(LayerBucket::output, "C") == 1.0);
    CHECK(t.frequency(LayerBucket::output, "A") == 0.0);

    const auto one = af_frequency_table({{"X", "Y", "Y", "Z"}});
    CHECK(one.frequency(LayerBucket::input, "X") == 1.0);
    CHECK(one.frequency(LayerBucket::hidden, "Y") == 1.0);
    CHECK(one.totals[1] == 2);

    CHECK_THROWS_AS(af_frequency_table({{"A", "B", "C"}, {"A", "B"}}), std::invalid_argument);
    CHECK_THROWS_AS(af_frequency_table({{"A", "B"}}), std::invalid_argument);
}

TEST_CASE("Exp as output AF in 1 of 9 networks reads 11.1%") {
    std::vector<std::vector<std::string>> archs(9, {"ReLU", "Tanh", "Tanh", "Tanh", "Softmax"});
    archs[4].back() = "Exp";
    const auto t = af_frequency_table(archs);
    CHECK(std::abs(t.frequency(LayerBucket::output, "Exp") - 0.111) <= 5e-4);
    CHECK(format_percent(t.frequency(LayerBucket::output, "Exp")) == "11.1%");
}

TEST_CASE("bucket frequencies sum to one and top-k is bounded") {
    Rng rng(4);
    std::uniform_int_distribution<int> pick(0, 7);
    std::vector<std::vector<std::string>> archs;
    for (int i = 0; i < 60; ++i) {
        std::vector<std::string> a;
        for (int j = 0; j < 6; ++j) a.push_back("af" + std::to_string(pick(rng)));
        archs.push_back(a);
    }
    const auto t = af_frequency_table(archs);
    for (auto b : {LayerBucket::input, LayerBucket::hidden, LayerBucket::output}) {
        double sum = 0;
        int count = 0;
        for (const auto& e : t.bucket(b)) {
            sum += e.frequency;
            count += e.count;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        CHECK(count == t.totals[static_cast<std::size_t>(b)]);
        CHECK(t.top(b, 3).size() == std::min<std::size_t>(3, t.bucket(b).size()));
        CHECK(t.top(b, 100).size() == t.bucket(b).size());
        for (std::size_t i = 1; i < t.bucket(b).size(); ++i) {
            const auto& prev = t.bucket(b)[i - 1];
            const auto& cur = t.bucket(b)[i];
            CHECK((prev.count > cur.count || (prev.count == cur.count && prev.name < cur.name)));
        }
    }
}

}  // TEST_SUITE
