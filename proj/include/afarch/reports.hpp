#pragma once

// CSV reports over replicate logs: per-dataset score table with
// significance markers, layer-position AF frequencies, and the topmost AF
// per dataset.

#include <afarch/experiment.hpp>
#include <afarch/stats.hpp>

#include <optional>
#include <string>
#include <vector>

namespace afarch {

std::vector<ReplicateRecord> parse_replicate_log(const std::string& text);
std::vector<ReplicateRecord> load_replicate_log(const std::string& path);

/// Correctly rounded to 3 decimals, trailing zeros dropped down to one:
/// 0.04, 0.829, 1.0.
std::string format_score(double x);
/// One decimal percent: 0.111 -> "11.1%".
std::string format_percent(double x);

struct ScoreCell {
    double median = 0.0;
    std::optional<double> p_value;  // vs. standard; absent for standard itself
};

struct ScoreRow {
    std::string dataset;
    int n_layers = 0;
    std::array<std::optional<ScoreCell>, 4> cells;  // by Method
    std::optional<Method> top;
    std::optional<double> top_p_value;  // top vs. second-best
};

struct ReportOptions {
    int rounds = kPermutationRounds;
    std::uint64_t seed = 0;
    std::size_t top_k = 10;
};

/// Groups by (dataset, layers) in order of first appearance. The top method
/// is the highest median; ties go to the earlier of standard, random, tpe,
/// cmaes.
std::vector<ScoreRow> score_rows(const std::vector<ReplicateRecord>& records, const ReportOptions& options);

/// dataset,lay,standard,random,tpe,cmaes,top, each score cell "median markers".
std::string score_table_csv(const std::vector<ScoreRow>& rows);

/// lay,bucket,rank,af,count,frequency,percent over the best architectures
/// of the search methods, per layer count, top-k per bucket.
std::string frequency_table_csv(const std::vector<ReplicateRecord>& records, const ReportOptions& options);

/// dataset,lay,input_af,input_freq,hidden_af,hidden_freq,output_af,output_freq
std::string topmost_table_csv(const std::vector<ReplicateRecord>& records);

}  // namespace afarch
