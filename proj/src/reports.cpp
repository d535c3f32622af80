#include <afarch/reports.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace afarch {

std::vector<ReplicateRecord> parse_replicate_log(const std::string& text) {
    std::vector<ReplicateRecord> out;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(replicate_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw DataError("log line " + std::to_string(number) + ": " + e.what());
        }
    }
    return out;
}

std::vector<ReplicateRecord> load_replicate_log(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open log '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_replicate_log(ss.str());
}

namespace {

// Correctly rounded to `digits` decimals, trailing zeros dropped down to one.
std::string fixed_trimmed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    std::string s(buf);
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);  // no "-0.0"
    while (s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
    return s;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<double> scores_of(const std::vector<const ReplicateRecord*>& group, Method m) {
    std::vector<double> v;
    for (const auto* r : group)
        if (const auto* res = r->find(m)) v.push_back(res->test_score);
    return v;
}

double compare(const std::vector<double>& a, const std::vector<double>& b, const ReportOptions& opts,
               const std::string& key) {
    Rng rng(derive_seed(opts.seed, fnv1a(key)));
    return permutation_test_medians(a, b, opts.rounds, rng).p_value;
}

// (dataset, layers) groups in order of first appearance
std::vector<std::vector<const ReplicateRecord*>> group_records(const std::vector<ReplicateRecord>& records) {
    std::vector<std::vector<const ReplicateRecord*>> groups;
    std::map<std::pair<std::string, int>, std::size_t> index;
    for (const auto& r : records) {
        const auto [it, fresh] = index.try_emplace({r.dataset, r.n_layers}, groups.size());
        if (fresh) groups.emplace_back();
        groups[it->second].push_back(&r);
    }
    return groups;
}

constexpr std::array<Method, 3> kSearchMethods = {Method::random, Method::tpe, Method::cmaes};

FrequencyTable search_frequencies(const std::vector<const ReplicateRecord*>& records) {
    std::vector<std::vector<std::string>> archs;
    for (const auto* r : records)
        for (auto m : kSearchMethods)
            if (const auto* res = r->find(m); res && !res->architecture.empty())
                archs.push_back(architecture_names(res->architecture));
    if (archs.empty() || archs.front().size() < 3) return {};
    return af_frequency_table(archs);
}

}  // namespace

std::string format_score(double x) { return fixed_trimmed(x, 3); }

std::string format_percent(double x) { return fixed_trimmed(x * 100.0, 1) + "%"; }

std::vector<ScoreRow> score_rows(const std::vector<ReplicateRecord>& records, const ReportOptions& options) {
    std::vector<ScoreRow> rows;
    for (const auto& group : group_records(records)) {
        ScoreRow row;
        row.dataset = group.front()->dataset;
        row.n_layers = group.front()->n_layers;
        const std::string prefix = row.dataset + "/" + std::to_string(row.n_layers) + "/";

        std::array<std::vector<double>, 4> scores;
        for (auto m : kAllMethods) scores[static_cast<std::size_t>(m)] = scores_of(group, m);
        const auto& standard = scores[static_cast<std::size_t>(Method::standard)];

        for (auto m : kAllMethods) {
            const auto& s = scores[static_cast<std::size_t>(m)];
            if (s.empty()) continue;
            ScoreCell cell;
            cell.median = median(s);
            if (m != Method::standard && s.size() >= 2 && standard.size() >= 2)
                cell.p_value = compare(s, standard, options, prefix + std::string(method_name(m)));
            row.cells[static_cast<std::size_t>(m)] = cell;
        }

        std::optional<Method> top, second;
        for (auto m : kAllMethods) {
            const auto& cell = row.cells[static_cast<std::size_t>(m)];
            if (!cell) continue;
            if (!top || cell->median > row.cells[static_cast<std::size_t>(*top)]->median) {
                second = top;
                top = m;
            } else if (!second || cell->median > row.cells[static_cast<std::size_t>(*second)]->median) {
                second = m;
            }
        }
        row.top = top;
        if (top && second) {
            const auto& a = scores[static_cast<std::size_t>(*top)];
            const auto& b = scores[static_cast<std::size_t>(*second)];
            if (a.size() >= 2 && b.size() >= 2)
                row.top_p_value = compare(a, b, options, prefix + "top");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string score_table_csv(const std::vector<ScoreRow>& rows) {
    std::ostringstream out;
    out << "dataset,lay,standard,random,tpe,cmaes,top\n";
    for (const auto& row : rows) {
        out << csv_field(row.dataset) << ',' << row.n_layers;
        for (const auto& cell : row.cells) {
            out << ',';
            if (!cell) continue;
            out << format_score(cell->median);
            if (cell->p_value) {
                const auto marks = significance_markers(*cell->p_value);
                if (!marks.empty()) out << ' ' << marks;
            }
        }
        out << ',';
        if (row.top) {
            out << method_name(*row.top);
            if (row.top_p_value) {
                const auto marks = significance_markers(*row.top_p_value);
                if (!marks.empty()) out << ' ' << marks;
            }
        }
        out << '\n';
    }
    return out.str();
}

std::string frequency_table_csv(const std::vector<ReplicateRecord>& records, const ReportOptions& options) {
    std::map<int, std::vector<const ReplicateRecord*>> by_layers;
    for (const auto& r : records) by_layers[r.n_layers].push_back(&r);

    std::ostringstream out;
    out << "lay,bucket,rank,af,count,frequency,percent\n";
    for (const auto& [lay, group] : by_layers) {
        const FrequencyTable table = search_frequencies(group);
        for (auto bucket : {LayerBucket::input, LayerBucket::hidden, LayerBucket::output}) {
            int rank = 0;
            for (const auto& e : table.top(bucket, options.top_k)) {
                out << lay << ',' << bucket_name(bucket) << ',' << ++rank << ',' << e.name << ',' << e.count << ','
                    << fixed_trimmed(e.frequency, 4) << ',' << format_percent(e.frequency) << '\n';
            }
        }
    }
    return out.str();
}

std::string topmost_table_csv(const std::vector<ReplicateRecord>& records) {
    std::ostringstream out;
    out << "dataset,lay,input_af,input_freq,hidden_af,hidden_freq,output_af,output_freq\n";
    for (const auto& group : group_records(records)) {
        const FrequencyTable table = search_frequencies(group);
        out << csv_field(group.front()->dataset) << ',' << group.front()->n_layers;
        for (auto bucket : {LayerBucket::input, LayerBucket::hidden, LayerBucket::output}) {
            const auto top = table.top(bucket, 1);
            if (top.empty())
                out << ",,";
            else
                out << ',' << top.front().name << ',' << format_percent(top.front().frequency);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace afarch
