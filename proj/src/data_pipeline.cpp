#include <afarch/data_pipeline.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace afarch {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return v;
}

struct Line {
    int number;
    std::string text;
};

std::vector<Line> split_lines(const std::string& text) {
    std::vector<Line> lines;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back({number, line});
    }
    return lines;
}

// Comma-separated fields; `quotes` lists the accepted quote characters.
std::vector<std::string> split_fields(const std::string& line, std::string_view quotes, int line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted_field = false;
    std::size_t i = 0;
    while (true) {
        // skip leading spaces
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        cur.clear();
        quoted_field = false;
        if (i < line.size() && quotes.find(line[i]) != std::string_view::npos) {
            const char q = line[i++];
            quoted_field = true;
            bool closed = false;
            while (i < line.size()) {
                if (line[i] == q) {
                    if (i + 1 < line.size() && line[i + 1] == q) {
                        cur += q;
                        i += 2;
                        continue;
                    }
                    ++i;
                    closed = true;
                    break;
                }
                cur += line[i++];
            }
            if (!closed) throw DataError("line " + std::to_string(line_no) + ": unterminated quoted field");
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
            if (i < line.size() && line[i] != ',')
                throw DataError("line " + std::to_string(line_no) + ": text after closing quote");
        } else {
            const auto comma = line.find(',', i);
            cur = line.substr(i, comma == std::string::npos ? std::string::npos : comma - i);
            i = comma == std::string::npos ? line.size() : comma;
        }
        fields.push_back(quoted_field ? cur : trim(cur));
        if (i >= line.size()) break;
        ++i;  // past the comma
        if (i == line.size()) {
            fields.emplace_back();
            break;
        }
    }
    return fields;
}

bool is_blank(const std::string& s) { return trim(s).empty(); }

int resolve_label_column(const std::vector<std::string>& names, const std::optional<std::string>& requested) {
    const int n = static_cast<int>(names.size());
    if (!requested) return n - 1;
    for (int i = 0; i < n; ++i)
        if (names[static_cast<std::size_t>(i)] == *requested) return i;
    const std::string& s = *requested;
    if (!s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
        const int idx = std::stoi(s);
        if (idx < n) return idx;
    }
    throw DataError("label column '" + *requested + "' not found");
}

struct RawTable {
    std::vector<std::string> names;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> line_numbers;
    std::vector<bool> numeric_declared;  // ARFF only; empty for CSV
};

Dataset build_dataset(const RawTable& table, const std::string& name, const LoadOptions& options) {
    if (table.rows.empty()) throw DataError(name + ": no data rows");
    const int n_cols = static_cast<int>(table.names.size());
    if (n_cols < 2) throw DataError(name + ": need at least one feature column and a label column");
    const int label_col = resolve_label_column(table.names, options.label_column);

    const auto n = static_cast<Eigen::Index>(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (int c = 0; c < n_cols; ++c) {
            const auto& cell = table.rows[r][static_cast<std::size_t>(c)];
            if (cell.empty() || cell == "?")
                throw DataError("line " + std::to_string(table.line_numbers[r]) + ", column '" +
                                table.names[static_cast<std::size_t>(c)] + "': missing value");
        }
    }

    Dataset ds;
    ds.meta.name = name;
    ds.label_name = table.names[static_cast<std::size_t>(label_col)];
    ds.X.resize(n, n_cols - 1);
    int out_col = 0;
    for (int c = 0; c < n_cols; ++c) {
        if (c == label_col) continue;
        ds.feature_names.push_back(table.names[static_cast<std::size_t>(c)]);
        std::vector<double> values(static_cast<std::size_t>(n));
        bool numeric = true;
        for (Eigen::Index r = 0; r < n; ++r) {
            const auto v = parse_number(table.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
            if (!v) {
                numeric = false;
                break;
            }
            values[static_cast<std::size_t>(r)] = *v;
        }
        const bool declared_numeric =
            !table.numeric_declared.empty() && table.numeric_declared[static_cast<std::size_t>(c)];
        if (!numeric && declared_numeric) {
            for (Eigen::Index r = 0; r < n; ++r)
                if (!parse_number(table.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]))
                    throw DataError("line " + std::to_string(table.line_numbers[static_cast<std::size_t>(r)]) +
                                    ", column '" + table.names[static_cast<std::size_t>(c)] +
                                    "': expected a number");
        }
        if (!numeric) {
            std::unordered_map<std::string, int> codes;
            for (Eigen::Index r = 0; r < n; ++r) {
                const auto& cell = table.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
                const auto [it, inserted] = codes.emplace(cell, static_cast<int>(codes.size()));
                values[static_cast<std::size_t>(r)] = it->second;
            }
        }
        for (Eigen::Index r = 0; r < n; ++r) ds.X(r, out_col) = values[static_cast<std::size_t>(r)];
        ++out_col;
    }

    std::set<std::string> labels;
    for (const auto& row : table.rows) labels.insert(row[static_cast<std::size_t>(label_col)]);
    if (labels.size() < 2) throw DataError(name + ": label column has a single class");
    ds.class_names.assign(labels.begin(), labels.end());
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < ds.class_names.size(); ++i) index[ds.class_names[i]] = static_cast<int>(i);
    ds.y.reserve(table.rows.size());
    for (const auto& row : table.rows) ds.y.push_back(index.at(row[static_cast<std::size_t>(label_col)]));

    ds.meta.n_samples = static_cast<int>(n);
    ds.meta.n_features = n_cols - 1;
    ds.meta.n_classes = static_cast<int>(ds.class_names.size());
    ds.validate();
    return ds;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string basename_of(const std::string& path) {
    const auto slash = path.find_last_of('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    const auto dot = base.find_last_of('.');
    if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
    return base;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos && trim(s) == s && !s.empty()) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

}  // namespace

void Dataset::validate() const {
    if (X.cols() < 1) throw DataError("dataset has no features");
    if (X.rows() < 2) throw DataError("dataset needs at least 2 samples");
    if (static_cast<Eigen::Index>(y.size()) != X.rows()) throw DataError("label count does not match rows");
    const int C = meta.n_classes;
    std::vector<int> seen(static_cast<std::size_t>(std::max(C, 0)), 0);
    for (int label : y) {
        if (label < 0 || label >= C) throw DataError("label " + std::to_string(label) + " out of range");
        seen[static_cast<std::size_t>(label)] = 1;
    }
    for (int c = 0; c < C; ++c)
        if (!seen[static_cast<std::size_t>(c)]) throw DataError("class " + std::to_string(c) + " has no samples");
}

DataFormat parse_data_format(const std::string& text) {
    const auto t = lower(text);
    if (t == "csv") return DataFormat::csv;
    if (t == "arff") return DataFormat::arff;
    throw std::invalid_argument("unknown data format '" + text + "' (expected csv or arff)");
}

DataFormat guess_data_format(const std::string& path) {
    const auto l = lower(path);
    return l.size() >= 5 && l.ends_with(".arff") ? DataFormat::arff : DataFormat::csv;
}

Dataset parse_csv(const std::string& text, const std::string& name, const LoadOptions& options) {
    const auto lines = split_lines(text);
    RawTable table;
    bool have_header = false;
    for (const auto& line : lines) {
        if (is_blank(line.text)) continue;
        auto fields = split_fields(line.text, "\"", line.number);
        if (!have_header) {
            table.names = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.names.size())
            throw DataError("line " + std::to_string(line.number) + ": expected " +
                            std::to_string(table.names.size()) + " fields, found " +
                            std::to_string(fields.size()));
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line.number);
    }
    if (!have_header) throw DataError(name + ": empty file");
    return build_dataset(table, name, options);
}

Dataset parse_arff(const std::string& text, const std::string& name, const LoadOptions& options) {
    RawTable table;
    std::string relation = name;
    bool in_data = false;
    for (const auto& line : split_lines(text)) {
        const std::string t = trim(line.text);
        if (t.empty() || t.front() == '%') continue;
        if (!in_data) {
            if (t.front() != '@') throw DataError("line " + std::to_string(line.number) + ": expected a declaration");
            const auto space = t.find_first_of(" \t");
            const std::string keyword = lower(t.substr(0, space));
            const std::string rest = space == std::string::npos ? "" : trim(t.substr(space));
            if (keyword == "@relation") {
                relation = rest;
                if (relation.size() >= 2 && (relation.front() == '\'' || relation.front() == '"'))
                    relation = relation.substr(1, relation.size() - 2);
            } else if (keyword == "@attribute") {
                std::string attr_name;
                std::string type;
                if (!rest.empty() && (rest.front() == '\'' || rest.front() == '"')) {
                    const auto close = rest.find(rest.front(), 1);
                    if (close == std::string::npos)
                        throw DataError("line " + std::to_string(line.number) + ": unterminated attribute name");
                    attr_name = rest.substr(1, close - 1);
                    type = trim(rest.substr(close + 1));
                } else {
                    const auto sp = rest.find_first_of(" \t");
                    if (sp == std::string::npos)
                        throw DataError("line " + std::to_string(line.number) + ": attribute without a type");
                    attr_name = rest.substr(0, sp);
                    type = trim(rest.substr(sp));
                }
                const std::string lt = lower(type);
                bool numeric = false;
                if (lt == "numeric" || lt == "real" || lt == "integer") {
                    numeric = true;
                } else if (!type.empty() && type.front() == '{') {
                    numeric = false;
                } else if (lt == "string") {
                    numeric = false;
                } else {
                    throw DataError("line " + std::to_string(line.number) + ": unsupported attribute type '" +
                                    type + "'");
                }
                table.names.push_back(attr_name);
                table.numeric_declared.push_back(numeric);
            } else if (keyword == "@data") {
                in_data = true;
            } else {
                throw DataError("line " + std::to_string(line.number) + ": unknown declaration '" + keyword + "'");
            }
            continue;
        }
        if (t.front() == '{') throw DataError("line " + std::to_string(line.number) + ": sparse ARFF rows are not supported");
        auto fields = split_fields(t, "'\"", line.number);
        if (fields.size() != table.names.size())
            throw DataError("line " + std::to_string(line.number) + ": expected " +
                            std::to_string(table.names.size()) + " values, found " +
                            std::to_string(fields.size()));
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line.number);
    }
    if (table.names.empty()) throw DataError(name + ": no @attribute declarations");
    return build_dataset(table, relation, options);
}

Dataset load_dataset(const std::string& path, const LoadOptions& options) {
    const std::string text = read_file(path);
    const std::string name = basename_of(path);
    return options.format == DataFormat::arff ? parse_arff(text, name, options) : parse_csv(text, name, options);
}

std::string to_csv(const Dataset& ds) {
    std::string out;
    for (const auto& f : ds.feature_names) out += csv_escape(f) + ',';
    out += csv_escape(ds.label_name) + '\n';
    for (Eigen::Index r = 0; r < ds.X.rows(); ++r) {
        for (Eigen::Index c = 0; c < ds.X.cols(); ++c) out += format_double(ds.X(r, c)) + ',';
        out += csv_escape(ds.class_names[static_cast<std::size_t>(ds.y[static_cast<std::size_t>(r)])]) + '\n';
    }
    return out;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << to_csv(ds);
}

int train_size(int n) { return static_cast<int>((static_cast<long long>(n) * 7) / 10); }

Split train_test_split(const Dataset& ds, Rng& rng) {
    const int n = static_cast<int>(ds.X.rows());
    if (n < 4) throw DataError("dataset too small for a train/test split (need at least 4 rows)");
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Split split;
    const int n_train = train_size(n);
    split.train.assign(perm.begin(), perm.begin() + n_train);
    split.test.assign(perm.begin() + n_train, perm.end());

    std::vector<int> present(static_cast<std::size_t>(ds.meta.n_classes), 0);
    for (int row : split.train) present[static_cast<std::size_t>(ds.y[static_cast<std::size_t>(row)])] = 1;
    for (int c = 0; c < ds.meta.n_classes; ++c)
        if (!present[static_cast<std::size_t>(c)]) {
            const std::string label = c < static_cast<int>(ds.class_names.size())
                                          ? ds.class_names[static_cast<std::size_t>(c)]
                                          : std::to_string(c);
            split.warnings.push_back("class '" + label + "' is absent from the training set");
        }
    return split;
}

Eigen::MatrixXd select_rows(const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
    return out;
}

std::vector<int> select_labels(const std::vector<int>& y, const std::vector<int>& rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (int r : rows) out.push_back(y.at(static_cast<std::size_t>(r)));
    return out;
}

Scaler scaler_fit(const Eigen::Ref<const Eigen::MatrixXd>& X) {
    if (X.rows() < 1) throw std::invalid_argument("scaler_fit: no rows");
    Scaler s;
    s.mean = X.colwise().mean();
    const Eigen::MatrixXd centered = X.rowwise() - s.mean;
    s.scale = (centered.colwise().squaredNorm() / static_cast<double>(X.rows())).cwiseSqrt();
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
        // numerically constant column
        if (!(s.scale(j) > 10.0 * eps * std::max(1.0, std::abs(s.mean(j))))) s.scale(j) = 1.0;
    }
    return s;
}

Scaler scaler_fit(const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<int>& rows) {
    return scaler_fit(select_rows(X, rows));
}

Eigen::MatrixXd scaler_transform(const Scaler& scaler, const Eigen::Ref<const Eigen::MatrixXd>& X) {
    if (X.cols() != scaler.mean.size()) throw std::invalid_argument("scaler_transform: column count mismatch");
    return (X.rowwise() - scaler.mean).array().rowwise() / scaler.scale.array();
}

Dataset make_gaussian_clusters(int n_samples, int n_features, int n_classes, double center_spread,
                               double noise, Rng& rng, const std::string& name) {
    if (n_samples < n_classes || n_classes < 2 || n_features < 1)
        throw std::invalid_argument("make_gaussian_clusters: bad shape");
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd centers(n_classes, n_features);
    for (Eigen::Index i = 0; i < centers.size(); ++i) centers.data()[i] = center_spread * normal(rng);

    Dataset ds;
    ds.X.resize(n_samples, n_features);
    ds.y.resize(static_cast<std::size_t>(n_samples));
    for (int r = 0; r < n_samples; ++r) {
        const int label = r % n_classes;
        ds.y[static_cast<std::size_t>(r)] = label;
        for (int c = 0; c < n_features; ++c) ds.X(r, c) = centers(label, c) + noise * normal(rng);
    }
    const int width = static_cast<int>(std::to_string(n_classes - 1).size());
    for (int c = 0; c < n_classes; ++c) {
        std::string id = std::to_string(c);
        ds.class_names.push_back("c" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id);
    }
    for (int f = 0; f < n_features; ++f) ds.feature_names.push_back("f" + std::to_string(f));
    ds.meta = {name, n_samples, n_features, n_classes};
    return ds;
}

}  // namespace afarch
