#pragma once

// Tabular ingestion (CSV, ARFF), the 70/30 split and standardization.

#include <afarch/random.hpp>

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace afarch {

/// Raised for malformed or unusable input files; messages carry line numbers.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DatasetMeta {
    std::string name;
    int n_samples = 0;
    int n_features = 0;
    int n_classes = 0;
};

struct Dataset {
    Eigen::MatrixXd X;  // n x d
    std::vector<int> y;
    DatasetMeta meta;
    std::vector<std::string> feature_names;
    std::string label_name = "class";
    std::vector<std::string> class_names;  // index = label

    /// Throws DataError if labels are out of range, a class is unused,
    /// d < 1 or n < 2.
    void validate() const;
};

enum class DataFormat { csv, arff };

DataFormat parse_data_format(const std::string& text);
/// Picks ARFF for a ".arff" suffix, CSV otherwise.
DataFormat guess_data_format(const std::string& path);

struct LoadOptions {
    DataFormat format = DataFormat::csv;
    /// Column name, or a 0-based index given as digits. Defaults to the last
    /// column.
    std::optional<std::string> label_column;
};

/// Feature columns that are not numeric are integer-coded in order of first
/// appearance. Labels are mapped to 0..C-1 in lexicographic order of their
/// strings. Missing values ("" or "?") are rejected.
Dataset load_dataset(const std::string& path, const LoadOptions& options = {});
Dataset parse_csv(const std::string& text, const std::string& name, const LoadOptions& options = {});
Dataset parse_arff(const std::string& text, const std::string& name, const LoadOptions& options = {});

/// Canonical writer: header row, shortest round-trip doubles, class names in
/// the last column.
std::string to_csv(const Dataset& ds);
void save_csv(const Dataset& ds, const std::string& path);

struct Split {
    std::vector<int> train;
    std::vector<int> test;
    std::vector<std::string> warnings;
};

/// Unstratified: a uniform permutation, the first floor(0.7 n) rows train.
Split train_test_split(const Dataset& ds, Rng& rng);
int train_size(int n);

/// Population (divide-by-n) statistics of the training rows.
struct Scaler {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;
};

Scaler scaler_fit(const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<int>& rows);
Scaler scaler_fit(const Eigen::Ref<const Eigen::MatrixXd>& X);
/// (x - mean) / scale. Not idempotent: apply once.
Eigen::MatrixXd scaler_transform(const Scaler& scaler, const Eigen::Ref<const Eigen::MatrixXd>& X);

Eigen::MatrixXd select_rows(const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<int>& rows);
std::vector<int> select_labels(const std::vector<int>& y, const std::vector<int>& rows);

/// Gaussian clusters: one random centre per class, isotropic noise.
/// Used for desk-scale surrogates of real datasets.
Dataset make_gaussian_clusters(int n_samples, int n_features, int n_classes, double center_spread,
                               double noise, Rng& rng, const std::string& name = "clusters");

}  // namespace afarch
