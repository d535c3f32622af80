#include <afarch/data_pipeline.hpp>

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

using namespace afarch;

namespace {

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_SUITE("data_pipeline") {

TEST_CASE("labels map to sorted order") {
    const Dataset ds = parse_csv("x,label\n1,b\n2,a\n3,b\n", "toy");
    CHECK(ds.y == std::vector<int>{1, 0, 1});
    CHECK(ds.class_names == std::vector<std::string>{"a", "b"});
    CHECK(ds.meta.n_samples == 3);
    CHECK(ds.meta.n_features == 1);
    CHECK(ds.meta.n_classes == 2);
    CHECK(ds.X(2, 0) == 3.0);
}

TEST_CASE("categorical features are coded by first appearance") {
    const Dataset ds = parse_csv("colour,size,y\nred,1.5,p\nblue,2,q\nred,-3e2,p\ngreen,0,q\n", "c");
    CHECK(ds.X.col(0).transpose() == Eigen::RowVector4d(0, 1, 0, 2));
    CHECK(ds.X(2, 1) == -300.0);
}

TEST_CASE("label column by name or index, quoted fields") {
    const std::string text = "label,a,b\n\"x, y\",1,2\nz,3,4\n";
    LoadOptions by_name;
    by_name.label_column = "label";
    const Dataset ds = parse_csv(text, "q", by_name);
    CHECK(ds.class_names == std::vector<std::string>{"x, y", "z"});
    CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
    LoadOptions by_index;
    by_index.label_column = "0";
    CHECK(parse_csv(text, "q", by_index).X == ds.X);
    LoadOptions missing;
    missing.label_column = "nope";
    CHECK_THROWS_AS(parse_csv(text, "q", missing), DataError);
}

TEST_CASE("malformed input is rejected with a line number") {
    CHECK(error_of([] { parse_csv("a,b\n", "h"); }).find("no data rows") != std::string::npos);
    CHECK(error_of([] { parse_csv("a,b\n1,x\n2,x\n", "one"); }).find("class") != std::string::npos);
    const std::string missing = error_of([] { parse_csv("a,b,y\n1,2,p\n3,?,q\n", "m"); });
    CHECK(missing.find("line 3") != std::string::npos);
    CHECK(error_of([] { parse_csv("a,b,y\n1,,p\n3,4,q\n", "m"); }).find("line 2") != std::string::npos);
    CHECK(error_of([] { parse_csv("a,b,y\n1,2,p\n3,4\n", "m"); }).find("line 3") != std::string::npos);
}

TEST_CASE("ARFF numeric, nominal and string attributes") {
    const std::string text =
        "% comment\n@relation weather\n@attribute temp numeric\n@attribute outlook {sunny, rainy}\n"
        "@attribute note string\n@attribute play {no,yes}\n@data\n20.5,sunny,'a b',yes\n"
        "15,rainy,c,no\n18,'sunny',d,yes\n";
    const Dataset ds = parse_arff(text, "file");
    CHECK(ds.meta.name == "weather");
    CHECK(ds.meta.n_samples == 3);
    CHECK(ds.meta.n_features == 3);
    CHECK(ds.y == std::vector<int>{1, 0, 1});
    CHECK(ds.X(1, 0) == 15.0);
    CHECK(ds.X(0, 1) == ds.X(2, 1));
    CHECK_THROWS_AS(parse_arff("@relation r\n@attribute a numeric\n@attribute c {x,y}\n@data\n{0 1}\n", "s"),
                    DataError);
    CHECK_THROWS_AS(parse_arff("@relation r\n@attribute a numeric\n@attribute c {x,y}\n@data\n?,x\n1,y\n", "s"),
                    DataError);
}

TEST_CASE("canonical CSV round-trips bit-exactly") {
    Rng rng(3);
    const Dataset ds = make_gaussian_clusters(40, 3, 4, 2.0, 0.7, rng, "rt");
    const Dataset back = parse_csv(to_csv(ds), "rt");
    CHECK(back.X == ds.X);
    CHECK(back.y == ds.y);
    CHECK(back.class_names == ds.class_names);
    CHECK(to_csv(back) == to_csv(ds));

    const auto path = std::filesystem::temp_directory_path() / "afarch_roundtrip.csv";
    save_csv(ds, path.string());
    const Dataset loaded = load_dataset(path.string());
    CHECK(loaded.X == ds.X);
    CHECK(loaded.meta.name == "afarch_roundtrip");
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_dataset("/nonexistent/file.csv"), DataError);
}

TEST_CASE("split sizes and partition") {
    CHECK(train_size(10) == 7);
    CHECK(train_size(4) == 2);
    for (int n = 4; n <= 100000; n = n * 3 + 1) CHECK(train_size(n) == static_cast<int>(std::floor(0.7 * n + 1e-9)));
    Rng rng(1);
    for (int t = 0; t < 5; ++t) {
        const Dataset ds = make_gaussian_clusters(1000, 2, 3, 1.0, 1.0, rng);
        const Split s = train_test_split(ds, rng);
        CHECK(s.train.size() == 700);
        CHECK(s.test.size() == 300);
        std::set<int> all(s.train.begin(), s.train.end());
        all.insert(s.test.begin(), s.test.end());
        CHECK(all.size() == 1000);
        CHECK(*all.begin() == 0);
        CHECK(*all.rbegin() == 999);
    }
    const Dataset ds = make_gaussian_clusters(50, 2, 2, 1.0, 1.0, rng);
    Rng a(7), b(7);
    CHECK(train_test_split(ds, a).train == train_test_split(ds, b).train);
}

TEST_CASE("too-small data and absent classes") {
    Dataset tiny = parse_csv("a,y\n1,p\n2,q\n3,p\n", "tiny");
    Rng rng(1);
    CHECK_THROWS_AS(train_test_split(tiny, rng), DataError);

    // class "z" has a single row; some split leaves it out of the training part
    const Dataset ds = parse_csv("a,y\n1,p\n2,q\n3,p\n4,q\n5,p\n6,q\n7,z\n8,p\n9,q\n10,p\n", "rare");
    bool warned = false;
    for (std::uint64_t s = 0; s < 50 && !warned; ++s) {
        Rng r(s);
        const Split split = train_test_split(ds, r);
        const bool z_in_train =
            std::any_of(split.train.begin(), split.train.end(), [&](int i) { return ds.y[static_cast<std::size_t>(i)] == 2; });
        CHECK(split.warnings.empty() == z_in_train);
        warned = !split.warnings.empty();
    }
    CHECK(warned);
}

TEST_CASE("scaler hand examples") {
    Eigen::MatrixXd X(3, 2);
    X << 1, 5, 2, 5, 3, 5;
    const Scaler s = scaler_fit(X);
    CHECK(s.mean(0) == doctest::Approx(2.0));
    CHECK(s.scale(0) == doctest::Approx(0.816497).epsilon(1e-6));
    CHECK(s.scale(1) == 1.0);
    const Eigen::MatrixXd T = scaler_transform(s, X);
    CHECK(T(0, 0) == doctest::Approx(-1.224745).epsilon(1e-6));
    CHECK(T(1, 0) == doctest::Approx(0.0));
    CHECK(T(2, 0) == doctest::Approx(1.224745).epsilon(1e-6));
    CHECK(T.col(1).cwiseAbs().maxCoeff() == 0.0);
    Eigen::MatrixXd test(1, 2);
    test << 4, 5;
    CHECK(scaler_transform(s, test)(0, 0) == doctest::Approx(2.449490).epsilon(1e-6));
}

TEST_CASE("scaler fits on the training rows only") {
    Rng rng(2);
    const Dataset ds = make_gaussian_clusters(300, 4, 3, 5.0, 2.0, rng);
    const Split split = train_test_split(ds, rng);
    const Scaler s = scaler_fit(ds.X, split.train);
    const Eigen::MatrixXd T = scaler_transform(s, select_rows(ds.X, split.train));
    const Eigen::RowVectorXd mean = T.colwise().mean();
    const Eigen::RowVectorXd sd = ((T.rowwise() - mean).array().square().colwise().sum() / T.rows()).sqrt();
    CHECK(mean.cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((sd.array() - 1.0).abs().maxCoeff() <= 1e-9);
}

TEST_CASE("gaussian clusters") {
    Rng a(5), b(5);
    const Dataset d1 = make_gaussian_clusters(104, 16, 26, 1.0, 1.0, a, "letters");
    const Dataset d2 = make_gaussian_clusters(104, 16, 26, 1.0, 1.0, b, "letters");
    CHECK(d1.X == d2.X);
    CHECK(d1.meta.n_classes == 26);
    CHECK(d1.meta.n_features == 16);
    CHECK(d1.class_names.front() == "c00");
    d1.validate();
}

}  // TEST_SUITE
