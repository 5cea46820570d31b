#include "test_util.hpp"

#include "wmc/io.hpp"

#include <filesystem>

using namespace wmc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
    const fs::path dir = fs::temp_directory_path() / "wmc_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

} // namespace

TEST(Numbers, RoundTripExactly) {
    Rng rng(1);
    for (int k = 0; k < 1000; ++k) {
        const double v = rng.normal() * std::pow(10.0, double(int(rng.uniform() * 20) - 10));
        EXPECT_EQ(parse_double(format_double(v)), v);
    }
    EXPECT_EQ(parse_double(" +2.5 "), 2.5);
    EXPECT_THROW(parse_double("abc"), IoError);
    EXPECT_THROW(parse_double("1.0x"), IoError);
}

TEST(MatrixCsv, RoundTripWithHeader) {
    Rng rng(2);
    const Matrix m = rng.gaussian(4, 3);
    const std::string text = matrix_to_csv(m);
    EXPECT_EQ(text.rfind("# rows=4 cols=3\n", 0), 0u);
    EXPECT_EQ(matrix_from_csv(text), m);
    save_matrix(scratch("m.csv"), m);
    EXPECT_EQ(load_matrix(scratch("m.csv")), m);
}

TEST(MatrixCsv, HeaderIsOptional) {
    const Matrix m = matrix_from_csv("1,2\n3,4\n");
    EXPECT_EQ(m.rows(), 2);
    EXPECT_EQ(m(1, 0), 3.0);
}

TEST(MatrixCsv, Errors) {
    EXPECT_THROW(matrix_from_csv("1,2\n3\n"), IoError);
    EXPECT_THROW(matrix_from_csv("# rows=3 cols=2\n1,2\n3,4\n"), IoError);
    EXPECT_THROW(matrix_from_csv("# size 2\n1,2\n"), IoError);
    EXPECT_THROW(matrix_from_csv(""), IoError);
    EXPECT_THROW(matrix_from_csv("1,nan\n"), NumericalError);
    EXPECT_THROW(load_matrix(scratch("does_not_exist.csv")), IoError);
}

TEST(WeightsCsv, RoundTrip) {
    Rng rng(3);
    const auto w = test::random_weights(5, 3, rng);
    const auto back = weights_from_csv(weights_to_csv(w));
    EXPECT_EQ(back.row(), w.row());
    EXPECT_EQ(back.col(), w.col());
    EXPECT_THROW(weights_from_csv("1,1\n"), IoError);
    EXPECT_THROW(weights_from_csv("1,1\n1,1\n1,1\n"), IoError);
    EXPECT_THROW(weights_from_csv("1,2\n1,1\n"), std::invalid_argument);
}

TEST(Observations, RoundTripUniform) {
    Rng rng(4);
    const Matrix theta = rng.gaussian(6, 5);
    auto obs = simulate_observations(theta, WeightPair::uniform(6, 5), 40, 0.3, NoiseModel::laplace, 17);
    const fs::path p = scratch("obs_uniform.csv");
    save_observations(p, obs);
    EXPECT_TRUE(fs::exists(sidecar_path(p)));
    const auto back = load_observations(p);
    EXPECT_EQ(back.indices, obs.indices);
    EXPECT_EQ(back.responses, obs.responses);
    EXPECT_EQ(back.noise_level, 0.3);
    EXPECT_EQ(back.noise, NoiseModel::laplace);
    EXPECT_EQ(back.seed, 17u);
    EXPECT_TRUE(back.weights.is_uniform());
    const auto meta = nlohmann::json::parse(read_text(sidecar_path(p)));
    EXPECT_EQ(meta.at("weights"), "uniform");
    EXPECT_EQ(read_text(p).substr(0, 15), "row,col,sign,y\n");
}

TEST(Observations, WeightsStoredBesideCsv) {
    Rng rng(5);
    const auto w = test::random_weights(4, 7, rng);
    const auto obs = simulate_observations(rng.gaussian(4, 7), w, 25, 0.1, NoiseModel::gaussian, 3);
    const fs::path p = scratch("obs_weighted.csv");
    save_observations(p, obs);
    const auto back = load_observations(p);
    EXPECT_EQ(back.weights.row(), w.row());
    EXPECT_EQ(back.weights.col(), w.col());
}

TEST(Observations, MalformedInput) {
    const fs::path p = scratch("bad.csv");
    write_text(p, "r,c,s,y\n0,0,1,1.0\n");
    write_text(sidecar_path(p), R"({"rows":2,"cols":2,"noise_level":0.1,"weights":"uniform"})");
    EXPECT_THROW(load_observations(p), IoError);
    write_text(p, "row,col,sign,y\n5,0,1,1.0\n");
    EXPECT_THROW(load_observations(p), std::out_of_range);
    write_text(p, "row,col,sign,y\n0,0,1\n");
    EXPECT_THROW(load_observations(p), IoError);
    write_text(p, "row,col,sign,y\n0,0,1,2\n");
    write_text(sidecar_path(p), R"({"rows":2,"cols":2,"n":3,"noise_level":0.1,"weights":"uniform"})");
    EXPECT_THROW(load_observations(p), IoError);
}
