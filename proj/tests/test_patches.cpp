#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "pifs/numerics.hpp"
#include "pifs/patches.hpp"

using namespace pifs;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("pifs_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// one CIFAR record: label byte + 3072 pixel bytes
void write_cifar_file(const fs::path& p, const std::vector<std::vector<std::uint8_t>>& records) {
    std::ofstream out(p, std::ios::binary);
    for (const auto& rec : records) {
        REQUIRE(rec.size() == 3073);
        out.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
    }
}

std::vector<std::uint8_t> constant_record(std::uint8_t value) {
    std::vector<std::uint8_t> rec(3073, value);
    rec[0] = 3;  // label
    return rec;
}

// synthetic Gaussian images with block covariance, channel-planar layout
std::vector<std::vector<float>> gaussian_images(std::size_t n, const ImageShape& shape,
                                                double top_eigenvalue, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<float>> images(n);
    for (auto& img : images) {
        img.resize(static_cast<std::size_t>(shape.pixels()));
        // a rank-1 strong direction plus white noise gives top eigenvalue
        // approximately top_eigenvalue + 1
        double strong = std::sqrt(top_eigenvalue) * normal(rng);
        for (int i = 0; i < shape.pixels(); ++i)
            img[static_cast<std::size_t>(i)] =
                static_cast<float>(normal(rng) + strong / std::sqrt(static_cast<double>(shape.pixels())));
    }
    return images;
}

}  // namespace

TEST_CASE("cifar reader basics") {
    TempDir tmp;
    fs::path file = tmp.path / "batch.bin";
    write_cifar_file(file, {constant_record(128), constant_record(0), constant_record(255)});

    std::vector<std::vector<float>> images;
    std::size_t n = read_cifar10({file.string()}, PixelNormalization::pm1,
                                 [&](const std::vector<float>& img) { images.push_back(img); });
    CHECK(n == 3);
    REQUIRE(images.size() == 3);
    CHECK(images[0][0] == doctest::Approx(2.0 * 128 / 255.0 - 1.0));
    CHECK(images[1][100] == doctest::Approx(-1.0));
    CHECK(images[2][3071] == doctest::Approx(1.0));
    for (float v : images[0]) CHECK(v == images[0][0]);  // constant image stays constant

    std::vector<std::vector<float>> unit;
    read_cifar10({file.string()}, PixelNormalization::unit,
                 [&](const std::vector<float>& img) { unit.push_back(img); });
    CHECK(unit[0][0] == doctest::Approx(128.0 / 255.0));

    CHECK_THROWS_AS(read_cifar10({}, PixelNormalization::pm1, [](const auto&) {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(read_cifar10({(tmp.path / "missing.bin").string()}, PixelNormalization::pm1,
                                 [](const auto&) {}),
                    IoError);

    fs::path bad = tmp.path / "bad.bin";
    std::ofstream(bad, std::ios::binary).write("abc", 3);
    CHECK_THROWS_AS(read_cifar10({bad.string()}, PixelNormalization::pm1, [](const auto&) {}),
                    std::invalid_argument);
}

TEST_CASE("raw f32 container round trip") {
    TempDir tmp;
    fs::path file = tmp.path / "imgs.pspc";
    ImageShape shape{4, 4, 2};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    std::vector<std::vector<float>> images(3, std::vector<float>(32));
    for (auto& img : images)
        for (float& v : img) v = u(rng);
    write_raw_f32(file.string(), shape, images);

    ImageShape got;
    std::vector<std::vector<float>> back;
    std::size_t n = read_raw_f32(file.string(), got,
                                 [&](const std::vector<float>& img) { back.push_back(img); });
    CHECK(n == 3);
    CHECK(got.height == 4);
    CHECK(got.width == 4);
    CHECK(got.channels == 2);
    CHECK(back == images);

    fs::path bad = tmp.path / "bad.pspc";
    std::ofstream(bad, std::ios::binary).write("XXXXXXXXXXXXXXXX", 16);
    ImageShape ignored;
    CHECK_THROWS_AS(read_raw_f32(bad.string(), ignored, [](const auto&) {}), std::invalid_argument);
}

TEST_CASE("covariance accumulator against a dense oracle") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int dim = 6;
    const int n = 500;
    CovarianceAccumulator acc(dim);
    Eigen::MatrixXd data(n, dim);
    for (int i = 0; i < n; ++i) {
        std::vector<double> x(dim);
        for (int j = 0; j < dim; ++j) {
            x[static_cast<std::size_t>(j)] = normal(rng);
            data(i, j) = x[static_cast<std::size_t>(j)];
        }
        acc.add(x);
    }
    Eigen::RowVectorXd mean = data.colwise().mean();
    Eigen::MatrixXd centered = data.rowwise() - mean;
    Eigen::MatrixXd cov = centered.transpose() * centered / (n - 1.0);
    std::vector<double> got = acc.covariance();
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            CHECK(got[static_cast<std::size_t>(i) * dim + j] ==
                  doctest::Approx(cov(i, j)).epsilon(1e-10));
}

TEST_CASE("power iteration matches the dense eigensolver oracle") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int dim : {8, 48}) {
        Eigen::MatrixXd A(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) A(i, j) = normal(rng);
        Eigen::MatrixXd spd = A * A.transpose();
        std::vector<double> m(static_cast<std::size_t>(dim) * dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) m[static_cast<std::size_t>(i) * dim + j] = spd(i, j);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spd);
        double expected = es.eigenvalues()(dim - 1);
        CHECK(leading_eigenvalue(m, dim) == doctest::Approx(expected).epsilon(1e-9));

        std::vector<double> top3 = eigenvalues_by_deflation(m, dim, 3);
        for (int k = 0; k < 3; ++k)
            CHECK(top3[static_cast<std::size_t>(k)] ==
                  doctest::Approx(es.eigenvalues()(dim - 1 - k)).epsilon(1e-6));
    }
    // zero matrix reports a zero eigenvalue rather than an error
    std::vector<double> zeros(16, 0.0);
    CHECK(leading_eigenvalue(zeros, 4) == 0.0);
}

TEST_CASE("patch covariance pipeline on synthetic data") {
    ImageShape shape{8, 8, 1};
    std::mt19937_64 rng(11);
    const double strong = 24.0;
    std::vector<std::vector<float>> images = gaussian_images(4000, shape, strong, rng);
    PatchCovarianceOptions opts;
    opts.patch_size = 4;
    PatchSpectrum spectrum = patch_covariances(images, shape, opts);
    REQUIRE(spectrum.patches.size() == 4);
    for (const auto& p : spectrum.patches) {
        CHECK(p.n_k == 16);
        // rank-1 signal splits evenly across patches: top eigenvalue near
        // strong * (16/64) + 1, within a generous sampling band
        double expected = strong * 16.0 / 64.0 + 1.0;
        CHECK(p.lambda() == doctest::Approx(expected).epsilon(0.15));
    }

    // order invariance: feeding images in reverse gives the same spectra
    std::vector<std::vector<float>> reversed(images.rbegin(), images.rend());
    PatchSpectrum spectrum_rev = patch_covariances(reversed, shape, opts);
    for (std::size_t k = 0; k < spectrum.patches.size(); ++k)
        CHECK(spectrum.patches[k].lambda() ==
              doctest::Approx(spectrum_rev.patches[k].lambda()).epsilon(1e-8));

    // chunked parallel accumulation agrees with one serial chunk
    PatchCovarianceOptions serial = opts;
    serial.parallel_chunk = images.size();
    PatchCovarianceOptions chunked = opts;
    chunked.parallel_chunk = 257;
    PatchSpectrum a = patch_covariances(images, shape, serial);
    PatchSpectrum b = patch_covariances(images, shape, chunked);
    for (std::size_t k = 0; k < a.patches.size(); ++k)
        CHECK(a.patches[k].lambda() == doctest::Approx(b.patches[k].lambda()).epsilon(1e-8));
}

TEST_CASE("degenerate datasets") {
    ImageShape shape{4, 4, 1};
    std::vector<std::vector<float>> constant(5, std::vector<float>(16, 0.25f));
    PatchCovarianceOptions opts;
    opts.patch_size = 2;
    PatchSpectrum spectrum = patch_covariances(constant, shape, opts);
    for (const auto& p : spectrum.patches) CHECK(p.lambda() == 0.0);

    CHECK_THROWS_AS(patch_covariances({constant[0]}, shape, opts), std::invalid_argument);
    PatchCovarianceOptions bad;
    bad.patch_size = 3;
    CHECK_THROWS_AS(patch_covariances(constant, shape, bad), std::invalid_argument);
}

TEST_CASE("full-spectrum deflation mode") {
    ImageShape shape{4, 4, 1};
    std::mt19937_64 rng(3);
    std::vector<std::vector<float>> images = gaussian_images(3000, shape, 8.0, rng);
    PatchCovarianceOptions opts;
    opts.patch_size = 4;
    opts.full_spectrum = true;
    PatchSpectrum spectrum = patch_covariances(images, shape, opts);
    REQUIRE(spectrum.patches.size() == 1);
    CHECK(static_cast<int>(spectrum.patches[0].eigenvalues.size()) == 16);
    // sorted descending with the strong direction on top
    const auto& ev = spectrum.patches[0].eigenvalues;
    for (std::size_t i = 1; i < ev.size(); ++i) CHECK(ev[i] <= ev[i - 1] + 1e-9);
    CHECK(ev[0] > 5.0);
}

TEST_CASE("spectrum csv round trip and diagnostics") {
    PatchSpectrum spectrum;
    SpectrumPatch a;
    a.id = "0";
    a.n_k = 192;
    a.eigenvalues = {44.4};
    SpectrumPatch b;
    b.id = "1";
    b.n_k = 3;
    b.eigenvalues = {3.0, 2.0, 1.0};
    spectrum.patches = {a, b};

    TempDir tmp;
    fs::path file = tmp.path / "spectrum.csv";
    write_spectrum(spectrum, file.string());
    PatchSpectrum back = read_spectrum(file.string());
    REQUIRE(back.patches.size() == 2);
    CHECK(back.patches[0].lambda() == 44.4);
    CHECK(back.patches[1].eigenvalues == std::vector<double>{3.0, 2.0, 1.0});

    PatchSpectrum hand = spectrum_from_csv_text("0,4,2.5\n1,4,1.5\n");
    CHECK(hand.patches.size() == 2);
    CHECK(hand.patches[0].lambda() == 2.5);

    CHECK_THROWS_WITH_AS(spectrum_from_csv_text("0,4\n"),
                         "spectrum csv: line 1 needs at least patch,n_k,lambda", std::invalid_argument);
    CHECK_THROWS_AS(spectrum_from_csv_text("0,x,2.5\n"), std::invalid_argument);
    CHECK_THROWS_AS(read_spectrum("/nonexistent/f.csv"), IoError);
}

TEST_CASE("image permutation leaves per-patch eigenvalues unchanged") {
    ImageShape shape{4, 4, 1};
    std::mt19937_64 rng(17);
    std::vector<std::vector<float>> images = gaussian_images(500, shape, 5.0, rng);
    PatchCovarianceOptions opts;
    opts.patch_size = 2;
    PatchSpectrum base = patch_covariances(images, shape, opts);
    std::shuffle(images.begin(), images.end(), rng);
    PatchSpectrum shuffled = patch_covariances(images, shape, opts);
    for (std::size_t k = 0; k < base.patches.size(); ++k)
        CHECK(base.patches[k].lambda() == doctest::Approx(shuffled.patches[k].lambda()).epsilon(1e-8));
}
