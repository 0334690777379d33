#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pifs/attractor.hpp"

namespace pifs {

enum class PixelNormalization {
    pm1,   // [0,255] -> [-1,1] via 2x/255 - 1 (default)
    unit,  // [0,255] -> [0,1]
};

struct ImageShape {
    int height = 0;
    int width = 0;
    int channels = 0;
    int pixels() const { return height * width * channels; }
};

// Streams images as float vectors in channel-planar layout (c, y, x).
using ImageVisitor = std::function<void(const std::vector<float>&)>;

// CIFAR-10 binary batches: 3073-byte records, 1 label byte followed by 3072
// channel-planar pixel bytes. File sizes must be exact multiples of 3073.
// Returns the number of images visited.
std::size_t read_cifar10(const std::vector<std::string>& paths, PixelNormalization norm,
                         const ImageVisitor& visit);

// Raw float32 container: 16-byte header [magic "PSPC"][u32 count][u32 height]
// [u32 (width << 16) | channels], all little-endian, then count*H*W*C
// little-endian floats, channel-planar. No normalization is applied.
std::size_t read_raw_f32(const std::string& path, ImageShape& shape, const ImageVisitor& visit);
void write_raw_f32(const std::string& path, const ImageShape& shape,
                   const std::vector<std::vector<float>>& images);

// Running per-patch mean and scatter; merge order of partials is fixed by the
// caller for reproducibility.
class CovarianceAccumulator {
public:
    explicit CovarianceAccumulator(int dim);
    void add(const std::vector<double>& x);
    void merge(const CovarianceAccumulator& other);
    // Sample covariance ((n-1) denominator), dataset-mean centered.
    std::vector<double> covariance() const;  // row-major dim x dim
    std::size_t count() const { return count_; }
    int dim() const { return dim_; }

private:
    int dim_;
    std::size_t count_ = 0;
    std::vector<double> sum_;      // per-coordinate sums
    std::vector<double> scatter_;  // sum of outer products, row-major
};

struct PowerIterationOptions {
    double tolerance = 1e-9;        // relative residual ||Cv - lambda v|| <= tol*lambda
    int max_iterations = 10000;
    std::uint64_t seed = 0x9e3779b97f4a7c15ull;
};

// Leading eigenvalue of a symmetric PSD matrix (row-major). Deterministic
// seeded start; a zero matrix reports 0.
double leading_eigenvalue(const std::vector<double>& matrix, int dim,
                          const PowerIterationOptions& opts = {});

// Top eigenvalues by repeated deflation (dim <= 256 guarded by the caller).
std::vector<double> eigenvalues_by_deflation(std::vector<double> matrix, int dim, int count,
                                             const PowerIterationOptions& opts = {});

struct PatchCovarianceOptions {
    int patch_size = 8;
    bool full_spectrum = false;           // deflate every direction (n_k <= 256)
    PowerIterationOptions power;
    std::size_t parallel_chunk = 2048;    // images per accumulation chunk
};

// Partitions images into non-overlapping patches, accumulates per-patch
// covariances, and extracts spectra. Dimensions must divide evenly and at
// least 2 images are required.
PatchSpectrum patch_covariances(const std::vector<std::vector<float>>& images, const ImageShape& shape,
                                const PatchCovarianceOptions& opts = {});

// Streaming variant for datasets too large to hold: feed() images, then
// finalize().
class PatchCovarianceRun {
public:
    PatchCovarianceRun(const ImageShape& shape, const PatchCovarianceOptions& opts);
    void feed(const std::vector<float>& image);
    void merge_from(const PatchCovarianceRun& other);
    PatchSpectrum finalize() const;

private:
    ImageShape shape_;
    PatchCovarianceOptions opts_;
    int patches_per_side_;
    std::vector<CovarianceAccumulator> accumulators_;
};

// Spectrum CSV: "patch,n_k,lambda" per row (isotropic) or
// "patch,n_k,mu_1,...,mu_{n_k}" (full). Errors carry line/column diagnostics.
std::string spectrum_csv(const PatchSpectrum& spectrum);
PatchSpectrum spectrum_from_csv_text(const std::string& text);
void write_spectrum(const PatchSpectrum& spectrum, const std::string& path);
PatchSpectrum read_spectrum(const std::string& path);

}  // namespace pifs
