#include "pifs/patches.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "pifs/numerics.hpp"

namespace pifs {

namespace {

constexpr std::size_t kCifarRecordBytes = 3073;
constexpr int kCifarPixels = 3072;

double normalize_byte(std::uint8_t b, PixelNormalization norm) {
    return norm == PixelNormalization::pm1 ? 2.0 * b / 255.0 - 1.0 : b / 255.0;
}

std::uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

std::size_t read_cifar10(const std::vector<std::string>& paths, PixelNormalization norm,
                         const ImageVisitor& visit) {
    if (paths.empty()) throw std::invalid_argument("read_cifar10: empty file list");
    std::size_t total = 0;
    std::vector<char> record(kCifarRecordBytes);
    std::vector<float> image(kCifarPixels);
    for (const auto& path : paths) {
        std::ifstream in(path, std::ios::binary | std::ios::ate);
        if (!in) throw IoError("read_cifar10: cannot open " + path);
        std::streamsize size = in.tellg();
        if (size <= 0 || size % static_cast<std::streamsize>(kCifarRecordBytes) != 0)
            throw std::invalid_argument("read_cifar10: " + path + " is not a multiple of 3073 bytes");
        in.seekg(0);
        std::size_t records = static_cast<std::size_t>(size) / kCifarRecordBytes;
        for (std::size_t r = 0; r < records; ++r) {
            if (!in.read(record.data(), record.size())) throw IoError("read_cifar10: short read in " + path);
            for (int i = 0; i < kCifarPixels; ++i)
                image[i] = static_cast<float>(
                    normalize_byte(static_cast<std::uint8_t>(record[1 + i]), norm));
            visit(image);
            ++total;
        }
    }
    return total;
}

std::size_t read_raw_f32(const std::string& path, ImageShape& shape, const ImageVisitor& visit) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_raw_f32: cannot open " + path);
    unsigned char header[16];
    if (!in.read(reinterpret_cast<char*>(header), 16))
        throw std::invalid_argument("read_raw_f32: " + path + " shorter than the 16-byte header");
    if (std::memcmp(header, "PSPC", 4) != 0)
        throw std::invalid_argument("read_raw_f32: bad magic in " + path);
    std::uint32_t count = read_u32_le(header + 4);
    std::uint32_t height = read_u32_le(header + 8);
    std::uint32_t packed = read_u32_le(header + 12);
    shape.height = static_cast<int>(height);
    shape.width = static_cast<int>(packed >> 16);
    shape.channels = static_cast<int>(packed & 0xffff);
    if (shape.pixels() <= 0) throw std::invalid_argument("read_raw_f32: degenerate shape in " + path);
    std::vector<float> image(static_cast<std::size_t>(shape.pixels()));
    for (std::uint32_t i = 0; i < count; ++i) {
        if (!in.read(reinterpret_cast<char*>(image.data()),
                     static_cast<std::streamsize>(image.size() * sizeof(float))))
            throw std::invalid_argument("read_raw_f32: truncated payload in " + path);
        visit(image);
    }
    return count;
}

void write_raw_f32(const std::string& path, const ImageShape& shape,
                   const std::vector<std::vector<float>>& images) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_raw_f32: cannot open " + path);
    out.write("PSPC", 4);
    write_u32_le(out, static_cast<std::uint32_t>(images.size()));
    write_u32_le(out, static_cast<std::uint32_t>(shape.height));
    write_u32_le(out, (static_cast<std::uint32_t>(shape.width) << 16) |
                          static_cast<std::uint32_t>(shape.channels));
    for (const auto& img : images) {
        if (static_cast<int>(img.size()) != shape.pixels())
            throw std::invalid_argument("write_raw_f32: image size does not match shape");
        out.write(reinterpret_cast<const char*>(img.data()),
                  static_cast<std::streamsize>(img.size() * sizeof(float)));
    }
    if (!out) throw IoError("write_raw_f32: write failed for " + path);
}

CovarianceAccumulator::CovarianceAccumulator(int dim)
    : dim_(dim), sum_(static_cast<std::size_t>(dim), 0.0),
      scatter_(static_cast<std::size_t>(dim) * dim, 0.0) {
    if (dim < 1) throw std::invalid_argument("CovarianceAccumulator: dim must be >= 1");
}

void CovarianceAccumulator::add(const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != dim_)
        throw std::invalid_argument("CovarianceAccumulator: dimension mismatch");
    for (int i = 0; i < dim_; ++i) {
        sum_[i] += x[i];
        double* row = &scatter_[static_cast<std::size_t>(i) * dim_];
        for (int j = i; j < dim_; ++j) row[j] += x[i] * x[j];
    }
    ++count_;
}

void CovarianceAccumulator::merge(const CovarianceAccumulator& other) {
    if (other.dim_ != dim_) throw std::invalid_argument("CovarianceAccumulator: merge dimension mismatch");
    for (std::size_t i = 0; i < sum_.size(); ++i) sum_[i] += other.sum_[i];
    for (std::size_t i = 0; i < scatter_.size(); ++i) scatter_[i] += other.scatter_[i];
    count_ += other.count_;
}

std::vector<double> CovarianceAccumulator::covariance() const {
    if (count_ < 2) throw std::invalid_argument("CovarianceAccumulator: need at least 2 samples");
    std::vector<double> cov(scatter_.size());
    const double n = static_cast<double>(count_);
    for (int i = 0; i < dim_; ++i) {
        for (int j = i; j < dim_; ++j) {
            double c = (scatter_[static_cast<std::size_t>(i) * dim_ + j] - sum_[i] * sum_[j] / n) / (n - 1.0);
            cov[static_cast<std::size_t>(i) * dim_ + j] = c;
            cov[static_cast<std::size_t>(j) * dim_ + i] = c;
        }
    }
    return cov;
}

namespace {

void mat_vec(const std::vector<double>& m, int dim, const std::vector<double>& v, std::vector<double>& out) {
    for (int i = 0; i < dim; ++i) {
        double acc = 0.0;
        const double* row = &m[static_cast<std::size_t>(i) * dim];
        for (int j = 0; j < dim; ++j) acc += row[j] * v[j];
        out[i] = acc;
    }
}

double norm2(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

}  // namespace

namespace {

// Power iteration with a residual stopping rule ||Cv - lambda v|| <= tol*lambda;
// for symmetric matrices that bounds the eigenvalue error by tol*lambda.
// Returns the eigenvalue and leaves the eigenvector in v.
double power_iterate(const std::vector<double>& matrix, int dim, std::vector<double>& v,
                     const PowerIterationOptions& opts, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    v.resize(static_cast<std::size_t>(dim));
    for (double& x : v) x = normal(rng);
    double n = norm2(v);
    for (double& x : v) x /= n;
    std::vector<double> w(static_cast<std::size_t>(dim));
    double lambda = 0.0;
    for (int it = 0; it < opts.max_iterations; ++it) {
        mat_vec(matrix, dim, v, w);
        double wn = norm2(w);
        if (wn == 0.0) return 0.0;  // zero-variance patch
        lambda = 0.0;
        for (int i = 0; i < dim; ++i) lambda += v[i] * w[i];
        double residual_sq = 0.0;
        for (int i = 0; i < dim; ++i) {
            double r = w[i] - lambda * v[i];
            residual_sq += r * r;
        }
        for (int i = 0; i < dim; ++i) v[i] = w[i] / wn;
        if (std::sqrt(residual_sq) <= opts.tolerance * std::abs(lambda)) return lambda;
    }
    return lambda;
}

}  // namespace

double leading_eigenvalue(const std::vector<double>& matrix, int dim, const PowerIterationOptions& opts) {
    if (static_cast<int>(matrix.size()) != dim * dim)
        throw std::invalid_argument("leading_eigenvalue: matrix size mismatch");
    std::vector<double> v;
    return power_iterate(matrix, dim, v, opts, opts.seed);
}

std::vector<double> eigenvalues_by_deflation(std::vector<double> matrix, int dim, int count,
                                             const PowerIterationOptions& opts) {
    if (count < 1 || count > dim) throw std::invalid_argument("eigenvalues_by_deflation: bad count");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    std::vector<double> v;
    for (int k = 0; k < count; ++k) {
        double lambda = power_iterate(matrix, dim, v, opts, opts.seed + static_cast<std::uint64_t>(k));
        out.push_back(std::max(lambda, 0.0));
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                matrix[static_cast<std::size_t>(i) * dim + j] -= lambda * v[i] * v[j];
    }
    std::sort(out.begin(), out.end(), std::greater<double>());
    return out;
}

PatchCovarianceRun::PatchCovarianceRun(const ImageShape& shape, const PatchCovarianceOptions& opts)
    : shape_(shape), opts_(opts) {
    if (opts.patch_size < 1) throw std::invalid_argument("patch_covariances: patch size must be >= 1");
    if (shape.height % opts.patch_size != 0 || shape.width % opts.patch_size != 0)
        throw std::invalid_argument("patch_covariances: image dimensions must divide by the patch size");
    patches_per_side_ = shape.width / opts.patch_size;
    int patch_dim = opts.patch_size * opts.patch_size * shape.channels;
    int n_patches = (shape.height / opts.patch_size) * patches_per_side_;
    if (opts.full_spectrum && patch_dim > 256)
        throw std::invalid_argument("patch_covariances: full spectra capped at patch dimension 256");
    accumulators_.assign(static_cast<std::size_t>(n_patches), CovarianceAccumulator(patch_dim));
}

void PatchCovarianceRun::feed(const std::vector<float>& image) {
    if (static_cast<int>(image.size()) != shape_.pixels())
        throw std::invalid_argument("patch_covariances: image size mismatch");
    const int ps = opts_.patch_size;
    const int plane = shape_.height * shape_.width;
    std::vector<double> patch(static_cast<std::size_t>(ps) * ps * shape_.channels);
    for (int py = 0; py < shape_.height / ps; ++py) {
        for (int px = 0; px < patches_per_side_; ++px) {
            std::size_t idx = 0;
            for (int c = 0; c < shape_.channels; ++c)
                for (int y = 0; y < ps; ++y)
                    for (int x = 0; x < ps; ++x)
                        patch[idx++] = image[static_cast<std::size_t>(c) * plane +
                                             static_cast<std::size_t>(py * ps + y) * shape_.width +
                                             (px * ps + x)];
            accumulators_[static_cast<std::size_t>(py) * patches_per_side_ + px].add(patch);
        }
    }
}

PatchSpectrum PatchCovarianceRun::finalize() const {
    PatchSpectrum spectrum;
    for (std::size_t k = 0; k < accumulators_.size(); ++k) {
        const auto& acc = accumulators_[k];
        std::vector<double> cov = acc.covariance();
        SpectrumPatch patch;
        patch.id = std::to_string(k);
        patch.n_k = acc.dim();
        if (opts_.full_spectrum)
            patch.eigenvalues = eigenvalues_by_deflation(std::move(cov), acc.dim(), acc.dim(), opts_.power);
        else
            patch.eigenvalues = {leading_eigenvalue(cov, acc.dim(), opts_.power)};
        spectrum.patches.push_back(std::move(patch));
    }
    return spectrum;
}

void PatchCovarianceRun::merge_from(const PatchCovarianceRun& other) {
    if (other.accumulators_.size() != accumulators_.size())
        throw std::invalid_argument("patch_covariances: merge layout mismatch");
    for (std::size_t k = 0; k < accumulators_.size(); ++k) accumulators_[k].merge(other.accumulators_[k]);
}

PatchSpectrum patch_covariances(const std::vector<std::vector<float>>& images, const ImageShape& shape,
                                const PatchCovarianceOptions& opts) {
    if (images.size() < 2) throw std::invalid_argument("patch_covariances: need at least 2 images");
    // image-parallel accumulation into per-chunk runs, merged in fixed order
    const std::size_t chunk = std::max<std::size_t>(opts.parallel_chunk, 1);
    const std::size_t n_chunks = (images.size() + chunk - 1) / chunk;
    std::vector<PatchCovarianceRun> runs(n_chunks, PatchCovarianceRun(shape, opts));
    parallel_for(n_chunks, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            std::size_t lo = c * chunk, hi = std::min(images.size(), lo + chunk);
            for (std::size_t i = lo; i < hi; ++i) runs[c].feed(images[i]);
        }
    });
    for (std::size_t c = 1; c < n_chunks; ++c) runs[0].merge_from(runs[c]);
    return runs[0].finalize();
}

std::string spectrum_csv(const PatchSpectrum& spectrum) {
    std::ostringstream os;
    for (const auto& p : spectrum.patches) {
        os << p.id << ',' << p.n_k;
        for (double mu : p.eigenvalues) os << ',' << format_full(mu);
        os << '\n';
    }
    return os.str();
}

PatchSpectrum spectrum_from_csv_text(const std::string& text) {
    PatchSpectrum spectrum;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("patch,", 0) == 0) continue;  // optional header
        std::istringstream row(line);
        std::string cell;
        SpectrumPatch patch;
        int col = 0;
        try {
            while (std::getline(row, cell, ',')) {
                ++col;
                if (col == 1)
                    patch.id = cell;
                else if (col == 2)
                    patch.n_k = std::stoi(cell);
                else
                    patch.eigenvalues.push_back(std::stod(cell));
            }
        } catch (const std::exception&) {
            throw std::invalid_argument("spectrum csv: malformed value at line " + std::to_string(lineno) +
                                        ", column " + std::to_string(col));
        }
        if (col < 3)
            throw std::invalid_argument("spectrum csv: line " + std::to_string(lineno) +
                                        " needs at least patch,n_k,lambda");
        spectrum.patches.push_back(std::move(patch));
    }
    spectrum.validate();
    return spectrum;
}

void write_spectrum(const PatchSpectrum& spectrum, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_spectrum: cannot open " + path);
    out << "patch,n_k,lambda\n" << spectrum_csv(spectrum);
    if (!out) throw IoError("write_spectrum: write failed for " + path);
}

PatchSpectrum read_spectrum(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_spectrum: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return spectrum_from_csv_text(buf.str());
}

}  // namespace pifs
