#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pifs/stats.hpp"

using namespace pifs::stats;

namespace {

// rank-then-Pearson oracle in long double, no shared code with the library path
double spearman_oracle(std::vector<double> a, std::vector<double> b) {
    auto rank = [](const std::vector<double>& xs) {
        std::vector<long double> r(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            long double less = 0, equal = 0;
            for (std::size_t j = 0; j < xs.size(); ++j) {
                if (xs[j] < xs[i]) ++less;
                if (xs[j] == xs[i]) ++equal;
            }
            r[i] = less + 0.5L * (equal + 1.0L);
        }
        return r;
    };
    auto ra = rank(a), rb = rank(b);
    long double ma = 0, mb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= ra.size();
    mb /= rb.size();
    long double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return static_cast<double>(sab / std::sqrt(saa * sbb));
}

}  // namespace

TEST_CASE("cv follows the sample (n-1) convention") {
    CHECK(cv({1.0, 2.0, 3.0}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(cv({4.0, 4.0, 4.0, 4.0}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(cv({1.0, -1.0}), std::invalid_argument);  // zero mean
}

TEST_CASE("population vs sample std") {
    std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    CHECK(stddev(xs) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
    CHECK(stddev_population(xs) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
}

TEST_CASE("cv matches a high-precision oracle on random data") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(0.5, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> xs(64);
        for (double& x : xs) x = dist(rng);
        long double m = 0;
        for (double x : xs) m += x;
        m /= xs.size();
        long double ss = 0;
        for (double x : xs) ss += (x - m) * (x - m);
        double oracle = static_cast<double>(std::sqrt(ss / (xs.size() - 1)) / m);
        CHECK(cv(xs) == doctest::Approx(oracle).epsilon(1e-10));
    }
}

TEST_CASE("spearman endpoints") {
    std::vector<double> a{1, 2, 3, 4, 5};
    std::vector<double> up{10, 20, 30, 40, 50};
    std::vector<double> down{5, 4, 3, 2, 1};
    CHECK(spearman(a, up) == doctest::Approx(1.0));
    CHECK(spearman(a, down) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(spearman(a, {1, 1, 1, 1, 1}), std::invalid_argument);
}

TEST_CASE("spearman equals the brute-force rank-then-pearson oracle, n <= 10") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> val(0, 6);  // ties likely
    std::uniform_int_distribution<int> len(3, 10);
    for (int trial = 0; trial < 200; ++trial) {
        int n = len(rng);
        std::vector<double> a(n), b(n);
        for (int i = 0; i < n; ++i) {
            a[i] = val(rng);
            b[i] = val(rng);
        }
        bool aconst = std::all_of(a.begin(), a.end(), [&](double x) { return x == a[0]; });
        bool bconst = std::all_of(b.begin(), b.end(), [&](double x) { return x == b[0]; });
        if (aconst || bconst) continue;
        CHECK(spearman(a, b) == doctest::Approx(spearman_oracle(a, b)).epsilon(1e-10));
    }
}

TEST_CASE("spearman p-values: exact permutation below n = 10") {
    std::vector<double> a{1, 2, 3, 4, 5};
    std::vector<double> b{2, 1, 4, 3, 5};
    SpearmanResult res = spearman_test(a, b);
    CHECK(res.exact);
    CHECK(res.rho == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(res.p_value == doctest::Approx(0.13333333333333333).epsilon(1e-12));
}

TEST_CASE("spearman p-values: t approximation at n >= 10") {
    std::vector<double> a{3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8};
    std::vector<double> b{2, 7, 1, 8, 2, 8, 1, 8, 2, 8, 4, 5};
    SpearmanResult res = spearman_test(a, b);
    CHECK_FALSE(res.exact);
    CHECK(res.rho == doctest::Approx(0.1415796863640157).epsilon(1e-10));
    CHECK(res.p_value == doctest::Approx(0.6607268292868229).epsilon(1e-8));
}

TEST_CASE("student t machinery against reference values") {
    CHECK(student_t_cdf(1.5, 9.0) == doctest::Approx(0.9160746719714626).epsilon(1e-12));
    CHECK(student_t_quantile(0.975, 7.0) == doctest::Approx(2.3646242515927844).epsilon(1e-10));
    CHECK(incomplete_beta(2.5, 3.5, 0.4) == doctest::Approx(0.4869041915261176).epsilon(1e-12));
}

TEST_CASE("ols exact lines") {
    std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * v + 1.0);
    OlsFit fit = ols(x, y);
    CHECK(fit.slope == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(fit.intercept == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("ols_loglog recovers power laws") {
    std::vector<double> x{1, 2, 4, 8, 16};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * std::sqrt(v));
    OlsFit fit = ols_loglog(x, y);
    CHECK(fit.slope == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(std::exp(fit.intercept) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK_THROWS_AS(ols_loglog({1.0, -2.0, 3.0}, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("ols with CI against a reference fit") {
    std::vector<double> x{1, 2, 3, 4, 5, 6};
    std::vector<double> y{2.1, 3.9, 6.2, 8.1, 9.8, 12.3};
    OlsFit fit = ols(x, y);
    CHECK(fit.slope == doctest::Approx(2.0171428571428573).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(0.0066666666666659324).epsilon(1e-6));
    CHECK(fit.r2 == doctest::Approx(0.9976435109818261).epsilon(1e-12));
    CHECK(fit.ci95_slope_lo == doctest::Approx(1.8810482954418997).epsilon(1e-9));
    CHECK(fit.ci95_slope_hi == doctest::Approx(2.153237418843815).epsilon(1e-9));
}

TEST_CASE("ols matches the normal-equations oracle on random data") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::uniform_real_distribution<double> xd(0.5, 10.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(20), y(20);
        for (int i = 0; i < 20; ++i) {
            x[i] = xd(rng);
            y[i] = 1.7 * x[i] - 0.4 + noise(rng);
        }
        // textbook normal equations in long double
        long double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int i = 0; i < 20; ++i) {
            sx += x[i];
            sy += y[i];
            sxx += x[i] * x[i];
            sxy += x[i] * y[i];
        }
        long double n = 20;
        long double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        long double intercept = (sy - slope * sx) / n;
        OlsFit fit = ols(x, y);
        CHECK(fit.slope == doctest::Approx(static_cast<double>(slope)).epsilon(1e-10));
        CHECK(fit.intercept == doctest::Approx(static_cast<double>(intercept)).epsilon(1e-10));
    }
}

TEST_CASE("ranks average ties") {
    std::vector<double> r = ranks({10.0, 20.0, 20.0, 30.0});
    CHECK(r[0] == 1.0);
    CHECK(r[1] == 2.5);
    CHECK(r[2] == 2.5);
    CHECK(r[3] == 4.0);
}
