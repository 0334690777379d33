#include "pifs/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "pifs/numerics.hpp"

namespace pifs::stats {

double mean(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean: empty input");
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value() / static_cast<double>(xs.size());
}

namespace {

double sum_sq_dev(const std::vector<double>& xs, double m) {
    CompensatedSum s;
    for (double x : xs) s.add((x - m) * (x - m));
    return s.value();
}

}  // namespace

double stddev(const std::vector<double>& xs) {
    if (xs.size() < 2) throw std::invalid_argument("stddev: need at least 2 values");
    return std::sqrt(sum_sq_dev(xs, mean(xs)) / static_cast<double>(xs.size() - 1));
}

double stddev_population(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("stddev_population: empty input");
    return std::sqrt(sum_sq_dev(xs, mean(xs)) / static_cast<double>(xs.size()));
}

double cv(const std::vector<double>& xs) {
    double m = mean(xs);
    if (m == 0.0) throw std::invalid_argument("cv: zero mean");
    return stddev(xs) / m;
}

double cv_population(const std::vector<double>& xs) {
    double m = mean(xs);
    if (m == 0.0) throw std::invalid_argument("cv_population: zero mean");
    return stddev_population(xs) / m;
}

std::vector<double> ranks(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return xs[i] < xs[j]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // mean of 1-based ranks i+1..j+1
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("pearson: length mismatch");
    if (a.size() < 2) throw std::invalid_argument("pearson: need at least 2 points");
    double ma = mean(a), mb = mean(b);
    CompensatedSum sab, saa, sbb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab.add((a[i] - ma) * (b[i] - mb));
        saa.add((a[i] - ma) * (a[i] - ma));
        sbb.add((b[i] - mb) * (b[i] - mb));
    }
    double den = std::sqrt(saa.value() * sbb.value());
    if (den == 0.0) throw std::invalid_argument("pearson: constant input");
    return sab.value() / den;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
    if (a.size() < 3) throw std::invalid_argument("spearman: need at least 3 points");
    return pearson(ranks(a), ranks(b));
}

namespace {

double rank_corr(const std::vector<double>& ra, const std::vector<double>& rb) {
    return pearson(ra, rb);
}

// Enumerates all n! pairings of the rank vectors (n <= 9).
double permutation_p(const std::vector<double>& ra, const std::vector<double>& rb, double rho_obs) {
    std::vector<double> perm = rb;
    std::sort(perm.begin(), perm.end());
    std::uint64_t total = 0, hits = 0;
    const double thresh = std::abs(rho_obs) - 1e-12;
    do {
        ++total;
        if (std::abs(rank_corr(ra, perm)) >= thresh) ++hits;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

SpearmanResult spearman_test(const std::vector<double>& a, const std::vector<double>& b) {
    double rho = spearman(a, b);
    const std::size_t n = a.size();
    SpearmanResult out;
    out.rho = rho;
    if (n < 10) {
        out.exact = true;
        out.p_value = permutation_p(ranks(a), ranks(b), rho);
    } else {
        out.exact = false;
        if (std::abs(rho) >= 1.0) {
            out.p_value = 0.0;
        } else {
            double dof = static_cast<double>(n - 2);
            double t = rho * std::sqrt(dof / (1.0 - rho * rho));
            out.p_value = 2.0 * (1.0 - student_t_cdf(std::abs(t), dof));
        }
    }
    return out;
}

OlsFit ols(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("ols: length mismatch");
    const std::size_t n = x.size();
    if (n < 3) throw std::invalid_argument("ols: need at least 3 points");
    double mx = mean(x), my = mean(y);
    CompensatedSum sxx, sxy, syy;
    for (std::size_t i = 0; i < n; ++i) {
        sxx.add((x[i] - mx) * (x[i] - mx));
        sxy.add((x[i] - mx) * (y[i] - my));
        syy.add((y[i] - my) * (y[i] - my));
    }
    if (sxx.value() == 0.0) throw std::invalid_argument("ols: degenerate x");
    OlsFit fit;
    fit.slope = sxy.value() / sxx.value();
    fit.intercept = my - fit.slope * mx;
    CompensatedSum rss;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - (fit.intercept + fit.slope * x[i]);
        rss.add(r * r);
    }
    fit.r2 = (syy.value() == 0.0) ? 1.0 : 1.0 - rss.value() / syy.value();
    double dof = static_cast<double>(n - 2);
    double se = std::sqrt((rss.value() / dof) / sxx.value());
    double tq = student_t_quantile(0.975, dof);
    fit.ci95_slope_lo = fit.slope - tq * se;
    fit.ci95_slope_hi = fit.slope + tq * se;
    return fit;
}

OlsFit ols_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("ols_loglog: length mismatch");
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0.0 || y[i] <= 0.0) throw std::invalid_argument("ols_loglog: inputs must be positive");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    return ols(lx, ly);
}

namespace {

// Lentz continued fraction for the incomplete beta.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("incomplete_beta: x outside [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                   a * std::log(x) + b * std::log1p(-x);
    double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0))
        return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
    if (dof <= 0.0) throw std::invalid_argument("student_t_cdf: dof must be positive");
    if (t == 0.0) return 0.5;
    double x = dof / (dof + t * t);
    double tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double dof) {
    if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("student_t_quantile: p outside (0,1)");
    if (p == 0.5) return 0.0;
    double lo = -1e3, hi = 1e3;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, dof) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace pifs::stats
