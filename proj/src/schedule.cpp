#include "pifs/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "pifs/numerics.hpp"

namespace pifs {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kAlphaBarFloor = 1e-12;
constexpr double kMaxBeta = 0.999;

void validate(const Schedule& s) {
    if (s.T < 1) throw std::invalid_argument("schedule: T must be >= 1");
    if (s.alpha_bar.size() != static_cast<std::size_t>(s.T) + 1)
        throw std::invalid_argument("schedule: alpha_bar must have T+1 entries");
    if (s.alpha_bar[0] != 1.0) throw std::invalid_argument("schedule: alpha_bar[0] must equal 1");
    for (int t = 1; t <= s.T; ++t) {
        double a = s.alpha_bar[t];
        if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("schedule: alpha_bar outside (0,1]");
        if (!(a < s.alpha_bar[t - 1]))
            throw std::invalid_argument("schedule: alpha_bar must be strictly decreasing");
    }
}

}  // namespace

int Schedule::timestep_label(int t) const {
    if (!executed_timesteps.empty()) return executed_timesteps[static_cast<std::size_t>(t) - 1];
    return t;
}

Schedule make_linear(int T, double beta1, double betaT) {
    if (T < 1) throw std::invalid_argument("make_linear: T must be >= 1");
    if (!(beta1 > 0.0 && beta1 <= betaT && betaT < 1.0))
        throw std::invalid_argument("make_linear: need 0 < beta1 <= betaT < 1");
    Schedule s;
    s.T = T;
    s.kind = ScheduleKind::linear;
    s.beta1 = beta1;
    s.betaT = betaT;
    s.alpha_bar.resize(T + 1);
    s.alpha_bar[0] = 1.0;
    double acc = 1.0;
    for (int t = 1; t <= T; ++t) {
        double beta = (T == 1) ? beta1 : beta1 + (betaT - beta1) * (t - 1) / static_cast<double>(T - 1);
        acc *= 1.0 - beta;
        s.alpha_bar[t] = acc;
    }
    validate(s);
    return s;
}

Schedule make_cosine(int T, double s_off, bool beta_clip) {
    if (T < 1) throw std::invalid_argument("make_cosine: T must be >= 1");
    if (s_off < 0.0) throw std::invalid_argument("make_cosine: offset must be >= 0");
    auto f = [&](double t) {
        double c = std::cos((t / T + s_off) / (1.0 + s_off) * kPi / 2.0);
        return c * c;
    };
    Schedule s;
    s.T = T;
    s.kind = ScheduleKind::cosine;
    s.s_offset = s_off;
    s.beta_clip = beta_clip;
    s.alpha_bar.resize(T + 1);
    s.alpha_bar[0] = 1.0;
    const double f0 = f(0.0);
    if (beta_clip) {
        double acc = 1.0;
        for (int t = 1; t <= T; ++t) {
            double beta = std::min(1.0 - f(t) / f(t - 1), kMaxBeta);
            acc *= 1.0 - beta;
            s.alpha_bar[t] = acc;
        }
    } else {
        for (int t = 1; t <= T; ++t) s.alpha_bar[t] = f(t) / f0;
    }
    s.alpha_bar[T] = std::max(s.alpha_bar[T], kAlphaBarFloor);
    validate(s);
    return s;
}

Schedule make_custom(std::vector<double> alpha_bar) {
    Schedule s;
    s.T = static_cast<int>(alpha_bar.size()) - 1;
    s.kind = ScheduleKind::custom;
    s.alpha_bar = std::move(alpha_bar);
    validate(s);
    return s;
}

Schedule subsample(const Schedule& parent, const std::vector<int>& executed) {
    if (executed.empty()) throw std::invalid_argument("subsample: executed list is empty");
    for (std::size_t i = 0; i < executed.size(); ++i) {
        if (executed[i] < 1 || executed[i] > parent.T)
            throw std::invalid_argument("subsample: executed timestep outside 1..T");
        if (i > 0 && executed[i] <= executed[i - 1])
            throw std::invalid_argument("subsample: executed timesteps must be strictly increasing");
    }
    Schedule s;
    s.T = static_cast<int>(executed.size());
    s.kind = ScheduleKind::subsampled;
    s.parent_kind = parent.kind;
    s.executed_timesteps = executed;
    s.alpha_bar.resize(s.T + 1);
    s.alpha_bar[0] = 1.0;
    for (int i = 0; i < s.T; ++i) s.alpha_bar[i + 1] = parent.alpha_bar[executed[i]];
    validate(s);
    return s;
}

StepGeometry step_geometry(const Schedule& s, int t) {
    if (t < 1 || t > s.T) throw std::invalid_argument("step_geometry: t outside 1..T");
    StepGeometry g;
    g.t = t;
    g.alpha_bar_prev = s.alpha_bar[t - 1];
    g.alpha_bar_t = s.alpha_bar[t];
    g.v_prev = 1.0 - g.alpha_bar_prev;
    g.v_t = 1.0 - g.alpha_bar_t;
    g.expand_ratio = std::sqrt(g.alpha_bar_prev / g.alpha_bar_t);
    g.b_t = std::sqrt(g.v_prev) - g.expand_ratio * std::sqrt(g.v_t);
    if (!(g.b_t < 0.0)) throw std::logic_error("step_geometry: b_t must be negative");
    g.L_star = (g.expand_ratio - 1.0) / -g.b_t;
    g.snr_t = (g.v_t == 0.0) ? std::numeric_limits<double>::infinity() : g.alpha_bar_t / g.v_t;
    g.logsnr_t = std::log(g.snr_t);
    return g;
}

std::vector<double> l_star_values(const Schedule& s) {
    std::vector<double> out(static_cast<std::size_t>(s.T));
    for (int t = 1; t <= s.T; ++t) out[t - 1] = step_geometry(s, t).L_star;
    return out;
}

ThresholdStats threshold_stats(const Schedule& s) {
    std::vector<double> L = l_star_values(s);
    ThresholdStats st;
    st.count = s.T;
    CompensatedSum sum;
    for (double x : L) sum.add(x);
    st.mean = sum.value() / st.count;
    CompensatedSum sq;
    for (double x : L) sq.add((x - st.mean) * (x - st.mean));
    st.std = std::sqrt(sq.value() / st.count);
    st.cv = st.std / st.mean;
    auto min_it = std::min_element(L.begin(), L.end());
    st.min_value = *min_it;
    st.min_timestep = s.timestep_label(static_cast<int>(min_it - L.begin()) + 1);
    st.value_at_finest_executed_step = L.front();
    return st;
}

Schedule logsnr_shift(const Schedule& s, double d, double d_base) {
    if (!(d > 0.0 && d_base > 0.0)) throw std::invalid_argument("logsnr_shift: resolutions must be positive");
    const double scale = (d_base / d) * (d_base / d);  // e^c with c = 2 log(d_base/d)
    std::vector<double> ab(static_cast<std::size_t>(s.T) + 1);
    ab[0] = 1.0;
    for (int t = 1; t <= s.T; ++t) {
        double v = 1.0 - s.alpha_bar[t];
        double snr = s.alpha_bar[t] / v * scale;
        double shifted = snr / (1.0 + snr);
        if (!(shifted > 0.0))
            throw std::invalid_argument("logsnr_shift: alpha_bar underflow at t=" + std::to_string(t));
        ab[t] = shifted;
    }
    Schedule out = make_custom(std::move(ab));
    if (!s.executed_timesteps.empty()) out.executed_timesteps = s.executed_timesteps;
    return out;
}

std::vector<double> minsnr_weights(const Schedule& s, double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("minsnr_weights: gamma must be positive");
    std::vector<double> w(static_cast<std::size_t>(s.T));
    for (int t = 1; t <= s.T; ++t) {
        double snr = step_geometry(s, t).snr_t;
        w[t - 1] = std::min(snr, gamma) / snr;
    }
    return w;
}

std::vector<double> collage_weights(const Schedule& s) {
    std::vector<double> w(static_cast<std::size_t>(s.T));
    for (int t = 1; t <= s.T; ++t) {
        const StepGeometry g = step_geometry(s, t);
        if (g.v_t == 0.0) throw std::invalid_argument("collage_weights: v_t = 0 at t=" + std::to_string(t));
        w[t - 1] = g.snr_t;
    }
    return w;
}

std::string geometry_csv(const Schedule& s) {
    std::ostringstream os;
    os << "t,alpha_bar_prev,alpha_bar,v,b,L_star,snr,logsnr\n";
    for (int t = 1; t <= s.T; ++t) {
        const StepGeometry g = step_geometry(s, t);
        os << s.timestep_label(t) << ',' << format_full(g.alpha_bar_prev) << ',' << format_full(g.alpha_bar_t)
           << ',' << format_full(g.v_t) << ',' << format_full(g.b_t) << ',' << format_full(g.L_star) << ','
           << format_full(g.snr_t) << ',' << format_full(g.logsnr_t) << '\n';
    }
    return os.str();
}

}  // namespace pifs
