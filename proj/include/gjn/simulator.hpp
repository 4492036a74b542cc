// simulator.hpp - event-driven simulation of the piecewise deterministic network process.
//
// State is (L, R_e, R_s). Arrival clocks always run; a service clock runs only
// while its station is nonempty and is frozen, not resampled, while it is empty.

#ifndef GJN_SIMULATOR_HPP
#define GJN_SIMULATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gjn/error.hpp"
#include "gjn/gamma.hpp"
#include "gjn/network.hpp"
#include "gjn/tilt.hpp"

namespace gjn {

template <class Law>
class Simulator {
public:
    struct Counters {
        std::vector<long> exogenous;  // exogenous arrivals per station
        std::vector<long> routed_in;  // internal arrivals per station
        std::vector<long> departures;
        long events = 0;
        long invariant_violations = 0;
    };

    Simulator(const BasicNetwork<Law>& net, std::uint64_t seed, std::vector<long> L0 = {})
        : net_(net), rng_(seed), d_(net.dim()) {
        const auto ud = static_cast<std::size_t>(d_);
        L_ = L0.empty() ? std::vector<long>(ud, 0) : std::move(L0);
        if (static_cast<int>(L_.size()) != d_) throw ValidationError("initial state has the wrong dimension");
        c_.exogenous.assign(ud, 0);
        c_.routed_in.assign(ud, 0);
        c_.departures.assign(ud, 0);
        arr_expiry_.assign(ud, detail::kInf);
        svc_expiry_.assign(ud, detail::kInf);
        svc_remaining_.assign(ud, 0.0);
        route_cdf_.resize(ud);
        for (int i = 0; i < d_; ++i) {
            double acc = 0.0;
            for (int j = 0; j < d_; ++j) route_cdf_[static_cast<std::size_t>(i)].push_back(acc += net.routing()(i, j));
            if (net.is_exogenous(i)) {
                arr_expiry_[static_cast<std::size_t>(i)] = net.arrival(i)->sample(rng_);
                heap_.push({arr_expiry_[static_cast<std::size_t>(i)], 0, i});
            }
            const double s = net.service(i).sample(rng_);
            if (L_[static_cast<std::size_t>(i)] > 0) {
                svc_expiry_[static_cast<std::size_t>(i)] = s;
                heap_.push({s, 1, i});
            } else {
                svc_remaining_[static_cast<std::size_t>(i)] = s;
            }
        }
    }

    double time() const { return t_; }
    int dim() const { return d_; }
    const std::vector<long>& L() const { return L_; }
    const Counters& counters() const { return c_; }

    double residual_arrival(int i) const {
        return net_.is_exogenous(i) ? arr_expiry_[static_cast<std::size_t>(i)] - t_ : 0.0;
    }
    double residual_service(int i) const {
        const auto u = static_cast<std::size_t>(i);
        return L_[u] > 0 ? svc_expiry_[u] - t_ : svc_remaining_[u];
    }

    // Processes every event with expiry <= t_end and leaves the clock at t_end.
    // obs(dt, L) sees each piece of constant L.
    template <class Obs>
    void advance_to(double t_end, Obs&& obs) {
        while (!heap_.empty() && heap_.top().time <= t_end) {
            const Event e = heap_.top();
            heap_.pop();
            if (e.time > t_) obs(e.time - t_, L_);
            t_ = e.time;
            fire(e);
        }
        if (t_end > t_) obs(t_end - t_, L_);
        t_ = t_end;
    }

    void advance_to(double t_end) {
        advance_to(t_end, [](double, const std::vector<long>&) {});
    }

    // Advances by a fixed number of events; returns the time reached.
    template <class Obs>
    double advance_events(long n, Obs&& obs) {
        for (long k = 0; k < n && !heap_.empty(); ++k) {
            const Event e = heap_.top();
            heap_.pop();
            if (e.time > t_) obs(e.time - t_, L_);
            t_ = e.time;
            fire(e);
        }
        return t_;
    }

private:
    // Ties resolve as arrivals before services, then by station index.
    struct Event {
        double time;
        int kind;  // 0 arrival, 1 service
        int station;
        bool operator>(const Event& o) const {
            if (time != o.time) return time > o.time;
            if (kind != o.kind) return kind > o.kind;
            return station > o.station;
        }
    };

    void enter(int j) {
        const auto u = static_cast<std::size_t>(j);
        if (L_[u]++ == 0) {
            svc_expiry_[u] = t_ + svc_remaining_[u];
            heap_.push({svc_expiry_[u], 1, j});
        }
    }

    void fire(const Event& e) {
        ++c_.events;
        const int i = e.station;
        const auto u = static_cast<std::size_t>(i);
        if (e.kind == 0) {
            ++c_.exogenous[u];
            enter(i);
            arr_expiry_[u] = t_ + net_.arrival(i)->sample(rng_);
            heap_.push({arr_expiry_[u], 0, i});
        } else {
            --L_[u];
            ++c_.departures[u];
            const double s = net_.service(i).sample(rng_);
            if (L_[u] > 0) {
                svc_expiry_[u] = t_ + s;
                heap_.push({svc_expiry_[u], 1, i});
            } else {
                svc_remaining_[u] = s;
                svc_expiry_[u] = detail::kInf;
            }
            const double r = unif_(rng_);
            const auto& cdf = route_cdf_[u];
            const auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
            if (it != cdf.end()) {
                const int j = static_cast<int>(it - cdf.begin());
                ++c_.routed_in[static_cast<std::size_t>(j)];
                enter(j);
            }
        }
        check_invariants();
    }

    void check_invariants() {
        for (int j = 0; j < d_; ++j) {
            const auto u = static_cast<std::size_t>(j);
            const bool ok = L_[u] < 0 ? false
                            : L_[u] > 0 ? svc_expiry_[u] >= t_ && std::isfinite(svc_expiry_[u])
                                        : svc_remaining_[u] > 0.0 && std::isinf(svc_expiry_[u]);
            if (!ok) ++c_.invariant_violations;
        }
    }

    const BasicNetwork<Law>& net_;
    Rng rng_;
    int d_;
    double t_ = 0.0;
    std::vector<long> L_;
    std::vector<double> arr_expiry_, svc_expiry_, svc_remaining_;
    std::vector<std::vector<double>> route_cdf_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> heap_;
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
    Counters c_;
};

// ---------------------------------------------------------------------------

struct RunStats {
    double horizon = 0.0;
    double warmup = 0.0;
    long events = 0;
    std::vector<double> mean_L;          // time averages after warmup
    std::vector<double> idle_fraction;   // time fraction with L_i = 0 after warmup
    std::vector<double> departure_rate;  // departures per unit time after warmup
    std::vector<long> exogenous, routed_in, departures;  // whole-run counts
    std::vector<long> L_initial, L_final;
    long invariant_violations = 0;
};

template <class Law>
RunStats run(const BasicNetwork<Law>& net, double horizon, double warmup, std::uint64_t seed,
             std::vector<long> L0 = {}) {
    if (!(horizon > warmup && warmup >= 0.0)) throw ValidationError("need horizon > warmup >= 0");
    Simulator<Law> sim(net, seed, std::move(L0));
    const int d = net.dim();
    const auto ud = static_cast<std::size_t>(d);
    RunStats out;
    out.horizon = horizon;
    out.warmup = warmup;
    out.L_initial = sim.L();
    sim.advance_to(warmup);
    const std::vector<long> dep0 = sim.counters().departures;
    std::vector<double> area(ud, 0.0), idle(ud, 0.0);
    sim.advance_to(horizon, [&](double dt, const std::vector<long>& L) {
        for (std::size_t i = 0; i < ud; ++i) {
            area[i] += dt * static_cast<double>(L[i]);
            if (L[i] == 0) idle[i] += dt;
        }
    });
    const double T = horizon - warmup;
    for (std::size_t i = 0; i < ud; ++i) {
        out.mean_L.push_back(area[i] / T);
        out.idle_fraction.push_back(idle[i] / T);
        out.departure_rate.push_back(static_cast<double>(sim.counters().departures[i] - dep0[i]) / T);
    }
    out.events = sim.counters().events;
    out.exogenous = sim.counters().exogenous;
    out.routed_in = sim.counters().routed_in;
    out.departures = sim.counters().departures;
    out.L_final = sim.L();
    out.invariant_violations = sim.counters().invariant_violations;
    return out;
}

// ---------------------------------------------------------------------------
// Tail estimation.

struct TailTarget {
    enum class Kind { Coordinate, Direction };
    Kind kind = Kind::Direction;
    int k = 0;    // coordinate target: L in x e_k + {0..box}^d
    long box = 0;
    Eigen::VectorXd c;  // direction target: <c, L> > x

    static TailTarget coordinate(int k, long box = 0) { return {Kind::Coordinate, k, box, {}}; }
    static TailTarget direction(Eigen::VectorXd c) { return {Kind::Direction, 0, 0, std::move(c)}; }

    bool hit(const std::vector<long>& L, double x) const {
        if (kind == Kind::Direction) {
            double s = 0.0;
            for (std::size_t i = 0; i < L.size(); ++i) s += c(static_cast<Eigen::Index>(i)) * static_cast<double>(L[i]);
            return s > x;
        }
        for (std::size_t i = 0; i < L.size(); ++i) {
            const double off = static_cast<double>(L[i]) - (static_cast<int>(i) == k ? x : 0.0);
            if (off < 0.0 || off > static_cast<double>(box)) return false;
        }
        return true;
    }
};

struct TailEstimate {
    TailTarget target;
    std::vector<double> levels;
    std::vector<double> prob;
    std::vector<double> stderr_;
    std::vector<std::vector<double>> batch_prob;  // [batch][level]
    double total_time = 0.0;
    double warmup = 0.0;
    long events = 0;
    std::uint64_t seed = 0;
};

inline constexpr int kBatches = 20;

template <class Law>
TailEstimate estimate_tail(const BasicNetwork<Law>& net, const TailTarget& target, std::vector<double> levels,
                           double horizon, double warmup, std::uint64_t seed) {
    if (!check_stability(net)) throw UnstableNetwork("no stationary law: some station has rho >= 1");
    if (target.kind == TailTarget::Kind::Direction && target.c.size() != net.dim())
        throw ValidationError("direction has the wrong dimension");
    if (!(horizon > warmup && warmup >= 0.0)) throw ValidationError("need horizon > warmup >= 0");
    Simulator<Law> sim(net, seed);
    sim.advance_to(warmup);
    const std::size_t nl = levels.size();
    const double blen = (horizon - warmup) / kBatches;
    TailEstimate out;
    out.target = target;
    out.levels = levels;
    out.seed = seed;
    out.warmup = warmup;
    out.total_time = horizon;
    for (int b = 0; b < kBatches; ++b) {
        std::vector<double> acc(nl, 0.0);
        sim.advance_to(warmup + (b + 1) * blen, [&](double dt, const std::vector<long>& L) {
            for (std::size_t l = 0; l < nl; ++l)
                if (target.hit(L, levels[l])) acc[l] += dt;
        });
        for (auto& a : acc) a /= blen;
        out.batch_prob.push_back(std::move(acc));
    }
    for (std::size_t l = 0; l < nl; ++l) {
        double m = 0.0, s2 = 0.0;
        for (const auto& bp : out.batch_prob) m += bp[l];
        m /= kBatches;
        for (const auto& bp : out.batch_prob) s2 += (bp[l] - m) * (bp[l] - m);
        out.prob.push_back(m);
        out.stderr_.push_back(std::sqrt(s2 / (kBatches - 1) / kBatches));
    }
    out.events = sim.counters().events;
    return out;
}

struct DecayFit {
    double rate = 0.0;  // minus the fitted slope of log P against x
    double ci_low = 0.0;
    double ci_high = 0.0;
    int points = 0;
};

namespace detail {

// Weighted least-squares slope of log p against x; weights from the delta method.
inline std::optional<double> log_slope(const std::vector<double>& x, const std::vector<double>& p,
                                       const std::vector<double>& se) {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(p[i] > 0.0)) continue;
        const double rel = se[i] > 0.0 ? se[i] / p[i] : 0.0;
        const double w = 1.0 / std::max(rel * rel, 1e-6);
        const double y = std::log(p[i]);
        sw += w, sx += w * x[i], sy += w * y, sxx += w * x[i] * x[i], sxy += w * x[i] * y;
        ++n;
    }
    const double den = sw * sxx - sx * sx;
    if (n < 3 || !(den > 0.0)) return std::nullopt;
    return (sw * sxy - sx * sy) / den;
}

}  // namespace detail

// Fits log P against x over [xmin, xmax]; levels with zero estimates are dropped.
// The confidence interval is a 95% percentile bootstrap over batches.
inline DecayFit fit_decay(const TailEstimate& est, double xmin = -detail::kInf, double xmax = detail::kInf,
                          std::uint64_t seed = 1) {
    std::vector<std::size_t> use;
    for (std::size_t l = 0; l < est.levels.size(); ++l)
        if (est.levels[l] >= xmin && est.levels[l] <= xmax && est.prob[l] > 0.0) use.push_back(l);
    if (use.size() < 3) throw InsufficientData("need at least 3 levels with nonzero estimates");
    auto pick = [&](const std::vector<double>& v) {
        std::vector<double> out;
        for (auto l : use) out.push_back(v[l]);
        return out;
    };
    const std::vector<double> x = pick(est.levels);
    const auto slope = detail::log_slope(x, pick(est.prob), pick(est.stderr_));
    if (!slope) throw InsufficientData("degenerate fit");
    DecayFit fit;
    fit.rate = -*slope;
    fit.points = static_cast<int>(use.size());

    const std::size_t nb = est.batch_prob.size();
    if (nb < 2) {
        fit.ci_low = fit.ci_high = fit.rate;
        return fit;
    }
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pickb(0, nb - 1);
    std::vector<double> rates;
    for (int r = 0; r < 2000; ++r) {
        std::vector<double> m(use.size(), 0.0), s2(use.size(), 0.0);
        std::vector<std::size_t> draw(nb);
        for (auto& b : draw) b = pickb(rng);
        for (std::size_t a = 0; a < use.size(); ++a) {
            for (auto b : draw) m[a] += est.batch_prob[b][use[a]];
            m[a] /= static_cast<double>(nb);
            for (auto b : draw) s2[a] += std::pow(est.batch_prob[b][use[a]] - m[a], 2);
            s2[a] = std::sqrt(s2[a] / static_cast<double>(nb - 1) / static_cast<double>(nb));
        }
        if (const auto s = detail::log_slope(x, m, s2)) rates.push_back(-*s);
    }
    if (rates.size() < 100) throw InsufficientData("bootstrap fits degenerate");
    std::sort(rates.begin(), rates.end());
    fit.ci_low = rates[static_cast<std::size_t>(0.025 * static_cast<double>(rates.size()))];
    fit.ci_high = rates[static_cast<std::size_t>(0.975 * static_cast<double>(rates.size() - 1))];
    return fit;
}

// ---------------------------------------------------------------------------
// Exponential martingale and tilted drift.

struct MartingaleResult {
    double mean = 0.0;
    double stderr_ = 0.0;
    long n = 0;
    double t = 0.0;
    double effective_n = 0.0;  // (sum E)^2 / sum E^2; small values flag heavy-tailed weights
};

// One path of E^{f_theta}(t) from L0 with fresh residual clocks.
template <class Law>
double martingale_path(const GammaEvaluator<Law>& ev, const Eigen::VectorXd& theta, double t,
                       const std::vector<long>& L0, std::uint64_t seed) {
    const auto& net = ev.spec();
    const int d = net.dim();
    Simulator<Law> sim(net, seed, L0);
    std::vector<double> ge(static_cast<std::size_t>(d)), gs(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        ge[static_cast<std::size_t>(i)] = ev.gamma_e(i, theta(i));
        gs[static_cast<std::size_t>(i)] = ev.gamma_s(i, theta);
    }
    auto w = [&] {
        double s = 0.0;
        for (int i = 0; i < d; ++i)
            s += ge[static_cast<std::size_t>(i)] * sim.residual_arrival(i) + gs[static_cast<std::size_t>(i)] * sim.residual_service(i);
        return s;
    };
    const double w0 = w();
    double idle_term = 0.0;
    sim.advance_to(t, [&](double dt, const std::vector<long>& L) {
        for (int i = 0; i < d; ++i)
            if (L[static_cast<std::size_t>(i)] == 0) idle_term += gs[static_cast<std::size_t>(i)] * dt;
    });
    double lin = 0.0, g = 0.0;
    for (int i = 0; i < d; ++i) {
        lin += theta(i) * static_cast<double>(sim.L()[static_cast<std::size_t>(i)] - L0[static_cast<std::size_t>(i)]);
        g += ge[static_cast<std::size_t>(i)] + gs[static_cast<std::size_t>(i)];
    }
    return std::exp(lin - (w() - w0) - g * t + idle_term);
}

template <class Law>
MartingaleResult martingale_check(const GammaEvaluator<Law>& ev, const Eigen::VectorXd& theta, double t, long n,
                                  std::vector<long> L0, std::uint64_t seed) {
    if (n < 2) throw ValidationError("need at least 2 replications");
    if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("time must be finite and nonnegative");
    if (L0.empty()) L0.assign(static_cast<std::size_t>(ev.dim()), 0);
    double mean = 0.0, m2 = 0.0;  // Welford accumulators
    for (long r = 0; r < n; ++r) {
        std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32)};
        std::uint64_t s;
        ss.generate(reinterpret_cast<std::uint32_t*>(&s), reinterpret_cast<std::uint32_t*>(&s) + 2);
        const double e = martingale_path(ev, theta, t, L0, s);
        const double delta = e - mean;
        mean += delta / static_cast<double>(r + 1);
        m2 += delta * (e - mean);
    }
    MartingaleResult out;
    out.n = n;
    out.t = t;
    out.mean = mean;
    out.stderr_ = std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
    const double second = m2 / static_cast<double>(n) + mean * mean;
    out.effective_n = second > 0.0 ? static_cast<double>(n) * mean * mean / second : 0.0;
    return out;
}

struct DriftResult {
    std::vector<double> drift;   // L_i(horizon) / horizon
    std::vector<double> stderr_;  // from batch increments
    std::vector<long> L_final;
};

template <class Law>
DriftResult drift_check(const BasicNetwork<Law>& net, double horizon, std::uint64_t seed) {
    if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");
    Simulator<Law> sim(net, seed);
    const int d = net.dim();
    const auto ud = static_cast<std::size_t>(d);
    std::vector<std::vector<double>> inc(ud);
    std::vector<long> prev = sim.L();
    const double blen = horizon / kBatches;
    for (int b = 0; b < kBatches; ++b) {
        sim.advance_to((b + 1) * blen);
        for (std::size_t i = 0; i < ud; ++i) inc[i].push_back(static_cast<double>(sim.L()[i] - prev[i]) / blen);
        prev = sim.L();
    }
    DriftResult out;
    out.L_final = sim.L();
    for (std::size_t i = 0; i < ud; ++i) {
        out.drift.push_back(static_cast<double>(out.L_final[i]) / horizon);
        const double m = std::accumulate(inc[i].begin(), inc[i].end(), 0.0) / kBatches;
        double s2 = 0.0;
        for (double v : inc[i]) s2 += (v - m) * (v - m);
        out.stderr_.push_back(std::sqrt(s2 / (kBatches - 1) / kBatches));
    }
    return out;
}

inline DriftResult drift_check(const TiltedNetwork& tn, double horizon, std::uint64_t seed) {
    return drift_check(tn.network, horizon, seed);
}

}  // namespace gjn

#endif  // GJN_SIMULATOR_HPP
