// tilt.hpp - exponential change of measure as a network transformation.
//
// A tilted law keeps its base law and two numbers: dF'(t) = e^{log_scale - shift t} dF(t),
// so that F'^(eta) = e^{log_scale} F^(eta - shift). Properness F'^(0) = 1 is what the
// gamma root equations guarantee.

#ifndef GJN_TILT_HPP
#define GJN_TILT_HPP

#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gjn/distributions.hpp"
#include "gjn/gamma.hpp"
#include "gjn/network.hpp"

namespace gjn {

class TiltedDistribution {
public:
    TiltedDistribution(Distribution base, double log_scale, double shift)
        : base_(std::move(base)), log_scale_(log_scale), shift_(shift) {
        if (base_.has_phase_type() && base_.get_if<PhaseType>()) sampler_ = make_ph_sampler();
    }

    const Distribution& base() const { return base_; }
    double log_scale() const { return log_scale_; }
    double shift() const { return shift_; }

    double beta() const { return base_.beta() + shift_; }
    bool bounded() const { return base_.bounded(); }
    bool has_phase_type() const { return base_.has_phase_type(); }
    bool check_light_tail() const { return base_.check_light_tail(); }
    double support_upper() const { return base_.support_upper(); }

    double mgf(double eta) const {
        const double m = base_.mgf(eta - shift_);
        return std::isinf(m) ? m : std::exp(log_scale_) * m;
    }

    // Only the untruncated transform is needed for tilted networks.
    double mgf_truncated(double v, double eta) const {
        if (!std::isinf(v)) throw UnsupportedTilt("truncated transforms of tilted laws are not provided");
        return mgf(eta);
    }

    double mgf_prime(double v, double eta) const {
        if (!std::isinf(v)) throw UnsupportedTilt("truncated transforms of tilted laws are not provided");
        return std::exp(log_scale_) * base_.mgf_prime(detail::kInf, eta - shift_);
    }

    double mean() const { return mgf_prime(detail::kInf, 0.0); }

    // Composition: tilting again adds exponents.
    TiltedDistribution tilted(double log_scale, double shift) const {
        return TiltedDistribution(base_, log_scale_ + log_scale, shift_ + shift);
    }

    double sample(Rng& rng) const {
        const double g = shift_;
        return std::visit(
            [&](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Exponential>) {
                    return detail::draw_positive(std::exponential_distribution<double>(d.rate + g), rng);
                } else if constexpr (std::is_same_v<T, Deterministic>) {
                    return d.value;
                } else if constexpr (std::is_same_v<T, Erlang>) {
                    return detail::draw_positive(std::gamma_distribution<double>(d.shape, 1.0 / (d.rate + g)), rng);
                } else if constexpr (std::is_same_v<T, PhaseType>) {
                    return Distribution::sample_ph(*sampler_, rng);
                } else {
                    return sample_tilted_uniform(d.lo, d.hi, -g, rng);
                }
            },
            base_.variant());
    }

    bool operator==(const TiltedDistribution& o) const {
        return base_ == o.base_ && log_scale_ == o.log_scale_ && shift_ == o.shift_;
    }

    // Phase-type representation used by the sampler (Doob h-transform of U - shift I).
    const detail::PhData* ph_sampler() const { return sampler_.get(); }

private:
    std::shared_ptr<const detail::PhData> make_ph_sampler() const {
        const auto& ph = base_.ph();
        const Eigen::Index n = ph.U.rows();
        const Eigen::MatrixXd M = ph.U - shift_ * Eigen::MatrixXd::Identity(n, n);
        const Eigen::VectorXd h = (-M).partialPivLu().solve(ph.exit);
        if ((h.array() <= 0.0).any()) throw UnsupportedTilt("phase-type tilt outside the convergence region");
        Eigen::MatrixXd U2 = M;
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = 0; k < n; ++k)
                if (j != k) U2(j, k) = M(j, k) * h(k) / h(j);
        Eigen::RowVectorXd a2 = ph.a.cwiseProduct(h.transpose());
        a2 /= a2.sum();
        return detail::make_ph_data(a2, U2);
    }

    // Exact inverse CDF for density proportional to e^{r t} on [lo, hi].
    static double sample_tilted_uniform(double lo, double hi, double r, Rng& rng) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double w = hi - lo;
        double t = 0.0;
        do {
            const double u = unif(rng);
            if (std::abs(r * w) < 1e-12) t = lo + u * w;
            else if (r < 0.0) t = lo + std::log1p(u * std::expm1(r * w)) / r;
            else t = hi + std::log(u + (1.0 - u) * std::exp(-r * w)) / r;
        } while (!(t > 0.0));
        return std::clamp(t, lo, hi);
    }

    Distribution base_;
    double log_scale_;
    double shift_;
    std::shared_ptr<const detail::PhData> sampler_;
};

inline TiltedDistribution tilt_law(const Distribution& f, double log_scale, double shift) {
    return TiltedDistribution(f, log_scale, shift);
}
inline TiltedDistribution tilt_law(const TiltedDistribution& f, double log_scale, double shift) {
    return f.tilted(log_scale, shift);
}

using TiltedSpec = BasicNetwork<TiltedDistribution>;

struct TiltedNetwork {
    Eigen::VectorXd theta;
    TiltedSpec network;
    Eigen::VectorXd lambda;  // tilted arrival rates
    Eigen::VectorXd mu;      // tilted service rates
    Eigen::MatrixXd P;       // tilted routing
    Eigen::VectorXd exit;    // tilted exit probabilities
    Eigen::VectorXd gamma_e;
    Eigen::VectorXd gamma_s;
};

template <class Law>
TiltedNetwork tilt_network(const GammaEvaluator<Law>& ev, const Eigen::VectorXd& theta) {
    const auto& spec = ev.spec();
    const int d = spec.dim();
    std::vector<std::optional<TiltedDistribution>> arrivals(static_cast<std::size_t>(d));
    std::vector<TiltedDistribution> services;
    Eigen::VectorXd ge = Eigen::VectorXd::Zero(d), gs(d);
    Eigen::MatrixXd P(d, d);
    Eigen::VectorXd exit(d);
    const Eigen::VectorXd p0 = spec.exit_probabilities();
    for (int i = 0; i < d; ++i) {
        if (spec.is_exogenous(i)) {
            ge(i) = ev.gamma_e(i, theta(i));
            arrivals[static_cast<std::size_t>(i)] = tilt_law(*spec.arrival(i), theta(i), ge(i));
        }
        const double lq = ev.log_q(i, theta);
        gs(i) = ev.gamma_s(i, theta);
        services.push_back(tilt_law(spec.service(i), lq, gs(i)));
        for (int j = 0; j < d; ++j) P(i, j) = spec.routing()(i, j) * std::exp(-theta(i) + theta(j) - lq);
        exit(i) = p0(i) * std::exp(-theta(i) - lq);
    }
    TiltedNetwork out{theta, TiltedSpec(std::move(arrivals), std::move(services), P, spec.a1_declared()),
                      Eigen::VectorXd(), Eigen::VectorXd(), P, exit, ge, gs};
    out.lambda = out.network.lambda();
    out.mu = out.network.mu();
    return out;
}

template <class Law>
TiltedNetwork tilt_network(const BasicNetwork<Law>& spec, const Eigen::VectorXd& theta) {
    return tilt_network(GammaEvaluator<Law>(spec), theta);
}

// gamma of the tilted network at eta, through its own root equations.
template <class Law>
double tilted_gamma(const GammaEvaluator<Law>& ev, const Eigen::VectorXd& theta, const Eigen::VectorXd& eta) {
    const TiltedNetwork tn = tilt_network(ev, theta);
    return GammaEvaluator<TiltedDistribution>(tn.network, ev.root_tolerance()).gamma(eta);
}

struct TiltedClassification {
    Classification classes;
    Eigen::VectorXd grad;             // grad gamma(theta) = grad of the tilted gamma at 0
    bool all_weakly_unstable = false; // grad >= 0
    // Two-station diagnostics for a chosen station k (0-based).
    std::optional<int> k;
    double other_gradient = 0.0;  // [grad gamma(theta)]_{m}, m != k
    double t_inner = 0.0;         // <grad gamma(theta), t_k(theta)>
};

template <class Law>
TiltedClassification classify_tilted(const GammaEvaluator<Law>& ev, const Eigen::VectorXd& theta,
                                     std::optional<int> k = std::nullopt, double tol = 1e-9) {
    TiltedClassification out;
    const TiltedNetwork tn = tilt_network(ev, theta);
    out.classes = classify_stations(tn.network);
    out.grad = ev.grad_gamma(theta);
    out.all_weakly_unstable = (out.grad.array() >= -tol).all();
    if (k && ev.dim() == 2) {
        out.k = k;
        out.other_gradient = out.grad(1 - *k);
        out.t_inner = out.grad.dot(ev.t_vectors(theta).T.col(*k));
    }
    return out;
}

struct StreamId {
    enum class Kind { Arrival, Service } kind;
    int station;
};

inline double sample_tilted_stream(const TiltedNetwork& tn, StreamId id, Rng& rng) {
    if (id.kind == StreamId::Kind::Arrival) {
        const auto& f = tn.network.arrival(id.station);
        if (!f) throw UnsupportedTilt("station has no exogenous stream");
        return f->sample(rng);
    }
    return tn.network.service(id.station).sample(rng);
}

}  // namespace gjn

#endif  // GJN_TILT_HPP
