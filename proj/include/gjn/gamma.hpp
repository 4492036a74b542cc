// gamma.hpp - root equations e^theta F^(v)(xi) = 1 and the gamma functions built on them.

#ifndef GJN_GAMMA_HPP
#define GJN_GAMMA_HPP

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "gjn/detail/numeric.hpp"
#include "gjn/error.hpp"
#include "gjn/network.hpp"

namespace gjn {

inline constexpr double kDefaultRootTol = 1e-12;

// Unique xi with theta + log F^(v)(xi) = 0 (v = +inf for the untruncated law).
template <class Law>
double xi(const Law& f, double v, double theta, double tol = kDefaultRootTol) {
    if (theta == 0.0) return 0.0;
    auto g = [&](double x) {
        const double m = f.mgf_truncated(v, x);
        return std::isinf(m) ? detail::kInf : theta + std::log(m);
    };

    // g is increasing; g(0) = theta, so the root sits on the side opposite to theta.
    double lo, hi, glo, ghi;
    if (theta > 0.0) {
        hi = 0.0;
        ghi = theta;
        lo = -1.0;
        glo = g(lo);
        for (int k = 0; glo >= 0.0; ++k) {
            if (k > 1100) throw BracketFailure("no sign change below 0 for theta = " + std::to_string(theta));
            hi = lo;
            ghi = glo;
            lo *= 2.0;
            glo = g(lo);
        }
    } else {
        // Truncated transforms are entire, so beta only caps the untruncated case.
        const double b = std::isinf(v) ? f.beta() : detail::kInf;
        lo = 0.0;
        glo = theta;
        hi = std::min(1.0, 0.5 * b);
        ghi = g(hi);
        for (int k = 0; ghi <= 0.0; ++k) {
            if (k > 1100) throw BracketFailure("no sign change above 0 for theta = " + std::to_string(theta));
            lo = hi;
            glo = ghi;
            // Approach beta geometrically when it is finite, otherwise double.
            hi = std::isfinite(b) ? 0.5 * (hi + b) : 2.0 * hi;
            if (hi == lo) throw BracketFailure("bracket collapsed at beta for theta = " + std::to_string(theta));
            ghi = g(hi);
        }
    }

    // Safeguarded Newton on [lo, hi].
    double x = std::isinf(ghi) ? lo : (glo * hi - ghi * lo) / (glo - ghi);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    for (int it = 0; it < 400; ++it) {
        const double m = f.mgf_truncated(v, x);
        const double gx = std::isinf(m) ? detail::kInf : theta + std::log(m);
        if (std::abs(gx) <= tol * 1e-2) return x;
        if (gx < 0.0) lo = x;
        else hi = x;
        double next = 0.5 * (lo + hi);
        if (std::isfinite(gx)) {
            const double slope = f.mgf_prime(v, x) / m;
            if (slope > 0.0 && std::isfinite(slope)) {
                const double nx = x - gx / slope;
                if (nx > lo && nx < hi) next = nx;
            }
        }
        if (hi - lo <= 4.0 * detail::kEps * std::max(1.0, std::abs(x)) || next == x) {
            if (std::abs(gx) <= tol) return x;
            if (hi - lo <= 4.0 * detail::kEps * std::max(1.0, std::abs(x))) return x;
        }
        x = next;
    }
    const double m = f.mgf_truncated(v, x);
    if (std::isfinite(m) && std::abs(theta + std::log(m)) <= tol) return x;
    throw NonConvergence("xi root iteration did not converge for theta = " + std::to_string(theta));
}

// Subsets of streams whose residuals are truncated at level v.
struct TruncationSet {
    std::vector<int> J_e;
    std::vector<int> J_s;
    double v = detail::kInf;

    bool in_e(int i) const { return std::find(J_e.begin(), J_e.end(), i) != J_e.end(); }
    bool in_s(int i) const { return std::find(J_s.begin(), J_s.end(), i) != J_s.end(); }
};

// Columns t_i with <grad gamma_s,j, t_i> = delta_ij.
struct TVectors {
    Eigen::MatrixXd T;
    Eigen::MatrixXd scaling;  // -(I - P) T, diagonal and positive at theta = 0
    double condition = 0.0;
};

template <class Law>
class GammaEvaluator {
public:
    explicit GammaEvaluator(BasicNetwork<Law> spec, double root_tol = kDefaultRootTol)
        : spec_(std::move(spec)), tol_(root_tol), cache_(std::make_shared<Cache>()) {
        const int d = spec_.dim();
        p0_ = spec_.exit_probabilities();
        log_p_.resize(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                log_p_(i, j) = spec_.routing()(i, j) > 0.0 ? std::log(spec_.routing()(i, j)) : -detail::kInf;
    }

    const BasicNetwork<Law>& spec() const { return spec_; }
    int dim() const { return spec_.dim(); }
    double root_tolerance() const { return tol_; }

    // log q_i(theta), by log-sum-exp over the routing row and the exit.
    double log_q(int i, const Eigen::VectorXd& theta) const {
        if (theta.isZero(0.0)) return 0.0;  // rows sum to one with the exit mass
        double top = -detail::kInf;
        for (int j = 0; j < dim(); ++j) top = std::max(top, log_p_(i, j) + theta(j));
        if (p0_(i) > 0.0) top = std::max(top, std::log(p0_(i)));
        double sum = 0.0;
        for (int j = 0; j < dim(); ++j)
            if (std::isfinite(log_p_(i, j))) sum += std::exp(log_p_(i, j) + theta(j) - top);
        if (p0_(i) > 0.0) sum += std::exp(std::log(p0_(i)) - top);
        return -theta(i) + top + std::log(sum);
    }

    double q(int i, const Eigen::VectorXd& theta) const { return std::exp(log_q(i, theta)); }

    double gamma_e(int i, double v, double theta_i) const {
        if (!spec_.is_exogenous(i)) return 0.0;
        return -cached_xi(0, i, *spec_.arrival(i), v, theta_i);
    }
    double gamma_e(int i, double theta_i) const { return gamma_e(i, detail::kInf, theta_i); }

    double gamma_s(int i, double v, const Eigen::VectorXd& theta) const {
        return -cached_xi(1, i, spec_.service(i), v, log_q(i, theta));
    }
    double gamma_s(int i, const Eigen::VectorXd& theta) const { return gamma_s(i, detail::kInf, theta); }

    double gamma(const Eigen::VectorXd& theta) const {
        double sum = 0.0;
        for (int i = 0; i < dim(); ++i) sum += gamma_e(i, theta(i)) + gamma_s(i, theta);
        return sum;
    }

    double gamma_truncated(const TruncationSet& trunc, const Eigen::VectorXd& theta) const {
        double sum = 0.0;
        for (int i = 0; i < dim(); ++i) {
            sum += gamma_e(i, trunc.in_e(i) ? trunc.v : detail::kInf, theta(i));
            sum += gamma_s(i, trunc.in_s(i) ? trunc.v : detail::kInf, theta);
        }
        return sum;
    }

    // d gamma_e,i / d theta_i = 1 / (e^theta F'(-gamma_e)).
    double gamma_e_prime(int i, double theta_i) const {
        if (!spec_.is_exogenous(i)) return 0.0;
        const double g = gamma_e(i, theta_i);
        return 1.0 / (std::exp(theta_i) * spec_.arrival(i)->mgf_prime(detail::kInf, -g));
    }

    // grad q_i(theta)
    Eigen::VectorXd grad_q(int i, const Eigen::VectorXd& theta) const {
        Eigen::VectorXd out(dim());
        const double qi = q(i, theta);
        for (int j = 0; j < dim(); ++j) {
            const double pij = spec_.routing()(i, j);
            out(j) = j == i ? -qi + pij : pij * std::exp(theta(j) - theta(i));
        }
        return out;
    }

    Eigen::VectorXd grad_gamma_s(int i, const Eigen::VectorXd& theta) const {
        const double qi = q(i, theta);
        const double g = gamma_s(i, theta);
        const double denom = qi * qi * spec_.service(i).mgf_prime(detail::kInf, -g);
        return grad_q(i, theta) / denom;
    }

    Eigen::VectorXd grad_gamma(const Eigen::VectorXd& theta) const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(dim());
        for (int i = 0; i < dim(); ++i) {
            out(i) += gamma_e_prime(i, theta(i));
            out += grad_gamma_s(i, theta);
        }
        return out;
    }

    TVectors t_vectors(const Eigen::VectorXd& theta) const {
        const int d = dim();
        Eigen::MatrixXd N(d, d);
        for (int j = 0; j < d; ++j) N.row(j) = grad_gamma_s(j, theta).transpose();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(N);
        const auto& sv = svd.singularValues();
        const double cond = sv(d - 1) > 0.0 ? sv(0) / sv(d - 1) : detail::kInf;
        if (!(cond <= 1e12)) throw SingularGeometry("service-gradient matrix is numerically singular");
        TVectors out;
        out.T = N.partialPivLu().inverse();
        out.scaling = -(Eigen::MatrixXd::Identity(d, d) - spec_.routing()) * out.T;
        out.condition = cond;
        return out;
    }

    // Linear form of the residual clocks; y_e is indexed by station (entries off E ignored).
    double w_linear(const TruncationSet& trunc, const Eigen::VectorXd& theta, const Eigen::VectorXd& y_e,
                    const Eigen::VectorXd& y_s) const {
        double sum = 0.0;
        for (int i = 0; i < dim(); ++i) {
            if (spec_.is_exogenous(i)) {
                if (trunc.in_e(i)) sum += gamma_e(i, trunc.v, theta(i)) * std::min(y_e(i), trunc.v);
                else sum += gamma_e(i, theta(i)) * y_e(i);
            }
            if (trunc.in_s(i)) sum += gamma_s(i, trunc.v, theta) * std::min(y_s(i), trunc.v);
            else sum += gamma_s(i, theta) * y_s(i);
        }
        return sum;
    }

private:
    using Key = std::tuple<int, int, std::uint64_t, std::uint64_t>;
    struct Cache {
        std::mutex mu;
        std::map<Key, double> roots;
    };

    double cached_xi(int kind, int i, const Law& f, double v, double arg) const {
        const Key key{kind, i, std::bit_cast<std::uint64_t>(v), std::bit_cast<std::uint64_t>(arg)};
        {
            std::lock_guard<std::mutex> lock(cache_->mu);
            if (auto it = cache_->roots.find(key); it != cache_->roots.end()) return it->second;
        }
        const double root = xi(f, v, arg, tol_);
        std::lock_guard<std::mutex> lock(cache_->mu);
        if (cache_->roots.size() > (1u << 20)) cache_->roots.clear();
        cache_->roots.emplace(key, root);
        return root;
    }

    BasicNetwork<Law> spec_;
    double tol_;
    Eigen::VectorXd p0_;
    Eigen::MatrixXd log_p_;
    std::shared_ptr<Cache> cache_;
};

}  // namespace gjn

#endif  // GJN_GAMMA_HPP
