// distributions.hpp - positive laws with analytic MGFs, truncation and sampling.

#ifndef GJN_DISTRIBUTIONS_HPP
#define GJN_DISTRIBUTIONS_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "gjn/detail/numeric.hpp"
#include "gjn/error.hpp"

namespace gjn {

using Rng = std::mt19937_64;

struct Exponential {
    double rate;
    bool operator==(const Exponential&) const = default;
};

struct Deterministic {
    double value;
    bool operator==(const Deterministic&) const = default;
};

struct Erlang {
    int shape;
    double rate;
    bool operator==(const Erlang&) const = default;
};

struct PhaseType {
    Eigen::RowVectorXd a;
    Eigen::MatrixXd U;
    bool operator==(const PhaseType& o) const {
        return a.size() == o.a.size() && U.rows() == o.U.rows() && U.cols() == o.U.cols() &&
               a == o.a && U == o.U;
    }
};

struct UniformInterval {
    double lo;
    double hi;
    bool operator==(const UniformInterval&) const = default;
};

namespace detail {

// Phase-type data restricted to phases reachable from the initial vector.
struct PhData {
    Eigen::RowVectorXd a;
    Eigen::MatrixXd U;
    Eigen::VectorXd exit;                     // u = -U 1
    double beta = 0.0;                        // -(spectral abscissa of U)
    std::vector<std::vector<double>> jump_cdf;  // per phase: targets 0..n-1, then absorption
};

inline std::shared_ptr<const PhData> make_ph_data(const Eigen::RowVectorXd& a, const Eigen::MatrixXd& U) {
    const Eigen::Index n = U.rows();
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> stack;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (a(j) > 0.0) {
            seen[static_cast<std::size_t>(j)] = 1;
            stack.push_back(j);
        }
    }
    while (!stack.empty()) {
        const Eigen::Index j = stack.back();
        stack.pop_back();
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k != j && U(j, k) > 0.0 && !seen[static_cast<std::size_t>(k)]) {
                seen[static_cast<std::size_t>(k)] = 1;
                stack.push_back(k);
            }
        }
    }
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < n; ++j)
        if (seen[static_cast<std::size_t>(j)]) keep.push_back(j);

    auto out = std::make_shared<PhData>();
    const auto m = static_cast<Eigen::Index>(keep.size());
    out->a.resize(m);
    out->U.resize(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
        out->a(r) = a(keep[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < m; ++c)
            out->U(r, c) = U(keep[static_cast<std::size_t>(r)], keep[static_cast<std::size_t>(c)]);
    }
    out->exit = -out->U.rowwise().sum();
    for (Eigen::Index r = 0; r < m; ++r) out->exit(r) = std::max(0.0, out->exit(r));

    Eigen::FullPivLU<Eigen::MatrixXd> lu(-out->U);
    if (!lu.isInvertible()) throw InvalidDistribution("phase-type generator -U is singular");

    Eigen::EigenSolver<Eigen::MatrixXd> es(out->U, false);
    double abscissa = -kInf;
    for (Eigen::Index r = 0; r < m; ++r) abscissa = std::max(abscissa, es.eigenvalues()(r).real());
    if (!(abscissa < 0.0)) throw InvalidDistribution("phase-type generator is not transient");
    out->beta = -abscissa;

    out->jump_cdf.resize(static_cast<std::size_t>(m));
    for (Eigen::Index r = 0; r < m; ++r) {
        auto& cdf = out->jump_cdf[static_cast<std::size_t>(r)];
        const double out_rate = -out->U(r, r);
        double acc = 0.0;
        for (Eigen::Index c = 0; c < m; ++c) {
            if (c != r) acc += out->U(r, c) / out_rate;
            cdf.push_back(acc);
        }
        cdf.push_back(1.0);
    }
    return out;
}

inline PhaseType erlang_as_ph(int k, double rate) {
    PhaseType ph{Eigen::RowVectorXd::Zero(k), Eigen::MatrixXd::Zero(k, k)};
    ph.a(0) = 1.0;
    for (int j = 0; j < k; ++j) {
        ph.U(j, j) = -rate;
        if (j + 1 < k) ph.U(j, j + 1) = rate;
    }
    return ph;
}

// Van Loan block exponential: returns (E[e^{s(T^v)}], E[(T^v) e^{s(T^v)}]).
inline std::pair<double, double> ph_truncated(const PhData& ph, double v, double s) {
    const Eigen::Index n = ph.U.rows();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3 * n, 3 * n);
    A.block(0, 0, n, n) = ph.U + s * Eigen::MatrixXd::Identity(n, n);
    A.block(0, n, n, n).setIdentity();
    A.block(n, 2 * n, n, n).setIdentity();
    const Eigen::MatrixXd E = (A * v).exp();
    const Eigen::MatrixXd E11 = E.block(0, 0, n, n);
    const Eigen::MatrixXd G = E.block(0, n, n, n);
    const Eigen::MatrixXd K = E.block(0, 2 * n, n, n);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const double tail = ph.a * (E11 * ones);
    const double value = ph.a * (G * ph.exit) + tail;
    const double deriv = ph.a * ((v * G - K) * ph.exit) + v * tail;
    return {value, deriv};
}

template <class Dist>
double draw_positive(Dist&& dist, Rng& rng) {
    double x = dist(rng);
    while (!(x > 0.0)) x = dist(rng);
    return x;
}

}  // namespace detail

class Distribution {
public:
    using Variant = std::variant<Exponential, Deterministic, Erlang, PhaseType, UniformInterval>;

    explicit Distribution(Variant v) : v_(std::move(v)) { validate_and_cache(); }

    static Distribution exponential(double rate) { return Distribution(Exponential{rate}); }
    static Distribution deterministic(double value) { return Distribution(Deterministic{value}); }
    static Distribution erlang(int shape, double rate) { return Distribution(Erlang{shape, rate}); }
    static Distribution phase_type(Eigen::RowVectorXd a, Eigen::MatrixXd U) {
        return Distribution(PhaseType{std::move(a), std::move(U)});
    }
    static Distribution uniform(double lo, double hi) { return Distribution(UniformInterval{lo, hi}); }

    const Variant& variant() const { return v_; }
    template <class T>
    const T* get_if() const { return std::get_if<T>(&v_); }

    std::string_view type_name() const {
        static constexpr std::string_view names[] = {"exponential", "deterministic", "erlang", "phase",
                                                     "uniform"};
        return names[v_.index()];
    }

    bool operator==(const Distribution& o) const { return v_ == o.v_; }

    // Exponential, Erlang and PhaseType carry a (reduced) phase-type representation.
    bool has_phase_type() const { return ph_ != nullptr; }
    const detail::PhData& ph() const { return *ph_; }

    double mean() const {
        return std::visit(
            [this](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Exponential>) return 1.0 / d.rate;
                else if constexpr (std::is_same_v<T, Deterministic>) return d.value;
                else if constexpr (std::is_same_v<T, Erlang>) return d.shape / d.rate;
                else if constexpr (std::is_same_v<T, PhaseType>) {
                    const Eigen::VectorXd x = (-ph_->U).partialPivLu().solve(Eigen::VectorXd::Ones(ph_->U.rows()));
                    return ph_->a * x;
                } else return 0.5 * (d.lo + d.hi);
            },
            v_);
    }

    double beta() const { return beta_; }

    bool bounded() const { return std::isinf(beta_); }

    // Upper end of the support (infinite for unbounded laws).
    double support_upper() const {
        if (auto* d = get_if<Deterministic>()) return d->value;
        if (auto* u = get_if<UniformInterval>()) return u->hi;
        return detail::kInf;
    }

    // E[e^{sT}], +inf once the integral diverges.
    double mgf(double s) const {
        if (s >= beta_) return detail::kInf;
        return std::visit(
            [this, s](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Exponential>) return d.rate / (d.rate - s);
                else if constexpr (std::is_same_v<T, Deterministic>) return std::exp(s * d.value);
                else if constexpr (std::is_same_v<T, Erlang>) return std::pow(d.rate / (d.rate - s), d.shape);
                else if constexpr (std::is_same_v<T, PhaseType>) return ph_solve(s, 1);
                else return std::exp(s * d.lo) * detail::phi1(s * (d.hi - d.lo));
            },
            v_);
    }

    // E[e^{s (T min v)}]; v = +inf falls back to mgf.
    double mgf_truncated(double v, double s) const {
        if (std::isinf(v)) return mgf(s);
        return std::visit(
            [this, v, s](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Exponential>) {
                    const double x = (s - d.rate) * v;
                    return d.rate * v * detail::phi1(x) + std::exp(x);
                } else if constexpr (std::is_same_v<T, Deterministic>) {
                    return std::exp(s * std::min(d.value, v));
                } else if constexpr (std::is_same_v<T, UniformInterval>) {
                    if (v >= d.hi) return mgf(s);
                    if (v <= d.lo) return std::exp(s * v);
                    const double w = d.hi - d.lo;
                    return (detail::exp_integral(d.lo, v, s) + std::exp(s * v) * (d.hi - v)) / w;
                } else {
                    return detail::ph_truncated(*ph_, v, s).first;
                }
            },
            v_);
    }

    // d/ds of the (truncated) MGF.
    double mgf_prime(double v, double s) const {
        if (std::isinf(v)) {
            if (s >= beta_) throw DivergentMgf("derivative requested at s >= beta");
            return std::visit(
                [this, s](const auto& d) -> double {
                    using T = std::decay_t<decltype(d)>;
                    if constexpr (std::is_same_v<T, Exponential>) return d.rate / ((d.rate - s) * (d.rate - s));
                    else if constexpr (std::is_same_v<T, Deterministic>) return d.value * std::exp(s * d.value);
                    else if constexpr (std::is_same_v<T, Erlang>)
                        return d.shape * std::pow(d.rate, d.shape) / std::pow(d.rate - s, d.shape + 1);
                    else if constexpr (std::is_same_v<T, PhaseType>) return ph_solve(s, 2);
                    else return detail::texp_integral(d.lo, d.hi, s) / (d.hi - d.lo);
                },
                v_);
        }
        return std::visit(
            [this, v, s](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Exponential>) {
                    const double x = (s - d.rate) * v;
                    return d.rate * v * v * detail::phi2(x) + v * std::exp(x);
                } else if constexpr (std::is_same_v<T, Deterministic>) {
                    const double m = std::min(d.value, v);
                    return m * std::exp(s * m);
                } else if constexpr (std::is_same_v<T, UniformInterval>) {
                    if (v >= d.hi) return mgf_prime(detail::kInf, s);
                    if (v <= d.lo) return v * std::exp(s * v);
                    const double w = d.hi - d.lo;
                    return (detail::texp_integral(d.lo, v, s) + v * std::exp(s * v) * (d.hi - v)) / w;
                } else {
                    return detail::ph_truncated(*ph_, v, s).second;
                }
            },
            v_);
    }

    // Numerical probe that the MGF blows up at its abscissa.
    bool check_light_tail() const {
        if (bounded()) return mgf(50.0 / support_upper()) > 1e6 * mgf(0.0);
        const double near = beta_ * (1.0 - 1e-9);
        return mgf(near) > 1e4 * mgf(0.0);
    }

    // Uniform bound on residual-life MGFs, max over phases of the conditional MGF.
    double conditional_mgf_bound(double s) const {
        if (s >= beta_) throw DivergentMgf("conditional MGF bound requested at s >= beta");
        if (bounded()) return std::exp(s * support_upper());
        const Eigen::Index n = ph_->U.rows();
        const Eigen::MatrixXd M = ph_->U + s * Eigen::MatrixXd::Identity(n, n);
        const Eigen::VectorXd x = (-M).partialPivLu().solve(ph_->exit);
        return x.maxCoeff();
    }

    double sample(Rng& rng) const {
        return std::visit(
            [this, &rng](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Exponential>)
                    return detail::draw_positive(std::exponential_distribution<double>(d.rate), rng);
                else if constexpr (std::is_same_v<T, Deterministic>) return d.value;
                else if constexpr (std::is_same_v<T, Erlang>)
                    return detail::draw_positive(std::gamma_distribution<double>(d.shape, 1.0 / d.rate), rng);
                else if constexpr (std::is_same_v<T, PhaseType>) return sample_ph(*ph_, rng);
                else return detail::draw_positive(std::uniform_real_distribution<double>(d.lo, d.hi), rng);
            },
            v_);
    }

    // Absorption time of the CTMC (a, U); also used by tilted phase-type laws.
    static double sample_ph(const detail::PhData& ph, Rng& rng) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const auto n = static_cast<std::size_t>(ph.U.rows());
        double u = unif(rng);
        std::size_t phase = 0;
        for (double acc = 0.0; phase + 1 < n; ++phase) {
            acc += ph.a(static_cast<Eigen::Index>(phase));
            if (u < acc) break;
        }
        double t = 0.0;
        for (;;) {
            const double rate = -ph.U(static_cast<Eigen::Index>(phase), static_cast<Eigen::Index>(phase));
            t += std::exponential_distribution<double>(rate)(rng);
            const auto& cdf = ph.jump_cdf[phase];
            u = unif(rng);
            const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            const auto next = static_cast<std::size_t>(it - cdf.begin());
            if (next >= n) break;
            phase = next;
        }
        while (!(t > 0.0)) t = sample_ph(ph, rng);
        return t;
    }

private:
    // a (-M)^{-p} u with M = U + sI.
    double ph_solve(double s, int power) const {
        const Eigen::Index n = ph_->U.rows();
        const Eigen::MatrixXd M = ph_->U + s * Eigen::MatrixXd::Identity(n, n);
        const auto lu = (-M).partialPivLu();
        Eigen::VectorXd x = lu.solve(ph_->exit);
        for (int p = 1; p < power; ++p) x = lu.solve(x);
        return ph_->a * x;
    }

    void validate_and_cache() {
        auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
        std::visit(
            [&](const auto& d) {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Exponential>) {
                    if (!positive(d.rate)) throw InvalidDistribution("exponential rate must be positive");
                    ph_ = detail::make_ph_data(Eigen::RowVectorXd::Ones(1), Eigen::MatrixXd::Constant(1, 1, -d.rate));
                    beta_ = d.rate;
                } else if constexpr (std::is_same_v<T, Deterministic>) {
                    if (!positive(d.value)) throw InvalidDistribution("deterministic value must be positive");
                    beta_ = detail::kInf;
                } else if constexpr (std::is_same_v<T, Erlang>) {
                    if (d.shape < 1) throw InvalidDistribution("erlang shape must be a positive integer");
                    if (!positive(d.rate)) throw InvalidDistribution("erlang rate must be positive");
                    const PhaseType rep = detail::erlang_as_ph(d.shape, d.rate);
                    ph_ = detail::make_ph_data(rep.a, rep.U);
                    beta_ = d.rate;
                } else if constexpr (std::is_same_v<T, PhaseType>) {
                    validate_ph(d);
                    ph_ = detail::make_ph_data(d.a, d.U);
                    beta_ = ph_->beta;
                } else {
                    if (!(std::isfinite(d.lo) && d.lo >= 0.0)) throw InvalidDistribution("uniform lo must be >= 0");
                    if (!(std::isfinite(d.hi) && d.hi > d.lo)) throw InvalidDistribution("uniform needs lo < hi");
                    beta_ = detail::kInf;
                }
            },
            v_);
    }

    static void validate_ph(const PhaseType& d) {
        const Eigen::Index n = d.U.rows();
        if (n < 1 || d.U.cols() != n || d.a.size() != n)
            throw InvalidDistribution("phase-type dimensions do not match");
        if (!d.a.allFinite() || !d.U.allFinite()) throw InvalidDistribution("phase-type entries must be finite");
        if ((d.a.array() < 0.0).any()) throw InvalidDistribution("initial vector has negative entries");
        if (std::abs(d.a.sum() - 1.0) > 1e-9) throw InvalidDistribution("initial vector must sum to 1");
        for (Eigen::Index r = 0; r < n; ++r) {
            for (Eigen::Index c = 0; c < n; ++c)
                if (r != c && d.U(r, c) < 0.0) throw InvalidDistribution("generator off-diagonal entries must be >= 0");
            if (d.U.row(r).sum() > 1e-12) throw InvalidDistribution("generator row sums must be <= 0");
        }
    }

    Variant v_;
    std::shared_ptr<const detail::PhData> ph_;
    double beta_ = 0.0;
};

// Free-function spellings.
inline double mgf(const Distribution& d, double s) { return d.mgf(s); }
inline double mgf_truncated(const Distribution& d, double v, double s) { return d.mgf_truncated(v, s); }
inline double mgf_prime(const Distribution& d, double v, double s) { return d.mgf_prime(v, s); }
inline double beta(const Distribution& d) { return d.beta(); }
inline bool check_light_tail(const Distribution& d) { return d.check_light_tail(); }
inline double conditional_mgf_bound(const Distribution& d, double s) { return d.conditional_mgf_bound(s); }
inline double sample(const Distribution& d, Rng& rng) { return d.sample(rng); }

}  // namespace gjn

#endif  // GJN_DISTRIBUTIONS_HPP
