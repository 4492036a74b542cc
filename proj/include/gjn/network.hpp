// network.hpp - network primitives, structural validation and traffic equations.
//
// Stations are indexed 0..d-1 internally; node "0" of the overall routing graph
// (outside world) is kept implicit through the exit probabilities.

#ifndef GJN_NETWORK_HPP
#define GJN_NETWORK_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gjn/distributions.hpp"
#include "gjn/error.hpp"

namespace gjn {

template <class Law>
class BasicNetwork {
public:
    BasicNetwork(std::vector<std::optional<Law>> arrivals, std::vector<Law> services, Eigen::MatrixXd routing,
                 std::optional<bool> a1_declared = std::nullopt)
        : arrivals_(std::move(arrivals)), services_(std::move(services)), P_(std::move(routing)),
          a1_declared_(a1_declared) {
        const auto d = static_cast<Eigen::Index>(services_.size());
        if (d < 1) throw ValidationError("dimension: at least one station is required");
        if (static_cast<Eigen::Index>(arrivals_.size()) != d || P_.rows() != d || P_.cols() != d)
            throw ValidationError("dimension: arrivals, services and routing must agree on the station count");
    }

    int dim() const { return static_cast<int>(services_.size()); }
    const std::optional<Law>& arrival(int i) const { return arrivals_[static_cast<std::size_t>(i)]; }
    const Law& service(int i) const { return services_[static_cast<std::size_t>(i)]; }
    const std::vector<std::optional<Law>>& arrivals() const { return arrivals_; }
    const std::vector<Law>& services() const { return services_; }
    const Eigen::MatrixXd& routing() const { return P_; }
    bool is_exogenous(int i) const { return arrival(i).has_value(); }

    // p_{i0} = 1 - sum_j p_ij, clipped at 0 against rounding.
    Eigen::VectorXd exit_probabilities() const {
        Eigen::VectorXd p0 = Eigen::VectorXd::Ones(dim()) - P_.rowwise().sum();
        return p0.cwiseMax(0.0);
    }

    std::vector<int> exogenous_set() const {
        std::vector<int> out;
        for (int i = 0; i < dim(); ++i)
            if (is_exogenous(i)) out.push_back(i);
        return out;
    }

    Eigen::VectorXd lambda() const {
        Eigen::VectorXd l = Eigen::VectorXd::Zero(dim());
        for (int i = 0; i < dim(); ++i)
            if (is_exogenous(i)) l(i) = 1.0 / arrival(i)->mean();
        return l;
    }

    Eigen::VectorXd mu() const {
        Eigen::VectorXd m(dim());
        for (int i = 0; i < dim(); ++i) m(i) = 1.0 / service(i).mean();
        return m;
    }

    const std::optional<bool>& a1_declared() const { return a1_declared_; }
    void set_a1_declared(std::optional<bool> v) { a1_declared_ = v; }

    // Declared value wins; otherwise every law must be bounded or phase-type.
    bool a1_holds() const {
        if (a1_declared_) return *a1_declared_;
        auto ok = [](const Law& f) { return f.bounded() || f.has_phase_type(); };
        for (int i = 0; i < dim(); ++i) {
            if (!ok(service(i))) return false;
            if (is_exogenous(i) && !ok(*arrival(i))) return false;
        }
        return true;
    }

    bool operator==(const BasicNetwork& o) const {
        return arrivals_ == o.arrivals_ && services_ == o.services_ && P_.rows() == o.P_.rows() && P_ == o.P_ &&
               a1_declared_ == o.a1_declared_;
    }

private:
    std::vector<std::optional<Law>> arrivals_;
    std::vector<Law> services_;
    Eigen::MatrixXd P_;
    std::optional<bool> a1_declared_;
};

using NetworkSpec = BasicNetwork<Distribution>;

// ---------------------------------------------------------------------------
// Validation

struct ValidationIssue {
    std::string code;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
    bool has(const std::string& code) const {
        for (const auto& i : issues)
            if (i.code == code) return true;
        return false;
    }
};

namespace detail {

inline constexpr double kRoutingTol = 1e-12;

// Reachability on the graph {0} u J, node 0 being the outside world.
inline std::vector<char> reach(const Eigen::MatrixXd& P, const Eigen::VectorXd& p0, const std::vector<char>& exo,
                               bool reverse) {
    const int d = static_cast<int>(P.rows());
    auto edge = [&](int from, int to) -> bool {  // nodes 0..d, stations shifted by one
        if (from == 0 && to == 0) return false;
        if (from == 0) return exo[static_cast<std::size_t>(to - 1)] != 0;
        if (to == 0) return p0(from - 1) > kRoutingTol;
        return P(from - 1, to - 1) > 0.0;
    };
    std::vector<char> seen(static_cast<std::size_t>(d + 1), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int w = 0; w <= d; ++w) {
            const bool e = reverse ? edge(w, u) : edge(u, w);
            if (e && !seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = 1;
                stack.push_back(w);
            }
        }
    }
    return seen;
}

}  // namespace detail

template <class Law>
ValidationReport validate(const BasicNetwork<Law>& spec) {
    ValidationReport rep;
    const int d = spec.dim();
    const Eigen::MatrixXd& P = spec.routing();
    auto add = [&](std::string code, std::string msg) { rep.issues.push_back({std::move(code), std::move(msg)}); };

    bool entries_ok = true;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (!std::isfinite(P(i, j)) || P(i, j) < 0.0 || P(i, j) > 1.0) entries_ok = false;
    if (!entries_ok) add("routing-entry", "routing probabilities must lie in [0, 1]");

    for (int i = 0; i < d; ++i) {
        const double s = P.row(i).sum();
        if (s > 1.0 + detail::kRoutingTol)
            add("substochasticity", "row " + std::to_string(i + 1) + " of the routing matrix sums to " +
                                        std::to_string(s) + " > 1");
    }

    if (spec.exogenous_set().empty()) add("no-exogenous-arrivals", "at least one station needs exogenous arrivals");

    const Eigen::VectorXd p0 = spec.exit_probabilities();
    std::vector<char> exo(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) exo[static_cast<std::size_t>(i)] = spec.is_exogenous(i) ? 1 : 0;

    const auto to_exit = detail::reach(P, p0, exo, true);
    std::string trapped;
    for (int i = 1; i <= d; ++i)
        if (!to_exit[static_cast<std::size_t>(i)]) trapped += (trapped.empty() ? "" : ",") + std::to_string(i);
    if (!trapped.empty()) add("strict-substochasticity", "exit unreachable from station(s) " + trapped);

    const auto from_outside = detail::reach(P, p0, exo, false);
    bool irreducible = trapped.empty();
    for (int i = 1; i <= d; ++i)
        if (!from_outside[static_cast<std::size_t>(i)]) irreducible = false;
    if (!irreducible) add("irreducibility", "overall routing graph is not strongly connected");

    for (int i = 0; i < d; ++i) {
        if (!spec.service(i).check_light_tail())
            add("light-tail", "service law at station " + std::to_string(i + 1) + " is not light tailed");
        if (spec.is_exogenous(i) && !spec.arrival(i)->check_light_tail())
            add("light-tail", "interarrival law at station " + std::to_string(i + 1) + " is not light tailed");
    }
    return rep;
}

template <class Law>
void require_valid(const BasicNetwork<Law>& spec) {
    const auto rep = validate(spec);
    if (rep.ok()) return;
    std::string msg;
    for (const auto& i : rep.issues) msg += (msg.empty() ? "" : "; ") + i.code + ": " + i.message;
    throw ValidationError(msg);
}

// ---------------------------------------------------------------------------
// Traffic equations

enum class StationClass { Stable, WeaklyStableBoundary, Unstable };

inline const char* to_string(StationClass c) {
    switch (c) {
        case StationClass::Stable: return "Stable";
        case StationClass::WeaklyStableBoundary: return "WeaklyStableBoundary";
        case StationClass::Unstable: return "Unstable";
    }
    return "?";
}

inline constexpr double kRhoBoundaryTol = 1e-9;

inline StationClass classify_rho(double rho) {
    if (std::abs(rho - 1.0) <= kRhoBoundaryTol) return StationClass::WeaklyStableBoundary;
    return rho < 1.0 ? StationClass::Stable : StationClass::Unstable;
}

struct TrafficSolution {
    Eigen::VectorXd alpha0;
    Eigen::VectorXd alpha;
    Eigen::VectorXd rho0;
    Eigen::VectorXd rho;
    std::vector<StationClass> classes;
    long iterations = 0;
};

// alpha0 = lambda (I - P)^{-1}
inline Eigen::VectorXd linear_traffic(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& P) {
    const Eigen::Index d = P.rows();
    const Eigen::MatrixXd A = (Eigen::MatrixXd::Identity(d, d) - P).transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) throw SingularSystem("I - P is singular");
    return lu.solve(lambda);
}

// Maximal solution of alpha = lambda + (alpha ^ mu) P, iterating down from alpha0.
inline Eigen::VectorXd nonlinear_traffic(const Eigen::VectorXd& lambda, const Eigen::VectorXd& mu,
                                         const Eigen::MatrixXd& P, long* iterations = nullptr) {
    const Eigen::Index d = P.rows();
    Eigen::VectorXd alpha = linear_traffic(lambda, P);
    const Eigen::MatrixXd Pt = P.transpose();
    long it = 0;
    constexpr long kMaxIter = 1000000;
    for (;; ++it) {
        if (it >= kMaxIter) throw NonConvergence("nonlinear traffic iteration did not settle");
        const Eigen::VectorXd next = lambda + Pt * alpha.cwiseMin(mu);
        const double change = (next - alpha).cwiseAbs().maxCoeff();
        alpha = next;
        if (change < 1e-12) break;
    }
    if (iterations) *iterations = it;

    // Polish: solve the linear system for the saturated set and keep it if consistent.
    std::vector<char> sat(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) sat[static_cast<std::size_t>(j)] = alpha(j) > mu(j) ? 1 : 0;
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd b = lambda;
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i) {
            if (sat[static_cast<std::size_t>(j)]) b(i) += mu(j) * P(j, i);
            else A(i, j) -= P(j, i);
        }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (lu.isInvertible()) {
        const Eigen::VectorXd polished = lu.solve(b);
        bool consistent = (polished - alpha).cwiseAbs().maxCoeff() < 1e-8;
        for (Eigen::Index j = 0; j < d && consistent; ++j) {
            const double tol = 1e-12 * std::max(1.0, mu(j));
            if (sat[static_cast<std::size_t>(j)] ? polished(j) < mu(j) - tol : polished(j) > mu(j) + tol)
                consistent = false;
        }
        if (consistent) alpha = polished;
    }
    return alpha;
}

template <class Law>
Eigen::VectorXd solve_linear_traffic(const BasicNetwork<Law>& spec) {
    return linear_traffic(spec.lambda(), spec.routing());
}

template <class Law>
TrafficSolution solve_nonlinear_traffic(const BasicNetwork<Law>& spec) {
    const Eigen::VectorXd lambda = spec.lambda();
    const Eigen::VectorXd mu = spec.mu();
    TrafficSolution sol;
    sol.alpha0 = linear_traffic(lambda, spec.routing());
    sol.alpha = nonlinear_traffic(lambda, mu, spec.routing(), &sol.iterations);
    sol.rho0 = sol.alpha0.cwiseQuotient(mu);
    sol.rho = sol.alpha.cwiseQuotient(mu);
    for (Eigen::Index i = 0; i < sol.rho.size(); ++i) sol.classes.push_back(classify_rho(sol.rho(i)));
    return sol;
}

// Which sufficient conditions for (in)stability fire, per station.
struct StationEvidence {
    bool weakly_stable_a = false;  // alpha0_j <= mu_j, or lambda_j + sum_k mu_k p_kj <= mu_j
    bool unstable_b = false;       // mu_j < alpha0_j and rho_i <= 1 for all other i
    bool unstable_c_strict = false;  // all-station condition holds, strictly at j
};

struct Classification {
    TrafficSolution traffic;
    std::vector<StationClass> classes;
    std::vector<StationEvidence> evidence;
    bool all_weakly_unstable_c = false;  // lambda_j + sum_k mu_k p_kj >= mu_j for every j
};

template <class Law>
Classification classify_stations(const BasicNetwork<Law>& spec) {
    Classification out;
    out.traffic = solve_nonlinear_traffic(spec);
    out.classes = out.traffic.classes;
    const Eigen::VectorXd lambda = spec.lambda();
    const Eigen::VectorXd mu = spec.mu();
    const Eigen::VectorXd inflow = lambda + spec.routing().transpose() * mu;
    const int d = spec.dim();

    out.all_weakly_unstable_c = true;
    for (int j = 0; j < d; ++j)
        if (inflow(j) < mu(j)) out.all_weakly_unstable_c = false;

    for (int j = 0; j < d; ++j) {
        StationEvidence ev;
        ev.weakly_stable_a = out.traffic.alpha0(j) <= mu(j) || inflow(j) <= mu(j);
        bool others = true;
        for (int i = 0; i < d; ++i)
            if (i != j && out.traffic.rho(i) > 1.0 + kRhoBoundaryTol) others = false;
        ev.unstable_b = mu(j) < out.traffic.alpha0(j) && others;
        ev.unstable_c_strict = out.all_weakly_unstable_c && inflow(j) > mu(j);
        out.evidence.push_back(ev);
    }
    return out;
}

template <class Law>
bool check_stability(const BasicNetwork<Law>& spec) {
    const Eigen::VectorXd rho0 = solve_linear_traffic(spec).cwiseQuotient(spec.mu());
    return (rho0.array() < 1.0).all();
}

}  // namespace gjn

#endif  // GJN_NETWORK_HPP
