// Networks reused across the test programs.
#pragma once

#include <random>
#include <vector>

#include "gjn/gjn.hpp"

namespace fixture {

inline gjn::NetworkSpec exponential_network(const std::vector<double>& lambda, const std::vector<double>& mu,
                                            const Eigen::MatrixXd& P) {
    std::vector<std::optional<gjn::Distribution>> arr;
    std::vector<gjn::Distribution> svc;
    for (double l : lambda) {
        if (l > 0) arr.emplace_back(gjn::Distribution::exponential(l));
        else arr.emplace_back(std::nullopt);
    }
    for (double m : mu) svc.push_back(gjn::Distribution::exponential(m));
    return gjn::NetworkSpec(std::move(arr), std::move(svc), P);
}

inline Eigen::MatrixXd tandem_routing(int d) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i + 1 < d; ++i) P(i, i + 1) = 1.0;
    return P;
}

inline gjn::NetworkSpec tandem(double lambda = 1.0, double mu1 = 2.0, double mu2 = 3.0) {
    return exponential_network({lambda, 0.0}, {mu1, mu2}, tandem_routing(2));
}

inline gjn::NetworkSpec tandem3(double lambda = 1.0, double mu1 = 2.0, double mu2 = 3.0, double mu3 = 4.0) {
    return exponential_network({lambda, 0.0, 0.0}, {mu1, mu2, mu3}, tandem_routing(3));
}

inline gjn::NetworkSpec feedback() {
    Eigen::MatrixXd P(2, 2);
    P << 0, 1, 0.5, 0;
    return exponential_network({1.0, 0.0}, {4.0, 5.0}, P);
}

// Two stations with Erlang arrivals, deterministic and phase-type services.
inline gjn::NetworkSpec mixed() {
    Eigen::MatrixXd P(2, 2);
    P << 0, 0.6, 0.3, 0;
    Eigen::RowVectorXd a(2);
    a << 0.4, 0.6;
    Eigen::MatrixXd U(2, 2);
    U << -4, 1, 0.5, -6;
    std::vector<std::optional<gjn::Distribution>> arr{gjn::Distribution::erlang(2, 2.0),
                                                      gjn::Distribution::uniform(1.0, 3.0)};
    std::vector<gjn::Distribution> svc{gjn::Distribution::deterministic(0.3), gjn::Distribution::phase_type(a, U)};
    return gjn::NetworkSpec(std::move(arr), std::move(svc), P);
}

// Three stations, mixed laws, feedback.
inline gjn::NetworkSpec mixed3() {
    Eigen::MatrixXd P(3, 3);
    P << 0, 0.5, 0.2, 0, 0, 0.7, 0.1, 0, 0;
    std::vector<std::optional<gjn::Distribution>> arr{gjn::Distribution::exponential(0.8), std::nullopt,
                                                      gjn::Distribution::erlang(3, 1.5)};
    std::vector<gjn::Distribution> svc{gjn::Distribution::erlang(2, 5.0), gjn::Distribution::uniform(0.1, 0.5),
                                       gjn::Distribution::exponential(3.0)};
    return gjn::NetworkSpec(std::move(arr), std::move(svc), P);
}

// Random exponential network; station 0 is exogenous and a path 0 -> 1 -> ... keeps it irreducible.
inline gjn::NetworkSpec random_network(std::mt19937_64& rng, int d, double load_scale = 1.0) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j)
            if (U(rng) < 0.5 || j == i + 1) P(i, j) = U(rng);
        const double s = P.row(i).sum();
        if (s > 0) P.row(i) *= (0.2 + 0.75 * U(rng)) / s;
    }
    std::vector<double> lambda(static_cast<std::size_t>(d)), mu(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        lambda[static_cast<std::size_t>(i)] = (i == 0 || U(rng) < 0.4) ? load_scale * (0.2 + 1.8 * U(rng)) : 0.0;
        mu[static_cast<std::size_t>(i)] = 0.5 + 3.0 * U(rng);
    }
    return exponential_network(lambda, mu, P);
}

inline Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index k = 0;
    for (double x : xs) v(k++) = x;
    return v;
}

}  // namespace fixture
