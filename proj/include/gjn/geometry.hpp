// geometry.hpp - regions cut out by the gamma functions and the decay rates read off them.
//
// All regions are open; suprema are reported as closure values. Two-station
// quantities are computed from one-dimensional slices of the convex set
// {gamma < 0}; general-d bounds fall back to ray searches.

#ifndef GJN_GEOMETRY_HPP
#define GJN_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gjn/detail/numeric.hpp"
#include "gjn/error.hpp"
#include "gjn/gamma.hpp"

namespace gjn {

inline constexpr double kDownSetEps = 1e-9;
inline constexpr int kRayScanPoints = 1024;
inline constexpr int kSliceScanPoints = 256;

enum class RegionKind {
    GammaIn,
    GammaInA,
    DownSetGammaIn,
    DownSetGammaInA,
    GammaCxA,
    CornOfBoundary,
    CornOfBoundaryK,
};

struct RegionQuery {
    RegionKind kind = RegionKind::GammaIn;
    std::vector<int> A;  // station subset, 0-based
    int k = 0;           // station for CornOfBoundaryK

    static RegionQuery gamma_in() { return {RegionKind::GammaIn, {}, 0}; }
    static RegionQuery gamma_in_A(std::vector<int> A) { return {RegionKind::GammaInA, std::move(A), 0}; }
    static RegionQuery down_set() { return {RegionKind::DownSetGammaIn, {}, 0}; }
    static RegionQuery down_set_A(std::vector<int> A) { return {RegionKind::DownSetGammaInA, std::move(A), 0}; }
    static RegionQuery gamma_cx_A(std::vector<int> A) { return {RegionKind::GammaCxA, std::move(A), 0}; }
    static RegionQuery corn() { return {RegionKind::CornOfBoundary, {}, 0}; }
    static RegionQuery corn_k(int k) { return {RegionKind::CornOfBoundaryK, {}, k}; }
};

enum class DecayKind { Exact2D, UpperBound2D, UpperBoundGeneralD, LowerBoundGeneralD };

inline const char* to_string(DecayKind k) {
    switch (k) {
        case DecayKind::Exact2D: return "Exact2D";
        case DecayKind::UpperBound2D: return "UpperBound2D";
        case DecayKind::UpperBoundGeneralD: return "UpperBoundGeneralD";
        case DecayKind::LowerBoundGeneralD: return "LowerBoundGeneralD";
    }
    return "?";
}

inline constexpr const char* kCaveatPhiRelaxed = "phi-finiteness relaxed";
inline constexpr const char* kCaveatA1 = "conjectural: (A1) not declared";
inline constexpr const char* kCaveatCornFails = "inapplicable: direction outside the corn";

struct DecayReport {
    Eigen::VectorXd direction;
    int coordinate = -1;  // >= 0 for coordinate reports
    double value = 0.0;
    DecayKind kind = DecayKind::Exact2D;
    std::vector<std::string> caveats;
    bool applicable = true;
};

struct Delta2D {
    Eigen::Vector2d delta;
    std::array<Eigen::Vector2d, 2> theta_cp;
    int iterations = 0;
    double residual = 0.0;
    bool monotone = true;  // iterates never increased
};

struct GeneralBounds {
    DecayReport upper;  // relaxed max_A m_A(c)
    DecayReport lower;  // sup{u : uc in Gamma^in}, gated by the corn condition
};

struct BoundaryPoint {
    double angle = 0.0;
    double radius = 0.0;
    Eigen::Vector2d theta;
};

namespace detail {

inline Eigen::VectorXd at2(int k, double t, double s) {
    Eigen::VectorXd th(2);
    th(k) = t;
    th(1 - k) = s;
    return th;
}

inline bool contains(const std::vector<int>& A, int i) { return std::find(A.begin(), A.end(), i) != A.end(); }

inline void check_direction(const Eigen::VectorXd& c, int d) {
    if (c.size() != d) throw ValidationError("direction has dimension " + std::to_string(c.size()));
    if ((c.array() < 0.0).any()) throw ValidationError("direction must be nonnegative");
    if (std::abs(c.norm() - 1.0) > 1e-9) throw ValidationError("direction must have unit length");
}

// Minimizer of a convex coercive function of one variable: bracket by doubling, then golden section.
template <class F>
std::pair<double, double> convex_min_1d(F f, double x0, double step = 0.5) {
    double b = x0, fb = f(b);
    double a = b - step, fa = f(a), c = b + step, fc = f(c);
    for (int k = 0; fa < fb || fc < fb; ++k) {
        if (k > 200) throw BracketFailure("minimum not bracketed");
        step *= 2.0;
        if (fa < fc) {
            c = b, fc = fb, b = a, fb = fa;
            a = b - step, fa = f(a);
        } else {
            a = b, fa = fb, b = c, fb = fc;
            c = b + step, fc = f(c);
        }
    }
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = c - g * (c - a), x2 = a + g * (c - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 200 && c - a > 1e-13 * std::max(1.0, std::abs(a)); ++it) {
        if (f1 <= f2) {
            c = x2, x2 = x1, f2 = f1;
            x1 = c - g * (c - a), f1 = f(x1);
        } else {
            a = x1, x1 = x2, f1 = f2;
            x2 = a + g * (c - a), f2 = f(x2);
        }
    }
    return f1 <= f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

// Point where f changes sign, starting from inside (f(x_in) < 0) and moving in direction dir.
template <class F>
double outward_root(F f, double x_in, double dir) {
    double lo = x_in, step = 0.25, hi = x_in + dir * step;
    for (int k = 0; f(hi) < 0.0; ++k) {
        if (k > 200) throw BracketFailure("region is unbounded along a slice");
        lo = hi;
        step *= 2.0;
        hi = x_in + dir * step;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (f(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Largest u in (lo, hi] with pred(u), assuming pred(lo) holds and pred switches once on the bracket.
template <class P>
double bisect_last(P pred, double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (pred(mid)) lo = mid;
        else hi = mid;
    }
    return lo;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Bound-constrained minimum of gamma (projected Newton, finite-difference Hessian).

struct OrthantMin {
    Eigen::VectorXd x;
    double value = 0.0;
};

template <class Law>
OrthantMin orthant_min(const GammaEvaluator<Law>& ev, const Eigen::VectorXd& lower, bool stop_when_negative = false,
                       std::optional<Eigen::VectorXd> start = std::nullopt) {
    const int d = ev.dim();
    Eigen::VectorXd x = (start ? *start : Eigen::VectorXd::Zero(d)).cwiseMax(lower);
    double fx = ev.gamma(x);
    for (int it = 0; it < 200; ++it) {
        if (stop_when_negative && fx < 0.0) break;
        const Eigen::VectorXd g = ev.grad_gamma(x);
        std::vector<int> free;
        for (int j = 0; j < d; ++j)
            if (!(x(j) <= lower(j) && g(j) > 0.0)) free.push_back(j);
        double pg = 0.0;
        for (int j : free) pg = std::max(pg, std::abs(g(j)));
        if (pg < 1e-13 || free.empty()) break;

        Eigen::MatrixXd H(d, d);
        for (int j = 0; j < d; ++j) {
            const double h = 1e-5 * std::max(1.0, std::abs(x(j)));
            Eigen::VectorXd xp = x, xm = x;
            xp(j) += h;
            xm(j) -= h;
            H.col(j) = (ev.grad_gamma(xp) - ev.grad_gamma(xm)) / (2.0 * h);
        }
        H = 0.5 * (H + H.transpose());
        const int nf = static_cast<int>(free.size());
        Eigen::MatrixXd Hf(nf, nf);
        Eigen::VectorXd gf(nf);
        for (int a = 0; a < nf; ++a) {
            gf(a) = g(free[a]);
            for (int b = 0; b < nf; ++b) Hf(a, b) = H(free[a], free[b]);
        }
        Eigen::VectorXd df;
        Eigen::LLT<Eigen::MatrixXd> llt(Hf);
        if (llt.info() == Eigen::Success) df = -llt.solve(gf);
        else df = -gf;
        Eigen::VectorXd dir = Eigen::VectorXd::Zero(d);
        for (int a = 0; a < nf; ++a) dir(free[a]) = df(a);

        double s = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls, s *= 0.5) {
            const Eigen::VectorXd xn = (x + s * dir).cwiseMax(lower);
            const double fn = ev.gamma(xn);
            if (fn <= fx + 1e-4 * g.dot(xn - x)) {
                moved = (xn - x).cwiseAbs().maxCoeff() > 0.0;
                x = xn;
                fx = fn;
                break;
            }
        }
        if (!moved) break;
    }
    return {x, fx};
}

// Unconstrained minimizer of gamma; interior to {gamma < 0} for stable networks.
template <class Law>
Eigen::VectorXd gamma_argmin(const GammaEvaluator<Law>& ev) {
    const int d = ev.dim();
    return orthant_min(ev, Eigen::VectorXd::Constant(d, -detail::kInf), false, Eigen::VectorXd::Zero(d)).x;
}

// ---------------------------------------------------------------------------
// Membership.

template <class Law>
bool in_gamma_in(const GammaEvaluator<Law>& ev, const Eigen::VectorXd& th) {
    return ev.gamma(th) < 0.0;
}

// gamma_s,i > 0 exactly when q_i > 1.
template <class Law>
bool in_gamma_A(const GammaEvaluator<Law>& ev, const std::vector<int>& A, const Eigen::VectorXd& th) {
    for (int i = 0; i < ev.dim(); ++i)
        if (!detail::contains(A, i) && !(ev.log_q(i, th) > 0.0)) return false;
    return true;
}

template <class Law>
bool in_gamma_in_A(const GammaEvaluator<Law>& ev, const std::vector<int>& A, const Eigen::VectorXd& th) {
    return in_gamma_A(ev, A, th) && in_gamma_in(ev, th);
}

template <class Law>
bool in_gamma_cx_A(const GammaEvaluator<Law>& ev, const std::vector<int>& A, const Eigen::VectorXd& th) {
    if (!in_gamma_in(ev, th)) return false;
    double s = 0.0;
    for (int i = 0; i < ev.dim(); ++i) {
        s += ev.gamma_e(i, th(i));
        if (detail::contains(A, i)) s += ev.gamma_s(i, th);
    }
    return s < 0.0;
}

template <class Law>
bool in_down_set(const GammaEvaluator<Law>& ev, const Eigen::VectorXd& th) {
    const Eigen::VectorXd lower = th.array() + kDownSetEps;
    return orthant_min(ev, lower, true).value < 0.0;
}

namespace detail {

// Nelder-Mead on a box-clamped objective; returns the best value seen, stopping once it is negative.
template <class F>
double nelder_mead_clamped(F f, const Eigen::VectorXd& lower, const Eigen::VectorXd& start, double scale) {
    const int d = static_cast<int>(start.size());
    auto h = [&](const Eigen::VectorXd& y) {
        const Eigen::VectorXd x = y.cwiseMax(lower);
        return f(x) + 1e-3 * (x - y).norm();
    };
    std::vector<Eigen::VectorXd> S(static_cast<std::size_t>(d + 1), start);
    for (int j = 0; j < d; ++j) S[static_cast<std::size_t>(j + 1)](j) += scale;
    std::vector<double> fs;
    for (const auto& s : S) fs.push_back(h(s));
    for (int it = 0; it < 400 * d; ++it) {
        std::vector<std::size_t> idx(S.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
        if (fs[idx[0]] < 0.0) return fs[idx[0]];
        const std::size_t worst = idx.back();
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
        for (std::size_t i = 0; i + 1 < idx.size(); ++i) centroid += S[idx[i]];
        centroid /= d;
        const Eigen::VectorXd xr = centroid + (centroid - S[worst]);
        const double fr = h(xr);
        if (fr < fs[idx[0]]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - S[worst]);
            const double fe = h(xe);
            if (fe < fr) S[worst] = xe, fs[worst] = fe;
            else S[worst] = xr, fs[worst] = fr;
        } else if (fr < fs[idx[idx.size() - 2]]) {
            S[worst] = xr, fs[worst] = fr;
        } else {
            const Eigen::VectorXd xc = centroid + 0.5 * (S[worst] - centroid);
            const double fc = h(xc);
            if (fc < fs[worst]) {
                S[worst] = xc, fs[worst] = fc;
            } else {
                for (std::size_t i = 1; i < idx.size(); ++i) {
                    S[idx[i]] = S[idx[0]] + 0.5 * (S[idx[i]] - S[idx[0]]);
                    fs[idx[i]] = h(S[idx[i]]);
                }
            }
        }
        double spread = 0.0;
        for (const auto& s : S) spread = std::max(spread, (s - S[idx[0]]).cwiseAbs().maxCoeff());
        if (spread < 1e-12) break;
    }
    return *std::min_element(fs.begin(), fs.end());
}

}  // namespace detail

// Down-set of Gamma^in_A. For A = all stations this is exact; otherwise the
// complement constraints make the search non-convex and it is a local search.
template <class Law>
bool in_down_set_A(const GammaEvaluator<Law>& ev, const std::vector<int>& A, const Eigen::VectorXd& th) {
    const int d = ev.dim();
    std::vector<int> outside;
    for (int i = 0; i < d; ++i)
        if (!detail::contains(A, i)) outside.push_back(i);
    if (outside.empty()) return in_down_set(ev, th);
    const Eigen::VectorXd lower = th.array() + kDownSetEps;
    auto pen = [&](const Eigen::VectorXd& x) {
        double v = ev.gamma(x);
        for (int i : outside) v = std::max(v, -ev.log_q(i, x));
        return v;
    };
    const auto om = orthant_min(ev, lower);
    if (pen(om.x) < 0.0) return true;
    for (const Eigen::VectorXd& s : {om.x, Eigen::VectorXd(lower.array() + 0.05)}) {
        if (detail::nelder_mead_clamped(pen, lower, s, 0.1) < 0.0) return true;
    }
    return false;
}

template <class Law>
bool corn_membership(const GammaEvaluator<Law>& ev, const Eigen::VectorXd& c, std::optional<int> station = std::nullopt);

template <class Law>
bool member(const GammaEvaluator<Law>& ev, const RegionQuery& q, const Eigen::VectorXd& th) {
    switch (q.kind) {
        case RegionKind::GammaIn: return in_gamma_in(ev, th);
        case RegionKind::GammaInA: return in_gamma_in_A(ev, q.A, th);
        case RegionKind::DownSetGammaIn: return in_down_set(ev, th);
        case RegionKind::DownSetGammaInA: return in_down_set_A(ev, q.A, th);
        case RegionKind::GammaCxA: return in_gamma_cx_A(ev, q.A, th);
        case RegionKind::CornOfBoundary:
        case RegionKind::CornOfBoundaryK: {
            if ((th.array() < 0.0).any() || th.norm() == 0.0) return false;
            const Eigen::VectorXd c = th / th.norm();
            try {
                return q.kind == RegionKind::CornOfBoundary ? corn_membership(ev, c) : corn_membership(ev, c, q.k);
            } catch (const Error&) {
                return false;
            }
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Rays.

// sup{u >= 0 : uc in Gamma^in}; gamma is convex along the ray and vanishes at 0.
template <class Law>
double gamma_in_ray(const GammaEvaluator<Law>& ev, const Eigen::VectorXd& c) {
    if (!(ev.grad_gamma(Eigen::VectorXd::Zero(ev.dim())).dot(c) < 0.0))
        throw EmptyRay("gradient of gamma at 0 is not decreasing along the direction");
    auto f = [&](double u) { return ev.gamma(u * c); };
    double hi = 1.0;
    for (int k = 0; f(hi) < 0.0; ++k) {
        if (k > 100) throw BracketFailure("Gamma^in is unbounded along the direction");
        hi *= 2.0;
    }
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (f(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

template <class Law>
double boundary_ray(const GammaEvaluator<Law>& ev, const RegionQuery& q, const Eigen::VectorXd& c) {
    detail::check_direction(c, ev.dim());
    switch (q.kind) {
        case RegionKind::GammaIn: return gamma_in_ray(ev, c);
        case RegionKind::DownSetGammaIn:
        case RegionKind::DownSetGammaInA: {
            // Down-sets are monotone along nonnegative rays.
            auto in = [&](double u) { return member(ev, q, Eigen::VectorXd(u * c)); };
            if (!in(1e-12)) throw EmptyRay("ray does not enter the down-set");
            double lo = 1e-12, hi = 1.0;
            for (int k = 0; in(hi); ++k) {
                if (k > 100) throw BracketFailure("down-set is unbounded along the direction");
                lo = hi;
                hi *= 2.0;
            }
            return detail::bisect_last(in, lo, hi);
        }
        case RegionKind::GammaInA:
        case RegionKind::GammaCxA: {
            // Both sit inside Gamma^in; scan for the last in-region segment, then refine.
            const double U = gamma_in_ray(ev, c);
            auto in = [&](double u) { return member(ev, q, Eigen::VectorXd(u * c)); };
            const double h = U / kRayScanPoints;
            for (int i = kRayScanPoints - 1; i >= 1; --i)
                if (in(i * h)) return detail::bisect_last(in, i * h, (i + 1) * h);
            for (double u = h / 2; u > h * 1e-9; u /= 2)
                if (in(u)) return detail::bisect_last(in, u, h);
            throw EmptyRay("ray does not enter the region");
        }
        case RegionKind::CornOfBoundary:
        case RegionKind::CornOfBoundaryK:
            if (member(ev, q, c)) return detail::kInf;
            throw EmptyRay("direction is outside the corn");
    }
    throw EmptyRay("unknown region");
}

// ---------------------------------------------------------------------------
// Two-station slices: for fixed theta_k = t, {theta_m : gamma < 0} is an interval.

struct Slice {
    bool nonempty = false;
    double argmin = 0.0;
    double min = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

template <class Law>
Slice gamma_slice(const GammaEvaluator<Law>& ev, int k, double t, double guess = 0.0) {
    auto f = [&](double s) { return ev.gamma(detail::at2(k, t, s)); };
    Slice out;
    const auto [xm, fm] = detail::convex_min_1d(f, guess);
    out.argmin = xm;
    out.min = fm;
    out.lo = out.hi = xm;
    if (fm < 0.0) {
        out.nonempty = true;
        out.lo = detail::outward_root(f, xm, -1.0);
        out.hi = detail::outward_root(f, xm, 1.0);
    }
    return out;
}

// Range of theta_k over the closure of Gamma^in (d = 2).
template <class Law>
std::pair<double, double> gamma_in_extent(const GammaEvaluator<Law>& ev, int k) {
    const Eigen::VectorXd center = gamma_argmin(ev);
    if (!(ev.gamma(center) < 0.0)) throw EmptyRay("Gamma^in is empty");
    auto m = [&](double t) { return gamma_slice(ev, k, t, center(1 - k)).min; };
    return {detail::outward_root(m, center(k), -1.0), detail::outward_root(m, center(k), 1.0)};
}

namespace detail {

// theta_m < g_m(theta_k) is the two-station form of gamma_s,m > 0.
template <class Law>
double complement_cap(const GammaEvaluator<Law>& ev, int k, double t) {
    const int m = 1 - k;
    const auto& P = ev.spec().routing();
    const double pm0 = 1.0 - P.row(m).sum();
    return std::log(P(m, k) * std::exp(t) + std::max(pm0, 0.0)) - std::log1p(-P(m, m));
}

// sup of theta_k over the closure of {gamma < 0, theta_m < cap(theta_k)}, with the maximizing point.
template <class Law, class Cap>
Eigen::Vector2d sup_over_slices(const GammaEvaluator<Law>& ev, int k, Cap cap, std::pair<double, double> ext,
                                double guess) {
    auto feasible = [&](double t) {
        const Slice s = gamma_slice(ev, k, t, guess);
        return s.nonempty && s.lo <= cap(t);
    };
    const auto [tmin, tmax] = ext;
    const double h = (tmax - tmin) / kSliceScanPoints;
    for (int i = 1; i < kSliceScanPoints; ++i) {
        const double t = tmax - i * h;
        if (feasible(t)) {
            const double ts = bisect_last(feasible, t, t + h);
            const Slice s = gamma_slice(ev, k, ts, guess);
            Eigen::Vector2d out;
            out(k) = ts;
            out(1 - k) = s.lo;
            return out;
        }
    }
    throw EmptyRay("no feasible slice for station " + std::to_string(k + 1));
}

}  // namespace detail

// Argsup of theta_k over the closure of Gamma^in_k (d = 2).
template <class Law>
Eigen::Vector2d theta_cp(const GammaEvaluator<Law>& ev, int k) {
    if (ev.dim() != 2) throw ValidationError("theta_cp needs two stations");
    const Eigen::VectorXd center = gamma_argmin(ev);
    return detail::sup_over_slices(
        ev, k, [&](double t) { return detail::complement_cap(ev, k, t); }, gamma_in_extent(ev, k), center(1 - k));
}

// Fixed point of the alternating scheme defining (delta_1, delta_2).
template <class Law>
Delta2D delta_2d(const GammaEvaluator<Law>& ev, std::optional<Eigen::Vector2d> init = std::nullopt) {
    if (ev.dim() != 2) throw ValidationError("delta_2d needs two stations");
    const Eigen::VectorXd center = gamma_argmin(ev);
    const std::array<std::pair<double, double>, 2> ext{gamma_in_extent(ev, 0), gamma_in_extent(ev, 1)};
    Delta2D out;
    out.delta = init ? *init : Eigen::Vector2d(ext[0].second, ext[1].second);
    for (int k = 0; k < 2; ++k)
        out.theta_cp[static_cast<std::size_t>(k)] = detail::sup_over_slices(
            ev, k, [&](double t) { return detail::complement_cap(ev, k, t); }, ext[static_cast<std::size_t>(k)],
            center(1 - k));
    for (int it = 1; it <= 10000; ++it) {
        Eigen::Vector2d next = out.delta;
        for (int k = 0; k < 2; ++k) {
            const double box = next(1 - k);
            next(k) = detail::sup_over_slices(
                ev, k, [&](double t) { return std::min(detail::complement_cap(ev, k, t), box); },
                ext[static_cast<std::size_t>(k)], center(1 - k))(k);
        }
        const double change = (next - out.delta).cwiseAbs().maxCoeff();
        if (((next - out.delta).array() > 1e-10).any()) out.monotone = false;
        out.delta = next;
        out.iterations = it;
        out.residual = change;
        if (change < 1e-10) return out;
    }
    throw NonConvergence("alternating delta iteration did not settle");
}

namespace detail {

inline std::vector<std::string> a1_caveats(bool a1) {
    if (a1) return {};
    return {kCaveatA1};
}

}  // namespace detail

template <class Law>
DecayReport decay_coordinate(const GammaEvaluator<Law>& ev, int k, const std::optional<Delta2D>& delta = std::nullopt) {
    const Delta2D dl = delta ? *delta : delta_2d(ev);
    DecayReport r;
    r.coordinate = k;
    r.direction = Eigen::VectorXd::Unit(2, k);
    r.value = dl.delta(k);
    r.kind = DecayKind::Exact2D;
    return r;
}

// sup{u : uc in the down-set of Gamma^in}.
template <class Law>
double down_set_ray(const GammaEvaluator<Law>& ev, const Eigen::VectorXd& c) {
    return boundary_ray(ev, RegionQuery::down_set(), c);
}

template <class Law>
DecayReport decay_direction(const GammaEvaluator<Law>& ev, const Eigen::VectorXd& c,
                            const std::optional<Delta2D>& delta = std::nullopt) {
    if (ev.dim() != 2) throw ValidationError("decay_direction needs two stations");
    detail::check_direction(c, 2);
    const Delta2D dl = delta ? *delta : delta_2d(ev);
    double box = detail::kInf;
    for (int i = 0; i < 2; ++i)
        if (c(i) > 0.0) box = std::min(box, dl.delta(i) / c(i));
    DecayReport r;
    r.direction = c;
    r.value = std::min(box, down_set_ray(ev, c));
    r.kind = DecayKind::Exact2D;
    r.caveats = detail::a1_caveats(ev.spec().a1_holds());
    return r;
}

// sup{<theta, c> : theta in D_2} = max over the upper boundary of sum_i c_i min(theta_i, delta_i).
template <class Law>
DecayReport decay_point_direction(const GammaEvaluator<Law>& ev, const Eigen::VectorXd& c,
                                  const std::optional<Delta2D>& delta = std::nullopt) {
    if (ev.dim() != 2) throw ValidationError("decay_point_direction needs two stations");
    detail::check_direction(c, 2);
    const Delta2D dl = delta ? *delta : delta_2d(ev);
    const Eigen::VectorXd center = gamma_argmin(ev);
    const auto [tmin, tmax] = gamma_in_extent(ev, 0);
    auto phi = [&](double t) {
        const Slice s = gamma_slice(ev, 0, t, center(1));
        const double top = s.nonempty ? s.hi : s.argmin;
        return c(0) * std::min(t, dl.delta(0)) + c(1) * std::min(top, dl.delta(1));
    };
    // phi is concave on [tmin, tmax]; golden section for its maximum.
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = tmin, b = tmax;
    double x1 = b - g * (b - a), x2 = a + g * (b - a), f1 = phi(x1), f2 = phi(x2);
    for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
        if (f1 >= f2) {
            b = x2, x2 = x1, f2 = f1, x1 = b - g * (b - a), f1 = phi(x1);
        } else {
            a = x1, x1 = x2, f1 = f2, x2 = a + g * (b - a), f2 = phi(x2);
        }
    }
    DecayReport r;
    r.direction = c;
    r.value = std::max({f1, f2, phi(tmin), phi(tmax)});
    r.kind = DecayKind::UpperBound2D;
    r.caveats = detail::a1_caveats(ev.spec().a1_holds());
    return r;
}

// ---------------------------------------------------------------------------
// Corn test and general-d bounds.

template <class Law>
bool corn_membership(const GammaEvaluator<Law>& ev, const Eigen::VectorXd& c, std::optional<int> station) {
    detail::check_direction(c, ev.dim());
    if (!station) {
        // The boundary hit must face outward in every coordinate: grad gamma >= 0 there.
        double u;
        try {
            u = gamma_in_ray(ev, c);
        } catch (const EmptyRay&) {
            return false;
        }
        const Eigen::VectorXd g = ev.grad_gamma(Eigen::VectorXd(u * c));
        return (g.array() >= -1e-9 * std::max(1.0, g.norm())).all();
    }
    if (ev.dim() != 2) throw ValidationError("station corn is defined for two stations");
    const int k = *station;
    // theta_cp_k itself lies on the boundary of Gamma^in_k.
    Eigen::Vector2d cp = theta_cp(ev, k);
    if (cp.minCoeff() > -1e-8) cp = cp.cwiseMax(0.0);
    if ((cp.array() >= 0.0).all() && cp.norm() > 0.0 && (cp / cp.norm() - c).norm() < 1e-9)
        return in_down_set(ev, Eigen::VectorXd(cp));
    // Otherwise look for membership changes of Gamma^in_k along the ray.
    double U;
    try {
        U = gamma_in_ray(ev, c);
    } catch (const EmptyRay&) {
        return false;
    }
    const std::vector<int> A{k};
    auto in = [&](double u) { return in_gamma_in_A(ev, A, Eigen::VectorXd(u * c)); };
    const double h = U / kRayScanPoints;
    auto hits_down_set = [&](double u) { return u > 1e-12 && in_down_set(ev, Eigen::VectorXd(u * c)); };
    bool prev = false;
    for (int i = 1; i <= kRayScanPoints; ++i) {
        const double hi = i * h;
        const bool cur = i < kRayScanPoints && in(hi);
        if (cur && !prev && hits_down_set(detail::bisect_last([&](double u) { return !in(u); }, hi - h, hi)))
            return true;
        if (!cur && prev && hits_down_set(detail::bisect_last(in, hi - h, hi))) return true;
        prev = cur;
    }
    return false;
}

template <class Law>
GeneralBounds bounds_general_d(const GammaEvaluator<Law>& ev, const Eigen::VectorXd& c) {
    const int d = ev.dim();
    detail::check_direction(c, d);
    GeneralBounds out;
    out.upper.direction = out.lower.direction = c;
    out.upper.kind = DecayKind::UpperBoundGeneralD;
    out.lower.kind = DecayKind::LowerBoundGeneralD;

    double best = -detail::kInf;
    std::string best_set;
    for (unsigned mask = 1; mask < (1u << d); ++mask) {
        std::vector<int> A;
        for (int i = 0; i < d; ++i)
            if (mask & (1u << i)) A.push_back(i);
        double v;
        try {
            v = boundary_ray(ev, RegionQuery::down_set_A(A), c);
        } catch (const EmptyRay&) {
            continue;
        }
        if (v > best) {
            best = v;
            std::ostringstream os;
            os << "attained at A={";
            for (std::size_t j = 0; j < A.size(); ++j) os << (j ? "," : "") << A[j] + 1;
            os << "}";
            best_set = os.str();
        }
    }
    out.upper.value = best;
    out.upper.applicable = std::isfinite(best);
    out.upper.caveats.push_back(kCaveatPhiRelaxed);
    if (!best_set.empty()) out.upper.caveats.push_back(best_set);
    if (!ev.spec().a1_holds()) out.upper.caveats.push_back(kCaveatA1);

    try {
        out.lower.value = gamma_in_ray(ev, c);
        out.lower.applicable = corn_membership(ev, c);
    } catch (const EmptyRay&) {
        out.lower.value = 0.0;
        out.lower.applicable = false;
    }
    if (!out.lower.applicable) out.lower.caveats.push_back(kCaveatCornFails);
    return out;
}

// Point of Gamma^in_A with positive entries on A, following the t-vector construction.
template <class Law>
std::optional<Eigen::VectorXd> find_point_in_gamma_in_A(const GammaEvaluator<Law>& ev, const std::vector<int>& A) {
    const int d = ev.dim();
    const TVectors tv = ev.t_vectors(Eigen::VectorXd::Zero(d));
    Eigen::VectorXd inward = Eigen::VectorXd::Zero(d), outward = Eigen::VectorXd::Zero(d);
    for (int j = 0; j < d; ++j) {
        const Eigen::VectorXd t = tv.T.col(j) / tv.T.col(j).norm();
        if (detail::contains(A, j)) inward -= t;
        else outward += t;  // makes gamma_s,j > 0 strictly when it is flat along the inward part
    }
    for (double eta : {0.0, 1e-1, 1e-2, 1e-3})
        for (int k = 0; k < 60; ++k) {
            const Eigen::VectorXd th = std::ldexp(1.0, -k) * (inward + eta * outward);
            if (in_gamma_in_A(ev, A, th) && std::all_of(A.begin(), A.end(), [&](int i) { return th(i) > 0.0; }))
                return th;
        }
    return std::nullopt;
}

// Samples of the boundary of Gamma^in in polar form around the minimizer of gamma (d = 2).
template <class Law>
std::vector<BoundaryPoint> boundary_polyline(const GammaEvaluator<Law>& ev, int n, Eigen::Vector2d* center_out = nullptr) {
    if (ev.dim() != 2) throw ValidationError("boundary polyline needs two stations");
    const Eigen::VectorXd center = gamma_argmin(ev);
    if (!(ev.gamma(center) < 0.0)) throw EmptyRay("Gamma^in is empty");
    if (center_out) *center_out = center;
    std::vector<BoundaryPoint> out;
    for (int i = 0; i < n; ++i) {
        const double a = 2.0 * M_PI * i / n;
        const Eigen::Vector2d u(std::cos(a), std::sin(a));
        const double r = detail::outward_root([&](double s) { return ev.gamma(center + s * u); }, 0.0, 1.0);
        out.push_back({a, r, center + r * u});
    }
    return out;
}

}  // namespace gjn

#endif  // GJN_GEOMETRY_HPP
