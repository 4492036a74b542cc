// gjn_cli - command-line front end for the gjn library.
//
// Exit codes: 0 success, 1 input or validation failure, 2 numerical failure.
// Results go to stdout (or --out) as CSV; errors go to stderr as "error,<name>,<message>" lines.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gjn/config.hpp"
#include "gjn/gjn.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(12) << x;
    return os.str();
}

std::string csv_safe(std::string s) {
    for (auto& ch : s)
        if (ch == ',' || ch == '\n') ch = ';';
    return s;
}

std::vector<double> parse_reals(const std::string& s, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || tok.find_first_not_of(" \t", used) != std::string::npos)
            throw gjn::ConfigError(what + ": cannot parse '" + tok + "'");
        out.push_back(v);
    }
    if (out.empty()) throw gjn::ConfigError(what + " is empty");
    return out;
}

Eigen::VectorXd parse_vector(const std::string& s, int d, const std::string& what) {
    const auto v = parse_reals(s, what);
    if (static_cast<int>(v.size()) != d)
        throw gjn::ConfigError(what + " needs " + std::to_string(d) + " components");
    return Eigen::Map<const Eigen::VectorXd>(v.data(), d);
}

// "e2" selects the second axis; otherwise comma-separated components, normalized to unit length.
Eigen::VectorXd parse_direction(const std::string& s, int d) {
    if (!s.empty() && s[0] == 'e') {
        int k = 0;
        try {
            k = std::stoi(s.substr(1));
        } catch (const std::exception&) {
            k = 0;
        }
        if (k < 1 || k > d) throw gjn::ConfigError("direction '" + s + "' is not an axis of this network");
        return Eigen::VectorXd::Unit(d, k - 1);
    }
    const Eigen::VectorXd c = parse_vector(s, d, "direction");
    if ((c.array() < 0.0).any() || c.norm() == 0.0)
        throw gjn::ConfigError("direction must be nonnegative and nonzero");
    return c.normalized();
}

std::string direction_label(const Eigen::VectorXd& c) {
    for (Eigen::Index k = 0; k < c.size(); ++k)
        if (c(k) == 1.0 && c.norm() == 1.0) return "e" + std::to_string(k + 1);
    std::string out;
    for (Eigen::Index k = 0; k < c.size(); ++k) out += (k ? ";" : "") + fmt(c(k));
    return out;
}

int axis_of(const Eigen::VectorXd& c) {
    for (Eigen::Index k = 0; k < c.size(); ++k)
        if (c(k) == 1.0 && c.norm() == 1.0) return static_cast<int>(k);
    return -1;
}

struct Options {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double horizon = 0.0;
    std::string theta;
    std::vector<std::string> directions;
    std::string levels;
    double tolerance = 0.0;
    double time = 10.0;
    long replications = 0;
    int points = 128;
    int coordinate = 0;
    long box = 0;
};

class Output {
public:
    explicit Output(const std::string& command) { meta("gjn " + std::string(kVersion)), meta("command=" + command); }
    void meta(const std::string& line) { os_ << "# " << line << '\n'; }
    std::ostream& row() { return os_; }
    void flush(const std::string& path) const {
        if (path.empty()) {
            std::cout << os_.str();
            return;
        }
        std::ofstream f(path);
        if (!f) throw gjn::ConfigError("cannot write " + path);
        f << os_.str();
    }

private:
    std::ostringstream os_;
};

gjn::ConfigDocument load(const Options& o, bool check = true) {
    auto doc = gjn::load_config(o.config, check);
    if (o.tolerance > 0.0) doc.analysis.root_tolerance = o.tolerance;
    if (o.seed_set) doc.simulation.seed = o.seed;
    if (o.horizon > 0.0) doc.simulation.horizon = o.horizon;
    return doc;
}

gjn::GammaEvaluator<gjn::Distribution> make_evaluator(const gjn::ConfigDocument& doc) {
    return gjn::GammaEvaluator<gjn::Distribution>(doc.network, doc.analysis.root_tolerance);
}

// ---------------------------------------------------------------------------

int cmd_validate(const Options& o) {
    const auto doc = load(o, false);
    const auto rep = gjn::validate(doc.network);
    Output out("validate");
    out.row() << "status,code,message\n";
    for (const auto& i : rep.issues) {
        out.row() << "error," << i.code << ',' << csv_safe(i.message) << '\n';
        std::cerr << "error," << i.code << ',' << csv_safe(i.message) << '\n';
    }
    if (rep.ok()) out.row() << "ok,,\n";
    out.flush(o.out);
    return rep.ok() ? 0 : 1;
}

int cmd_analyze(const Options& o) {
    const auto doc = load(o);
    const auto cls = gjn::classify_stations(doc.network);
    const auto& tr = cls.traffic;
    Output out("analyze");
    out.meta(std::string("stable=") + (gjn::check_stability(doc.network) ? "true" : "false"));
    out.row() << "station,lambda,mu,alpha0,alpha,rho,class\n";
    const Eigen::VectorXd lam = doc.network.lambda(), mu = doc.network.mu();
    for (int i = 0; i < doc.network.dim(); ++i)
        out.row() << i + 1 << ',' << fmt(lam(i)) << ',' << fmt(mu(i)) << ',' << fmt(tr.alpha0(i)) << ','
                  << fmt(tr.alpha(i)) << ',' << fmt(tr.rho(i)) << ','
                  << gjn::to_string(cls.classes[static_cast<std::size_t>(i)]) << '\n';
    out.flush(o.out);
    return 0;
}

int cmd_gamma(const Options& o) {
    const auto doc = load(o);
    const auto ev = make_evaluator(doc);
    const int d = ev.dim();
    const Eigen::VectorXd th = parse_vector(o.theta, d, "--theta");
    Output out("gamma");
    out.meta("theta=" + direction_label(th));
    out.meta("tolerance=" + fmt(doc.analysis.root_tolerance));
    out.row() << "quantity,station,value\n";
    const Eigen::VectorXd g = ev.grad_gamma(th);
    for (int i = 0; i < d; ++i) {
        out.row() << "gamma_e," << i + 1 << ',' << fmt(ev.gamma_e(i, th(i))) << '\n';
        out.row() << "gamma_s," << i + 1 << ',' << fmt(ev.gamma_s(i, th)) << '\n';
        out.row() << "log_q," << i + 1 << ',' << fmt(ev.log_q(i, th)) << '\n';
        out.row() << "grad," << i + 1 << ',' << fmt(g(i)) << '\n';
    }
    out.row() << "gamma,," << fmt(ev.gamma(th)) << '\n';
    out.flush(o.out);
    return 0;
}

std::vector<Eigen::VectorXd> targets(const Options& o, const gjn::ConfigDocument& doc) {
    const int d = doc.network.dim();
    std::vector<Eigen::VectorXd> out;
    for (const auto& s : o.directions) out.push_back(parse_direction(s, d));
    if (out.empty())
        for (const auto& c : doc.analysis.directions) {
            if ((c.array() < 0.0).any() || c.norm() == 0.0)
                throw gjn::ConfigError("analysis.directions must be nonnegative and nonzero");
            out.push_back(c.normalized());
        }
    if (out.empty())
        for (int k = 0; k < d; ++k) out.push_back(Eigen::VectorXd::Unit(d, k));
    return out;
}

void decay_row(Output& out, const std::string& label, const gjn::DecayReport& r) {
    std::string cav;
    for (const auto& c : r.caveats) cav += (cav.empty() ? "" : ";") + csv_safe(c);
    out.row() << label << ',' << fmt(r.value) << ',' << gjn::to_string(r.kind) << ',' << cav << '\n';
}

int cmd_decay(const Options& o) {
    const auto doc = load(o);
    gjn::require_valid(doc.network);
    if (!gjn::check_stability(doc.network)) throw gjn::UnstableNetwork("decay rates need a stable network");
    const auto ev = make_evaluator(doc);
    Output out("decay");
    out.meta("tolerance=" + fmt(doc.analysis.root_tolerance));
    out.row() << "direction,value,kind,caveats\n";
    for (const auto& c : targets(o, doc)) {
        const std::string label = direction_label(c);
        if (ev.dim() == 2) {
            const int k = axis_of(c);
            decay_row(out, label, k >= 0 ? gjn::decay_coordinate(ev, k) : gjn::decay_direction(ev, c));
        } else {
            const auto b = gjn::bounds_general_d(ev, c);
            decay_row(out, label, b.upper);
            decay_row(out, label, b.lower);
        }
    }
    out.flush(o.out);
    return 0;
}

int cmd_boundary(const Options& o) {
    const auto doc = load(o);
    if (doc.network.dim() != 2) throw gjn::ValidationError("boundary is available for two-station networks only");
    if (o.points < 3) throw gjn::ConfigError("--points must be at least 3");
    const auto ev = make_evaluator(doc);
    Eigen::Vector2d center;
    const auto poly = gjn::boundary_polyline(ev, o.points, &center);
    Output out("boundary");
    out.meta("center=" + fmt(center(0)) + ";" + fmt(center(1)));
    out.row() << "angle,radius,theta1,theta2\n";
    for (const auto& p : poly)
        out.row() << fmt(p.angle) << ',' << fmt(p.radius) << ',' << fmt(p.theta(0)) << ',' << fmt(p.theta(1)) << '\n';
    out.flush(o.out);
    return 0;
}

int cmd_tilt(const Options& o) {
    const auto doc = load(o);
    const auto ev = make_evaluator(doc);
    const int d = ev.dim();
    const Eigen::VectorXd th = parse_vector(o.theta, d, "--theta");
    const auto tn = gjn::tilt_network(ev, th);
    const auto diag = gjn::classify_tilted(ev, th, d == 2 ? std::optional<int>(0) : std::nullopt);
    Output out("tilt");
    out.meta("theta=" + direction_label(th));
    out.row() << "quantity,i,j,value\n";
    auto put = [&](const std::string& q, int i, int j, const std::string& v) {
        out.row() << q << ',' << (i ? std::to_string(i) : "") << ',' << (j ? std::to_string(j) : "") << ',' << v
                  << '\n';
    };
    for (int i = 0; i < d; ++i) {
        put("lambda", i + 1, 0, fmt(tn.lambda(i)));
        put("mu", i + 1, 0, fmt(tn.mu(i)));
        put("exit", i + 1, 0, fmt(tn.exit(i)));
        put("gamma_e", i + 1, 0, fmt(tn.gamma_e(i)));
        put("gamma_s", i + 1, 0, fmt(tn.gamma_s(i)));
        for (int j = 0; j < d; ++j) put("routing", i + 1, j + 1, fmt(tn.P(i, j)));
    }
    for (int i = 0; i < d; ++i) {
        put("tilted_rho", i + 1, 0, fmt(diag.classes.traffic.rho(i)));
        put("tilted_class", i + 1, 0, gjn::to_string(diag.classes.classes[static_cast<std::size_t>(i)]));
        put("grad_gamma", i + 1, 0, fmt(diag.grad(i)));
    }
    put("all_weakly_unstable", 0, 0, diag.all_weakly_unstable ? "true" : "false");
    if (diag.k) {
        put("other_gradient", *diag.k + 1, 0, fmt(diag.other_gradient));
        put("t_inner", *diag.k + 1, 0, fmt(diag.t_inner));
    }
    out.flush(o.out);
    return 0;
}

int cmd_simulate(const Options& o) {
    const auto doc = load(o);
    const int d = doc.network.dim();
    gjn::TailTarget target;
    if (o.coordinate > 0) {
        if (o.coordinate > d) throw gjn::ConfigError("--coordinate out of range");
        if (o.box < 0) throw gjn::ConfigError("--box must be nonnegative");
        target = gjn::TailTarget::coordinate(o.coordinate - 1, o.box);
    } else {
        if (o.directions.size() > 1) throw gjn::ConfigError("simulate takes a single --direction");
        target = gjn::TailTarget::direction(o.directions.empty() ? Eigen::VectorXd::Unit(d, 0)
                                                                 : parse_direction(o.directions[0], d));
    }
    std::vector<double> levels = o.levels.empty() ? doc.analysis.levels : parse_reals(o.levels, "--levels");
    if (levels.empty())
        for (int x = 0; x <= 10; ++x) levels.push_back(x);
    const auto& sc = doc.simulation;
    const auto est = gjn::estimate_tail(doc.network, target, levels, sc.horizon, sc.warmup, sc.seed);
    Output out("simulate");
    out.meta("seed=" + std::to_string(sc.seed));
    out.meta("horizon=" + fmt(sc.horizon) + " warmup=" + fmt(sc.warmup) + " events=" + std::to_string(est.events));
    out.meta("target=" + (o.coordinate > 0 ? "coordinate " + std::to_string(o.coordinate) + " box " + std::to_string(o.box)
                                           : "direction " + direction_label(target.c)));
    out.row() << "row,level,estimate,stderr,ci_low,ci_high\n";
    for (std::size_t l = 0; l < levels.size(); ++l)
        out.row() << "level," << fmt(levels[l]) << ',' << fmt(est.prob[l]) << ',' << fmt(est.stderr_[l]) << ",,\n";
    try {
        const auto fit = gjn::fit_decay(est, -gjn::detail::kInf, gjn::detail::kInf, sc.seed);
        out.row() << "decay,," << fmt(fit.rate) << ",," << fmt(fit.ci_low) << ',' << fmt(fit.ci_high) << '\n';
    } catch (const gjn::InsufficientData& e) {
        out.meta(std::string("fit unavailable: ") + e.what());
    }
    out.flush(o.out);
    return 0;
}

int cmd_martingale(const Options& o) {
    const auto doc = load(o);
    const auto ev = make_evaluator(doc);
    const int d = ev.dim();
    const Eigen::VectorXd th = parse_vector(o.theta, d, "--theta");
    const long n = o.replications > 0 ? o.replications : doc.simulation.replications;
    const auto r = gjn::martingale_check(ev, th, o.time, n, {}, doc.simulation.seed);
    Output out("martingale-check");
    out.meta("seed=" + std::to_string(doc.simulation.seed));
    for (int i = 0; i < d; ++i) out.row() << "theta" << i + 1 << ',';
    out.row() << "t,mean,stderr,n\n";
    for (int i = 0; i < d; ++i) out.row() << fmt(th(i)) << ',';
    out.row() << fmt(r.t) << ',' << fmt(r.mean) << ',' << fmt(r.stderr_) << ',' << r.n << '\n';
    out.flush(o.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tail-decay rates of generalized Jackson networks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("config", o.config, "JSON network configuration")->required();
        sub->add_option("--out", o.out, "write CSV here instead of stdout");
        sub->add_option("--tolerance", o.tolerance, "root-finding tolerance")->check(CLI::PositiveNumber);
        return sub;
    };
    auto* validate = common(app.add_subcommand("validate", "check a configuration"));
    auto* analyze = common(app.add_subcommand("analyze", "traffic equations and stability"));
    auto* gamma = common(app.add_subcommand("gamma", "evaluate gamma and its parts at --theta"));
    auto* decay = common(app.add_subcommand("decay", "tail-decay rates for directions"));
    auto* boundary = common(app.add_subcommand("boundary", "polyline of the gamma = 0 curve (two stations)"));
    auto* tilt = common(app.add_subcommand("tilt", "tilted primitives and diagnostics at --theta"));
    auto* simulate = common(app.add_subcommand("simulate", "simulated tail probabilities and fitted decay"));
    auto* martingale = common(app.add_subcommand("martingale-check", "mean of the exponential martingale"));

    for (auto* sub : {gamma, tilt, martingale})
        sub->add_option("--theta", o.theta, "comma-separated reals")->required();
    for (auto* sub : {decay, simulate})
        sub->add_option("--direction", o.directions, "e<k> or comma-separated nonnegative components");
    for (auto* sub : {simulate, martingale}) {
        sub->add_option("--seed", o.seed, "random seed")->each([&](const std::string&) { o.seed_set = true; });
    }
    simulate->add_option("--horizon", o.horizon, "simulated time")->check(CLI::PositiveNumber);
    simulate->add_option("--levels", o.levels, "comma-separated levels x");
    simulate->add_option("--coordinate", o.coordinate, "estimate P(L in x e_k + box) for station k");
    simulate->add_option("--box", o.box, "side of the box for --coordinate");
    martingale->add_option("--time,-t", o.time, "time t")->check(CLI::NonNegativeNumber);
    martingale->add_option("--replications,-n", o.replications, "replications")->check(CLI::Range(2L, 1000000000L));
    boundary->add_option("--points", o.points, "number of polyline points");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*validate) return cmd_validate(o);
        if (*analyze) return cmd_analyze(o);
        if (*gamma) return cmd_gamma(o);
        if (*decay) return cmd_decay(o);
        if (*boundary) return cmd_boundary(o);
        if (*tilt) return cmd_tilt(o);
        if (*simulate) return cmd_simulate(o);
        if (*martingale) return cmd_martingale(o);
    } catch (const gjn::Error& e) {
        const std::string op = app.get_subcommands().front()->get_name();
        std::cerr << "error," << e.name() << ',' << csv_safe(e.what()) << " [in " << op << "]\n";
        return e.kind() == gjn::ErrorKind::Numerical ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error,internal," << csv_safe(e.what()) << '\n';
        return 2;
    }
    return 1;
}
