// config.hpp - JSON configuration documents.
//
// Strict schema: unknown keys are rejected. Only the network section is required.
// Needs the vendored nlohmann json header on the include path.

#ifndef GJN_CONFIG_HPP
#define GJN_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "gjn/distributions.hpp"
#include "gjn/error.hpp"
#include "gjn/network.hpp"

namespace gjn {

using Json = nlohmann::json;

struct AnalysisConfig {
    std::vector<Eigen::VectorXd> directions;
    std::vector<double> levels;
    double root_tolerance = 1e-12;
    bool operator==(const AnalysisConfig&) const = default;
};

struct SimulationConfig {
    double horizon = 1e5;
    double warmup = 1e3;
    std::uint64_t seed = 1;
    long replications = 1000;
    bool operator==(const SimulationConfig&) const = default;
};

struct ConfigDocument {
    NetworkSpec network;
    AnalysisConfig analysis;
    SimulationConfig simulation;
};

namespace detail {

inline void require_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed,
                         std::initializer_list<const char*> required = {}) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
    for (const char* r : required)
        if (!j.contains(r)) throw ConfigError("missing key '" + std::string(r) + "' in " + where);
}

inline double num(const Json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + " must be a number");
    return j.get<double>();
}

inline std::vector<double> num_array(const Json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + " must be an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(num(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

inline Eigen::MatrixXd num_matrix(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + " must be a nonempty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto first = num_array(j[0], where + "[0]");
    Eigen::MatrixXd M(rows, static_cast<Eigen::Index>(first.size()));
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto row = num_array(j[static_cast<std::size_t>(r)], where + "[" + std::to_string(r) + "]");
        if (row.size() != first.size()) throw ConfigError(where + " has ragged rows");
        for (Eigen::Index c = 0; c < M.cols(); ++c) M(r, c) = row[static_cast<std::size_t>(c)];
    }
    return M;
}

inline Json matrix_json(const Eigen::MatrixXd& M) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
        out.push_back(row);
    }
    return out;
}

}  // namespace detail

inline Distribution distribution_from_json(const Json& j, const std::string& where = "distribution") {
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        throw ConfigError(where + " needs a string 'type'");
    const std::string t = j["type"].get<std::string>();
    using detail::num;
    if (t == "exponential") {
        detail::require_keys(j, where, {"type", "rate"}, {"rate"});
        return Distribution::exponential(num(j["rate"], where + ".rate"));
    }
    if (t == "deterministic") {
        detail::require_keys(j, where, {"type", "value"}, {"value"});
        return Distribution::deterministic(num(j["value"], where + ".value"));
    }
    if (t == "erlang") {
        detail::require_keys(j, where, {"type", "shape", "rate"}, {"shape", "rate"});
        if (!j["shape"].is_number_integer()) throw ConfigError(where + ".shape must be an integer");
        return Distribution::erlang(j["shape"].get<int>(), num(j["rate"], where + ".rate"));
    }
    if (t == "phase") {
        detail::require_keys(j, where, {"type", "a", "U"}, {"a", "U"});
        const auto a = detail::num_array(j["a"], where + ".a");
        Eigen::RowVectorXd av(static_cast<Eigen::Index>(a.size()));
        for (std::size_t i = 0; i < a.size(); ++i) av(static_cast<Eigen::Index>(i)) = a[i];
        return Distribution::phase_type(av, detail::num_matrix(j["U"], where + ".U"));
    }
    if (t == "uniform") {
        detail::require_keys(j, where, {"type", "lo", "hi"}, {"lo", "hi"});
        return Distribution::uniform(num(j["lo"], where + ".lo"), num(j["hi"], where + ".hi"));
    }
    throw ConfigError(where + " has unknown type '" + t + "'");
}

inline Json to_json(const Distribution& f) {
    return std::visit(
        [](const auto& d) -> Json {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Exponential>) return {{"type", "exponential"}, {"rate", d.rate}};
            else if constexpr (std::is_same_v<T, Deterministic>) return {{"type", "deterministic"}, {"value", d.value}};
            else if constexpr (std::is_same_v<T, Erlang>) return {{"type", "erlang"}, {"shape", d.shape}, {"rate", d.rate}};
            else if constexpr (std::is_same_v<T, UniformInterval>) return {{"type", "uniform"}, {"lo", d.lo}, {"hi", d.hi}};
            else {
                Json a = Json::array();
                for (Eigen::Index i = 0; i < d.a.size(); ++i) a.push_back(d.a(i));
                return {{"type", "phase"}, {"a", a}, {"U", detail::matrix_json(d.U)}};
            }
        },
        f.variant());
}

inline NetworkSpec network_from_json(const Json& j, std::optional<bool> a1_declared = std::nullopt) {
    detail::require_keys(j, "network", {"stations", "arrivals", "services", "routing"},
                         {"stations", "arrivals", "services", "routing"});
    if (!j["stations"].is_number_integer() || j["stations"].get<int>() < 1)
        throw ConfigError("network.stations must be a positive integer");
    const auto d = static_cast<std::size_t>(j["stations"].get<int>());
    if (!j["arrivals"].is_array() || j["arrivals"].size() != d)
        throw ConfigError("network.arrivals must list one entry (or null) per station");
    if (!j["services"].is_array() || j["services"].size() != d)
        throw ConfigError("network.services must list one entry per station");
    std::vector<std::optional<Distribution>> arr;
    std::vector<Distribution> svc;
    for (std::size_t i = 0; i < d; ++i) {
        const std::string idx = "[" + std::to_string(i) + "]";
        if (j["arrivals"][i].is_null()) arr.emplace_back(std::nullopt);
        else arr.emplace_back(distribution_from_json(j["arrivals"][i], "network.arrivals" + idx));
        svc.push_back(distribution_from_json(j["services"][i], "network.services" + idx));
    }
    const Eigen::MatrixXd P = detail::num_matrix(j["routing"], "network.routing");
    if (P.rows() != static_cast<Eigen::Index>(d) || P.cols() != static_cast<Eigen::Index>(d))
        throw ConfigError("network.routing must be stations x stations");
    return NetworkSpec(std::move(arr), std::move(svc), P, a1_declared);
}

inline Json to_json(const NetworkSpec& s) {
    Json arr = Json::array(), svc = Json::array();
    for (int i = 0; i < s.dim(); ++i) {
        arr.push_back(s.arrival(i) ? to_json(*s.arrival(i)) : Json(nullptr));
        svc.push_back(to_json(s.service(i)));
    }
    return {{"stations", s.dim()}, {"arrivals", arr}, {"services", svc}, {"routing", detail::matrix_json(s.routing())}};
}

// Parses a document; the network must pass validate() unless check is false.
inline ConfigDocument config_from_json(const Json& j, bool check = true) {
    detail::require_keys(j, "document", {"network", "analysis", "simulation", "flags"}, {"network"});
    std::optional<bool> a1;
    if (j.contains("flags")) {
        detail::require_keys(j["flags"], "flags", {"a1_declared"});
        if (j["flags"].contains("a1_declared")) {
            if (!j["flags"]["a1_declared"].is_boolean()) throw ConfigError("flags.a1_declared must be a boolean");
            a1 = j["flags"]["a1_declared"].get<bool>();
        }
    }
    ConfigDocument doc{network_from_json(j["network"], a1), {}, {}};
    const int d = doc.network.dim();
    if (j.contains("analysis")) {
        const Json& a = j["analysis"];
        detail::require_keys(a, "analysis", {"directions", "levels", "tolerances"});
        if (a.contains("directions")) {
            if (!a["directions"].is_array()) throw ConfigError("analysis.directions must be an array");
            for (std::size_t k = 0; k < a["directions"].size(); ++k) {
                const auto v = detail::num_array(a["directions"][k], "analysis.directions[" + std::to_string(k) + "]");
                if (static_cast<int>(v.size()) != d) throw ConfigError("analysis.directions entries need one entry per station");
                doc.analysis.directions.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), d));
            }
        }
        if (a.contains("levels")) doc.analysis.levels = detail::num_array(a["levels"], "analysis.levels");
        if (a.contains("tolerances")) {
            detail::require_keys(a["tolerances"], "analysis.tolerances", {"root"});
            if (a["tolerances"].contains("root"))
                doc.analysis.root_tolerance = detail::num(a["tolerances"]["root"], "analysis.tolerances.root");
        }
    }
    if (j.contains("simulation")) {
        const Json& s = j["simulation"];
        detail::require_keys(s, "simulation", {"horizon", "warmup", "seed", "replications"});
        if (s.contains("horizon")) doc.simulation.horizon = detail::num(s["horizon"], "simulation.horizon");
        if (s.contains("warmup")) doc.simulation.warmup = detail::num(s["warmup"], "simulation.warmup");
        if (s.contains("seed")) {
            if (!s["seed"].is_number_unsigned()) throw ConfigError("simulation.seed must be a nonnegative integer");
            doc.simulation.seed = s["seed"].get<std::uint64_t>();
        }
        if (s.contains("replications")) {
            if (!s["replications"].is_number_integer() || s["replications"].get<long>() < 2)
                throw ConfigError("simulation.replications must be an integer >= 2");
            doc.simulation.replications = s["replications"].get<long>();
        }
    }
    if (check) require_valid(doc.network);
    return doc;
}

inline Json to_json(const ConfigDocument& doc) {
    Json dirs = Json::array();
    for (const auto& c : doc.analysis.directions) dirs.push_back(std::vector<double>(c.data(), c.data() + c.size()));
    Json out = {{"network", to_json(doc.network)},
                {"analysis", {{"directions", dirs}, {"levels", doc.analysis.levels},
                              {"tolerances", {{"root", doc.analysis.root_tolerance}}}}},
                {"simulation", {{"horizon", doc.simulation.horizon}, {"warmup", doc.simulation.warmup},
                                {"seed", doc.simulation.seed}, {"replications", doc.simulation.replications}}}};
    if (doc.network.a1_declared()) out["flags"] = {{"a1_declared", *doc.network.a1_declared()}};
    return out;
}

inline ConfigDocument load_config(const std::string& path, bool check = true) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return config_from_json(j, check);
}

}  // namespace gjn

#endif  // GJN_CONFIG_HPP
