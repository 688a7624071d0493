#pragma once

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mintime/mpc.hpp"
#include "mintime/pipeline.hpp"
#include "mintime/solver.hpp"

namespace mintime {

inline constexpr const char* kToolName = "mintime";
inline constexpr const char* kToolVersion = "0.1.0";

/// Problem-file or report-file schema violation; the message carries the
/// offending field's path.
class ParseError : public InvalidInputError {
public:
    using InvalidInputError::InvalidInputError;
};

/// How the weight schedule is to be built; resolved against the system and
/// admissible set once both are known.
struct WeightSpec {
    enum class Kind { Linear, Theorem1, Explicit };
    Kind kind = Kind::Linear;
    double a = 1.0;
    double eta = 0.0;      ///< <= 0: 1e-3 * (1 + ||x0||)
    double safety = 1.01;
    std::vector<double> values;
};

/// Parsed problem file.
struct ProblemSpec {
    Matrix A;
    Matrix B;
    Vector x0;
    std::string set_type;  ///< "ball2" or "ballinf"
    double r = 0.0;
    Vector radii;
    WeightSpec weights;
    Eigen::Index horizon = 0;
    SolverConfig solver;
    std::optional<std::uint64_t> seed;
    Eigen::Index mu_samples = 0;

    LtiSystem system() const { return {A, B}; }

    AdmissibleSet admissible_set() const {
        if (set_type == "ball2") return AdmissibleSet::ball2(B.cols(), r);
        return AdmissibleSet::ball_inf(radii);
    }

    WeightSchedule weight_schedule() const {
        switch (weights.kind) {
            case WeightSpec::Kind::Linear:
                return linear_weights(weights.a, horizon);
            case WeightSpec::Kind::Theorem1: {
                const double eta =
                    weights.eta > 0 ? weights.eta : 1e-3 * (1.0 + x0.norm());
                return theorem1_weights(system(), admissible_set(), eta, weights.safety, horizon);
            }
            case WeightSpec::Kind::Explicit:
            default:
                require(static_cast<Eigen::Index>(weights.values.size()) == horizon,
                        "explicit weights must match the horizon");
                return explicit_weights(weights.values);
        }
    }

    RelaxationProblem relaxation_problem() const {
        return {system(), x0, admissible_set(), weight_schedule()};
    }
};

namespace io_detail {

using nlohmann::json;

inline void expect_keys(const json& obj, const std::string& path,
                        const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (allowed.count(key) == 0)
            throw ParseError("unknown key '" + (path.empty() ? key : path + "." + key) + "'");
    }
}

inline const json& get_required(const json& obj, const std::string& path, const std::string& key) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw ParseError("missing required field '" + (path.empty() ? key : path + "." + key) + "'");
    return *it;
}

inline double get_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ParseError("field '" + path + "' must be a number");
    return v.get<double>();
}

inline Vector parse_vector(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ParseError("field '" + path + "' must be a nonempty array");
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = get_number(v[i], path + "[" + std::to_string(i) + "]");
    return out;
}

inline Matrix parse_matrix(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty())
        throw ParseError("field '" + path + "' must be a nonempty array of rows");
    const std::size_t rows = v.size();
    Matrix out;
    for (std::size_t i = 0; i < rows; ++i) {
        const Vector row = parse_vector(v[i], path + "[" + std::to_string(i) + "]");
        if (i == 0) out.resize(static_cast<Eigen::Index>(rows), row.size());
        if (row.size() != out.cols())
            throw ParseError("field '" + path + "' has rows of inconsistent length");
        out.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return out;
}

inline json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

inline json matrix_rows_to_json(const Matrix& m) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) arr.push_back(vector_to_json(m.row(i).transpose()));
    return arr;
}

inline json matrix_cols_to_json(const Matrix& m) {
    json arr = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) arr.push_back(vector_to_json(m.col(j)));
    return arr;
}

}  // namespace io_detail

inline ProblemSpec parse_problem_json(const nlohmann::json& doc) {
    using io_detail::expect_keys;
    using io_detail::get_number;
    using io_detail::get_required;
    using io_detail::parse_matrix;
    using io_detail::parse_vector;

    if (!doc.is_object()) throw ParseError("problem file must be a JSON object");
    expect_keys(doc, "", {"system", "x0", "set", "weights", "horizon", "solver", "seed", "mu_samples"});

    ProblemSpec spec;

    const auto& system = get_required(doc, "", "system");
    expect_keys(system, "system", {"A", "B"});
    spec.A = parse_matrix(get_required(system, "system", "A"), "system.A");
    spec.B = parse_matrix(get_required(system, "system", "B"), "system.B");

    spec.x0 = parse_vector(get_required(doc, "", "x0"), "x0");

    const auto& set = get_required(doc, "", "set");
    const std::string set_type = get_required(set, "set", "type").get<std::string>();
    if (set_type == "ball2") {
        expect_keys(set, "set", {"type", "r"});
        spec.r = get_number(get_required(set, "set", "r"), "set.r");
    } else if (set_type == "ballinf") {
        expect_keys(set, "set", {"type", "radii"});
        spec.radii = parse_vector(get_required(set, "set", "radii"), "set.radii");
    } else {
        throw ParseError("field 'set.type' must be \"ball2\" or \"ballinf\"");
    }
    spec.set_type = set_type;

    const auto& weights = get_required(doc, "", "weights");
    const std::string weight_type = get_required(weights, "weights", "type").get<std::string>();
    if (weight_type == "linear") {
        expect_keys(weights, "weights", {"type", "a"});
        spec.weights.kind = WeightSpec::Kind::Linear;
        if (weights.contains("a")) spec.weights.a = get_number(weights["a"], "weights.a");
    } else if (weight_type == "theorem1") {
        expect_keys(weights, "weights", {"type", "eta", "safety"});
        spec.weights.kind = WeightSpec::Kind::Theorem1;
        if (weights.contains("eta")) spec.weights.eta = get_number(weights["eta"], "weights.eta");
        if (weights.contains("safety"))
            spec.weights.safety = get_number(weights["safety"], "weights.safety");
    } else if (weight_type == "explicit") {
        expect_keys(weights, "weights", {"type", "values"});
        spec.weights.kind = WeightSpec::Kind::Explicit;
        const Vector vals = parse_vector(get_required(weights, "weights", "values"), "weights.values");
        spec.weights.values.assign(vals.data(), vals.data() + vals.size());
    } else {
        throw ParseError("field 'weights.type' must be \"linear\", \"theorem1\" or \"explicit\"");
    }

    const auto& horizon = get_required(doc, "", "horizon");
    if (!horizon.is_number_integer() || horizon.get<long long>() < 1)
        throw ParseError("field 'horizon' must be a positive integer");
    spec.horizon = horizon.get<Eigen::Index>();

    if (doc.contains("solver")) {
        const auto& solver = doc["solver"];
        expect_keys(solver, "solver", {"rho", "eps_abs", "eps_rel", "max_iters", "over_relaxation"});
        if (solver.contains("rho")) spec.solver.rho = get_number(solver["rho"], "solver.rho");
        if (solver.contains("eps_abs"))
            spec.solver.eps_abs = get_number(solver["eps_abs"], "solver.eps_abs");
        if (solver.contains("eps_rel"))
            spec.solver.eps_rel = get_number(solver["eps_rel"], "solver.eps_rel");
        if (solver.contains("max_iters")) {
            if (!solver["max_iters"].is_number_integer())
                throw ParseError("field 'solver.max_iters' must be an integer");
            spec.solver.max_iters = solver["max_iters"].get<int>();
        }
        if (solver.contains("over_relaxation"))
            spec.solver.over_relaxation = get_number(solver["over_relaxation"], "solver.over_relaxation");
    }

    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer())
            throw ParseError("field 'seed' must be an integer");
        spec.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("mu_samples")) {
        if (!doc["mu_samples"].is_number_integer() || doc["mu_samples"].get<long long>() < 0)
            throw ParseError("field 'mu_samples' must be a nonnegative integer");
        spec.mu_samples = doc["mu_samples"].get<Eigen::Index>();
    }

    // Construct the heavyweight objects once so dimension errors surface here
    // with the parser's context rather than deep in a solve.
    try {
        spec.system();
        spec.admissible_set();
    } catch (const InvalidInputError& e) {
        throw ParseError(std::string("invalid problem: ") + e.what());
    }
    return spec;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("JSON syntax error in " + path.string() + ": " + e.what());
    }
}

inline ProblemSpec read_problem_file(const std::filesystem::path& path) {
    return parse_problem_json(read_json_file(path));
}

inline nlohmann::json problem_to_json(const ProblemSpec& spec) {
    using io_detail::matrix_rows_to_json;
    using io_detail::vector_to_json;
    nlohmann::json doc;
    doc["system"] = {{"A", matrix_rows_to_json(spec.A)}, {"B", matrix_rows_to_json(spec.B)}};
    doc["x0"] = vector_to_json(spec.x0);
    if (spec.set_type == "ball2")
        doc["set"] = {{"type", "ball2"}, {"r", spec.r}};
    else
        doc["set"] = {{"type", "ballinf"}, {"radii", vector_to_json(spec.radii)}};
    switch (spec.weights.kind) {
        case WeightSpec::Kind::Linear:
            doc["weights"] = {{"type", "linear"}, {"a", spec.weights.a}};
            break;
        case WeightSpec::Kind::Theorem1:
            doc["weights"] = {{"type", "theorem1"}, {"eta", spec.weights.eta}, {"safety", spec.weights.safety}};
            break;
        case WeightSpec::Kind::Explicit:
            doc["weights"] = {{"type", "explicit"}, {"values", spec.weights.values}};
            break;
    }
    doc["horizon"] = static_cast<long long>(spec.horizon);
    doc["solver"] = {{"rho", spec.solver.rho},
                     {"eps_abs", spec.solver.eps_abs},
                     {"eps_rel", spec.solver.eps_rel},
                     {"max_iters", spec.solver.max_iters},
                     {"over_relaxation", spec.solver.over_relaxation}};
    if (spec.seed.has_value()) doc["seed"] = *spec.seed;
    if (spec.mu_samples > 0) doc["mu_samples"] = static_cast<long long>(spec.mu_samples);
    return doc;
}

inline nlohmann::json report_to_json(const PipelineReport& report, const ProblemSpec& spec) {
    using io_detail::matrix_cols_to_json;
    nlohmann::json doc;
    doc["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    doc["problem"] = problem_to_json(spec);

    nlohmann::json res;
    res["objective"] = report.relaxation.objective;
    res["iterations"] = report.relaxation.iterations;
    res["status"] =
        report.relaxation.status == SolveOutput::Status::Converged ? "converged" : "max_iters";
    res["primal_residual"] = report.relaxation.primal_residual;
    res["dual_residual"] = report.relaxation.dual_residual;
    res["T1"] = report.first_zero_time.has_value() ? nlohmann::json(*report.first_zero_time)
                                                   : nlohmann::json(nullptr);
    res["certified"] = report.certified;
    res["t_star"] = report.oracle.t_star.has_value() ? nlohmann::json(*report.oracle.t_star)
                                                     : nlohmann::json(nullptr);
    nlohmann::json dists = nlohmann::json::array();
    for (const auto& [t, d] : report.oracle.distances) dists.push_back({t, d});
    res["distances"] = dists;
    res["uniqueness_hint"] = report.uniqueness_hint;
    res["bang_bang"] = report.bang_bang;
    res["zero_tol"] = report.zero_tol;
    res["feas_tol"] = report.feas_tol;
    if (report.mu_lower_bound.has_value()) {
        res["mu_lower_bound"] = *report.mu_lower_bound;
        res["condition12_refuted"] = *report.condition12_refuted;
    }
    res["controls"] = matrix_cols_to_json(report.relaxation.u);
    res["states"] = matrix_cols_to_json(report.relaxation.x);
    doc["result"] = res;
    return doc;
}

/// Write-temp-then-rename so readers never observe a partial file.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw NumericalError("cannot open for writing: " + tmp.string());
        out << text;
        if (!out) throw NumericalError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc) {
    write_text_atomic(path, doc.dump(2) + "\n");
}

namespace io_detail {
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace io_detail

/// Trajectory table. Row t carries x(t) and the input applied at t; the final
/// row has empty input fields. Passing solve_times adds a marker column with
/// 1 on rows where the finite-horizon problem was (re-)solved.
inline std::string trajectory_csv(const Matrix& x, const Matrix& u,
                                  const std::vector<int>* solve_times = nullptr) {
    const Eigen::Index n = x.rows();
    const Eigen::Index m = u.rows();
    std::string out = "t";
    for (Eigen::Index i = 1; i <= n; ++i) out += ",x_" + std::to_string(i);
    for (Eigen::Index i = 1; i <= m; ++i) out += ",u_" + std::to_string(i);
    out += ",norm_x,norm_u";
    if (solve_times != nullptr) out += ",solved";
    out += "\n";
    for (Eigen::Index t = 0; t < x.cols(); ++t) {
        out += std::to_string(t);
        for (Eigen::Index i = 0; i < n; ++i) out += "," + io_detail::format_double(x(i, t));
        const bool has_input = t < u.cols();
        for (Eigen::Index i = 0; i < m; ++i)
            out += has_input ? "," + io_detail::format_double(u(i, t)) : ",";
        out += "," + io_detail::format_double(x.col(t).norm());
        out += has_input ? "," + io_detail::format_double(u.col(t).norm()) : ",";
        if (solve_times != nullptr) {
            const bool solved =
                has_input && std::find(solve_times->begin(), solve_times->end(),
                                       static_cast<int>(t)) != solve_times->end();
            out += has_input ? (solved ? ",1" : ",0") : ",";
        }
        out += "\n";
    }
    return out;
}

/// Parse a trajectory table back into (x, u); empty input cells terminate u.
inline std::pair<Matrix, Matrix> parse_trajectory_csv(const std::string& text, Eigen::Index n,
                                                      Eigen::Index m) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::istringstream stream(text);
    std::getline(stream, line);  // header
    while (std::getline(stream, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        // a trailing empty cell is dropped by getline; normalize
        if (!line.empty() && line.back() == ',') cells.push_back("");
        rows.push_back(std::move(cells));
    }
    const Eigen::Index steps = static_cast<Eigen::Index>(rows.size());
    Matrix x(n, steps);
    Matrix u(m, steps);
    Eigen::Index input_cols = 0;
    for (Eigen::Index t = 0; t < steps; ++t) {
        const auto& cells = rows[static_cast<std::size_t>(t)];
        if (static_cast<Eigen::Index>(cells.size()) < 1 + n + m)
            throw ParseError("trajectory row " + std::to_string(t) + " is too short");
        for (Eigen::Index i = 0; i < n; ++i)
            x(i, t) = std::stod(cells[static_cast<std::size_t>(1 + i)]);
        const bool has_input = !cells[static_cast<std::size_t>(1 + n)].empty();
        if (has_input) {
            for (Eigen::Index i = 0; i < m; ++i)
                u(i, t) = std::stod(cells[static_cast<std::size_t>(1 + n + i)]);
            ++input_cols;
        }
    }
    return {x, u.leftCols(input_cols)};
}

}  // namespace mintime
