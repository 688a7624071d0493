// Command-line front end: solve / oracle / mpc / demo.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <mintime/mintime.hpp>
#include <mintime/problem_io.hpp>

namespace fs = std::filesystem;
using namespace mintime;

namespace {

// Exit codes: 0 success (certified / reachable / reached zero), 1 error,
// 2 solved but not certified, 3 unreachable or target not reached.
constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUncertified = 2;
constexpr int kExitUnreached = 3;

struct CommonFlags {
    std::string out_dir = ".";
    std::optional<double> eps_abs, eps_rel, rho;
    std::optional<int> max_iters;
    std::optional<std::uint64_t> seed;
    bool timings = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--out-dir", f.out_dir, "Directory for output files")->capture_default_str();
    cmd->add_option("--eps-abs", f.eps_abs, "Solver absolute residual tolerance");
    cmd->add_option("--eps-rel", f.eps_rel, "Solver relative residual tolerance");
    cmd->add_option("--max-iters", f.max_iters, "Solver iteration cap");
    cmd->add_option("--rho", f.rho, "Solver penalty parameter");
    cmd->add_option("--seed", f.seed, "Random seed (overrides problem file and MINTIME_SEED)");
    cmd->add_flag("--timings", f.timings, "Include wall-clock timings in the report file");
}

std::uint64_t resolve_seed(const CommonFlags& flags, const ProblemSpec& spec) {
    if (flags.seed.has_value()) return *flags.seed;
    if (spec.seed.has_value()) return *spec.seed;
    if (const char* env = std::getenv("MINTIME_SEED")) return std::strtoull(env, nullptr, 10);
    return 0;
}

void apply_overrides(ProblemSpec& spec, const CommonFlags& flags) {
    if (flags.eps_abs) spec.solver.eps_abs = *flags.eps_abs;
    if (flags.eps_rel) spec.solver.eps_rel = *flags.eps_rel;
    if (flags.rho) spec.solver.rho = *flags.rho;
    if (flags.max_iters) spec.solver.max_iters = *flags.max_iters;
    spec.seed = resolve_seed(flags, spec);
    spec.solver.validate();
}

fs::path prepare_out_dir(const std::string& dir) {
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

struct Stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

int run_solve_command(const std::string& problem_path, const CommonFlags& flags, bool bisect,
                      std::optional<long long> mu_samples) {
    ProblemSpec spec = read_problem_file(problem_path);
    CommonFlags f = flags;
    apply_overrides(spec, f);
    if (mu_samples) spec.mu_samples = static_cast<Eigen::Index>(*mu_samples);

    PipelineOptions opts;
    opts.mu_samples = spec.mu_samples;
    opts.seed = *spec.seed;
    opts.bisect = bisect;

    Stopwatch watch;
    const PipelineReport report = run_pipeline(spec.relaxation_problem(), spec.solver, opts);
    const double elapsed = watch.seconds();

    nlohmann::json doc = report_to_json(report, spec);
    if (flags.timings) doc["timings"] = {{"solve_seconds", elapsed}};

    const fs::path out = prepare_out_dir(flags.out_dir);
    const std::string stem = fs::path(problem_path).stem().string();
    write_json_file(out / (stem + ".report.json"), doc);
    write_text_atomic(out / (stem + ".trajectory.csv"),
                      trajectory_csv(report.relaxation.x, report.relaxation.u));

    std::cerr << "solve: " << (report.certified ? "certified" : "not certified")
              << ", T1=" << (report.first_zero_time ? std::to_string(*report.first_zero_time) : "none")
              << ", t_star=" << (report.oracle.t_star ? std::to_string(*report.oracle.t_star) : "none")
              << " (" << elapsed << " s)\n";
    return report.certified ? kExitOk : kExitUncertified;
}

int run_oracle_command(const std::string& problem_path, const CommonFlags& flags, long long tmax,
                       bool bisect) {
    ProblemSpec spec = read_problem_file(problem_path);
    CommonFlags f = flags;
    apply_overrides(spec, f);
    const Eigen::Index horizon = tmax > 0 ? static_cast<Eigen::Index>(tmax) : spec.horizon;

    Stopwatch watch;
    const OracleResult oracle = oracle_scan(spec.system(), spec.admissible_set(), spec.x0, horizon,
                                            0.0, spec.solver, bisect);
    const double elapsed = watch.seconds();

    nlohmann::json doc;
    doc["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    doc["problem"] = problem_to_json(spec);
    doc["t_max"] = oracle.t_max;
    doc["feas_tol"] = oracle.feas_tol;
    doc["t_star"] =
        oracle.t_star.has_value() ? nlohmann::json(*oracle.t_star) : nlohmann::json(nullptr);
    nlohmann::json dists = nlohmann::json::array();
    for (const auto& [t, d] : oracle.distances) dists.push_back({t, d});
    doc["distances"] = dists;
    doc["witness"] = oracle.witness.steps() > 0
                         ? io_detail::matrix_cols_to_json(oracle.witness.as_matrix())
                         : nlohmann::json(nullptr);
    if (flags.timings) doc["timings"] = {{"scan_seconds", elapsed}};

    const fs::path out = prepare_out_dir(flags.out_dir);
    const std::string stem = fs::path(problem_path).stem().string();
    write_json_file(out / (stem + ".oracle.json"), doc);
    std::string csv = "t,distance\n";
    for (const auto& [t, d] : oracle.distances)
        csv += std::to_string(t) + "," + io_detail::format_double(d) + "\n";
    write_text_atomic(out / (stem + ".oracle.csv"), csv);

    std::cerr << "oracle: t_star="
              << (oracle.t_star ? std::to_string(*oracle.t_star) : "unreachable") << " within "
              << oracle.t_max << " (" << elapsed << " s)\n";
    return oracle.t_star.has_value() ? kExitOk : kExitUnreached;
}

std::function<double(Eigen::Index)> weight_source(const ProblemSpec& spec) {
    switch (spec.weights.kind) {
        case WeightSpec::Kind::Linear: {
            const double a = spec.weights.a;
            return [a](Eigen::Index k) { return a * static_cast<double>(k); };
        }
        case WeightSpec::Kind::Theorem1: {
            // Regenerate on demand; the recursion is cheap at these sizes.
            auto cache = std::make_shared<WeightSchedule>();
            const LtiSystem sys = spec.system();
            const AdmissibleSet set = spec.admissible_set();
            const double eta = spec.weights.eta > 0 ? spec.weights.eta
                                                    : 1e-3 * (1.0 + spec.x0.norm());
            const double safety = spec.weights.safety;
            return [cache, sys, set, eta, safety](Eigen::Index k) {
                if (cache->horizon() < k) *cache = theorem1_weights(sys, set, eta, safety, k);
                return cache->at(k);
            };
        }
        case WeightSpec::Kind::Explicit:
        default: {
            const std::vector<double> values = spec.weights.values;
            return [values](Eigen::Index k) {
                require(k >= 1 && k <= static_cast<Eigen::Index>(values.size()),
                        "mpc: explicit weight schedule does not cover absolute index " +
                            std::to_string(k));
                return values[static_cast<std::size_t>(k - 1)];
            };
        }
    }
}

int run_mpc_command(const std::string& problem_path, const CommonFlags& flags, long long tau,
                    long long resolve_period, long long max_steps) {
    ProblemSpec spec = read_problem_file(problem_path);
    CommonFlags f = flags;
    apply_overrides(spec, f);

    const LtiSystem sys = spec.system();
    MpcConfig cfg;
    cfg.tau = tau > 0 ? static_cast<Eigen::Index>(tau) : sys.n() + 3;
    cfg.resolve_period = static_cast<Eigen::Index>(resolve_period);
    cfg.max_steps = static_cast<Eigen::Index>(max_steps);
    cfg.weight_at = weight_source(spec);

    Stopwatch watch;
    const ClosedLoopTrace trace = mpc_run(sys, spec.admissible_set(), spec.x0, cfg, spec.solver);
    const double elapsed = watch.seconds();

    nlohmann::json doc;
    doc["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    doc["problem"] = problem_to_json(spec);
    doc["tau"] = static_cast<long long>(cfg.tau);
    doc["resolve_period"] = static_cast<long long>(cfg.resolve_period);
    doc["max_steps"] = static_cast<long long>(cfg.max_steps);
    doc["reached_zero_at"] = trace.reached_zero_at.has_value()
                                 ? nlohmann::json(*trace.reached_zero_at)
                                 : nlohmann::json(nullptr);
    doc["solve_times"] = trace.solve_times;
    if (flags.timings) doc["timings"] = {{"run_seconds", elapsed}};

    const fs::path out = prepare_out_dir(flags.out_dir);
    const std::string stem = fs::path(problem_path).stem().string();
    write_json_file(out / (stem + ".mpc.json"), doc);
    write_text_atomic(out / (stem + ".mpc_trace.csv"),
                      trajectory_csv(trace.x, trace.u, &trace.solve_times));

    std::cerr << "mpc: reached_zero_at="
              << (trace.reached_zero_at ? std::to_string(*trace.reached_zero_at) : "none") << " ("
              << elapsed << " s)\n";
    return trace.reached_zero_at.has_value() ? kExitOk : kExitUnreached;
}

ProblemSpec demo_spec(const LtiSystem& sys, const Vector& x0, const AdmissibleSet& set,
                      Eigen::Index horizon) {
    ProblemSpec spec;
    spec.A = sys.A;
    spec.B = sys.B;
    spec.x0 = x0;
    if (set.kind() == AdmissibleSet::Kind::Ball2) {
        spec.set_type = "ball2";
        spec.r = set.r();
    } else {
        spec.set_type = "ballinf";
        spec.radii = set.radii();
    }
    spec.weights.kind = WeightSpec::Kind::Linear;
    spec.weights.a = 1.0;
    spec.horizon = horizon;
    spec.solver.eps_abs = 1e-10;
    spec.solver.eps_rel = 1e-8;
    spec.seed = 0;
    return spec;
}

int run_demo_case(const std::string& name, int index, ProblemSpec spec, const fs::path& out,
                  bool timings, bool auto_extend) {
    bool extended = false;
    if (auto_extend) {
        // Grow the horizon until the oracle certifies reachability.
        while (spec.horizon < 80) {
            const OracleResult probe = oracle_scan(spec.system(), spec.admissible_set(), spec.x0,
                                                   spec.horizon, 0.0, spec.solver);
            if (probe.t_star.has_value()) break;
            spec.horizon *= 2;
            extended = true;
        }
    }

    PipelineOptions opts;
    opts.seed = *spec.seed;
    Stopwatch watch;
    const PipelineReport report = run_pipeline(spec.relaxation_problem(), spec.solver, opts);
    const double elapsed = watch.seconds();

    nlohmann::json doc = report_to_json(report, spec);
    doc["demo"] = {{"name", name},
                   {"case", index},
                   {"horizon_used", static_cast<long long>(spec.horizon)},
                   {"horizon_extended", extended}};
    if (timings) doc["timings"] = {{"solve_seconds", elapsed}};

    const std::string stem = name + "_" + std::to_string(index);
    write_json_file(out / (stem + ".problem.json"), problem_to_json(spec));
    write_json_file(out / (stem + ".report.json"), doc);
    write_text_atomic(out / (stem + ".trajectory.csv"),
                      trajectory_csv(report.relaxation.x, report.relaxation.u));

    std::cerr << "demo " << stem << ": "
              << (report.certified ? "certified" : "NOT certified") << ", T1="
              << (report.first_zero_time ? std::to_string(*report.first_zero_time) : "none")
              << ", T=" << spec.horizon << " (" << elapsed << " s)\n";
    return report.certified ? kExitOk : kExitUncertified;
}

int run_demo_command(const std::string& name, const CommonFlags& flags) {
    const fs::path out = prepare_out_dir(flags.out_dir);
    int worst = kExitOk;
    if (name == "double-integrator") {
        const LtiSystem sys = demo::double_integrator();
        const AdmissibleSet set = demo::unit_interval();
        int index = 0;
        for (const Vector& x0 : demo::double_integrator_grid()) {
            const int rc = run_demo_case("double_integrator", index++,
                                         demo_spec(sys, x0, set, 10), out, flags.timings, false);
            worst = std::max(worst, rc);
        }
        return worst;
    }
    if (name == "multi-input") {
        const LtiSystem sys = demo::multi_input_plant();
        const AdmissibleSet set = demo::unit_ball2();
        int index = 0;
        for (const Vector& x0 : demo::multi_input_initial_states()) {
            const int rc = run_demo_case("multi_input", index, demo_spec(sys, x0, set, 10), out,
                                         flags.timings, index > 0);
            ++index;
            worst = std::max(worst, rc);
        }
        return worst;
    }
    throw InvalidInputError("unknown demo '" + name + "' (try double-integrator or multi-input)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Minimum-time controller synthesis for discrete-time linear systems.\n"
        "Solves a weighted sum-of-norms relaxation, certifies the detected\n"
        "minimum time against an exact feasibility oracle, and runs the\n"
        "receding-horizon variant.\n"};
    app.require_subcommand(1);
    app.footer(
        "Exit codes: 0 = certified / reachable / reached zero, 1 = error,\n"
        "2 = solved but not certified, 3 = unreachable within the horizon.\n"
        "Seed precedence: --seed, then the problem file, then MINTIME_SEED.");

    std::string problem_path, demo_name;
    CommonFlags solve_flags, oracle_flags, mpc_flags, demo_flags;
    bool solve_bisect = false, oracle_bisect = false;
    std::optional<long long> mu_samples;
    long long tmax = 0, tau = 0, resolve_period = 1, max_steps = 200;

    CLI::App* solve = app.add_subcommand("solve", "Solve a problem file and certify the result");
    solve->add_option("problem", problem_path, "Problem file (JSON)")->required();
    add_common(solve, solve_flags);
    solve->add_flag("--bisect", solve_bisect, "Bisect the oracle scan");
    solve->add_option("--mu-samples", mu_samples,
                      "Monte-Carlo sample count for the exactness refuter (0 = skip)");

    CLI::App* oracle = app.add_subcommand("oracle", "Scan for the exact minimum time");
    oracle->add_option("problem", problem_path, "Problem file (JSON)")->required();
    add_common(oracle, oracle_flags);
    oracle->add_option("--tmax", tmax, "Largest horizon to scan (default: problem horizon)");
    oracle->add_flag("--bisect", oracle_bisect, "Bisect instead of scanning every horizon");

    CLI::App* mpc = app.add_subcommand("mpc", "Run the receding-horizon controller");
    mpc->add_option("problem", problem_path, "Problem file (JSON)")->required();
    add_common(mpc, mpc_flags);
    mpc->add_option("--tau", tau, "Lookahead horizon (default: state dimension + 3)");
    mpc->add_option("--resolve-period", resolve_period, "Steps between re-solves (1..tau)")
        ->capture_default_str();
    mpc->add_option("--max-steps", max_steps, "Closed-loop step limit")->capture_default_str();

    CLI::App* demo_cmd = app.add_subcommand("demo", "Run a bundled demo problem set");
    demo_cmd->add_option("name", demo_name, "double-integrator or multi-input")->required();
    add_common(demo_cmd, demo_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return run_solve_command(problem_path, solve_flags, solve_bisect, mu_samples);
        if (oracle->parsed()) return run_oracle_command(problem_path, oracle_flags, tmax, oracle_bisect);
        if (mpc->parsed()) return run_mpc_command(problem_path, mpc_flags, tau, resolve_period, max_steps);
        if (demo_cmd->parsed()) return run_demo_command(demo_name, demo_flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
