#include "cli.hpp"

#include "hetsim/config_io.hpp"
#include "hetsim/des.hpp"
#include "hetsim/design.hpp"
#include "hetsim/errors.hpp"
#include "hetsim/oracle.hpp"
#include "hetsim/random.hpp"
#include "hetsim/reward_kernel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>

namespace hetsim::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fmt(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

json vec(const Eigen::VectorXd& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

struct OutputOptions {
    std::string out_dir = ".";
    std::string prefix;
    bool timing = false;
};

void add_output_options(CLI::App* cmd, OutputOptions& o, const std::string& default_prefix)
{
    o.prefix = default_prefix;
    cmd->add_option("--out-dir", o.out_dir, "Directory for report files")->capture_default_str();
    cmd->add_option("--prefix", o.prefix, "Report file name stem")->capture_default_str();
    cmd->add_flag("--timing", o.timing, "Record wall-clock time in the manifest (reports then differ between runs)");
}

class Manifest {
public:
    Manifest(std::string subcommand, bool timing) : subcommand_(std::move(subcommand)), timing_(timing) {}

    json data = json::object();

    json finish() const
    {
        json m = data;
        m["tool"] = "hetsim";
        m["version"] = software_version;
        m["subcommand"] = subcommand_;
        m["generator"] = std::string(RandomStream::generator_id);
        if (timing_) {
            m["wall_clock_seconds"] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
        }
        return m;
    }

private:
    std::string subcommand_;
    bool timing_;
    std::chrono::steady_clock::time_point started_ = std::chrono::steady_clock::now();
};

fs::path output_path(const OutputOptions& o, const std::string& ext)
{
    fs::create_directories(o.out_dir);
    return fs::path(o.out_dir) / (o.prefix + ext);
}

void write_report(const OutputOptions& o, const Manifest& manifest, const json& results, std::ostream& out)
{
    json report;
    report["schema"] = report_schema;
    report["manifest"] = manifest.finish();
    report["results"] = results;
    const auto path = output_path(o, ".json");
    std::ofstream f(path);
    f << report.dump(2) << '\n';
    out << "wrote " << path.string() << '\n';
}

void write_csv(const OutputOptions& o, const std::string& content, std::ostream& out)
{
    const auto path = output_path(o, ".csv");
    std::ofstream f(path);
    f << content;
    out << "wrote " << path.string() << '\n';
}

SystemState initial_state(const std::string& text, const ModelConfig& cfg)
{
    SystemState x = text.empty() ? SystemState::Zero(cfg.servers) : parse_state(text);
    check_state(cfg, x);
    return x;
}

json state_json(const SystemState& x)
{
    return std::vector<int>(x.data(), x.data() + x.size());
}

json estimate_json(const RewardEstimate& e)
{
    return {{"value", e.value},
            {"truncation_error_bound", e.truncation_error_bound},
            {"method", to_string(e.method)},
            {"bound_kind", to_string(e.bound_kind)},
            {"samples_used", e.samples_used},
            {"mc_standard_error", e.mc_standard_error},
            {"exact_depth", e.exact_depth},
            {"series_length", e.series_length},
            {"pruned_mass", e.pruned_mass}};
}

// ---------------------------------------------------------------- simulate / experiment

struct PlanOptions {
    std::uint64_t seed = 0;
    int replications = 30;
    double warmup = 1e3;
    double measure = 1e4;
};

void add_plan_options(CLI::App* cmd, PlanOptions& p)
{
    cmd->add_option("--seed", p.seed, "64-bit seed")->capture_default_str();
    cmd->add_option("--replications", p.replications, "Independent replications")->capture_default_str();
    cmd->add_option("--warmup", p.warmup, "Warm-up time discarded per replication")->capture_default_str();
    cmd->add_option("--measure", p.measure, "Measured time per replication")->capture_default_str();
}

SimPlan to_plan(const PlanOptions& p)
{
    SimPlan plan;
    plan.seed = p.seed;
    plan.replications = p.replications;
    plan.warmup_time = p.warmup;
    plan.measure_time = p.measure;
    return plan;
}

json plan_json(const SimPlan& plan)
{
    return {{"warmup_time", plan.warmup_time},
            {"measure_time", plan.measure_time},
            {"replications", plan.replications},
            {"seed", plan.seed}};
}

json stats_json(const SimStats& s)
{
    return {{"per_server_mean_queue_length", vec(s.per_server_mean_queue_length)},
            {"per_server_ci_halfwidth", vec(s.per_server_ci_halfwidth)},
            {"utilization", vec(s.utilization)},
            {"throughput", vec(s.throughput)},
            {"total_mean", s.total_mean},
            {"total_ci_halfwidth", s.total_ci_halfwidth},
            {"arrivals_observed", s.arrivals_observed},
            {"unstable", s.unstable}};
}

std::string stats_csv(const SimStats& s, const Eigen::VectorXd* published)
{
    std::ostringstream csv;
    csv << "server,mean_queue_length,ci_halfwidth,utilization";
    if (published != nullptr) {
        csv << ",published,abs_diff";
    }
    csv << '\n';
    for (Eigen::Index j = 0; j < s.per_server_mean_queue_length.size(); ++j) {
        csv << j + 1 << ',' << fmt(s.per_server_mean_queue_length[j]) << ',' << fmt(s.per_server_ci_halfwidth[j]) << ','
            << fmt(s.utilization[j]);
        if (published != nullptr) {
            csv << ',' << fmt((*published)[j]) << ','
                << fmt(std::abs(s.per_server_mean_queue_length[j] - (*published)[j]));
        }
        csv << '\n';
    }
    return csv.str();
}

void print_stats(std::ostream& out, const SimStats& s, const Eigen::VectorXd* published)
{
    out << std::fixed << std::setprecision(4);
    out << "server  mean      ci95      util";
    if (published != nullptr) {
        out << "      published  |diff|";
    }
    out << '\n';
    for (Eigen::Index j = 0; j < s.per_server_mean_queue_length.size(); ++j) {
        out << std::setw(6) << j + 1 << "  " << std::setw(8) << s.per_server_mean_queue_length[j] << "  "
            << std::setw(8) << s.per_server_ci_halfwidth[j] << "  " << std::setw(8) << s.utilization[j];
        if (published != nullptr) {
            out << "  " << std::setw(9) << (*published)[j] << "  " << std::setw(6)
                << std::abs(s.per_server_mean_queue_length[j] - (*published)[j]);
        }
        out << '\n';
    }
    out << "total   " << std::setw(8) << s.total_mean << "  " << std::setw(8) << s.total_ci_halfwidth << '\n';
    out << std::defaultfloat;
}

constexpr double experiment_band = 0.15;

int emit_experiment(const ExperimentReport& rep, const SimPlan& plan, OutputOptions o, std::ostream& out,
                    const std::string& subcommand)
{
    Manifest manifest(subcommand, o.timing);
    manifest.data["preset"] = rep.preset.name;
    manifest.data["config"] = to_json(rep.preset.cfg);
    manifest.data["plan"] = plan_json(plan);
    manifest.data["seed"] = plan.seed;

    out << rep.preset.name << '\n';
    print_stats(out, rep.stats, &rep.preset.published);
    out << "servers within +/-" << experiment_band << ": " << rep.servers_within(experiment_band)
        << "/10, spearman = " << fmt(rep.spearman) << '\n';

    json results = stats_json(rep.stats);
    results["published"] = vec(rep.preset.published);
    results["absolute_difference"] = vec(rep.absolute_difference);
    results["servers_within_band"] = rep.servers_within(experiment_band);
    results["band"] = experiment_band;
    results["spearman"] = rep.spearman;
    write_csv(o, stats_csv(rep.stats, &rep.preset.published), out);
    write_report(o, manifest, results, out);
    return ok;
}

// ---------------------------------------------------------------- reward

struct RewardOptions {
    std::string config;
    std::string mode;
    std::optional<double> t;
    std::optional<double> beta;
    std::string reward = "rmin";
    std::string state;
    double epsilon = 1e-10;
    long mc_samples = 20'000;
    std::uint64_t seed = 0;
    double node_budget = 5e6;
    bool paper_literal = false;
    bool compare_oracle = false;
    int buffer = 6;
    OutputOptions output;
};

int cmd_reward(const RewardOptions& o, std::ostream& out, std::ostream& err)
{
    if (o.mode == "finite" && (!o.t || o.beta)) {
        err << "reward: --mode finite requires --t and excludes --beta\n";
        return usage;
    }
    if (o.mode == "discounted" && (!o.beta || o.t)) {
        err << "reward: --mode discounted requires --beta and excludes --t\n";
        return usage;
    }
    const ModelConfig cfg = load_config(o.config);
    for (const auto& w : validate(cfg)) {
        err << "warning: " << w << '\n';
    }
    const SystemState x0 = initial_state(o.state, cfg);
    const RewardSpec spec = parse_reward(o.reward);
    evaluate_reward(spec, cfg, x0);  // rejects out-of-range queue indices up front

    TreeOptions tree;
    tree.node_budget = static_cast<std::size_t>(o.node_budget);
    tree.paper_literal = o.paper_literal;

    Manifest manifest("reward", o.output.timing);
    manifest.data["config_path"] = o.config;
    manifest.data["config"] = to_json(cfg);
    manifest.data["seed"] = o.seed;
    manifest.data["mode"] = o.mode;
    manifest.data["reward"] = to_string(spec);
    manifest.data["state"] = state_json(x0);
    manifest.data["paper_literal"] = o.paper_literal;

    RewardEstimate est;
    json truncation;
    if (o.mode == "finite") {
        auto params = HorizonParams::for_horizon(cfg, *o.t, o.epsilon, o.mc_samples, o.seed);
        params.tree = tree;
        est = expected_reward_finite(cfg, x0, spec, params);
        truncation = {{"t", params.t},
                      {"n_max", params.n_max},
                      {"k_max", params.k_max},
                      {"epsilon_tail", params.epsilon_tail},
                      {"mc_fallback_samples", params.mc_fallback_samples},
                      {"node_budget", tree.node_budget}};
    } else {
        auto params = DiscountParams::for_discount(cfg, x0, spec, *o.beta, o.epsilon, o.mc_samples, o.seed);
        params.tree = tree;
        est = expected_reward_discounted(cfg, x0, spec, params);
        truncation = {{"beta", params.beta},
                      {"k_max", params.k_max},
                      {"epsilon_tail", params.epsilon_tail},
                      {"mc_fallback_samples", params.mc_fallback_samples},
                      {"node_budget", tree.node_budget}};
    }
    manifest.data["truncation"] = truncation;

    out << "value = " << fmt(est.value) << '\n'
        << "truncation_error_bound = " << fmt(est.truncation_error_bound) << " (" << to_string(est.bound_kind) << ")\n"
        << "method = " << to_string(est.method) << '\n';

    json results = estimate_json(est);
    if (o.compare_oracle) {
        const auto gen = build_generator(cfg, o.buffer);
        const auto r = reward_vector(gen, cfg, spec);
        const double oracle = o.mode == "finite" ? transient_expected_reward(gen, x0, r, *o.t)
                                                 : discounted_expected_reward(gen, x0, r, *o.beta);
        const double diff = std::abs(oracle - est.value);
        const double tolerance = std::max(1e-3, est.truncation_error_bound);
        out << "oracle (buffer " << o.buffer << ") = " << fmt(oracle) << '\n'
            << "abs difference = " << fmt(diff) << (diff <= tolerance ? " (agree" : " (DISAGREE") << ", tolerance "
            << fmt(tolerance) << ")\n";
        results["oracle"] = {{"buffer", o.buffer},
                             {"value", oracle},
                             {"abs_difference", diff},
                             {"tolerance", tolerance},
                             {"agree", diff <= tolerance}};
    }
    write_report(o.output, manifest, results, out);
    return ok;
}

// ---------------------------------------------------------------- oracle

struct OracleOptions {
    std::string config;
    int buffer = 6;
    std::string ties = "averaged";
    std::optional<std::string> reward;
    std::optional<double> t;
    std::optional<double> beta;
    std::string state;
    double state_cap = 2e5;
    OutputOptions output;
};

int cmd_oracle(const OracleOptions& o, std::ostream& out, std::ostream& err)
{
    const ModelConfig cfg = load_config(o.config);
    for (const auto& w : validate(cfg)) {
        err << "warning: " << w << '\n';
    }
    if ((o.t || o.beta) && !o.reward) {
        err << "oracle: --t/--beta require --reward\n";
        return usage;
    }
    const TieMode ties = o.ties == "lowest" ? TieMode::LowestIndex : TieMode::Averaged;
    const auto gen = build_generator(cfg, o.buffer, ties, static_cast<std::size_t>(o.state_cap));
    const auto st = stationary_distribution(gen);

    Manifest manifest("oracle", o.output.timing);
    manifest.data["config_path"] = o.config;
    manifest.data["config"] = to_json(cfg);
    manifest.data["buffer"] = o.buffer;
    manifest.data["ties"] = o.ties;

    out << "states = " << gen.space.size() << ", blocking probability = " << fmt(st.blocking_probability) << '\n';
    std::ostringstream csv;
    csv << "server,stationary_mean_queue_length\n";
    for (Eigen::Index j = 0; j < st.mean_queue_length.size(); ++j) {
        out << "server " << j + 1 << ": " << fmt(st.mean_queue_length[j]) << '\n';
        csv << j + 1 << ',' << fmt(st.mean_queue_length[j]) << '\n';
    }
    json results = {{"states", gen.space.size()},
                    {"stationary_mean_queue_length", vec(st.mean_queue_length)},
                    {"blocking_probability", st.blocking_probability},
                    {"residual", st.residual}};
    if (o.reward) {
        const RewardSpec spec = parse_reward(*o.reward);
        const SystemState x0 = initial_state(o.state, cfg);
        const auto r = reward_vector(gen, cfg, spec);
        manifest.data["reward"] = to_string(spec);
        manifest.data["state"] = state_json(x0);
        results["stationary_reward"] = st.pi.dot(r);
        if (o.t) {
            const double v = transient_expected_reward(gen, x0, r, *o.t);
            out << "transient expected reward (t = " << fmt(*o.t) << ") = " << fmt(v) << '\n';
            results["transient"] = {{"t", *o.t}, {"value", v}};
        }
        if (o.beta) {
            const double v = discounted_expected_reward(gen, x0, r, *o.beta);
            out << "discounted expected reward (beta = " << fmt(*o.beta) << ") = " << fmt(v) << '\n';
            results["discounted"] = {{"beta", *o.beta}, {"value", v}};
        }
    }
    write_csv(o.output, csv.str(), out);
    write_report(o.output, manifest, results, out);
    return ok;
}

// ---------------------------------------------------------------- design

struct DesignOptions {
    std::string grid;
    double beta = 1.0;
    double delta1 = std::numeric_limits<double>::infinity();
    double delta2 = std::numeric_limits<double>::infinity();
    std::string state;
    double epsilon = 1e-10;
    long mc_samples = 20'000;
    std::uint64_t seed = 0;
    OutputOptions output;
};

int cmd_design(const DesignOptions& o, std::ostream& out, std::ostream& err)
{
    const auto grid = load_config_grid(o.grid);
    if (grid.empty()) {
        err << "design: grid file lists no candidates\n";
        return usage;
    }
    const SystemState x0 = o.state.empty() ? SystemState{} : parse_state(o.state);
    DesignSettings settings;
    settings.epsilon_tail = o.epsilon;
    settings.mc_fallback_samples = o.mc_samples;
    settings.seed = o.seed;
    const auto rep = evaluate_design_criteria(grid, x0, o.beta, o.delta1, o.delta2, settings);

    Manifest manifest("design", o.output.timing);
    manifest.data["grid_path"] = o.grid;
    manifest.data["seed"] = o.seed;
    manifest.data["beta"] = o.beta;
    manifest.data["delta1"] = fmt(o.delta1);
    manifest.data["delta2"] = fmt(o.delta2);
    manifest.data["state"] = state_json(x0);
    json configs = json::array();
    for (const auto& c : grid) {
        configs.push_back(to_json(c));
    }
    manifest.data["candidates"] = configs;

    std::ostringstream csv;
    csv << "candidate,M,d,psi_rmin,psi_rmax,gap,bound_rmin,bound_rmax\n";
    json rows = json::array();
    out << "candidate  M   d  psi(rmin)     psi(rmax)     gap\n";
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        csv << i + 1 << ',' << grid[i].servers << ',' << grid[i].choices << ',' << fmt(r.psi_min.value) << ','
            << fmt(r.psi_max.value) << ',' << fmt(r.gap()) << ',' << fmt(r.psi_min.truncation_error_bound) << ','
            << fmt(r.psi_max.truncation_error_bound) << '\n';
        out << std::setw(9) << i + 1 << "  " << std::setw(2) << grid[i].servers << "  " << std::setw(2)
            << grid[i].choices << "  " << std::setw(12) << fmt(r.psi_min.value) << "  " << std::setw(12)
            << fmt(r.psi_max.value) << "  " << fmt(r.gap()) << '\n';
        rows.push_back({{"psi_rmin", estimate_json(r.psi_min)}, {"psi_rmax", estimate_json(r.psi_max)},
                        {"gap", r.gap()}});
    }
    out << "argmax psi(rmin) = " << rep.best_psi_min + 1 << ", argmin psi(rmax) = " << rep.best_psi_max + 1
        << ", argmin gap = " << rep.best_gap + 1 << '\n'
        << "criterion one: " << fmt(rep.criterion_one_value) << " < " << fmt(o.delta1) << " -> "
        << (rep.criterion_one ? "true" : "false") << '\n'
        << "criterion two: " << fmt(rep.criterion_two_value) << " < " << fmt(o.delta2) << " -> "
        << (rep.criterion_two ? "true" : "false") << '\n';

    json results = {{"rows", rows},
                    {"argmax_psi_rmin", rep.best_psi_min + 1},
                    {"argmin_psi_rmax", rep.best_psi_max + 1},
                    {"argmin_gap", rep.best_gap + 1},
                    {"criterion_one", {{"value", rep.criterion_one_value}, {"holds", rep.criterion_one}}},
                    {"criterion_two", {{"value", rep.criterion_two_value}, {"holds", rep.criterion_two}}}};
    write_csv(o.output, csv.str(), out);
    write_report(o.output, manifest, results, out);
    return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"hetsim: supermarket models with heterogeneous servers and utility-based power-of-d routing"};
    app.require_subcommand(1);
    app.set_version_flag("--version", software_version);

    // simulate
    std::string sim_config;
    std::string sim_preset;
    PlanOptions sim_plan;
    OutputOptions sim_out;
    auto* simulate_cmd = app.add_subcommand("simulate", "Discrete-event simulation of per-server queue lengths");
    auto* cfg_opt = simulate_cmd->add_option("--config", sim_config, "Model config JSON")->check(CLI::ExistingFile);
    auto* preset_opt = simulate_cmd->add_option("--preset", sim_preset, "experiment-one|two|three");
    cfg_opt->excludes(preset_opt);
    add_plan_options(simulate_cmd, sim_plan);
    add_output_options(simulate_cmd, sim_out, "simulate");

    // experiment
    std::string exp_preset = "all";
    PlanOptions exp_plan;
    OutputOptions exp_out;
    auto* experiment_cmd = app.add_subcommand("experiment", "Run the published experiment presets");
    experiment_cmd->add_option("--preset", exp_preset, "one|two|three|all")->capture_default_str();
    add_plan_options(experiment_cmd, exp_plan);
    add_output_options(experiment_cmd, exp_out, "");

    // reward
    RewardOptions rw;
    auto* reward_cmd = app.add_subcommand("reward", "Expected finite-horizon or discounted reward by series evaluation");
    reward_cmd->add_option("--config", rw.config, "Model config JSON")->required()->check(CLI::ExistingFile);
    reward_cmd->add_option("--mode", rw.mode, "finite|discounted")
        ->required()
        ->check(CLI::IsMember({"finite", "discounted"}));
    auto* t_opt = reward_cmd->add_option("--t", rw.t, "Horizon for --mode finite");
    auto* beta_opt = reward_cmd->add_option("--beta", rw.beta, "Discount rate for --mode discounted");
    t_opt->excludes(beta_opt);
    reward_cmd->add_option("--reward", rw.reward, "rmin|rmax|total|queue:<i>|constant:<c>")->capture_default_str();
    reward_cmd->add_option("--state", rw.state, "Initial queue lengths, comma separated (default all zero)");
    reward_cmd->add_option("--epsilon", rw.epsilon, "Series tail bound")->capture_default_str();
    reward_cmd->add_option("--mc-samples", rw.mc_samples, "Monte Carlo fallback paths")->capture_default_str();
    reward_cmd->add_option("--seed", rw.seed, "Seed for the Monte Carlo fallback")->capture_default_str();
    reward_cmd->add_option("--node-budget", rw.node_budget, "Distinct states per event-tree level")
        ->capture_default_str();
    reward_cmd->add_flag("--paper-literal", rw.paper_literal, "Drop idle-server mass instead of self-looping");
    reward_cmd->add_flag("--compare-oracle", rw.compare_oracle, "Also solve the truncated CTMC and compare");
    reward_cmd->add_option("--buffer", rw.buffer, "Per-server buffer cap for --compare-oracle")->capture_default_str();
    add_output_options(reward_cmd, rw.output, "reward");

    // oracle
    OracleOptions orc;
    auto* oracle_cmd = app.add_subcommand("oracle", "Exact solves on the buffer-truncated CTMC");
    oracle_cmd->add_option("--config", orc.config, "Model config JSON")->required()->check(CLI::ExistingFile);
    oracle_cmd->add_option("--buffer", orc.buffer, "Per-server buffer cap")->capture_default_str();
    oracle_cmd->add_option("--ties", orc.ties, "averaged|lowest")
        ->check(CLI::IsMember({"averaged", "lowest"}))
        ->capture_default_str();
    oracle_cmd->add_option("--reward", orc.reward, "rmin|rmax|total|queue:<i>|constant:<c>");
    oracle_cmd->add_option("--t", orc.t, "Horizon for the transient reward");
    oracle_cmd->add_option("--beta", orc.beta, "Discount rate for the discounted reward");
    oracle_cmd->add_option("--state", orc.state, "Initial queue lengths, comma separated");
    oracle_cmd->add_option("--state-cap", orc.state_cap, "Maximum truncated state count")->capture_default_str();
    add_output_options(oracle_cmd, orc.output, "oracle");

    // design
    DesignOptions dz;
    auto* design_cmd = app.add_subcommand("design", "Design criteria over a grid of candidate configs");
    design_cmd->add_option("--grid", dz.grid, "JSON array of configs or {\"candidates\": [...]}")
        ->required()
        ->check(CLI::ExistingFile);
    design_cmd->add_option("--beta", dz.beta, "Discount rate")->required();
    design_cmd->add_option("--delta1", dz.delta1, "Criterion one threshold (default inf)");
    design_cmd->add_option("--delta2", dz.delta2, "Criterion two threshold (default inf)");
    design_cmd->add_option("--state", dz.state, "Initial queue lengths (default all zero per candidate)");
    design_cmd->add_option("--epsilon", dz.epsilon, "Series tail bound")->capture_default_str();
    design_cmd->add_option("--mc-samples", dz.mc_samples, "Monte Carlo fallback paths")->capture_default_str();
    design_cmd->add_option("--seed", dz.seed, "Seed for the Monte Carlo fallback")->capture_default_str();
    add_output_options(design_cmd, dz.output, "design");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::CallForVersion&) {
        out << software_version << '\n';
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return usage;
    }

    try {
        if (*simulate_cmd) {
            if (sim_config.empty() && sim_preset.empty()) {
                err << "usage error: simulate needs --config or --preset\n";
                return usage;
            }
            const SimPlan plan = to_plan(sim_plan);
            if (!sim_preset.empty()) {
                const auto preset = parse_preset(sim_preset);
                OutputOptions o = sim_out;
                if (simulate_cmd->count("--prefix") == 0) {
                    o.prefix = experiment_preset(preset).name;
                }
                return emit_experiment(run_experiment(preset, plan), plan, o, out, "simulate");
            }
            const ModelConfig cfg = load_config(sim_config);
            for (const auto& w : validate(cfg)) {
                err << "warning: " << w << '\n';
            }
            const auto stats = simulate(cfg, plan);
            Manifest manifest("simulate", sim_out.timing);
            manifest.data["config_path"] = sim_config;
            manifest.data["config"] = to_json(cfg);
            manifest.data["plan"] = plan_json(plan);
            manifest.data["seed"] = plan.seed;
            print_stats(out, stats, nullptr);
            write_csv(sim_out, stats_csv(stats, nullptr), out);
            write_report(sim_out, manifest, stats_json(stats), out);
            return ok;
        }
        if (*experiment_cmd) {
            std::vector<Preset> presets;
            if (exp_preset == "all") {
                presets = {Preset::One, Preset::Two, Preset::Three};
            } else {
                presets = {parse_preset(exp_preset)};
            }
            for (const auto p : presets) {
                OutputOptions o = exp_out;
                const auto name = experiment_preset(p).name;
                o.prefix = exp_out.prefix.empty() ? name : exp_out.prefix + "-" + name;
                emit_experiment(run_experiment(p, to_plan(exp_plan)), to_plan(exp_plan), o, out, "experiment");
            }
            return ok;
        }
        if (*reward_cmd) {
            return cmd_reward(rw, out, err);
        }
        if (*oracle_cmd) {
            return cmd_oracle(orc, out, err);
        }
        if (*design_cmd) {
            return cmd_design(dz, out, err);
        }
    } catch (const ConfigError& e) {
        err << "validation error: " << e.what() << '\n';
        return validation;
    } catch (const ArgumentError& e) {
        err << "validation error: " << e.what() << '\n';
        return validation;
    } catch (const CapacityError& e) {
        err << "capacity error: " << e.what() << '\n';
        return capacity;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return numerical;
    } catch (const StructuralError& e) {
        err << "numerical error: " << e.what() << '\n';
        return numerical;
    }
    return usage;
}

}  // namespace hetsim::cli
