// SPDX-License-Identifier: MIT
//
// wdnctl: simulate a water network, place and control valves, sweep the
// pressure/self-cleaning trade-off, and build adaptive control plans.
// Every command writes a run manifest; `wdnctl rerun <manifest>` reproduces
// the outputs byte for byte.

#include <cstdlib>
#include <memory>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "wdn/io.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace wdn;
using nlohmann::json;
namespace fs = std::filesystem;

// The solver keeps a pointer into the model, so both live on the heap and
// move as pointers.
struct LoadedNetwork {
    std::unique_ptr<NetworkModel> model_ptr;
    std::unique_ptr<NetworkSolver> solver_ptr;
    Scenario scenario;
    NetworkModel& model() const { return *model_ptr; }
    NetworkSolver& solver() const { return *solver_ptr; }
};

LoadedNetwork load(const RunConfig& cfg) {
    if (!fs::exists(cfg.network_path))
        throw ParseError("network file '" + cfg.network_path + "' not found");
    ParsedNetwork parsed = parse_network_file(cfg.network_path);
    for (const std::string& w : parsed.warnings) std::cerr << "warning: " << w << "\n";
    for (Link& link : parsed.model.links) link.u_min = cfg.u_min;

    BoundsOptions bopt;
    bopt.u_max = cfg.u_max;
    bopt.alpha_max = cfg.alpha_max_lps / 1000.0;
    bopt.regulatory_head = cfg.regulatory_head;
    parsed.scenario.bounds = derive_bounds(parsed.model, parsed.scenario.demands,
                                           parsed.scenario.source_heads, bopt);
    fit_all_quadratics(parsed.model, parsed.scenario.bounds);

    LoadedNetwork net;
    net.model_ptr = std::make_unique<NetworkModel>(std::move(parsed.model));
    net.scenario = std::move(parsed.scenario);
    net.solver_ptr = std::make_unique<NetworkSolver>(*net.model_ptr);
    return net;
}

PlacementOptions placement_options(const RunConfig& cfg) {
    PlacementOptions opt;
    opt.trials = cfg.trials;
    opt.obbt_rounds = cfg.obbt_rounds;
    opt.seed = cfg.seed;
    opt.enum_cap = cfg.enum_cap;
    opt.scp.hydraulics.tol = cfg.tol;
    return opt;
}

void write_manifest(const RunConfig& cfg) {
    atomic_write(fs::path(cfg.out_dir) / "manifest.json", json(cfg).dump(2) + "\n");
}

void run_simulate(const RunConfig& cfg) {
    LoadedNetwork net = load(cfg);
    ControlSettings zero = ControlSettings::zeros(net.scenario.n_t, net.model().np(), net.model().nn());
    HeadLossModel mode = cfg.model == "qa" ? HeadLossModel::QA : HeadLossModel::HW;
    SolverOptions sopt;
    sopt.tol = cfg.tol;
    HydraulicState state = net.solver().solve_eps(net.scenario, zero, mode, sopt);

    ObjectiveParams params;
    params.rho = cfg.rho;
    ObjectiveValue value = evaluate_objectives(net.model(), state, params);
    ResidualReport residuals = residual_report(net.model(), state, net.scenario, zero, mode);

    fs::path out(cfg.out_dir);
    atomic_write(out / "state.csv", state_csv(net.model(), state));
    atomic_write(out / "objectives.json", objectives_json(value, residuals).dump(2) + "\n");
    write_manifest(cfg);
}

void run_place(const RunConfig& cfg) {
    LoadedNetwork net = load(cfg);
    ObjectiveSpec obj;
    obj.kind = cfg.objective == "scc" ? ObjectiveKind::SCC : ObjectiveKind::AZP;
    obj.rho = cfg.rho;
    PlacementSolution sol =
        solve_vp_minlp(net.solver(), net.scenario, cfg.n_v, cfg.n_f, obj, placement_options(cfg));

    fs::path out(cfg.out_dir);
    atomic_write(out / "config.json", valve_config_to_json(sol.config, net.model()).dump(2) + "\n");
    json report;
    report["objective"] = cfg.objective;
    report["scalar_objective"] = sol.control.scalar_objective;
    report["azp_m"] = sol.control.objective.azp;
    report["scc_pct"] = 100.0 * sol.control.objective.scc_indicator;
    report["relaxation_bound"] = sol.relaxation_bound;
    report["gap"] = sol.gap;
    report["feasible"] = sol.control.feasible;
    report["converged"] = sol.control.converged;
    atomic_write(out / "placement.json", report.dump(2) + "\n");
    atomic_write(out / "settings.csv", settings_csv(net.model(), sol.control.settings));
    write_manifest(cfg);
}

void run_pareto(const RunConfig& cfg) {
    LoadedNetwork net = load(cfg);
    PlacementOptions opt = placement_options(cfg);

    DesignSpec design;
    design.n_v = cfg.n_v;
    design.n_f = cfg.n_f;
    if (cfg.design == "joint") {
        design.mode = DesignSpec::Mode::Joint;
    } else if (cfg.design == "hierarchical") {
        design.mode = DesignSpec::Mode::Fixed;
        design.config = hierarchical_design(net.solver(), net.scenario, cfg.n_v, cfg.n_f, opt);
    } else if (cfg.design.rfind("fixed:", 0) == 0) {
        design.mode = DesignSpec::Mode::Fixed;
        std::ifstream in(cfg.design.substr(6));
        if (!in) throw ParseError("cannot open config '" + cfg.design.substr(6) + "'");
        design.config = valve_config_from_json(json::parse(in), net.model());
    } else {
        throw ParseError("unknown design '" + cfg.design + "'");
    }

    AnchorSet anchors = compute_anchors(net.solver(), net.scenario, design, opt);
    std::vector<ParetoPoint> points = weighted_sum_front(net.solver(), net.scenario, design, anchors,
                                                         default_weights(cfg.weights), opt);
    pareto_filter(points);

    fs::path out(cfg.out_dir);
    atomic_write(out / "front.csv", front_csv(points));
    json bundle = json::array();
    for (const ParetoPoint& p : points) {
        if (!p.solved) continue;
        json entry;
        entry["omega"] = p.omega;
        entry["config"] = valve_config_to_json(p.config, net.model());
        bundle.push_back(entry);
    }
    json extras;
    extras["anchors"] = {{"azp", {{"azp_m", anchors.azp_anchor.azp},
                                  {"scc_pct", 100.0 * anchors.azp_anchor.scc_indicator}}},
                         {"scc", {{"azp_m", anchors.scc_anchor.azp},
                                  {"scc_pct", 100.0 * anchors.scc_anchor.scc_indicator}}}};
    extras["configs"] = bundle;
    atomic_write(out / "configs.json", extras.dump(2) + "\n");
    // best design's config for downstream `adapt` runs
    atomic_write(out / "config.json",
                 valve_config_to_json(design.mode == DesignSpec::Mode::Fixed
                                          ? design.config
                                          : anchors.azp_anchor.solution.config,
                                      net.model())
                         .dump(2) +
                     "\n");
    write_manifest(cfg);
}

void run_adapt(const RunConfig& cfg) {
    LoadedNetwork net = load(cfg);
    std::ifstream in(cfg.config_path);
    if (!in) throw ParseError("cannot open config '" + cfg.config_path + "'");
    ValveConfig config = valve_config_from_json(json::parse(in), net.model());
    if (config.directions.empty() && config.n_v() > 0) {
        ObjectiveSpec azp_obj;
        PlacementOptions opt = placement_options(cfg);
        config.directions = enumerate_directions(net.solver(), net.scenario, config, azp_obj, {},
                                                 opt.scp, opt.enum_cap)
                                .best_directions;
    }

    std::vector<Window> windows;
    for (const std::string& w : cfg.windows)
        windows.push_back(parse_window(w, net.scenario.step_minutes, net.scenario.n_t));
    ScpOptions sopt;
    sopt.hydraulics.tol = cfg.tol;
    ScenarioComparison cmp = compare_scenarios(net.solver(), net.scenario, config, windows, sopt);

    fs::path out(cfg.out_dir);
    std::string table = "plan,window_begin,window_end,azp_m,scc_pct,window_azp_m,window_scc_pct,"
                        "pressure_variation_m2\n";
    char buf[256];
    for (size_t k = 0; k < cmp.plans.size(); ++k) {
        const AdaptivePlan& plan = cmp.plans[k];
        std::string name = k == 0 ? "baseline" : "window" + std::to_string(k);
        std::snprintf(buf, sizeof buf, "%s,%d,%d,%.10g,%.10g,%.10g,%.10g,%.10g\n", name.c_str(),
                      plan.window.begin, plan.window.end, plan.metrics.azp,
                      100.0 * plan.metrics.scc_indicator, plan.window_azp,
                      100.0 * plan.window_scc, plan.pv);
        table += buf;
        atomic_write(out / ("plan_" + name + ".csv"), plan_csv(net.model(), plan));
        atomic_write(out / ("cdf_" + name + ".csv"), cdf_csv(plan.pv_stats));
    }
    atomic_write(out / "comparison.csv", table);
    write_manifest(cfg);
}

void dispatch(const RunConfig& cfg) {
    // a stale error marker from a previous run in the same directory would
    // otherwise survive a successful re-run
    std::error_code ec;
    fs::remove(fs::path(cfg.out_dir) / "error.json", ec);
    if (cfg.command == "simulate") run_simulate(cfg);
    else if (cfg.command == "place") run_place(cfg);
    else if (cfg.command == "pareto") run_pareto(cfg);
    else if (cfg.command == "adapt") run_adapt(cfg);
    else throw ParseError("unknown command '" + cfg.command + "' in manifest");
}

void write_error(const RunConfig& cfg, const std::string& kind, const std::string& message) {
    try {
        json j;
        j["error"] = {{"kind", kind}, {"message", message}};
        atomic_write(fs::path(cfg.out_dir) / "error.json", j.dump(2) + "\n");
    } catch (...) {
        // the error itself is already going to stderr
    }
    std::cerr << "error (" << kind << "): " << message << "\n";
}

} // namespace

int main(int argc, char** argv) {
#ifdef _OPENMP
    if (const char* threads = std::getenv("WDN_THREADS"))
        if (int n = std::atoi(threads); n > 0) omp_set_num_threads(n);
#endif

    CLI::App app{"water network valve placement and control"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto add_common = [&](CLI::App* cmd, bool needs_network = true) {
        cmd->add_option("-n,--network", cfg.network_path, "network file (.inp subset)")
            ->required(needs_network);
        cmd->add_option("-o,--out", cfg.out_dir, "output directory");
        cmd->add_option("--seed", cfg.seed, "RNG seed");
        cmd->add_option("--rho", cfg.rho, "sigmoid curvature");
        cmd->add_option("--u-min", cfg.u_min, "self-cleaning velocity threshold, m/s");
        cmd->add_option("--u-max", cfg.u_max, "velocity bound, m/s");
        cmd->add_option("--alpha-max", cfg.alpha_max_lps, "flushing cap, L/s");
        cmd->add_option("--regulatory-head", cfg.regulatory_head, "pressure floor, m");
        cmd->add_option("--tol", cfg.tol, "Newton tolerance");
    };

    CLI::App* sim = app.add_subcommand("simulate", "steady-state EPS with zero controls");
    add_common(sim);
    sim->add_option("--model", cfg.model, "head-loss model: hw | qa")
        ->check(CLI::IsMember({"hw", "qa"}));

    CLI::App* place = app.add_subcommand("place", "place and control valves, one objective");
    add_common(place);
    place->add_option("--objective", cfg.objective, "azp | scc")
        ->check(CLI::IsMember({"azp", "scc"}));
    place->add_option("--nv", cfg.n_v, "number of PCVs");
    place->add_option("--nf", cfg.n_f, "number of AFVs");
    place->add_option("--trials", cfg.trials, "rounding trials");
    place->add_option("--obbt", cfg.obbt_rounds, "bound tightening rounds");
    place->add_option("--enum-cap", cfg.enum_cap, "direction enumeration cap");

    CLI::App* pareto = app.add_subcommand("pareto", "bi-objective weighted-sum front");
    add_common(pareto);
    pareto->add_option("--design", cfg.design, "joint | hierarchical | fixed:<config.json>");
    pareto->add_option("--nv", cfg.n_v, "number of PCVs");
    pareto->add_option("--nf", cfg.n_f, "number of AFVs");
    pareto->add_option("--weights", cfg.weights, "number of sweep weights");
    pareto->add_option("--trials", cfg.trials, "rounding trials");
    pareto->add_option("--obbt", cfg.obbt_rounds, "bound tightening rounds");
    pareto->add_option("--enum-cap", cfg.enum_cap, "direction enumeration cap");

    CLI::App* adapt = app.add_subcommand("adapt", "adaptive AZP/SCC control plans");
    add_common(adapt);
    adapt->add_option("--config", cfg.config_path, "valve config JSON")->required();
    adapt->add_option("--window", cfg.windows, "SCC window HH:MM-HH:MM (repeatable)");

    std::string manifest_path;
    CLI::App* rerun = app.add_subcommand("rerun", "reproduce a run from its manifest");
    rerun->add_option("manifest", manifest_path, "manifest.json of a previous run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (rerun->parsed()) {
            std::ifstream in(manifest_path);
            if (!in) throw ParseError("cannot open manifest '" + manifest_path + "'");
            cfg = json::parse(in).get<RunConfig>();
        } else {
            cfg.command = app.get_subcommands().front()->get_name();
        }
        dispatch(cfg);
        return 0;
    } catch (const ConvergenceError& e) {
        write_error(cfg, "solver", e.what());
        return 1;
    } catch (const InfeasibleError& e) {
        write_error(cfg, "solver", e.what());
        return 1;
    } catch (const ParseError& e) {
        write_error(cfg, "io", e.what());
        return 2;
    } catch (const ValidationError& e) {
        write_error(cfg, "input", e.what());
        return 2;
    } catch (const DomainError& e) {
        write_error(cfg, "input", e.what());
        return 2;
    } catch (const nlohmann::json::exception& e) {
        write_error(cfg, "input", e.what());
        return 2;
    } catch (const std::exception& e) {
        write_error(cfg, "internal", e.what());
        return 3;
    }
}
