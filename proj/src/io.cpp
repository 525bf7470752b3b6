// SPDX-License-Identifier: MIT
#include "wdn/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace wdn {

using nlohmann::json;

void to_json(json& j, const RunConfig& c) {
    j = json{{"command", c.command},
             {"network", c.network_path},
             {"out_dir", c.out_dir},
             {"model", c.model},
             {"objective", c.objective},
             {"design", c.design},
             {"n_v", c.n_v},
             {"n_f", c.n_f},
             {"weights", c.weights},
             {"trials", c.trials},
             {"obbt_rounds", c.obbt_rounds},
             {"enum_cap", c.enum_cap},
             {"seed", c.seed},
             {"rho", c.rho},
             {"u_min_ms", c.u_min},
             {"u_max_ms", c.u_max},
             {"alpha_max_lps", c.alpha_max_lps},
             {"regulatory_head_m", c.regulatory_head},
             {"newton_tol", c.tol},
             {"config_path", c.config_path},
             {"windows", c.windows},
             {"version", c.version}};
}

void from_json(const json& j, RunConfig& c) {
    j.at("command").get_to(c.command);
    j.at("network").get_to(c.network_path);
    j.at("out_dir").get_to(c.out_dir);
    j.at("model").get_to(c.model);
    j.at("objective").get_to(c.objective);
    j.at("design").get_to(c.design);
    j.at("n_v").get_to(c.n_v);
    j.at("n_f").get_to(c.n_f);
    j.at("weights").get_to(c.weights);
    j.at("trials").get_to(c.trials);
    j.at("obbt_rounds").get_to(c.obbt_rounds);
    j.at("enum_cap").get_to(c.enum_cap);
    j.at("seed").get_to(c.seed);
    j.at("rho").get_to(c.rho);
    j.at("u_min_ms").get_to(c.u_min);
    j.at("u_max_ms").get_to(c.u_max);
    j.at("alpha_max_lps").get_to(c.alpha_max_lps);
    j.at("regulatory_head_m").get_to(c.regulatory_head);
    j.at("newton_tol").get_to(c.tol);
    j.at("config_path").get_to(c.config_path);
    j.at("windows").get_to(c.windows);
    j.at("version").get_to(c.version);
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        out << content;
        if (!out.good()) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

json valve_config_to_json(const ValveConfig& config, const NetworkModel& model) {
    json j;
    j["pcv_links"] = json::array();
    for (size_t k = 0; k < config.pcv_links.size(); ++k) {
        json entry;
        entry["id"] = model.links[config.pcv_links[k]].id;
        if (k < config.directions.size()) entry["direction"] = config.directions[k];
        j["pcv_links"].push_back(entry);
    }
    j["afv_nodes"] = json::array();
    for (int i : config.afv_nodes) j["afv_nodes"].push_back(model.nodes[i].id);
    return j;
}

ValveConfig valve_config_from_json(const json& j, const NetworkModel& model) {
    std::map<std::string, int> link_ix, node_ix;
    for (int k = 0; k < model.np(); ++k) link_ix[model.links[k].id] = k;
    for (int i = 0; i < model.nn(); ++i) node_ix[model.nodes[i].id] = i;

    ValveConfig config;
    bool any_direction = false;
    for (const json& entry : j.at("pcv_links")) {
        std::string id = entry.at("id").get<std::string>();
        auto it = link_ix.find(id);
        if (it == link_ix.end())
            throw ValidationError("valve config references unknown link '" + id + "'");
        config.pcv_links.push_back(it->second);
        if (entry.contains("direction")) {
            config.directions.push_back(entry.at("direction").get<int>());
            any_direction = true;
        } else {
            config.directions.push_back(+1);
        }
    }
    if (!any_direction) config.directions.clear();
    for (const json& entry : j.at("afv_nodes")) {
        std::string id = entry.get<std::string>();
        auto it = node_ix.find(id);
        if (it == node_ix.end())
            throw ValidationError("valve config references unknown node '" + id + "'");
        config.afv_nodes.push_back(it->second);
    }
    return config;
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace

std::string state_csv(const NetworkModel& model, const HydraulicState& state) {
    std::string out = "step,kind,id,quantity,value_si\n";
    for (int t = 0; t < state.n_t(); ++t) {
        for (int i = 0; i < model.nn(); ++i) {
            const std::string prefix = std::to_string(t) + ",node," + model.nodes[i].id + ",";
            out += prefix + "head_m," + num(state.h(t, i)) + "\n";
            out += prefix + "pressure_m," + num(state.h(t, i) - model.nodes[i].elevation) + "\n";
        }
        for (int j = 0; j < model.np(); ++j) {
            const Link& link = model.links[j];
            const std::string prefix = std::to_string(t) + ",link," + link.id + ",";
            out += prefix + "flow_m3s," + num(state.q(t, j)) + "\n";
            out += prefix + "velocity_ms," + num(state.q(t, j) / link.area) + "\n";
            out += prefix + "headloss_m," + num(state.theta(t, j)) + "\n";
        }
    }
    return out;
}

std::string settings_csv(const NetworkModel& model, const ControlSettings& settings) {
    std::string out = "step,kind,id,setting,value_si\n";
    const int n_t = static_cast<int>(settings.eta.rows());
    for (int t = 0; t < n_t; ++t) {
        for (int j = 0; j < model.np(); ++j)
            if (settings.eta(t, j) != 0.0)
                out += std::to_string(t) + ",link," + model.links[j].id + ",pcv_loss_m," +
                       num(settings.eta(t, j)) + "\n";
        for (int i = 0; i < model.nn(); ++i)
            if (settings.alpha(t, i) != 0.0)
                out += std::to_string(t) + ",node," + model.nodes[i].id + ",flushing_m3s," +
                       num(settings.alpha(t, i)) + "\n";
    }
    return out;
}

std::string front_csv(const std::vector<ParetoPoint>& points) {
    std::string out = "omega,azp_m,scc_pct,azp_norm,scc_norm,dominated,config_id\n";
    for (size_t k = 0; k < points.size(); ++k) {
        const ParetoPoint& p = points[k];
        if (!p.solved) continue;
        out += num(p.omega) + "," + num(p.azp) + "," + num(100.0 * p.scc_indicator) + "," +
               num(p.azp_norm) + "," + num(p.scc_norm) + "," + (p.dominated ? "1" : "0") + "," +
               std::to_string(k) + "\n";
    }
    return out;
}

std::string plan_csv(const NetworkModel& model, const AdaptivePlan& plan) {
    std::string out = "step,mode,azp_m,scc_pct,flushing_total_lps,max_setting_delta\n";
    const int n_t = static_cast<int>(plan.mode_per_step.size());
    for (int t = 0; t < n_t; ++t) {
        double flushing = plan.settings.alpha.row(t).sum() * 1000.0;
        out += std::to_string(t) + "," +
               (plan.mode_per_step[t] == ControlMode::SCC ? "scc" : "azp") + "," +
               num(plan.metrics.azp_per_step[t]) + "," +
               num(100.0 * plan.metrics.scc_indicator_per_step[t]) + "," + num(flushing) + "," +
               num(t < plan.setting_delta.size() ? plan.setting_delta[t] : 0.0) + "\n";
    }
    (void)model;
    return out;
}

std::string cdf_csv(const PressureRangeStats& stats) {
    std::string out = "pressure_range_m,cum_fraction\n";
    for (const auto& [range, frac] : stats.cdf) out += num(range) + "," + num(frac) + "\n";
    return out;
}

json objectives_json(const ObjectiveValue& value, const ResidualReport& residuals) {
    json j;
    j["azp_m"] = value.azp;
    j["scc_pct"] = 100.0 * value.scc_indicator;
    j["scc_sigmoid_pct"] = 100.0 * value.scc_sigmoid;
    j["pressure_variation_m2"] = value.pv;
    j["max_energy_residual_m"] = residuals.energy.size() ? residuals.energy.maxCoeff() : 0.0;
    j["max_mass_residual_m3s"] = residuals.mass.size() ? residuals.mass.maxCoeff() : 0.0;
    j["azp_per_step_m"] = std::vector<double>(value.azp_per_step.begin(), value.azp_per_step.end());
    j["scc_per_step_pct"] = [&] {
        std::vector<double> v;
        for (double s : value.scc_indicator_per_step) v.push_back(100.0 * s);
        return v;
    }();
    return j;
}

Window parse_window(const std::string& text, double step_minutes, int n_t) {
    int h1, m1, h2, m2;
    if (std::sscanf(text.c_str(), "%d:%d-%d:%d", &h1, &m1, &h2, &m2) != 4)
        throw ParseError("window '" + text + "' is not of the form HH:MM-HH:MM");
    double start = h1 * 60.0 + m1, end = h2 * 60.0 + m2;
    if (start < 0 || end < start)
        throw ParseError("window '" + text + "' is empty or reversed");
    Window w;
    w.begin = static_cast<int>(std::floor(start / step_minutes + 1e-9));
    w.end = static_cast<int>(std::ceil(end / step_minutes - 1e-9));
    w.begin = std::max(0, std::min(w.begin, n_t));
    w.end = std::max(w.begin, std::min(w.end, n_t));
    return w;
}

} // namespace wdn
