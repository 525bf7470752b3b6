// SPDX-License-Identifier: MIT
// Parser for the EPANET-INP subset: JUNCTIONS, RESERVOIRS, PIPES, VALVES,
// PATTERNS, TIMES, OPTIONS. Flow units LPS, diameters in mm.
#include "wdn/network.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace wdn {

namespace {

std::string to_upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
    return s;
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream in(line);
    std::string t;
    while (in >> t) toks.push_back(t);
    return toks;
}

double parse_number(const std::string& tok, const std::string& where) {
    try {
        size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError("malformed number '" + tok + "' in " + where);
    }
}

// clock strings: "HH:MM", "H", or decimal hours
double parse_hours(const std::string& tok, const std::string& where) {
    auto colon = tok.find(':');
    if (colon == std::string::npos) return parse_number(tok, where);
    double h = parse_number(tok.substr(0, colon), where);
    double m = parse_number(tok.substr(colon + 1), where);
    return h + m / 60.0;
}

struct RawJunction {
    std::string id;
    double elev;
    double demand_lps;
    std::string pattern;
};
struct RawReservoir {
    std::string id;
    double head;
    std::string pattern;
};
struct RawLink {
    std::string id, from, to;
    double length, diameter_mm, roughness, setting;
    LinkKind kind;
};

} // namespace

ParsedNetwork parse_network(const std::string& text) {
    std::vector<RawJunction> junctions;
    std::vector<RawReservoir> reservoirs;
    std::vector<RawLink> rawlinks;
    std::map<std::string, std::vector<double>> patterns;
    std::vector<std::string> pattern_order;
    double duration_h = 0.0, step_h = 1.0;
    std::vector<std::string> warnings;

    static const std::vector<std::string> silent_skip = {
        "TITLE", "COORDINATES", "VERTICES", "TAGS", "DEMANDS", "STATUS",
        "REPORT", "LABELS", "BACKDROP", "END", "EMITTERS", "QUALITY"};

    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto sc = line.find(';');
        if (sc != std::string::npos) line.erase(sc);
        auto toks = tokenize(line);
        if (toks.empty()) continue;
        const std::string where = "line " + std::to_string(lineno);

        if (toks[0].front() == '[') {
            std::string name = to_upper(line.substr(line.find('[') + 1,
                                                    line.find(']') - line.find('[') - 1));
            if (name == "JUNCTIONS" || name == "RESERVOIRS" || name == "PIPES" ||
                name == "VALVES" || name == "PATTERNS" || name == "TIMES" || name == "OPTIONS") {
                section = name;
            } else {
                section.clear();
                if (std::find(silent_skip.begin(), silent_skip.end(), name) == silent_skip.end())
                    warnings.push_back("skipping unknown section [" + name + "]");
            }
            continue;
        }
        if (section.empty()) continue;

        if (section == "JUNCTIONS") {
            if (toks.size() < 2) throw ParseError("malformed [JUNCTIONS] entry at " + where);
            RawJunction junction{toks[0], parse_number(toks[1], where), 0.0, ""};
            if (toks.size() > 2) junction.demand_lps = parse_number(toks[2], where);
            if (toks.size() > 3) junction.pattern = toks[3];
            junctions.push_back(junction);
        } else if (section == "RESERVOIRS") {
            if (toks.size() < 2) throw ParseError("malformed [RESERVOIRS] entry at " + where);
            RawReservoir r{toks[0], parse_number(toks[1], where), ""};
            if (toks.size() > 2) r.pattern = toks[2];
            reservoirs.push_back(r);
        } else if (section == "PIPES") {
            if (toks.size() < 6) throw ParseError("malformed [PIPES] entry at " + where);
            rawlinks.push_back({toks[0], toks[1], toks[2], parse_number(toks[3], where),
                                parse_number(toks[4], where), parse_number(toks[5], where), 0.0,
                                LinkKind::Pipe});
        } else if (section == "VALVES") {
            // id, from, to, diameter, type, setting (K)
            if (toks.size() < 6) throw ParseError("malformed [VALVES] entry at " + where);
            rawlinks.push_back({toks[0], toks[1], toks[2], 0.0, parse_number(toks[3], where), 0.0,
                                parse_number(toks[5], where), LinkKind::Valve});
        } else if (section == "PATTERNS") {
            if (toks.size() < 2) throw ParseError("malformed [PATTERNS] entry at " + where);
            auto& mults = patterns[toks[0]];
            if (mults.empty()) pattern_order.push_back(toks[0]);
            for (size_t k = 1; k < toks.size(); ++k) mults.push_back(parse_number(toks[k], where));
        } else if (section == "TIMES") {
            std::string key = to_upper(toks[0]);
            if (key == "DURATION" && toks.size() >= 2) {
                duration_h = parse_hours(toks[1], where);
            } else if (key == "HYDRAULIC" && toks.size() >= 3) {
                step_h = parse_hours(toks[2], where);
            }
        } else if (section == "OPTIONS") {
            if (to_upper(toks[0]) == "UNITS" && toks.size() >= 2 && to_upper(toks[1]) != "LPS")
                throw ParseError("unsupported flow units '" + toks[1] + "' (only LPS)");
        }
    }

    ParsedNetwork out;
    NetworkModel& model = out.model;
    for (const auto& junction : junctions) {
        Node node;
        node.id = junction.id;
        node.elevation = junction.elev;
        node.base_demand = junction.demand_lps / 1000.0; // L/s -> m3/s
        model.nodes.push_back(node);
    }
    for (const auto& r : reservoirs) {
        Source s;
        s.id = r.id;
        s.head = r.head;
        model.sources.push_back(s);
    }

    auto resolve = [&](const std::string& id, const std::string& link_id) -> EndRef {
        int i = model.node_index(id);
        if (i >= 0) return {i, false};
        i = model.source_index(id);
        if (i >= 0) return {i, true};
        throw ValidationError("link '" + link_id + "' references unknown node '" + id + "'");
    };
    for (const auto& raw : rawlinks) {
        Link link;
        link.id = raw.id;
        link.kind = raw.kind;
        link.from = resolve(raw.from, raw.id);
        link.to = resolve(raw.to, raw.id);
        link.length = raw.length;
        link.diameter = raw.diameter_mm / 1000.0; // mm -> m
        link.hw_coeff = raw.roughness;
        link.loss_coeff = raw.setting;
        model.links.push_back(link);
    }
    model.finalize();

    // pattern indices
    std::map<std::string, int> pattern_index;
    for (size_t k = 0; k < pattern_order.size(); ++k)
        pattern_index[pattern_order[k]] = static_cast<int>(k);
    for (size_t i = 0; i < junctions.size(); ++i) {
        if (junctions[i].pattern.empty()) continue;
        auto it = pattern_index.find(junctions[i].pattern);
        if (it == pattern_index.end())
            throw ValidationError("junction '" + junctions[i].id + "' references unknown pattern '" +
                                  junctions[i].pattern + "'");
        model.nodes[i].pattern = it->second;
    }
    for (size_t i = 0; i < reservoirs.size(); ++i) {
        if (reservoirs[i].pattern.empty()) continue;
        auto it = pattern_index.find(reservoirs[i].pattern);
        if (it == pattern_index.end())
            throw ValidationError("reservoir '" + reservoirs[i].id + "' references unknown pattern '" +
                                  reservoirs[i].pattern + "'");
        model.sources[i].pattern = it->second;
    }

    Scenario& scenario = out.scenario;
    scenario.step_minutes = step_h * 60.0;
    scenario.n_t = duration_h > 0.0 ? std::max(1, static_cast<int>(std::llround(duration_h / step_h)))
                                    : 1;
    scenario.demands.resize(scenario.n_t, model.nn());
    scenario.source_heads.resize(scenario.n_t, model.n0());
    auto multiplier = [&](int pattern, int t) {
        if (pattern < 0) return 1.0;
        const auto& mults = patterns.at(pattern_order[pattern]);
        return mults.empty() ? 1.0 : mults[t % mults.size()];
    };
    for (int t = 0; t < scenario.n_t; ++t) {
        for (int i = 0; i < model.nn(); ++i)
            scenario.demands(t, i) = model.nodes[i].base_demand * multiplier(model.nodes[i].pattern, t);
        for (int k = 0; k < model.n0(); ++k)
            scenario.source_heads(t, k) = model.sources[k].head * multiplier(model.sources[k].pattern, t);
    }
    if (scenario.demands.minCoeff() < 0.0) throw ValidationError("negative demand in scenario");
    out.warnings = std::move(warnings);
    return out;
}

ParsedNetwork parse_network_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open network file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_network(ss.str());
}

} // namespace wdn
