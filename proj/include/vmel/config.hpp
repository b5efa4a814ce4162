#pragma once

// Run configuration: problem path, the epsilon schedule, tau parameters,
// integrator and verifier knobs.

#include <vmel/certificate.hpp>

namespace vmel {

struct ScheduleEntry {
    std::string mode;  // "melnikov" or "direct"
    Interval eps;
    int cells = 1;               // direct: number of equal subcells
    double tau1 = 0, tau2 = 0;   // melnikov: the two probe times
    int grid = 16;               // melnikov: tau cells for the mixed clause
    double window_halfwidth = 0.2;  // direct: tau window around the scanned zero
};

struct RunConfig {
    std::string problem_path;
    std::string out_dir = "out";
    int threads = 1;
    // integrator
    int order = 8;
    double tolerance = 1e-10;
    double h_min = 1e-7;
    double h_max = 0.2;
    // verifier
    std::size_t subdivisions_unstable = 128;
    std::size_t subdivisions_angle = 32;
    std::size_t subdivisions_param = 1;
    std::size_t subdivisions_stable = 1;
    double cone = 0.5;
    double chart_radius = 1.5;
    double L_max = 0.05;
    int rate_order = 2;
    // kappa solver
    double kappa_margin = 0.05;
    double kappa_tol = 1e-6;

    std::vector<ScheduleEntry> schedule;

    // fingerprint over everything that affects the certificate payload
    std::string semantic_hash() const {
        Json j;
        j["problem"] = problem_path;
        j["order"] = order;
        j["tolerance"] = hex_double(tolerance);
        j["h_min"] = hex_double(h_min);
        j["h_max"] = hex_double(h_max);
        j["subdivisions"] = {subdivisions_unstable, subdivisions_param, subdivisions_angle,
                             subdivisions_stable};
        j["cone"] = hex_double(cone);
        j["chart_radius"] = hex_double(chart_radius);
        j["L_max"] = hex_double(L_max);
        j["rate_order"] = rate_order;
        j["kappa"] = {hex_double(kappa_margin), hex_double(kappa_tol)};
        Json sched = Json::array();
        for (const auto& e : schedule)
            sched.push_back({{"mode", e.mode},
                             {"eps", json_interval(e.eps)},
                             {"cells", e.cells},
                             {"tau1", hex_double(e.tau1)},
                             {"tau2", hex_double(e.tau2)},
                             {"grid", e.grid},
                             {"window", hex_double(e.window_halfwidth)}});
        j["schedule"] = sched;
        return fnv1a_hex(j.dump());
    }
};

inline RunConfig config_from_json(const Json& j, const std::string& base_dir = "") {
    RunConfig c;
    c.problem_path = j.at("problem").get<std::string>();
    if (!base_dir.empty() && !c.problem_path.empty() && c.problem_path[0] != '/')
        c.problem_path = base_dir + "/" + c.problem_path;
    if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
    if (j.contains("threads")) c.threads = j.at("threads").get<int>();
    if (j.contains("integrator")) {
        const Json& i = j.at("integrator");
        if (i.contains("order")) c.order = i.at("order").get<int>();
        if (i.contains("tolerance")) c.tolerance = number_from_json(i.at("tolerance"));
        if (i.contains("h_min")) c.h_min = number_from_json(i.at("h_min"));
        if (i.contains("h_max")) c.h_max = number_from_json(i.at("h_max"));
    }
    if (j.contains("verifier")) {
        const Json& v = j.at("verifier");
        if (v.contains("subdivisions_unstable"))
            c.subdivisions_unstable = v.at("subdivisions_unstable").get<std::size_t>();
        if (v.contains("subdivisions_angle"))
            c.subdivisions_angle = v.at("subdivisions_angle").get<std::size_t>();
        if (v.contains("subdivisions_param"))
            c.subdivisions_param = v.at("subdivisions_param").get<std::size_t>();
        if (v.contains("subdivisions_stable"))
            c.subdivisions_stable = v.at("subdivisions_stable").get<std::size_t>();
        if (v.contains("cone")) c.cone = number_from_json(v.at("cone"));
        if (v.contains("chart_radius")) c.chart_radius = number_from_json(v.at("chart_radius"));
        if (v.contains("L_max")) c.L_max = number_from_json(v.at("L_max"));
        if (v.contains("rate_order")) c.rate_order = v.at("rate_order").get<int>();
    }
    if (j.contains("kappa")) {
        const Json& k = j.at("kappa");
        if (k.contains("margin")) c.kappa_margin = number_from_json(k.at("margin"));
        if (k.contains("tolerance")) c.kappa_tol = number_from_json(k.at("tolerance"));
    }
    if (!j.contains("schedule")) throw error("run config needs a schedule");
    for (const auto& e : j.at("schedule")) {
        ScheduleEntry s;
        s.mode = e.at("mode").get<std::string>();
        if (s.mode != "melnikov" && s.mode != "direct") throw error("unknown schedule mode " + s.mode);
        const Json& eps = e.at("eps");
        s.eps = Interval(number_from_json(eps.at(0)), number_from_json(eps.at(1)));
        if (e.contains("cells")) s.cells = e.at("cells").get<int>();
        if (e.contains("tau1")) s.tau1 = number_from_json(e.at("tau1"));
        if (e.contains("tau2")) s.tau2 = number_from_json(e.at("tau2"));
        if (e.contains("grid")) s.grid = e.at("grid").get<int>();
        if (e.contains("window_halfwidth")) s.window_halfwidth = number_from_json(e.at("window_halfwidth"));
        c.schedule.push_back(s);
    }
    // schedule sanity: non-overlapping, connected union
    for (std::size_t i = 1; i < c.schedule.size(); ++i)
        if (c.schedule[i].eps.lo != c.schedule[i - 1].eps.hi)
            throw error("schedule intervals must be adjacent and ordered");
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::string dir;
    auto slash = path.find_last_of('/');
    if (slash != std::string::npos) dir = path.substr(0, slash);
    return config_from_json(load_json_file(path), dir);
}

}  // namespace vmel
