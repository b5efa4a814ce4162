#pragma once

// Problem fixture files: the serialized form of ProblemSpec.  The example
// is generated programmatically and shipped as a fixture so that external
// problems follow the same path.

#include <vmel/certificate.hpp>
#include <vmel/problem.hpp>

namespace vmel {

namespace detail {

inline Json json_matrix(const IMatrix& m) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (!m(i, j).is_point()) throw error("fixture matrices must be point matrices");
            row.push_back(hex_double(m(i, j).lo));
        }
        rows.push_back(row);
    }
    return rows;
}

inline IMatrix matrix_from_json(const Json& j) {
    IMatrix m(j.size(), j.empty() ? 0 : j.at(0).size());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t jj = 0; jj < m.cols(); ++jj)
            m(i, jj) = Interval(parse_hex_double(j.at(i).at(jj).get<std::string>()));
    return m;
}

inline Json json_poly(const Poly& p) {
    Json arr = Json::array();
    for (const auto& c : p) arr.push_back(json_interval(c));
    return arr;
}

inline Poly poly_from_json(const Json& j) {
    Poly p;
    for (const auto& c : j) p.push_back(interval_from_json(c));
    return p;
}

inline Json json_branch(const BranchFrame& b, const std::vector<std::string>& vars) {
    Json j;
    j["field"] = serialize_field(b.local_field);
    j["variables"] = vars;
    j["linear"] = json_matrix(b.linear);
    j["linear_inv"] = json_matrix(b.linear_inv);
    j["psi"] = serialize_field(b.psi);
    j["psi_inv"] = serialize_field(b.psi_inv);
    j["crossing_direction"] = b.crossing_direction;
    return j;
}

inline BranchFrame branch_from_json(const Json& j) {
    BranchFrame b;
    std::vector<std::string> vars = j.at("variables").get<std::vector<std::string>>();
    b.local_field = parse_field(vars, j.at("field").get<std::vector<std::string>>());
    b.linear = matrix_from_json(j.at("linear"));
    b.linear_inv = matrix_from_json(j.at("linear_inv"));
    b.psi = parse_field(vars, j.at("psi").get<std::vector<std::string>>());
    b.psi_inv = parse_field(vars, j.at("psi_inv").get<std::vector<std::string>>());
    b.crossing_direction = j.at("crossing_direction").get<int>();
    return b;
}

}  // namespace detail

inline Json problem_to_json(const ProblemSpec& p) {
    Json j;
    j["format"] = "vmel-problem-1";
    j["coordinates"] = p.coords;
    Json periodic = Json::object();
    for (std::size_t i = 0; i < p.topology.size(); ++i)
        if (p.topology[i].periodic) periodic[p.coords[i]] = hex_double(p.topology[i].period);
    j["periodic"] = periodic;
    j["ambient_field"] = serialize_field(p.ambient);
    j["diagonal_planar_field"] = serialize_field(p.diag2d);
    j["seed"] = {{"order", p.seed.order},
                 {"k2", detail::json_poly(p.seed.k2)},
                 {"r", detail::json_poly(p.seed.r)}};
    j["section"] = {{"coordinate", p.coords[p.section.coordinate]}, {"level", hex_double(p.section.level)}};
    j["fiber_radius"] = hex_double(p.fiber_radius);
    j["eps_range"] = json_interval(p.eps_range);
    const std::vector<std::string> local_vars = p.unstable.local_field.var_names();
    j["branches"] = {{"u", detail::json_branch(p.unstable, local_vars)},
                     {"s", detail::json_branch(p.stable, local_vars)}};
    j["published"] = {{"slope", hex_double(p.published_slope)},
                      {"second", hex_double(p.published_second)}};
    return j;
}

inline ProblemSpec problem_from_json(const Json& j) {
    if (!j.contains("format") || j.at("format").get<std::string>() != "vmel-problem-1")
        throw error("unknown problem fixture format");
    ProblemSpec p;
    p.coords = j.at("coordinates").get<std::vector<std::string>>();
    p.topology.assign(p.coords.size(), CoordTopology{});
    for (auto it = j.at("periodic").begin(); it != j.at("periodic").end(); ++it) {
        for (std::size_t i = 0; i < p.coords.size(); ++i)
            if (p.coords[i] == it.key())
                p.topology[i] = CoordTopology{true, parse_hex_double(it.value().get<std::string>())};
    }
    p.ambient = parse_field(p.coords, j.at("ambient_field").get<std::vector<std::string>>());
    p.diag2d = parse_field({"u", "v"}, j.at("diagonal_planar_field").get<std::vector<std::string>>());
    p.seed.order = j.at("seed").at("order").get<int>();
    p.seed.k2 = detail::poly_from_json(j.at("seed").at("k2"));
    p.seed.r = detail::poly_from_json(j.at("seed").at("r"));
    std::string sec_name = j.at("section").at("coordinate").get<std::string>();
    p.section.coordinate = p.coords.size();
    for (std::size_t i = 0; i < p.coords.size(); ++i)
        if (p.coords[i] == sec_name) p.section.coordinate = i;
    if (p.section.coordinate == p.coords.size()) throw error("section coordinate not found");
    p.section.level = parse_hex_double(j.at("section").at("level").get<std::string>());
    p.fiber_radius = parse_hex_double(j.at("fiber_radius").get<std::string>());
    p.eps_range = interval_from_json(j.at("eps_range"));
    p.unstable = detail::branch_from_json(j.at("branches").at("u"));
    p.stable = detail::branch_from_json(j.at("branches").at("s"));
    p.published_slope = parse_hex_double(j.at("published").at("slope").get<std::string>());
    p.published_second = parse_hex_double(j.at("published").at("second").get<std::string>());
    return p;
}

inline ProblemSpec load_problem(const std::string& path) {
    return problem_from_json(load_json_file(path));
}

}  // namespace vmel
