#pragma once

// Proof certificates: every verified inequality is stored as a clause with
// exact hex-float enclosure endpoints, so a certificate can be re-checked
// by comparisons alone, without re-running any numerics.

#include <vmel/interval.hpp>

#include <json.hpp>

#include <fstream>
#include <string>
#include <vector>

namespace vmel {

using Json = nlohmann::json;

inline Json json_interval(const Interval& x) {
    return Json::array({hex_double(x.lo), hex_double(x.hi)});
}

inline Interval interval_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 2) throw error("interval field must be a two element array");
    return Interval(parse_hex_double(j.at(0).get<std::string>()),
                    parse_hex_double(j.at(1).get<std::string>()));
}

inline Json json_number(double x) { return Json(hex_double(x)); }

inline double number_from_json(const Json& j) {
    if (j.is_number()) return j.get<double>();
    return parse_hex_double(j.get<std::string>());
}

// A clause asserts that an enclosure is entirely on one side of a bound:
//   relation "lt": enclosure.hi < bound
//   relation "gt": enclosure.lo > bound
struct Clause {
    std::string name;
    std::string relation;  // "lt" or "gt"
    Interval enclosure;
    double bound = 0.0;
    bool holds = false;

    static Clause less(const std::string& name, const Interval& enc, double bound) {
        Clause c{name, "lt", enc, bound, enc.hi < bound};
        return c;
    }
    static Clause greater(const std::string& name, const Interval& enc, double bound) {
        Clause c{name, "gt", enc, bound, enc.lo > bound};
        return c;
    }

    bool recheck() const {
        if (relation == "lt") return enclosure.hi < bound;
        if (relation == "gt") return enclosure.lo > bound;
        throw error("unknown clause relation: " + relation);
    }

    Json to_json() const {
        Json j;
        j["name"] = name;
        j["relation"] = relation;
        j["enclosure"] = json_interval(enclosure);
        j["bound"] = hex_double(bound);
        j["holds"] = holds;
        return j;
    }
    static Clause from_json(const Json& j) {
        Clause c;
        c.name = j.at("name").get<std::string>();
        c.relation = j.at("relation").get<std::string>();
        c.enclosure = interval_from_json(j.at("enclosure"));
        c.bound = parse_hex_double(j.at("bound").get<std::string>());
        c.holds = j.at("holds").get<bool>();
        return c;
    }
};

inline bool all_hold(const std::vector<Clause>& cs) {
    for (const auto& c : cs)
        if (!c.holds) return false;
    return true;
}

inline Json clauses_to_json(const std::vector<Clause>& cs) {
    Json arr = Json::array();
    for (const auto& c : cs) arr.push_back(c.to_json());
    return arr;
}

inline std::vector<Clause> clauses_from_json(const Json& arr) {
    std::vector<Clause> out;
    for (const auto& j : arr) out.push_back(Clause::from_json(j));
    return out;
}

// deterministic FNV-1a hash of a string, for config fingerprints
inline std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

inline Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw error("parse failure in " + path + ": " + e.what());
    }
    return j;
}

inline void save_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw error("cannot write " + path);
    out << j.dump(2) << "\n";
}

// Re-validate a certificate by pure comparison.  Returns the list of
// complaints; empty means the certificate is internally consistent.
inline std::vector<std::string> recheck_certificate(const Json& cert) {
    std::vector<std::string> bad;
    auto check_clause_array = [&](const Json& arr, const std::string& where) {
        for (const auto& cj : arr) {
            Clause c = Clause::from_json(cj);
            bool ok;
            try {
                ok = c.recheck();
            } catch (const error& e) {
                bad.push_back(where + ": " + e.what());
                continue;
            }
            if (ok != c.holds || !ok)
                bad.push_back(where + ": clause '" + c.name + "' does not verify");
        }
    };
    if (cert.contains("nhim"))
        for (auto it = cert["nhim"].begin(); it != cert["nhim"].end(); ++it)
            if (it.value().contains("clauses"))
                check_clause_array(it.value()["clauses"], "nhim/" + it.key());
    if (cert.contains("cells")) {
        std::size_t idx = 0;
        for (const auto& cell : cert["cells"]) {
            if (cell.contains("clauses"))
                check_clause_array(cell["clauses"], "cell " + std::to_string(idx));
            ++idx;
        }
    }
    if (cert.contains("pass") && !cert["pass"].get<bool>())
        bad.push_back("certificate records an overall failure");
    return bad;
}

}  // namespace vmel
