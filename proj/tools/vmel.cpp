// vmel: batch proof runner for transversal intersections of stable and
// unstable manifolds of perturbed hyperbolic orbits.
//
//   vmel verify-nhim --config cfg.json [--out DIR] ...
//   vmel prove --config cfg.json [--out DIR] [--threads N] ...
//   vmel check-certificate PATH

#include <vmel/pipeline.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <string>

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    int threads = 0;
    int subdivisions = 0;
    int order = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "run configuration file")->required();
    cmd->add_option("--out", f.out_dir, "output directory (overrides the config)");
    cmd->add_option("--threads", f.threads, "worker threads (overrides the config)");
    cmd->add_option("--subdivisions", f.subdivisions,
                    "unstable-coordinate cell count for the rate verification");
    cmd->add_option("--order", f.order, "Taylor order of the integrator");
}

vmel::RunConfig load_with_overrides(const CommonFlags& f) {
    vmel::RunConfig cfg = vmel::load_config(f.config_path);
    if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
    if (f.threads > 0) cfg.threads = f.threads;
    if (f.subdivisions > 0) {
        cfg.subdivisions_unstable = static_cast<std::size_t>(f.subdivisions);
        cfg.subdivisions_angle = std::max<std::size_t>(8, static_cast<std::size_t>(f.subdivisions / 4));
    }
    if (f.order > 0) cfg.order = f.order;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"validated transversal-intersection prover"};
    app.require_subcommand(1);

    CommonFlags nhim_flags, prove_flags;
    std::string cert_path;

    CLI::App* nhim = app.add_subcommand(
        "verify-nhim", "verify rate conditions and the isolating block, report L and M");
    add_common(nhim, nhim_flags);

    CLI::App* prove =
        app.add_subcommand("prove", "full certificate: manifold stage plus all schedule cells");
    add_common(prove, prove_flags);

    CLI::App* check = app.add_subcommand("check-certificate",
                                         "re-validate a stored certificate by comparisons alone");
    check->add_option("path", cert_path, "certificate file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (nhim->parsed()) {
            vmel::RunConfig cfg = load_with_overrides(nhim_flags);
            vmel::Json j = vmel::cmd_verify_nhim(cfg);
            vmel::write_outputs(cfg.out_dir, j, nullptr);
            for (auto it = j["nhim"].begin(); it != j["nhim"].end(); ++it) {
                std::printf("%s: L = %.10g  M = %.10g  %s\n", it.key().c_str(),
                            vmel::parse_hex_double(it.value()["L"].get<std::string>()),
                            vmel::parse_hex_double(it.value()["M"].get<std::string>()),
                            it.value()["pass"].get<bool>() ? "pass" : "FAIL");
            }
            if (!j["pass"].get<bool>()) {
                for (auto it = j["nhim"].begin(); it != j["nhim"].end(); ++it)
                    for (const auto& c : it.value()["clauses"])
                        if (!c["holds"].get<bool>())
                            std::printf("failed clause [%s]: %s\n", it.key().c_str(),
                                        c["name"].get<std::string>().c_str());
                return 1;
            }
            std::printf("certificate fragment written to %s/certificate.json\n", cfg.out_dir.c_str());
            return 0;
        }
        if (prove->parsed()) {
            vmel::RunConfig cfg = load_with_overrides(prove_flags);
            vmel::ProveResult res = vmel::cmd_prove(cfg);
            vmel::write_outputs(cfg.out_dir, res.certificate, &res.rows);
            std::size_t npass = 0, nfail = 0;
            for (const auto& cell : res.certificate["cells"])
                (cell["pass"].get<bool>() ? npass : nfail)++;
            std::printf("cells: %zu pass, %zu fail; coverage %s; overall %s\n", npass, nfail,
                        res.certificate["coverage"]["complete"].get<bool>() ? "complete" : "INCOMPLETE",
                        res.pass ? "pass" : "FAIL");
            std::printf("certificate and plot data written to %s\n", cfg.out_dir.c_str());
            if (!res.pass) {
                for (const auto& cell : res.certificate["cells"])
                    if (!cell["pass"].get<bool>()) {
                        std::string why = cell.contains("failure")
                                              ? "  (" + cell["failure"].get<std::string>() + ")"
                                              : "";
                        std::printf("failed cell eps = [%s, %s]%s\n",
                                    cell["eps"][0].get<std::string>().c_str(),
                                    cell["eps"][1].get<std::string>().c_str(), why.c_str());
                        break;
                    }
                return 1;
            }
            return 0;
        }
        if (check->parsed()) {
            vmel::Json cert;
            try {
                cert = vmel::load_json_file(cert_path);
            } catch (const std::exception& e) {
                std::fprintf(stderr, "cannot load certificate: %s\n", e.what());
                return 2;
            }
            if (!cert.contains("format") || cert["format"].get<std::string>() != "vmel-certificate-1") {
                std::fprintf(stderr, "schema error: unknown certificate format\n");
                return 2;
            }
            std::vector<std::string> bad;
            try {
                bad = vmel::recheck_certificate(cert);
            } catch (const std::exception& e) {
                std::fprintf(stderr, "schema error: %s\n", e.what());
                return 2;
            }
            if (bad.empty()) {
                std::printf("certificate verifies\n");
                return 0;
            }
            for (const auto& b : bad) std::printf("%s\n", b.c_str());
            return 1;
        }
    } catch (const vmel::error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
