#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>

#include "twistband/band.hpp"
#include "twistband/certifier.hpp"
#include "twistband/fiber.hpp"
#include "twistband/geometry.hpp"
#include "twistband/io.hpp"
#include "twistband/twist.hpp"
#include "twistband/waveguide.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace twistband;

namespace {

constexpr const char* kVersion = "0.1.0";

class StageClock {
  public:
    explicit StageClock(std::map<std::string, double>& out) : out_(out) {}
    template <class F>
    auto run(const std::string& name, F&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        auto result = fn();
        const auto t1 = std::chrono::steady_clock::now();
        out_[name] = std::chrono::duration<double>(t1 - t0).count();
        return result;
    }

  private:
    std::map<std::string, double>& out_;
};

Mesh build_mesh(const RunConfig& cfg) {
    Mesh mesh = triangulate(cfg.cross_section, cfg.mesh.target_h);
    for (int i = 0; i < cfg.mesh.refinements; ++i)
        mesh = refine(mesh, cfg.cross_section);
    return mesh;
}

std::vector<double> band_grid(const RunConfig& cfg, const Mesh& mesh) {
    if (cfg.band.p_min == 0.0 && cfg.band.p_max == 0.0)
        return default_p_grid(cfg.twist.beta0, bounding_radius(mesh),
                              cfg.band.n_points);
    std::vector<double> grid(cfg.band.n_points);
    const int half = cfg.band.n_points / 2;
    for (int j = 0; j < cfg.band.n_points; ++j)
        grid[j] = cfg.band.p_max * static_cast<double>(j - half) / half;
    grid[half] = 0.0;
    return grid;
}

struct Context {
    RunConfig cfg;
    std::string out_dir;
    int threads = 1;
    std::map<std::string, double> stage_seconds;
    json extra;  // per-command manifest additions
};

void write_manifest(const Context& ctx, const std::string& command) {
    json m;
    m["version"] = kVersion;
    m["command"] = command;
    std::time_t now = std::time(nullptr);
    char ts[32];
    std::strftime(ts, sizeof(ts), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m["timestamp_utc"] = ts;
    m["threads"] = ctx.threads;
    m["config"] = json::parse(config_to_json(ctx.cfg));
    m["stage_seconds"] = ctx.stage_seconds;
    m["tolerances"] = {{"solver_tol", ctx.cfg.solver.tol},
                       {"saturation_tol", ctx.cfg.waveguide.saturation_tol}};
    for (auto& [k, v] : ctx.extra.items()) m[k] = v;
    write_text_file(ctx.out_dir + "/manifest.json", m.dump(2) + "\n");
}

int run_mesh(Context& ctx) {
    StageClock clock(ctx.stage_seconds);
    Mesh mesh = clock.run("mesh", [&] { return build_mesh(ctx.cfg); });
    write_text_file(ctx.out_dir + "/mesh.json", mesh_to_json(mesh) + "\n");
    const double span = ctx.cfg.twist.s0 + 2.0;
    write_text_file(ctx.out_dir + "/tube.obj",
                    tube_surface_obj(mesh, ctx.cfg.twist, -span, span, 64));
    ctx.extra["mesh_quality"] = {
        {"h_max", mesh.h_max},
        {"n_nodes", mesh.n_nodes()},
        {"n_interior", mesh.n_interior},
        {"n_triangles", mesh.triangles.size()},
        {"area", mesh.total_area()},
        {"area_exact", area(ctx.cfg.cross_section)}};
    return 0;
}

int run_bands(Context& ctx) {
    StageClock clock(ctx.stage_seconds);
    Mesh mesh = clock.run("mesh", [&] { return build_mesh(ctx.cfg); });
    auto mats = clock.run("assembly", [&] { return assemble_matrices(mesh); });
    auto gs = clock.run("ground_state", [&] {
        return ground_state(mats, ctx.cfg.twist.beta0, ctx.cfg.solver.tol);
    });
    auto band = clock.run("band_sweep", [&] {
        return compute_bands(mats, ctx.cfg.twist.beta0, band_grid(ctx.cfg, mesh),
                             ctx.cfg.band.n_bands, ctx.cfg.solver.tol);
    });
    auto diag = band_diagnostics(band, bounding_radius(mesh));
    write_text_file(ctx.out_dir + "/bands.csv", bands_to_csv(band));
    write_text_file(ctx.out_dir + "/ground_state.csv",
                    ground_state_to_csv(gs, mesh));
    json d = json::parse(diag.to_json());
    d["ground_state"] = {{"E", gs.E},
                         {"angular_energy", gs.angular_energy},
                         {"positivity_ok", gs.positivity_ok},
                         {"positivity_note", positivity_report(gs, mesh)},
                         {"residual", gs.residual},
                         {"solver_tol", ctx.cfg.solver.tol}};
    write_text_file(ctx.out_dir + "/diagnostics.json", d.dump(2) + "\n");
    if (!band.converged.empty())
        for (auto c : band.converged)
            if (!c) return 3;
    return 0;
}

int run_certify(Context& ctx) {
    StageClock clock(ctx.stage_seconds);
    Mesh mesh = clock.run("mesh", [&] { return build_mesh(ctx.cfg); });
    auto mats = assemble_matrices(mesh);
    auto gs = clock.run("ground_state", [&] {
        return ground_state(mats, ctx.cfg.twist.beta0, ctx.cfg.solver.tol);
    });
    // Resolution floor for the angular energy from one refinement step.
    const double floor = clock.run("refined_ground_state", [&] {
        Mesh fine = refine(mesh, ctx.cfg.cross_section);
        auto gsf = ground_state(assemble_matrices(fine), ctx.cfg.twist.beta0,
                                ctx.cfg.solver.tol);
        return std::abs(gsf.angular_energy - gs.angular_energy);
    });
    auto report = twist_deficit(ctx.cfg.twist);
    auto cert = clock.run("certify",
                          [&] { return certify(gs, ctx.cfg.twist, floor); });
    json c = json::parse(cert.to_json());
    c["deficit_report"] = {{"deficit", report.deficit},
                           {"deficit_closed_form", report.deficit_closed_form},
                           {"tolerance", report.tolerance},
                           {"reversion_margin", report.reversion_margin},
                           {"classification", to_string(report.classification)}};
    c["angular_energy_floor"] = floor;
    write_text_file(ctx.out_dir + "/certificate.json", c.dump(2) + "\n");
    ctx.extra["sign_note"] = cert.sign_note;
    return 0;
}

int run_bound(Context& ctx) {
    StageClock clock(ctx.stage_seconds);
    StudyConfig scfg;
    scfg.base_h = ctx.cfg.waveguide.base_h;
    scfg.n_mesh_levels = ctx.cfg.waveguide.mesh_levels;
    scfg.L_list = ctx.cfg.waveguide.L_list;
    scfg.ds = ctx.cfg.waveguide.ds;
    scfg.tol = ctx.cfg.solver.tol;
    scfg.saturation_tol = ctx.cfg.waveguide.saturation_tol;
    scfg.dim_cap = ctx.cfg.waveguide.dim_cap;
    scfg.assemble_threshold = ctx.cfg.waveguide.assemble_threshold;
    auto report = clock.run("convergence_study", [&] {
        return convergence_study(ctx.cfg.cross_section, ctx.cfg.twist, scfg);
    });
    write_text_file(ctx.out_dir + "/bound_report.json",
                    report.to_json() + "\n");
    return report.inconclusive ? 4 : 0;
}

int dispatch(const std::string& command, Context& ctx) {
    int rc = 0;
    if (command == "mesh") rc = run_mesh(ctx);
    else if (command == "bands") rc = run_bands(ctx);
    else if (command == "certify") rc = run_certify(ctx);
    else if (command == "bound") rc = run_bound(ctx);
    else if (command == "all") {
        rc = run_mesh(ctx);
        if (rc == 0) rc = run_bands(ctx);
        if (rc == 0) rc = run_certify(ctx);
        if (rc == 0) rc = run_bound(ctx);
    }
    write_manifest(ctx, command);
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"periodically twisted waveguide spectra"};
    app.require_subcommand(1);

    std::string config_path, out_override;
    int threads = 0;
    std::int64_t seed = -1;

    std::vector<CLI::App*> subs;
    for (const char* name : {"mesh", "bands", "certify", "bound", "all"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON configuration file")
            ->required();
        sub->add_option("--out", out_override, "output directory override");
        sub->add_option("--threads", threads, "worker thread count");
        sub->add_option("--seed", seed, "RNG seed override");
        subs.push_back(sub);
    }
    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    Context ctx;
    try {
        ctx.cfg = config_from_json(read_text_file(config_path));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    if (seed >= 0) ctx.cfg.solver.seed = static_cast<std::uint64_t>(seed);
    ctx.threads = threads > 0 ? threads : 1;
    Eigen::setNbThreads(ctx.threads);
    ctx.out_dir = out_override.empty() ? ctx.cfg.output_dir : out_override;

    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) {
        std::cerr << "error: cannot create output dir " << ctx.out_dir << "\n";
        return 2;
    }
    try {  // probe writability up front
        write_text_file(ctx.out_dir + "/manifest.json", "{}\n");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        const int rc = dispatch(command, ctx);
        if (rc != 0)
            std::cerr << "finished with status " << rc << "\n";
        return rc;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::length_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    }
}
