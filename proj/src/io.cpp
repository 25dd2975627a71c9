#include "twistband/io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace twistband {

using nlohmann::json;

RunConfig default_config() {
    RunConfig cfg;
    cfg.cross_section = validate_spec(CrossSectionSpec::rectangle(1.0, 1.0));
    cfg.twist = make_profile(TwistProfile::Kind::CosineBump, 1.0, 1.0, 0.5);
    return cfg;
}

namespace {

json spec_to_json(const CrossSectionSpec& spec) {
    json j;
    switch (spec.kind) {
        case CrossSectionSpec::Kind::Rectangle:
            j["kind"] = "rectangle";
            j["width"] = spec.width;
            j["height"] = spec.height;
            break;
        case CrossSectionSpec::Kind::Ellipse:
            j["kind"] = "ellipse";
            j["semi_axis_a"] = spec.semi_axis_a;
            j["semi_axis_b"] = spec.semi_axis_b;
            break;
        case CrossSectionSpec::Kind::Polygon: {
            j["kind"] = "polygon";
            auto verts = json::array();
            for (const auto& v : spec.vertices)
                verts.push_back({v.x(), v.y()});
            j["vertices"] = verts;
            break;
        }
    }
    j["center_offset"] = {spec.center_offset.x(), spec.center_offset.y()};
    j["rotation_offset"] = spec.rotation_offset;
    return j;
}

CrossSectionSpec spec_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    CrossSectionSpec spec;
    if (kind == "rectangle") {
        spec = CrossSectionSpec::rectangle(j.at("width").get<double>(),
                                           j.at("height").get<double>());
    } else if (kind == "ellipse") {
        spec = CrossSectionSpec::ellipse(j.at("semi_axis_a").get<double>(),
                                         j.at("semi_axis_b").get<double>());
    } else if (kind == "polygon") {
        std::vector<Eigen::Vector2d> verts;
        for (const auto& v : j.at("vertices"))
            verts.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
        spec = CrossSectionSpec::polygon(std::move(verts));
    } else {
        throw std::invalid_argument("config: unknown cross_section kind '" +
                                    kind + "'");
    }
    if (j.contains("center_offset"))
        spec.center_offset = Eigen::Vector2d(
            j["center_offset"].at(0).get<double>(),
            j["center_offset"].at(1).get<double>());
    if (j.contains("rotation_offset"))
        spec.rotation_offset = j["rotation_offset"].get<double>();
    return validate_spec(spec);
}

}  // namespace

std::string config_to_json(const RunConfig& cfg) {
    json j;
    j["cross_section"] = spec_to_json(cfg.cross_section);
    j["twist"] = {{"kind", to_string(cfg.twist.kind)},
                  {"beta0", cfg.twist.beta0},
                  {"s0", cfg.twist.s0},
                  {"c1", cfg.twist.c1},
                  {"c2", cfg.twist.c2}};
    j["mesh"] = {{"target_h", cfg.mesh.target_h},
                 {"refinements", cfg.mesh.refinements}};
    j["band"] = {{"p_min", cfg.band.p_min},
                 {"p_max", cfg.band.p_max},
                 {"n_points", cfg.band.n_points},
                 {"n_bands", cfg.band.n_bands}};
    j["waveguide"] = {{"L_list", cfg.waveguide.L_list},
                      {"ds", cfg.waveguide.ds},
                      {"base_h", cfg.waveguide.base_h},
                      {"mesh_levels", cfg.waveguide.mesh_levels},
                      {"dim_cap", cfg.waveguide.dim_cap},
                      {"assemble_threshold", cfg.waveguide.assemble_threshold},
                      {"saturation_tol", cfg.waveguide.saturation_tol}};
    j["solver"] = {{"tol", cfg.solver.tol},
                   {"max_iter", cfg.solver.max_iter},
                   {"seed", cfg.solver.seed}};
    j["output_dir"] = cfg.output_dir;
    return j.dump(2);
}

RunConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    RunConfig cfg = default_config();
    try {
        if (j.contains("cross_section"))
            cfg.cross_section = spec_from_json(j["cross_section"]);
        if (j.contains("twist")) {
            const auto& t = j["twist"];
            cfg.twist = make_profile(
                profile_kind_from_string(
                    t.value("kind", std::string("cosine_bump"))),
                t.value("beta0", 1.0), t.value("s0", 1.0), t.value("c1", 0.5),
                t.value("c2", 0.0));
        }
        if (j.contains("mesh")) {
            cfg.mesh.target_h = j["mesh"].value("target_h", cfg.mesh.target_h);
            cfg.mesh.refinements =
                j["mesh"].value("refinements", cfg.mesh.refinements);
        }
        if (j.contains("band")) {
            const auto& b = j["band"];
            cfg.band.p_min = b.value("p_min", cfg.band.p_min);
            cfg.band.p_max = b.value("p_max", cfg.band.p_max);
            cfg.band.n_points = b.value("n_points", cfg.band.n_points);
            cfg.band.n_bands = b.value("n_bands", cfg.band.n_bands);
        }
        if (j.contains("waveguide")) {
            const auto& w = j["waveguide"];
            cfg.waveguide.L_list = w.value("L_list", cfg.waveguide.L_list);
            cfg.waveguide.ds = w.value("ds", cfg.waveguide.ds);
            cfg.waveguide.base_h = w.value("base_h", cfg.waveguide.base_h);
            cfg.waveguide.mesh_levels =
                w.value("mesh_levels", cfg.waveguide.mesh_levels);
            cfg.waveguide.dim_cap = w.value("dim_cap", cfg.waveguide.dim_cap);
            cfg.waveguide.assemble_threshold =
                w.value("assemble_threshold", cfg.waveguide.assemble_threshold);
            cfg.waveguide.saturation_tol =
                w.value("saturation_tol", cfg.waveguide.saturation_tol);
        }
        if (j.contains("solver")) {
            const auto& s = j["solver"];
            cfg.solver.tol = s.value("tol", cfg.solver.tol);
            cfg.solver.max_iter = s.value("max_iter", cfg.solver.max_iter);
            cfg.solver.seed = s.value("seed", cfg.solver.seed);
        }
        if (j.contains("output_dir"))
            cfg.output_dir = j["output_dir"].get<std::string>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }

    if (!(cfg.mesh.target_h > 0.0))
        throw std::invalid_argument("config: mesh.target_h must be > 0");
    if (cfg.mesh.refinements < 0)
        throw std::invalid_argument("config: mesh.refinements must be >= 0");
    if (cfg.band.n_points < 3 || cfg.band.n_points % 2 == 0)
        throw std::invalid_argument(
            "config: band.n_points must be odd and >= 3");
    if (cfg.band.n_bands < 1)
        throw std::invalid_argument("config: band.n_bands must be >= 1");
    if (!(cfg.band.p_min <= 0.0 && cfg.band.p_max >= 0.0) ||
        cfg.band.p_min != -cfg.band.p_max)
        throw std::invalid_argument(
            "config: band grid must be symmetric (p_min = -p_max)");
    if (cfg.waveguide.L_list.size() < 2)
        throw std::invalid_argument("config: waveguide.L_list needs >= 2 entries");
    for (std::size_t i = 0; i + 1 < cfg.waveguide.L_list.size(); ++i)
        if (!(cfg.waveguide.L_list[i] < cfg.waveguide.L_list[i + 1]))
            throw std::invalid_argument("config: L_list must be ascending");
    if (!(cfg.waveguide.L_list.front() > cfg.twist.s0))
        throw std::invalid_argument(
            "config: smallest L must exceed the twist support s0");
    if (!(cfg.waveguide.ds > 0.0) || cfg.waveguide.mesh_levels < 2)
        throw std::invalid_argument("config: invalid waveguide discretization");
    if (!(cfg.solver.tol > 0.0) || cfg.solver.max_iter < 1)
        throw std::invalid_argument("config: invalid solver settings");
    return cfg;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace twistband
