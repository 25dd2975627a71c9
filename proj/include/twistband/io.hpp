#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twistband/geometry.hpp"
#include "twistband/twist.hpp"

namespace twistband {

struct MeshConfig {
    double target_h = 0.02;
    int refinements = 0;
};

struct BandConfig {
    double p_min = 0.0;  // p_min == p_max == 0 selects the default grid
    double p_max = 0.0;
    int n_points = 41;
    int n_bands = 4;
};

struct WaveguideConfig {
    std::vector<double> L_list{10.0, 20.0, 40.0};
    double ds = 0.2;
    double base_h = 0.085;
    int mesh_levels = 3;
    long long dim_cap = 2'000'000;
    int assemble_threshold = 200'000;
    double saturation_tol = 1e-3;
};

struct SolverConfig {
    double tol = 1e-8;
    int max_iter = 600;
    std::uint64_t seed = 0;
};

struct RunConfig {
    CrossSectionSpec cross_section;
    TwistProfile twist;
    MeshConfig mesh;
    BandConfig band;
    WaveguideConfig waveguide;
    SolverConfig solver;
    std::string output_dir = "out";
};

// Desk-scale defaults: unit square, beta0 = 1, cosine bump c = 0.5.
RunConfig default_config();

// Parses and validates; throws std::invalid_argument with the JSON error
// position or the violated rule.
RunConfig config_from_json(const std::string& text);
std::string config_to_json(const RunConfig& cfg);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace twistband
