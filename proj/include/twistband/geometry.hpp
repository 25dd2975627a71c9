#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace twistband {

// Planar cross section swept along the tube axis. Coordinates are
// (t2, t3); the rotation axis passes through the origin.
struct CrossSectionSpec {
    enum class Kind { Rectangle, Ellipse, Polygon };

    Kind kind = Kind::Rectangle;
    double width = 1.0;   // rectangle
    double height = 1.0;  // rectangle
    double semi_axis_a = 1.0;  // ellipse
    double semi_axis_b = 1.0;  // ellipse
    std::vector<Eigen::Vector2d> vertices;  // polygon, counterclockwise

    // Displacement of the cross section's reference point from the axis,
    // applied before the rigid rotation by rotation_offset about the axis.
    Eigen::Vector2d center_offset = Eigen::Vector2d::Zero();
    double rotation_offset = 0.0;

    static CrossSectionSpec rectangle(double w, double h);
    static CrossSectionSpec ellipse(double a, double b);
    static CrossSectionSpec polygon(std::vector<Eigen::Vector2d> verts);

    // Local (pre-offset, pre-rotation) point to axis coordinates.
    Eigen::Vector2d to_axis_frame(const Eigen::Vector2d& local) const;
    Eigen::Vector2d from_axis_frame(const Eigen::Vector2d& t) const;
};

// Analytic area of the region described by the spec.
double area(const CrossSectionSpec& spec);

// Checks all spec invariants; polygons are reoriented counterclockwise.
// Throws std::invalid_argument on degenerate dimensions, self-intersecting
// polygons, or zero area.
CrossSectionSpec validate_spec(CrossSectionSpec spec);

// Conforming P1 triangulation of a cross section.
struct Mesh {
    std::vector<Eigen::Vector2d> nodes;           // (t2, t3)
    std::vector<std::array<int, 3>> triangles;    // positive orientation
    std::vector<std::uint8_t> boundary_mask;      // 1 iff node on boundary
    double h_max = 0.0;                           // longest edge
    std::vector<int> interior_map;                // node -> interior index, -1 on boundary
    int n_interior = 0;

    // Parent nodes from the refinement step that created each node;
    // (i, i) for nodes inherited from the coarse mesh. Empty for meshes
    // built directly by triangulate().
    std::vector<std::array<int, 2>> parents;

    double total_area() const;
    int n_nodes() const { return static_cast<int>(nodes.size()); }
};

// Builds a mesh with h_max <= target_h. Curved boundary nodes lie exactly
// on the ellipse. Throws std::invalid_argument when the target is too
// coarse to produce an interior node.
Mesh triangulate(const CrossSectionSpec& spec, double target_h);

// Uniform red refinement: every triangle splits into four by edge
// midpoints; boundary midpoints are snapped onto the exact boundary for
// curved specs.
Mesh refine(const Mesh& mesh, const CrossSectionSpec& spec);

// sup over mesh nodes of |t|, approximating a = sup_{t in omega} |t|.
double bounding_radius(const Mesh& mesh);

struct TwistProfile;

// Embedding of the straightened tube into R^3 at axial position s.
Eigen::Vector3d map_to_physical(double s, const Eigen::Vector2d& t,
                                const TwistProfile& profile);

// JSON round trip: {"nodes": [[t2,t3],...], "triangles": [[i,j,k],...],
// "boundary": [0/1,...]}.
std::string mesh_to_json(const Mesh& mesh);
Mesh mesh_from_json(const std::string& text);

// Tube surface as Wavefront OBJ: boundary polyline of the mesh swept over
// a uniform s-grid through map_to_physical.
std::string tube_surface_obj(const Mesh& mesh, const TwistProfile& profile,
                             double s_min, double s_max, int n_slices);

}  // namespace twistband
