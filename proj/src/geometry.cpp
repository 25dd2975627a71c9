#include "twistband/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>

#include "twistband/twist.hpp"

namespace twistband {

namespace {

double signed_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                   const Eigen::Vector2d& c) {
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) -
                  (c.x() - a.x()) * (b.y() - a.y()));
}

double polygon_signed_area(const std::vector<Eigen::Vector2d>& v) {
    double s = 0.0;
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = v[i];
        const auto& q = v[(i + 1) % n];
        s += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * s;
}

// Proper or improper intersection of open segments (shared polygon
// endpoints are excluded by the caller).
bool segments_intersect(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                        const Eigen::Vector2d& q1, const Eigen::Vector2d& q2) {
    const auto orient = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                           const Eigen::Vector2d& c) {
        const double v = signed_area(a, b, c);
        const double scale = (b - a).norm() * (c - a).norm();
        if (std::abs(v) <= 1e-14 * scale) return 0;
        return v > 0 ? 1 : -1;
    };
    const int o1 = orient(p1, p2, q1);
    const int o2 = orient(p1, p2, q2);
    const int o3 = orient(q1, q2, p1);
    const int o4 = orient(q1, q2, p2);
    if (o1 != o2 && o3 != o4) return true;
    const auto on_segment = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                               const Eigen::Vector2d& c) {
        return std::min(a.x(), b.x()) - 1e-14 <= c.x() &&
               c.x() <= std::max(a.x(), b.x()) + 1e-14 &&
               std::min(a.y(), b.y()) - 1e-14 <= c.y() &&
               c.y() <= std::max(a.y(), b.y()) + 1e-14;
    };
    if (o1 == 0 && on_segment(p1, p2, q1)) return true;
    if (o2 == 0 && on_segment(p1, p2, q2)) return true;
    if (o3 == 0 && on_segment(q1, q2, p1)) return true;
    if (o4 == 0 && on_segment(q1, q2, p2)) return true;
    return false;
}

Eigen::Matrix2d rotation(double angle) {
    Eigen::Matrix2d r;
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return r;
}

void finalize_mesh(Mesh& mesh) {
    // Enforce positive orientation.
    for (auto& tri : mesh.triangles) {
        if (signed_area(mesh.nodes[tri[0]], mesh.nodes[tri[1]],
                        mesh.nodes[tri[2]]) < 0.0)
            std::swap(tri[1], tri[2]);
    }
    mesh.h_max = 0.0;
    for (const auto& tri : mesh.triangles)
        for (int e = 0; e < 3; ++e)
            mesh.h_max = std::max(
                mesh.h_max,
                (mesh.nodes[tri[e]] - mesh.nodes[tri[(e + 1) % 3]]).norm());
    mesh.interior_map.assign(mesh.nodes.size(), -1);
    mesh.n_interior = 0;
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
        if (!mesh.boundary_mask[i]) mesh.interior_map[i] = mesh.n_interior++;
}

Mesh triangulate_rectangle(const CrossSectionSpec& spec, double target_h) {
    const double w = spec.width, h = spec.height;
    const int n2 = std::max<int>(1, static_cast<int>(std::ceil(w * std::sqrt(2.0) / target_h)));
    const int n3 = std::max<int>(1, static_cast<int>(std::ceil(h * std::sqrt(2.0) / target_h)));
    Mesh mesh;
    const auto id = [n3](int i, int j) { return i * (n3 + 1) + j; };
    for (int i = 0; i <= n2; ++i)
        for (int j = 0; j <= n3; ++j) {
            Eigen::Vector2d local(-0.5 * w + w * i / n2, -0.5 * h + h * j / n3);
            mesh.nodes.push_back(spec.to_axis_frame(local));
            mesh.boundary_mask.push_back(i == 0 || i == n2 || j == 0 || j == n3);
        }
    for (int i = 0; i < n2; ++i)
        for (int j = 0; j < n3; ++j) {
            mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    return mesh;
}

Mesh build_ellipse_fan(const CrossSectionSpec& spec, int n_rings) {
    const double a = spec.semi_axis_a, b = spec.semi_axis_b;
    Mesh mesh;
    const auto ring_start = [](int i) { return i == 0 ? 0 : 1 + 3 * i * (i - 1); };
    const auto ring_size = [](int i) { return i == 0 ? 1 : 6 * i; };
    for (int i = 0; i <= n_rings; ++i) {
        const double r = static_cast<double>(i) / n_rings;
        for (int j = 0; j < ring_size(i); ++j) {
            const double phi = 2.0 * M_PI * j / ring_size(i);
            Eigen::Vector2d local(a * r * std::cos(phi), b * r * std::sin(phi));
            mesh.nodes.push_back(spec.to_axis_frame(local));
            mesh.boundary_mask.push_back(i == n_rings);
        }
    }
    for (int i = 1; i <= n_rings; ++i) {
        const int os = ring_start(i), osz = ring_size(i);
        const int is = ring_start(i - 1), isz = ring_size(i - 1);
        for (int sector = 0; sector < 6; ++sector) {
            const auto outer = [&](int k) { return os + (sector * i + k) % osz; };
            const auto inner = [&](int k) {
                return i == 1 ? 0 : is + (sector * (i - 1) + k) % isz;
            };
            for (int k = 0; k < i; ++k)
                mesh.triangles.push_back({outer(k), outer(k + 1), inner(k)});
            for (int k = 0; k + 1 < i; ++k)
                mesh.triangles.push_back({inner(k), outer(k + 1), inner(k + 1)});
        }
    }
    return mesh;
}

Mesh triangulate_ellipse(const CrossSectionSpec& spec, double target_h) {
    int n = std::max<int>(
        1, static_cast<int>(std::ceil(
               1.1 * std::max(spec.semi_axis_a, spec.semi_axis_b) / target_h)));
    for (int attempt = 0; attempt < 64; ++attempt) {
        Mesh mesh = build_ellipse_fan(spec, n);
        finalize_mesh(mesh);
        if (mesh.h_max <= target_h) return mesh;
        n = std::max(n + 1, static_cast<int>(std::ceil(n * mesh.h_max / target_h)));
    }
    throw std::runtime_error("triangulate: ellipse ring count did not converge");
}

std::vector<std::array<int, 3>> ear_clip(const std::vector<Eigen::Vector2d>& pts) {
    std::vector<int> poly(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) poly[i] = static_cast<int>(i);
    std::vector<std::array<int, 3>> tris;
    // On-edge points count as inside so that reflex vertices sitting on an
    // ear edge block the clip.
    const auto inside = [&](int ia, int ib, int ic, int ip) {
        const auto &a = pts[ia], &b = pts[ib], &c = pts[ic], &p = pts[ip];
        const double scale = (b - a).norm() + (c - a).norm() + (p - a).norm();
        const double eps = 1e-13 * scale * scale;
        const double s1 = signed_area(a, b, p);
        const double s2 = signed_area(b, c, p);
        const double s3 = signed_area(c, a, p);
        return s1 > -eps && s2 > -eps && s3 > -eps;
    };
    int guard = 0;
    while (poly.size() > 3) {
        if (++guard > 100000)
            throw std::invalid_argument("polygon triangulation failed (non-simple?)");
        bool clipped = false;
        const int m = static_cast<int>(poly.size());
        for (int i = 0; i < m; ++i) {
            const int ia = poly[(i + m - 1) % m], ib = poly[i], ic = poly[(i + 1) % m];
            if (signed_area(pts[ia], pts[ib], pts[ic]) <= 0.0) continue;
            bool ear = true;
            for (int j : poly)
                if (j != ia && j != ib && j != ic && inside(ia, ib, ic, j)) {
                    ear = false;
                    break;
                }
            if (!ear) continue;
            tris.push_back({ia, ib, ic});
            poly.erase(poly.begin() + i);
            clipped = true;
            break;
        }
        if (!clipped)
            throw std::invalid_argument("polygon triangulation failed (no ear found)");
    }
    tris.push_back({poly[0], poly[1], poly[2]});
    return tris;
}

Mesh triangulate_polygon(const CrossSectionSpec& spec, double target_h) {
    Mesh mesh;
    for (const auto& v : spec.vertices) {
        mesh.nodes.push_back(spec.to_axis_frame(v));
        mesh.boundary_mask.push_back(1);
    }
    mesh.triangles = ear_clip(mesh.nodes);
    finalize_mesh(mesh);
    while (mesh.h_max > target_h) mesh = refine(mesh, spec);
    return mesh;
}

}  // namespace

CrossSectionSpec CrossSectionSpec::rectangle(double w, double h) {
    CrossSectionSpec s;
    s.kind = Kind::Rectangle;
    s.width = w;
    s.height = h;
    return s;
}

CrossSectionSpec CrossSectionSpec::ellipse(double a, double b) {
    CrossSectionSpec s;
    s.kind = Kind::Ellipse;
    s.semi_axis_a = a;
    s.semi_axis_b = b;
    return s;
}

CrossSectionSpec CrossSectionSpec::polygon(std::vector<Eigen::Vector2d> verts) {
    CrossSectionSpec s;
    s.kind = Kind::Polygon;
    s.vertices = std::move(verts);
    return s;
}

Eigen::Vector2d CrossSectionSpec::to_axis_frame(const Eigen::Vector2d& local) const {
    return rotation(rotation_offset) * (local + center_offset);
}

Eigen::Vector2d CrossSectionSpec::from_axis_frame(const Eigen::Vector2d& t) const {
    return rotation(-rotation_offset) * t - center_offset;
}

double area(const CrossSectionSpec& spec) {
    switch (spec.kind) {
        case CrossSectionSpec::Kind::Rectangle:
            return spec.width * spec.height;
        case CrossSectionSpec::Kind::Ellipse:
            return M_PI * spec.semi_axis_a * spec.semi_axis_b;
        case CrossSectionSpec::Kind::Polygon:
            return std::abs(polygon_signed_area(spec.vertices));
    }
    return 0.0;
}

CrossSectionSpec validate_spec(CrossSectionSpec spec) {
    if (!spec.center_offset.allFinite() || !std::isfinite(spec.rotation_offset))
        throw std::invalid_argument("non-finite placement parameters");
    switch (spec.kind) {
        case CrossSectionSpec::Kind::Rectangle:
            if (!(spec.width > 0.0) || !(spec.height > 0.0))
                throw std::invalid_argument("rectangle dimensions must be positive");
            break;
        case CrossSectionSpec::Kind::Ellipse:
            if (!(spec.semi_axis_a > 0.0) || !(spec.semi_axis_b > 0.0))
                throw std::invalid_argument("ellipse semi-axes must be positive");
            break;
        case CrossSectionSpec::Kind::Polygon: {
            auto& v = spec.vertices;
            if (v.size() < 3) throw std::invalid_argument("polygon needs >= 3 vertices");
            for (const auto& p : v)
                if (!p.allFinite())
                    throw std::invalid_argument("non-finite polygon vertex");
            const double sa = polygon_signed_area(v);
            double scale = 0.0;
            for (const auto& p : v) scale = std::max(scale, p.norm());
            if (std::abs(sa) <= 1e-14 * scale * scale)
                throw std::invalid_argument("polygon has zero area");
            if (sa < 0.0) std::reverse(v.begin(), v.end());
            const int n = static_cast<int>(v.size());
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    // Skip adjacent edges (they share an endpoint).
                    if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
                    if (segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]))
                        throw std::invalid_argument("polygon self-intersection");
                }
            break;
        }
    }
    return spec;
}

double Mesh::total_area() const {
    double s = 0.0;
    for (const auto& tri : triangles)
        s += signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
    return s;
}

Mesh triangulate(const CrossSectionSpec& spec, double target_h) {
    if (!(target_h > 0.0)) throw std::invalid_argument("target_h must be positive");
    Mesh mesh;
    switch (spec.kind) {
        case CrossSectionSpec::Kind::Rectangle:
            mesh = triangulate_rectangle(spec, target_h);
            break;
        case CrossSectionSpec::Kind::Ellipse:
            mesh = triangulate_ellipse(spec, target_h);
            break;
        case CrossSectionSpec::Kind::Polygon:
            mesh = triangulate_polygon(spec, target_h);
            break;
    }
    finalize_mesh(mesh);
    if (mesh.n_interior < 1)
        throw std::invalid_argument("mesh too coarse: no interior node at this target_h");
    return mesh;
}

Mesh refine(const Mesh& mesh, const CrossSectionSpec& spec) {
    Mesh out;
    out.nodes = mesh.nodes;
    out.boundary_mask = mesh.boundary_mask;
    out.parents.resize(mesh.nodes.size());
    for (int i = 0; i < mesh.n_nodes(); ++i) out.parents[i] = {i, i};

    // An edge lies on the boundary iff it belongs to exactly one triangle.
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& tri : mesh.triangles)
        for (int e = 0; e < 3; ++e) {
            const int a = tri[e], b = tri[(e + 1) % 3];
            ++edge_count[{std::min(a, b), std::max(a, b)}];
        }

    std::map<std::pair<int, int>, int> midpoint;
    const auto mid_id = [&](int a, int b) {
        const auto key = std::make_pair(std::min(a, b), std::max(a, b));
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        Eigen::Vector2d p = 0.5 * (mesh.nodes[a] + mesh.nodes[b]);
        const bool on_boundary = edge_count.at(key) == 1;
        if (on_boundary && spec.kind == CrossSectionSpec::Kind::Ellipse) {
            const Eigen::Vector2d local = spec.from_axis_frame(p);
            const double phi =
                std::atan2(local.y() / spec.semi_axis_b, local.x() / spec.semi_axis_a);
            p = spec.to_axis_frame(Eigen::Vector2d(spec.semi_axis_a * std::cos(phi),
                                                   spec.semi_axis_b * std::sin(phi)));
        }
        const int id = static_cast<int>(out.nodes.size());
        out.nodes.push_back(p);
        out.boundary_mask.push_back(on_boundary ? 1 : 0);
        out.parents.push_back({std::min(a, b), std::max(a, b)});
        midpoint[key] = id;
        return id;
    };

    for (const auto& tri : mesh.triangles) {
        const int v0 = tri[0], v1 = tri[1], v2 = tri[2];
        const int m01 = mid_id(v0, v1), m12 = mid_id(v1, v2), m20 = mid_id(v2, v0);
        out.triangles.push_back({v0, m01, m20});
        out.triangles.push_back({v1, m12, m01});
        out.triangles.push_back({v2, m20, m12});
        out.triangles.push_back({m01, m12, m20});
    }
    finalize_mesh(out);
    return out;
}

double bounding_radius(const Mesh& mesh) {
    double r = 0.0;
    for (const auto& p : mesh.nodes) r = std::max(r, p.norm());
    return r;
}

Eigen::Vector3d map_to_physical(double s, const Eigen::Vector2d& t,
                                const TwistProfile& profile) {
    const double th = profile.theta(s);
    const double c = std::cos(th), sn = std::sin(th);
    return {s, t.x() * c + t.y() * sn, t.y() * c - t.x() * sn};
}

std::string mesh_to_json(const Mesh& mesh) {
    nlohmann::json j;
    auto& nodes = j["nodes"] = nlohmann::json::array();
    for (const auto& p : mesh.nodes) nodes.push_back({p.x(), p.y()});
    auto& tris = j["triangles"] = nlohmann::json::array();
    for (const auto& t : mesh.triangles) tris.push_back({t[0], t[1], t[2]});
    auto& bnd = j["boundary"] = nlohmann::json::array();
    for (auto b : mesh.boundary_mask) bnd.push_back(static_cast<int>(b));
    return j.dump();
}

Mesh mesh_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    Mesh mesh;
    for (const auto& p : j.at("nodes"))
        mesh.nodes.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    for (const auto& t : j.at("triangles"))
        mesh.triangles.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
    for (const auto& b : j.at("boundary"))
        mesh.boundary_mask.push_back(b.get<int>() != 0);
    if (mesh.boundary_mask.size() != mesh.nodes.size())
        throw std::invalid_argument("mesh JSON: boundary size mismatch");
    finalize_mesh(mesh);
    return mesh;
}

std::string tube_surface_obj(const Mesh& mesh, const TwistProfile& profile,
                             double s_min, double s_max, int n_slices) {
    // Walk the boundary edges into a closed polyline.
    std::map<int, std::vector<int>> adjacency;
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& tri : mesh.triangles)
        for (int e = 0; e < 3; ++e) {
            const int a = tri[e], b = tri[(e + 1) % 3];
            ++edge_count[{std::min(a, b), std::max(a, b)}];
        }
    for (const auto& [edge, count] : edge_count)
        if (count == 1) {
            adjacency[edge.first].push_back(edge.second);
            adjacency[edge.second].push_back(edge.first);
        }
    if (adjacency.empty()) throw std::invalid_argument("mesh has no boundary");
    std::vector<int> loop;
    std::set<int> seen;
    int current = adjacency.begin()->first;
    int previous = -1;
    while (seen.insert(current).second) {
        loop.push_back(current);
        const auto& nb = adjacency.at(current);
        const int next = (nb[0] != previous) ? nb[0] : nb[1];
        previous = current;
        current = next;
    }

    std::ostringstream os;
    os << "# twisted tube surface\n";
    const int ring = static_cast<int>(loop.size());
    for (int k = 0; k < n_slices; ++k) {
        const double s = s_min + (s_max - s_min) * k / (n_slices - 1);
        for (int v : loop) {
            const Eigen::Vector3d p = map_to_physical(s, mesh.nodes[v], profile);
            os << "v " << p.x() << " " << p.y() << " " << p.z() << "\n";
        }
    }
    for (int k = 0; k + 1 < n_slices; ++k)
        for (int i = 0; i < ring; ++i) {
            const int a = k * ring + i + 1;
            const int b = k * ring + (i + 1) % ring + 1;
            const int c = (k + 1) * ring + (i + 1) % ring + 1;
            const int d = (k + 1) * ring + i + 1;
            os << "f " << a << " " << b << " " << c << "\n";
            os << "f " << a << " " << c << " " << d << "\n";
        }
    return os.str();
}

}  // namespace twistband
