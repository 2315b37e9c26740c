#include "fbdp/mesh.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace fbdp {

namespace {

long long pair_key(int i, int j, int v_count) {
    return static_cast<long long>(i) * v_count + j;
}

double shoelace_area(const MatX& x, const std::array<int, 3>& t) {
    const Vec2 u = x.row(t[1]) - x.row(t[0]);
    const Vec2 w = x.row(t[2]) - x.row(t[0]);
    return 0.5 * (u.x() * w.y() - u.y() * w.x());
}

// Fill ref_areas from the layout and vertex_mass by the 1/3 lumping rule.
void derive_volume_data(Mesh& m) {
    const MatX& x = *m.layout;
    m.ref_areas.resize(m.triangle_count());
    m.vertex_mass = VecX::Zero(m.vertices);
    for (int t = 0; t < m.triangle_count(); ++t) {
        const double a = shoelace_area(x, m.triangles[t]);
        m.ref_areas[t] = a;
        for (int corner : m.triangles[t])
            m.vertex_mass[corner] += a / 3.0;
    }
}

} // namespace

double triangle_area(const Mesh& mesh, const MatX& x, int t) {
    return shoelace_area(x, mesh.triangles[t]);
}

int Mesh::edge_id(int i, int j) const {
    if (i > j)
        std::swap(i, j);
    const auto it = edge_lookup_.find(pair_key(i, j, vertices));
    if (it == edge_lookup_.end()) {
        std::ostringstream msg;
        msg << "vertex pair (" << i << "," << j << ") is not an edge";
        throw ConnectivityError(msg.str());
    }
    return it->second;
}

void Mesh::finalize() {
    if (vertices <= 0)
        throw SchemaError("mesh has no vertices");
    if (triangles.empty())
        throw SchemaError("mesh has no triangles");
    if (ref_areas.size() != triangle_count())
        throw SchemaError("ref_areas length does not match triangle count");
    if (vertex_mass.size() != vertices)
        throw SchemaError("vertex_mass length does not match vertex count");
    for (const auto& t : triangles) {
        for (int s : t)
            if (s < 0 || s >= vertices)
                throw ConnectivityError("triangle references vertex index out of range");
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
            throw ConnectivityError("degenerate triangle with a repeated vertex");
    }
    for (int t = 0; t < triangle_count(); ++t)
        if (!(ref_areas[t] > 0.0))
            throw SchemaError("non-positive reference area");

    // Canonical edge enumeration: collect sorted vertex pairs, order them
    // lexicographically. Everything degree-1 indexes edges this way.
    std::set<std::array<int, 2>> pair_set;
    for (const auto& t : triangles)
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            if (a > b)
                std::swap(a, b);
            pair_set.insert({a, b});
        }
    edges.assign(pair_set.begin(), pair_set.end());
    edge_lookup_.clear();
    for (int e = 0; e < edge_count(); ++e)
        edge_lookup_[pair_key(edges[e][0], edges[e][1], vertices)] = e;

    // Incidence counts and traversal directions per edge.
    // dir: +1 if some triangle runs low->high, -1 the other way; a repeated
    // direction on one edge is a winding inconsistency.
    std::vector<int> incident(edge_count(), 0);
    std::vector<int> dir_sum(edge_count(), 0);
    tri_edges.resize(triangle_count());
    tri_edge_signs.resize(triangle_count());
    for (int t = 0; t < triangle_count(); ++t) {
        for (int k = 0; k < 3; ++k) {
            const int a = triangles[t][k], b = triangles[t][(k + 1) % 3];
            const int e = edge_id(a, b);
            tri_edges[t][k] = e;
            tri_edge_signs[t][k] = (a < b) ? 1 : -1;
            incident[e] += 1;
            dir_sum[e] += tri_edge_signs[t][k];
        }
    }
    boundary_edges.clear();
    for (int e = 0; e < edge_count(); ++e) {
        if (incident[e] > 2)
            throw ConnectivityError("edge shared by more than two triangles");
        if (incident[e] == 2 && dir_sum[e] != 0)
            throw OrientationError("interior edge traversed the same way by both triangles");
        if (incident[e] == 1)
            boundary_edges.push_back(e);
    }

    boundary_vertex.assign(vertices, 0);
    for (int e : boundary_edges) {
        boundary_vertex[edges[e][0]] = 1;
        boundary_vertex[edges[e][1]] = 1;
    }

    // Boundary loops: closed, disjoint, covering all boundary edges, and
    // running with the interior on the left (i.e. each loop step a->b is
    // traversed a->b by its unique triangle).
    std::set<int> covered;
    std::set<int> loop_vertices;
    for (const auto& loop : boundary_loops) {
        if (loop.size() < 3)
            throw ConnectivityError("boundary loop shorter than 3 vertices");
        for (size_t k = 0; k < loop.size(); ++k) {
            const int a = loop[k], b = loop[(k + 1) % loop.size()];
            if (!loop_vertices.insert(a).second)
                throw ConnectivityError("boundary loops are not disjoint simple cycles");
            const int e = edge_id(a, b);
            if (incident[e] != 1)
                throw ConnectivityError("boundary loop crosses an interior edge");
            if (!covered.insert(e).second)
                throw ConnectivityError("boundary loops revisit an edge");
            // The unique triangle traverses a->b iff dir_sum matches the
            // a->b orientation relative to the canonical low->high edge.
            const int want = (a < b) ? 1 : -1;
            if (dir_sum[e] != want)
                throw OrientationError("boundary loop runs against triangle winding");
        }
    }
    if (covered.size() != boundary_edges.size())
        throw ConnectivityError("boundary loops do not cover all boundary edges");

    // Connectivity: one component under the edge graph.
    std::vector<char> seen(vertices, 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    std::vector<std::vector<int>> adj(vertices);
    for (const auto& e : edges) {
        adj[e[0]].push_back(e[1]);
        adj[e[1]].push_back(e[0]);
    }
    while (!stack.empty()) {
        const int s = stack.back();
        stack.pop_back();
        for (int nb : adj[s])
            if (!seen[nb]) {
                seen[nb] = 1;
                stack.push_back(nb);
            }
    }
    if (std::count(seen.begin(), seen.end(), char(1)) != vertices)
        throw ConnectivityError("complex is not connected");

    // Mass lumping consistency (exact for built meshes, tolerant for files).
    VecX third = VecX::Zero(vertices);
    for (int t = 0; t < triangle_count(); ++t)
        for (int corner : triangles[t])
            third[corner] += ref_areas[t] / 3.0;
    const double scale = ref_areas.sum() / vertices;
    for (int s = 0; s < vertices; ++s)
        if (std::abs(third[s] - vertex_mass[s]) > 1e-9 * scale)
            throw SchemaError("vertex_mass does not match the 1/3 lumping of ref_areas");

    // If a layout is present it must reproduce the reference areas: the
    // right-side machinery assumes ref_area(t) = layout area(t).
    if (layout) {
        if (layout->rows() != vertices || layout->cols() != 2)
            throw SchemaError("layout has wrong shape");
        for (int t = 0; t < triangle_count(); ++t) {
            const double a = shoelace_area(*layout, triangles[t]);
            if (!(a > 0.0))
                throw OrientationError("layout has a non-positively oriented triangle");
            if (std::abs(a - ref_areas[t]) > 1e-9 * scale)
                throw SchemaError("layout areas disagree with ref_areas");
        }
    }
}

Mesh build_square(int n, double side) {
    if (n < 1)
        throw SchemaError("build_square: n must be >= 1");
    if (!(side > 0.0))
        throw SchemaError("build_square: side must be positive");
    const double h = side / n;
    Mesh m;
    // Grid ids: boundary first, counterclockwise from the origin, then
    // interior row-major. Keeps boundary indices contiguous [0, 4n).
    std::map<std::pair<int, int>, int> ids;
    std::vector<Vec2> verts;
    auto add = [&](int i, int j) {
        const auto key = std::make_pair(i, j);
        auto it = ids.find(key);
        if (it == ids.end()) {
            it = ids.emplace(key, static_cast<int>(verts.size())).first;
            verts.emplace_back(i * h, j * h);
        }
        return it->second;
    };
    for (int i = 0; i < n; ++i)
        add(i, 0);
    for (int j = 0; j < n; ++j)
        add(n, j);
    for (int i = n; i > 0; --i)
        add(i, n);
    for (int j = n; j > 0; --j)
        add(0, j);
    for (int j = 1; j < n; ++j)
        for (int i = 1; i < n; ++i)
            add(i, j);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const int a = add(i, j), b = add(i + 1, j), c = add(i + 1, j + 1), d = add(i, j + 1);
            m.triangles.push_back({a, b, c}); // diagonal lower-left -> upper-right
            m.triangles.push_back({a, c, d});
        }
    m.vertices = static_cast<int>(verts.size());
    MatX layout(m.vertices, 2);
    for (int s = 0; s < m.vertices; ++s)
        layout.row(s) = verts[s];
    m.layout = layout;
    std::vector<int> loop(4 * n);
    for (int k = 0; k < 4 * n; ++k)
        loop[k] = k;
    m.boundary_loops = {loop};
    derive_volume_data(m);
    m.finalize();
    return m;
}

Mesh build_disk(int n_radial, int n_angular, double radius) {
    if (n_radial < 1 || n_angular < 3)
        throw SchemaError("build_disk: need n_radial >= 1 and n_angular >= 3");
    if (!(radius > 0.0))
        throw SchemaError("build_disk: radius must be positive");
    Mesh m;
    std::vector<Vec2> verts = {{0.0, 0.0}};
    std::vector<std::vector<int>> rings = {{0}};
    for (int k = 1; k <= n_radial; ++k) {
        std::vector<int> ring;
        const int cnt = k * n_angular;
        const double r = k * radius / n_radial;
        for (int q = 0; q < cnt; ++q) {
            const double th = 2.0 * std::numbers::pi * q / cnt;
            ring.push_back(static_cast<int>(verts.size()));
            verts.emplace_back(r * std::cos(th), r * std::sin(th));
        }
        rings.push_back(ring);
    }
    // Strip between ring k-1 (k-1 points per sector, or the hub) and ring k
    // (k points per sector): fan of 2k-1 triangles per sector.
    for (int k = 1; k <= n_radial; ++k) {
        const auto& inner = rings[k - 1];
        const auto& outer = rings[k];
        const int ni = static_cast<int>(inner.size());
        for (int s = 0; s < n_angular; ++s) {
            std::vector<int> in_chain, out_chain;
            if (k == 1)
                in_chain = {0};
            else
                for (int t = 0; t < k; ++t)
                    in_chain.push_back(inner[(s * (k - 1) + t) % ni]);
            for (int t = 0; t <= k; ++t)
                out_chain.push_back(outer[(s * k + t) % outer.size()]);
            for (int t = 0; t < k; ++t)
                m.triangles.push_back({in_chain[k == 1 ? 0 : t], out_chain[t], out_chain[t + 1]});
            for (int t = 0; t + 1 < k; ++t)
                m.triangles.push_back({in_chain[t], out_chain[t + 1], in_chain[t + 1]});
        }
    }
    m.vertices = static_cast<int>(verts.size());
    MatX layout(m.vertices, 2);
    for (int s = 0; s < m.vertices; ++s)
        layout.row(s) = verts[s];
    m.layout = layout;
    m.boundary_loops = {rings.back()};
    derive_volume_data(m);
    m.finalize();
    return m;
}

Mesh build_annulus(int n_radial, int n_angular, double r_in, double r_out) {
    if (n_radial < 1 || n_angular < 3)
        throw SchemaError("build_annulus: need n_radial >= 1 and n_angular >= 3");
    if (!(0.0 < r_in && r_in < r_out))
        throw SchemaError("build_annulus: need 0 < r_in < r_out");
    // Radius compensation: a regular n-gon ring at radius c*r encloses the
    // area pi r^2 exactly when c^2 = 2 pi / (n sin(2 pi / n)), so the
    // polygonal annulus area equals pi (r_out^2 - r_in^2) with no deficit.
    const double c =
        std::sqrt(2.0 * std::numbers::pi / (n_angular * std::sin(2.0 * std::numbers::pi / n_angular)));
    Mesh m;
    std::vector<Vec2> verts;
    std::vector<std::vector<int>> rings;
    for (int k = 0; k <= n_radial; ++k) {
        const double r = r_in + k * (r_out - r_in) / n_radial;
        std::vector<int> ring;
        for (int q = 0; q < n_angular; ++q) {
            const double th = 2.0 * std::numbers::pi * q / n_angular;
            ring.push_back(static_cast<int>(verts.size()));
            verts.emplace_back(c * r * std::cos(th), c * r * std::sin(th));
        }
        rings.push_back(ring);
    }
    for (int k = 0; k < n_radial; ++k) {
        const auto& inner = rings[k];
        const auto& outer = rings[k + 1];
        for (int s = 0; s < n_angular; ++s) {
            const int a = inner[s], b = inner[(s + 1) % n_angular];
            const int d = outer[s], e = outer[(s + 1) % n_angular];
            m.triangles.push_back({a, d, e});
            m.triangles.push_back({a, e, b});
        }
    }
    m.vertices = static_cast<int>(verts.size());
    MatX layout(m.vertices, 2);
    for (int s = 0; s < m.vertices; ++s)
        layout.row(s) = verts[s];
    m.layout = layout;
    std::vector<int> inner_loop(rings.front().rbegin(), rings.front().rend());
    m.boundary_loops = {inner_loop, rings.back()};
    derive_volume_data(m);
    m.finalize();
    return m;
}

double total_ref_area(const Mesh& mesh) { return mesh.ref_areas.sum(); }

const MatX& require_layout(const Mesh& mesh) {
    if (!mesh.layout)
        throw SchemaError("mesh has no construction layout; reference-side operations "
                          "(deformation gradients, admissibility) need one");
    return *mesh.layout;
}

bool meshes_equal(const Mesh& a, const Mesh& b) {
    if (a.vertices != b.vertices || a.triangles != b.triangles ||
        a.boundary_loops != b.boundary_loops)
        return false;
    if (a.ref_areas.size() != b.ref_areas.size() || a.ref_areas != b.ref_areas)
        return false;
    if (a.vertex_mass.size() != b.vertex_mass.size() || a.vertex_mass != b.vertex_mass)
        return false;
    if (a.layout.has_value() != b.layout.has_value())
        return false;
    if (a.layout && (*a.layout - *b.layout).cwiseAbs().maxCoeff() != 0.0)
        return false;
    return true;
}

// --- serialization ---

using nlohmann::json;

void save_mesh(const Mesh& mesh, const std::string& path) {
    json j;
    j["vertices"] = mesh.vertices;
    j["triangles"] = mesh.triangles;
    j["boundary_loops"] = mesh.boundary_loops;
    j["ref_areas"] = std::vector<double>(mesh.ref_areas.begin(), mesh.ref_areas.end());
    j["vertex_mass"] = std::vector<double>(mesh.vertex_mass.begin(), mesh.vertex_mass.end());
    if (mesh.layout) {
        std::vector<std::array<double, 2>> rows(mesh.vertices);
        for (int s = 0; s < mesh.vertices; ++s)
            rows[s] = {(*mesh.layout)(s, 0), (*mesh.layout)(s, 1)};
        j["layout"] = rows;
    }
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
    if (!out)
        throw IoError("write failed: " + path);
}

Mesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("invalid JSON: ") + e.what());
    }
    Mesh m;
    try {
        m.vertices = j.at("vertices").get<int>();
        m.triangles = j.at("triangles").get<std::vector<std::array<int, 3>>>();
        m.boundary_loops = j.at("boundary_loops").get<std::vector<std::vector<int>>>();
        const auto areas = j.at("ref_areas").get<std::vector<double>>();
        m.ref_areas = Eigen::Map<const VecX>(areas.data(), areas.size());
        const auto mass = j.at("vertex_mass").get<std::vector<double>>();
        m.vertex_mass = Eigen::Map<const VecX>(mass.data(), mass.size());
        if (j.contains("layout")) {
            const auto rows = j.at("layout").get<std::vector<std::array<double, 2>>>();
            MatX layout(rows.size(), 2);
            for (size_t s = 0; s < rows.size(); ++s) {
                layout(s, 0) = rows[s][0];
                layout(s, 1) = rows[s][1];
            }
            m.layout = layout;
        }
    } catch (const json::exception& e) {
        throw SchemaError(std::string("mesh schema violation: ") + e.what());
    }
    m.finalize();
    return m;
}

} // namespace fbdp
