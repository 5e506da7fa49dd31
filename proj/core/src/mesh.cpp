#include "geoseg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace geoseg {

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 normalized(const Vec3& a) {
    double n = norm(a);
    if (n <= 0.0) throw std::runtime_error("normalized: zero vector");
    return (1.0 / n) * a;
}

void SurfaceMesh::build_adjacency() {
    adjacency.assign(vertices.size(), {});
    auto add_edge = [&](int a, int b) {
        for (const Edge& e : adjacency[a])
            if (e.to == b) return;
        double len = norm(vertices[a] - vertices[b]);
        adjacency[a].push_back({b, len});
        adjacency[b].push_back({a, len});
    };
    for (const auto& t : triangles) {
        add_edge(t[0], t[1]);
        add_edge(t[1], t[2]);
        add_edge(t[2], t[0]);
    }
}

void SurfaceMesh::validate() const {
    const int n = n_vertices();
    if (inflated.size() != vertices.size() || hemisphere.size() != vertices.size() ||
        region.size() != vertices.size())
        throw std::runtime_error("mesh: attribute arrays must match vertex count");
    for (const auto& t : triangles) {
        for (int i : t)
            if (i < 0 || i >= n) throw std::runtime_error("mesh: triangle index out of range");
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
            throw std::runtime_error("mesh: degenerate triangle");
        if (hemisphere[t[0]] != hemisphere[t[1]] || hemisphere[t[1]] != hemisphere[t[2]])
            throw std::runtime_error("mesh: triangle spans two hemispheres");
    }
    for (int r : region)
        if (r < 0) throw std::runtime_error("mesh: negative region id");
    if (adjacency.size() != vertices.size())
        throw std::runtime_error("mesh: adjacency not built");
    // per-hemisphere connectivity (BFS from the first vertex of each tag)
    for (Hemisphere h : {Hemisphere::LEFT, Hemisphere::RIGHT}) {
        int start = -1, count = 0;
        for (int v = 0; v < n; ++v)
            if (hemisphere[v] == h) {
                if (start < 0) start = v;
                ++count;
            }
        if (count == 0) continue;
        std::vector<char> seen(n, 0);
        std::vector<int> stack{start};
        seen[start] = 1;
        int reached = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (const Edge& e : adjacency[v])
                if (!seen[e.to]) {
                    seen[e.to] = 1;
                    ++reached;
                    stack.push_back(e.to);
                }
        }
        if (reached != count)
            throw std::runtime_error("mesh: hemisphere edge graph is disconnected");
    }
}

SurfaceMesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_mesh: cannot open " + path);
    std::string magic;
    int nv = 0, nt = 0;
    if (!(in >> magic >> nv >> nt) || magic != "meshv1")
        throw std::runtime_error("load_mesh: bad header in " + path);
    if (nv < 0 || nt < 0) throw std::runtime_error("load_mesh: negative counts");
    SurfaceMesh m;
    m.vertices.reserve(nv);
    for (int i = 0; i < nv; ++i) {
        std::string tag;
        Vec3 p, q;
        int h, r;
        if (!(in >> tag >> p[0] >> p[1] >> p[2] >> q[0] >> q[1] >> q[2] >> h >> r) || tag != "v")
            throw std::runtime_error("load_mesh: malformed vertex line " + std::to_string(i));
        if (h != 0 && h != 1) throw std::runtime_error("load_mesh: bad hemisphere tag");
        m.vertices.push_back(p);
        m.inflated.push_back(q);
        m.hemisphere.push_back(h == 0 ? Hemisphere::LEFT : Hemisphere::RIGHT);
        m.region.push_back(r);
    }
    for (int i = 0; i < nt; ++i) {
        std::string tag;
        std::array<int, 3> t{};
        if (!(in >> tag >> t[0] >> t[1] >> t[2]) || tag != "t")
            throw std::runtime_error("load_mesh: malformed triangle line " + std::to_string(i));
        m.triangles.push_back(t);
    }
    m.build_adjacency();
    m.validate();
    return m;
}

void save_mesh(const SurfaceMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_mesh: cannot open " + path);
    out << "meshv1 " << mesh.n_vertices() << " " << mesh.n_triangles() << "\n";
    out << std::setprecision(17);
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        const Vec3& p = mesh.vertices[v];
        const Vec3& q = mesh.inflated[v];
        out << "v " << p[0] << " " << p[1] << " " << p[2] << " " << q[0] << " " << q[1] << " "
            << q[2] << " " << (mesh.hemisphere[v] == Hemisphere::LEFT ? 0 : 1) << " "
            << mesh.region[v] << "\n";
    }
    for (const auto& t : mesh.triangles) out << "t " << t[0] << " " << t[1] << " " << t[2] << "\n";
    if (!out) throw std::runtime_error("save_mesh: write failed");
}

int nearest_vertex(const SurfaceMesh& mesh, const Vec3& p) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        Vec3 d = mesh.vertices[v] - p;
        double dd = dot(d, d);
        if (dd < best_d) {
            best_d = dd;
            best = v;
        }
    }
    return best;
}

namespace {

struct QueueItem {
    double dist;
    int vertex;
    bool operator>(const QueueItem& o) const {
        if (dist != o.dist) return dist > o.dist;
        return vertex > o.vertex;  // deterministic tie-break: lowest index first
    }
};

void check_vertex(const SurfaceMesh& mesh, int v, const char* who) {
    if (v < 0 || v >= mesh.n_vertices())
        throw std::out_of_range(std::string(who) + ": vertex id out of range");
}

}  // namespace

GeodesicResult geodesic_distance(const SurfaceMesh& mesh, int a, int b) {
    check_vertex(mesh, a, "geodesic_distance");
    check_vertex(mesh, b, "geodesic_distance");
    if (mesh.hemisphere[a] != mesh.hemisphere[b])
        throw std::runtime_error("geodesic_distance: endpoints on different hemispheres");
    if (a == b) return {0.0, {a}};
    const int n = mesh.n_vertices();
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<int> prev(n, -1);
    std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>> pq;
    dist[a] = 0.0;
    pq.push({0.0, a});
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[v]) continue;
        if (v == b) break;  // early exit at target
        for (const auto& e : mesh.adjacency[v]) {
            double nd = d + e.length;
            if (nd < dist[e.to]) {
                dist[e.to] = nd;
                prev[e.to] = v;
                pq.push({nd, e.to});
            }
        }
    }
    if (!std::isfinite(dist[b]))
        throw std::runtime_error("geodesic_distance: target unreachable");
    GeodesicResult res;
    res.distance = dist[b];
    for (int v = b; v != -1; v = prev[v]) res.path.push_back(v);
    std::reverse(res.path.begin(), res.path.end());
    return res;
}

std::vector<double> geodesic_from(const SurfaceMesh& mesh, int source) {
    check_vertex(mesh, source, "geodesic_from");
    const int n = mesh.n_vertices();
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>> pq;
    dist[source] = 0.0;
    pq.push({0.0, source});
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[v]) continue;
        for (const auto& e : mesh.adjacency[v]) {
            double nd = d + e.length;
            if (nd < dist[e.to]) {
                dist[e.to] = nd;
                pq.push({nd, e.to});
            }
        }
    }
    return dist;
}

double geodesic_between_points(const SurfaceMesh& mesh, const Vec3& p1, const Vec3& p2) {
    int a = nearest_vertex(mesh, p1);
    int b = nearest_vertex(mesh, p2);
    return geodesic_distance(mesh, a, b).distance;
}

Vec3 target_coordinate(const SurfaceMesh& mesh, int v) {
    check_vertex(mesh, v, "target_coordinate");
    Vec3 c = mesh.inflated[v];
    if (mesh.hemisphere[v] == Hemisphere::RIGHT) c[kLeftRightAxis] = -c[kLeftRightAxis];
    return c;
}

Vec3 vertex_normal(const SurfaceMesh& mesh, int v) {
    check_vertex(mesh, v, "vertex_normal");
    Vec3 acc{0.0, 0.0, 0.0};
    bool found = false;
    for (const auto& t : mesh.triangles) {
        if (t[0] != v && t[1] != v && t[2] != v) continue;
        Vec3 e1 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
        Vec3 e2 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
        Vec3 n = cross(e1, e2);  // magnitude = 2 * area, so the sum is area-weighted
        acc = acc + n;
        found = true;
    }
    if (!found) throw std::runtime_error("vertex_normal: isolated vertex");
    return normalized(acc);
}

}  // namespace geoseg
