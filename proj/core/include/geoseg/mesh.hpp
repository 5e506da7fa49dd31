#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace geoseg {

using Vec3 = std::array<double, 3>;

inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double norm(const Vec3& a);
Vec3 normalized(const Vec3& a);

enum class Hemisphere : uint8_t { LEFT = 0, RIGHT = 1 };

// Axis whose sign distinguishes the hemispheres; target coordinates of
// right-hemisphere vertices are mirrored by negating this component.
inline constexpr int kLeftRightAxis = 0;

// Triangle mesh with per-vertex inflated coordinates, hemisphere tags and
// region labels. Immutable after load/build; all queries are read-only.
struct SurfaceMesh {
    std::vector<Vec3> vertices;                  // mm
    std::vector<std::array<int, 3>> triangles;
    std::vector<Vec3> inflated;                  // mm, unfolded embedding
    std::vector<Hemisphere> hemisphere;
    std::vector<int> region;

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }

    // Adjacency is built lazily by validate() and geodesic queries.
    struct Edge {
        int to;
        double length;
    };
    std::vector<std::vector<Edge>> adjacency;

    void build_adjacency();
    // Throws on any type-invariant violation.
    void validate() const;
};

struct GeodesicResult {
    double distance = 0.0;       // mm
    std::vector<int> path;       // vertex ids, source..target
};

SurfaceMesh load_mesh(const std::string& path);
void save_mesh(const SurfaceMesh& mesh, const std::string& path);

// Vertex minimizing Euclidean distance to p; ties broken by lowest index.
int nearest_vertex(const SurfaceMesh& mesh, const Vec3& p);

// Dijkstra over the edge graph with Euclidean edge weights. Throws if the
// endpoints lie on different hemispheres.
GeodesicResult geodesic_distance(const SurfaceMesh& mesh, int a, int b);

// Single-source sweep: distances from `source` to every vertex of its
// hemisphere (others get infinity). Used by batched pair annotation.
std::vector<double> geodesic_from(const SurfaceMesh& mesh, int source);

double geodesic_between_points(const SurfaceMesh& mesh, const Vec3& p1, const Vec3& p2);

// Inflated coordinate of v; for RIGHT-hemisphere vertices the left-right
// axis component is negated.
Vec3 target_coordinate(const SurfaceMesh& mesh, int v);

// Area-weighted average of incident triangle normals, unit length.
// Throws for isolated vertices.
Vec3 vertex_normal(const SurfaceMesh& mesh, int v);

}  // namespace geoseg
