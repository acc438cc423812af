#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <vector>

#include "spectra_shape/fe.hpp"
#include "spectra_shape/map_expr.hpp"

namespace spectra_shape {

// Vertex count of build_disk_mesh(h) is close to c * pi / h^2 with this c.
constexpr double kDiskMeshDensity = 3.3 / 3.14159265358979323846;

struct MeshEdge {
    int v0 = -1, v1 = -1;  // v0 < v1
    int t0 = -1, e0 = -1;  // first adjacent triangle and its local edge
    int t1 = -1, e1 = -1;  // second adjacent triangle, -1 on the boundary
    bool boundary() const { return t1 < 0; }
};

struct BoundaryEdge {
    int v0 = -1, v1 = -1;  // counterclockwise along the boundary
    double theta0 = 0.0, theta1 = 0.0;  // circle parameters, theta1 > theta0
    int edge = -1;  // index into RefMesh::edges
};

// Conforming triangulation of the reference domain.  Disk meshes have their
// boundary vertices on the unit circle and curved boundary edges; patch
// meshes (tests) have straight boundaries.
struct RefMesh {
    double h = 0.0;
    bool curved = false;
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;  // counterclockwise
    std::vector<MeshEdge> edges;
    std::vector<BoundaryEdge> boundary_edges;
    std::vector<double> vertex_theta;  // NaN off the boundary
    std::vector<std::array<int, 3>> triangle_edges;  // edge index of local edges 0, 1, 2

    double polygon_area() const;
    double min_angle_degrees() const;
    int euler_characteristic() const {
        return static_cast<int>(vertices.size()) - static_cast<int>(edges.size()) + static_cast<int>(triangles.size());
    }
};

// Concentric-ring triangulation of the unit disk: round(1/h) rings, ring i
// holding 6 i vertices.  Invariant under rotation by 60 degrees.
RefMesh build_disk_mesh(double h);

// Straight-sided mesh from explicit connectivity (used for patch tests).
RefMesh build_patch_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles);

// n x n square [x0, x0 + side]^2 split into right triangles.
RefMesh build_square_mesh(int n, double side, const Vec2& origin = Vec2::Zero());

// Geometry of the isoparametric element map at one reference point.
struct ElementPoint {
    Vec2 reference_xi;
    Vec2 x;                  // physical point
    Vec2 disk;               // point in the reference disk
    Eigen::Matrix2d jac;     // d x / d xi
    Eigen::Matrix2d inv;     // inverse of jac
    double det = 0.0;
    std::array<Eigen::Matrix2d, 2> second;  // Hessian in xi of each physical coordinate
};

// A reference mesh pushed forward by phi with degree-k isoparametric
// elements.  Nodes are placed in the reference disk (curved boundary edges
// follow the circle, the cubic bubble node is blended accordingly) and then
// mapped by phi; the element maps interpolate phi at those nodes.
class MappedMesh {
  public:
    MappedMesh(std::shared_ptr<const RefMesh> ref, MapExpr map, int degree);

    const RefMesh& ref() const { return *ref_; }
    std::shared_ptr<const RefMesh> ref_ptr() const { return ref_; }
    const MapExpr& map() const { return map_; }
    int degree() const { return degree_; }
    const LagrangeBasis& basis() const { return LagrangeBasis::get(degree_); }

    int num_elements() const { return static_cast<int>(ref_->triangles.size()); }
    int num_nodes() const { return static_cast<int>(node_disk_.size()); }
    int nodes_per_element() const { return basis().size(); }
    const int* element_nodes(int e) const { return &element_nodes_[static_cast<std::size_t>(e * nodes_per_element())]; }
    const Vec2& node_position(int n) const { return node_pos_[static_cast<std::size_t>(n)]; }
    const Vec2& node_disk(int n) const { return node_disk_[static_cast<std::size_t>(n)]; }
    bool node_on_boundary(int n) const { return node_boundary_[static_cast<std::size_t>(n)] != 0; }
    // Nodes lying on mesh edge `edge` in order from v0 to v1, endpoints included.
    std::vector<int> edge_nodes(int edge) const;

    ElementPoint geometry(int e, const Vec2& xi) const;
    // Physical point of the element map at xi and its reference-disk preimage.
    Vec2 element_point(int e, const Vec2& xi) const;
    bool is_curved(int e) const { return curved_[static_cast<std::size_t>(e)] != 0; }

    // Area by quadrature of det(d x / d xi).
    double area() const;
    // Smallest det over all quadrature points and nodes, with its element.
    std::pair<double, int> min_det() const;

    // Same connectivity with a different map.
    MappedMesh remap(const MapExpr& map) const { return MappedMesh(ref_, map, degree_, node_disk_, element_nodes_, node_boundary_, curved_); }

  private:
    MappedMesh(std::shared_ptr<const RefMesh> ref, MapExpr map, int degree, std::vector<Vec2> disk,
               std::vector<int> element_nodes, std::vector<char> boundary, std::vector<char> curved);
    void map_nodes_and_check();

    std::shared_ptr<const RefMesh> ref_;
    MapExpr map_;
    int degree_;
    std::vector<Vec2> node_disk_, node_pos_;
    std::vector<int> element_nodes_;
    std::vector<char> node_boundary_, curved_;
};

// Convenience: map_mesh(build_disk_mesh(h), map, degree).
MappedMesh map_mesh(std::shared_ptr<const RefMesh> ref, const MapExpr& map, int degree);

// Plain-text dump: "MESH v1", vertices (physical), triangles, boundary edges.
void write_mesh(std::ostream& os, const MappedMesh& mesh);

}  // namespace spectra_shape
