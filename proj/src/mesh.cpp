#include "spectra_shape/mesh.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "spectra_shape/error.hpp"

namespace spectra_shape {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double wrap_angle(double d) {
    while (d > std::numbers::pi) d -= kTwoPi;
    while (d <= -std::numbers::pi) d += kTwoPi;
    return d;
}

// Fills edges, triangle_edges and (for straight meshes) boundary_edges.
void build_topology(RefMesh& m) {
    std::map<std::pair<int, int>, int> lookup;
    m.edges.clear();
    m.triangle_edges.assign(m.triangles.size(), {-1, -1, -1});
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        for (int le = 0; le < 3; ++le) {
            const int a = m.triangles[t][kLocalEdges[le][0]], b = m.triangles[t][kLocalEdges[le][1]];
            const auto key = std::minmax(a, b);
            auto it = lookup.find(key);
            if (it == lookup.end()) {
                MeshEdge e;
                e.v0 = key.first;
                e.v1 = key.second;
                e.t0 = static_cast<int>(t);
                e.e0 = le;
                lookup.emplace(key, static_cast<int>(m.edges.size()));
                m.triangle_edges[t][le] = static_cast<int>(m.edges.size());
                m.edges.push_back(e);
            } else {
                MeshEdge& e = m.edges[static_cast<std::size_t>(it->second)];
                if (e.t1 >= 0) reject("mesh", "non-manifold edge in triangulation");
                e.t1 = static_cast<int>(t);
                e.e1 = le;
                m.triangle_edges[t][le] = it->second;
            }
        }
    }
}

void check_orientation(const RefMesh& m) {
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& tr = m.triangles[t];
        const double det = cross(m.vertices[tr[1]] - m.vertices[tr[0]], m.vertices[tr[2]] - m.vertices[tr[0]]);
        if (!(det > 0.0)) {
            std::ostringstream os;
            os << "triangle " << t << " is not counterclockwise";
            reject("mesh", os.str());
        }
    }
}

}  // namespace

double RefMesh::polygon_area() const {
    double a = 0.0;
    for (const auto& t : triangles) a += 0.5 * cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]);
    return a;
}

double RefMesh::min_angle_degrees() const {
    double best = 180.0;
    for (const auto& t : triangles)
        for (int i = 0; i < 3; ++i) {
            const Vec2 a = vertices[t[(i + 1) % 3]] - vertices[t[i]], b = vertices[t[(i + 2) % 3]] - vertices[t[i]];
            const double ang = std::atan2(std::abs(cross(a, b)), a.dot(b)) * 180.0 / std::numbers::pi;
            best = std::min(best, ang);
        }
    return best;
}

RefMesh build_disk_mesh(double h) {
    if (!(h >= 0.005 && h <= 0.5)) reject("mesh", "target size h must lie in [0.005, 0.5]");
    const int n = std::max(1, static_cast<int>(std::floor(1.0 / h + 0.5)));
    RefMesh m;
    m.h = h;
    m.curved = true;
    auto base = [](int i) { return i == 0 ? 0 : 1 + 3 * i * (i - 1); };
    m.vertices.emplace_back(0.0, 0.0);
    for (int i = 1; i <= n; ++i) {
        const int count = 6 * i;
        const double r = static_cast<double>(i) / n;
        for (int j = 0; j < count; ++j) {
            const double t = kTwoPi * j / count;
            m.vertices.emplace_back(r * std::cos(t), r * std::sin(t));
        }
    }
    // Outer ring exactly on the circle.
    for (int j = 0; j < 6 * n; ++j) m.vertices[static_cast<std::size_t>(base(n) + j)].normalize();

    for (int j = 0; j < 6; ++j) m.triangles.push_back({0, base(1) + j, base(1) + (j + 1) % 6});
    for (int i = 2; i <= n; ++i) {
        const int mi = 6 * (i - 1), no = 6 * i;
        const int bi = base(i - 1), bo = base(i);
        int a = 0, b = 0;
        // Merge the two rings by angle; integer comparison keeps the
        // construction identical in each of the six sectors.
        while (a < mi || b < no) {
            const bool outer = a == mi || (b < no && static_cast<long>(b + 1) * mi <= static_cast<long>(a + 1) * no);
            if (outer) {
                m.triangles.push_back({bi + a % mi, bo + b, bo + (b + 1) % no});
                ++b;
            } else {
                m.triangles.push_back({bi + a, bo + b % no, bi + (a + 1) % mi});
                ++a;
            }
        }
    }
    check_orientation(m);
    build_topology(m);

    m.vertex_theta.assign(m.vertices.size(), std::numeric_limits<double>::quiet_NaN());
    const int nb = 6 * n;
    for (int j = 0; j < nb; ++j) m.vertex_theta[static_cast<std::size_t>(base(n) + j)] = kTwoPi * j / nb;
    std::map<std::pair<int, int>, int> lookup;
    for (std::size_t e = 0; e < m.edges.size(); ++e) lookup[{m.edges[e].v0, m.edges[e].v1}] = static_cast<int>(e);
    for (int j = 0; j < nb; ++j) {
        BoundaryEdge be;
        be.v0 = base(n) + j;
        be.v1 = base(n) + (j + 1) % nb;
        be.theta0 = kTwoPi * j / nb;
        be.theta1 = kTwoPi * (j + 1) / nb;
        be.edge = lookup.at(std::minmax(be.v0, be.v1));
        if (!m.edges[static_cast<std::size_t>(be.edge)].boundary()) reject("mesh", "outer ring edge has two triangles");
        m.boundary_edges.push_back(be);
    }
    return m;
}

RefMesh build_patch_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles) {
    RefMesh m;
    m.vertices = std::move(vertices);
    m.triangles = std::move(triangles);
    check_orientation(m);
    build_topology(m);
    m.vertex_theta.assign(m.vertices.size(), std::numeric_limits<double>::quiet_NaN());
    double hmax = 0.0;
    for (std::size_t e = 0; e < m.edges.size(); ++e) {
        const MeshEdge& me = m.edges[e];
        hmax = std::max(hmax, (m.vertices[me.v1] - m.vertices[me.v0]).norm());
        if (!me.boundary()) continue;
        const auto& tr = m.triangles[static_cast<std::size_t>(me.t0)];
        BoundaryEdge be;
        be.v0 = tr[kLocalEdges[me.e0][0]];
        be.v1 = tr[kLocalEdges[me.e0][1]];
        be.theta0 = be.theta1 = std::numeric_limits<double>::quiet_NaN();
        be.edge = static_cast<int>(e);
        m.boundary_edges.push_back(be);
    }
    m.h = hmax;
    return m;
}

RefMesh build_square_mesh(int n, double side, const Vec2& origin) {
    if (n < 1) reject("mesh", "square mesh needs at least one cell per side");
    std::vector<Vec2> v;
    std::vector<std::array<int, 3>> t;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) v.push_back(origin + side * Vec2(static_cast<double>(i) / n, static_cast<double>(j) / n));
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            t.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            t.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    return build_patch_mesh(std::move(v), std::move(t));
}

MappedMesh::MappedMesh(std::shared_ptr<const RefMesh> ref, MapExpr map, int degree)
    : ref_(std::move(ref)), map_(std::move(map)), degree_(degree) {
    if (degree < 1 || degree > 3) reject("mesh", "isoparametric degree must be 1, 2 or 3");
    const RefMesh& m = *ref_;
    const int k = degree;
    const int nv = static_cast<int>(m.vertices.size()), ne = static_cast<int>(m.edges.size());
    const int nt = static_cast<int>(m.triangles.size());
    const int n_nodes = nv + ne * (k - 1) + (k == 3 ? nt : 0);
    node_disk_.assign(static_cast<std::size_t>(n_nodes), Vec2::Zero());
    node_boundary_.assign(static_cast<std::size_t>(n_nodes), 0);
    curved_.assign(static_cast<std::size_t>(nt), 0);

    for (int v = 0; v < nv; ++v) node_disk_[static_cast<std::size_t>(v)] = m.vertices[static_cast<std::size_t>(v)];
    std::vector<char> edge_curved(static_cast<std::size_t>(ne), 0);
    std::vector<std::array<double, 2>> edge_theta(static_cast<std::size_t>(ne));
    for (const BoundaryEdge& be : m.boundary_edges) {
        const MeshEdge& me = m.edges[static_cast<std::size_t>(be.edge)];
        node_boundary_[static_cast<std::size_t>(me.v0)] = 1;
        node_boundary_[static_cast<std::size_t>(me.v1)] = 1;
        if (m.curved) {
            edge_curved[static_cast<std::size_t>(be.edge)] = 1;
            const bool same = be.v0 == me.v0;
            edge_theta[static_cast<std::size_t>(be.edge)] = same ? std::array<double, 2>{be.theta0, be.theta1}
                                                                 : std::array<double, 2>{be.theta1, be.theta0};
        }
    }
    // Arc point of a curved edge at parameter s from v0 to v1.
    auto arc = [&](int e, double s) {
        const auto th = edge_theta[static_cast<std::size_t>(e)];
        const double t = th[0] + s * wrap_angle(th[1] - th[0]);
        return Vec2(std::cos(t), std::sin(t));
    };
    for (int e = 0; e < ne; ++e) {
        const MeshEdge& me = m.edges[static_cast<std::size_t>(e)];
        for (int j = 1; j < k; ++j) {
            const double s = static_cast<double>(j) / k;
            const auto idx = static_cast<std::size_t>(nv + e * (k - 1) + j - 1);
            node_disk_[idx] = edge_curved[static_cast<std::size_t>(e)]
                                  ? arc(e, s)
                                  : Vec2((1 - s) * m.vertices[me.v0] + s * m.vertices[me.v1]);
            node_boundary_[idx] = me.boundary() ? 1 : 0;
        }
    }
    const int npe = basis().size();
    element_nodes_.assign(static_cast<std::size_t>(nt * npe), -1);
    for (int t = 0; t < nt; ++t) {
        const auto& tr = m.triangles[static_cast<std::size_t>(t)];
        int* en = &element_nodes_[static_cast<std::size_t>(t * npe)];
        for (int i = 0; i < 3; ++i) en[i] = tr[i];
        for (int le = 0; le < 3; ++le) {
            const int e = m.triangle_edges[static_cast<std::size_t>(t)][le];
            if (edge_curved[static_cast<std::size_t>(e)]) curved_[static_cast<std::size_t>(t)] = 1;
            const bool forward = tr[kLocalEdges[le][0]] == m.edges[static_cast<std::size_t>(e)].v0;
            for (int j = 0; j < k - 1; ++j) {
                const int g = forward ? j : k - 2 - j;
                en[3 + le * (k - 1) + j] = nv + e * (k - 1) + g;
            }
        }
        if (k == 3) {
            const int node = nv + ne * 2 + t;
            en[9] = node;
            const Vec2& a = m.vertices[tr[0]];
            const Vec2& b = m.vertices[tr[1]];
            const Vec2& c = m.vertices[tr[2]];
            Vec2 p = (a + b + c) / 3.0;
            // Blend: centroid shifted by 2/3 of each curved edge's midpoint bulge.
            for (int le = 0; le < 3; ++le) {
                const int e = m.triangle_edges[static_cast<std::size_t>(t)][le];
                if (!edge_curved[static_cast<std::size_t>(e)]) continue;
                const MeshEdge& me = m.edges[static_cast<std::size_t>(e)];
                const Vec2 mid = 0.5 * (m.vertices[me.v0] + m.vertices[me.v1]);
                p += (2.0 / 3.0) * (arc(e, 0.5) - mid);
            }
            node_disk_[static_cast<std::size_t>(node)] = p;
        }
    }
    map_nodes_and_check();
}

MappedMesh::MappedMesh(std::shared_ptr<const RefMesh> ref, MapExpr map, int degree, std::vector<Vec2> disk,
                       std::vector<int> element_nodes, std::vector<char> boundary, std::vector<char> curved)
    : ref_(std::move(ref)),
      map_(std::move(map)),
      degree_(degree),
      node_disk_(std::move(disk)),
      element_nodes_(std::move(element_nodes)),
      node_boundary_(std::move(boundary)),
      curved_(std::move(curved)) {
    map_nodes_and_check();
}

void MappedMesh::map_nodes_and_check() {
    node_pos_.resize(node_disk_.size());
    for (std::size_t i = 0; i < node_disk_.size(); ++i) node_pos_[i] = map_(node_disk_[i]);
    const auto [det, elem] = min_det();
    if (!(det > 0.0)) {
        std::ostringstream os;
        os << "mapped element " << elem << " has non-positive Jacobian (min det = " << det << ")";
        reject("mesh", os.str());
    }
}

std::vector<int> MappedMesh::edge_nodes(int edge) const {
    const MeshEdge& me = ref_->edges[static_cast<std::size_t>(edge)];
    std::vector<int> out{me.v0};
    const int nv = static_cast<int>(ref_->vertices.size());
    for (int j = 0; j < degree_ - 1; ++j) out.push_back(nv + edge * (degree_ - 1) + j);
    out.push_back(me.v1);
    return out;
}

ElementPoint MappedMesh::geometry(int e, const Vec2& xi) const {
    const LagrangeBasis& b = basis();
    double v[10];
    std::array<double, 2> g[10];
    std::array<double, 3> hs[10];
    b.eval(xi, v, g, hs);
    ElementPoint p;
    p.reference_xi = xi;
    p.x.setZero();
    p.disk.setZero();
    p.jac.setZero();
    p.second[0].setZero();
    p.second[1].setZero();
    const int* en = element_nodes(e);
    for (int i = 0; i < b.size(); ++i) {
        const Vec2& X = node_pos_[static_cast<std::size_t>(en[i])];
        p.x += v[i] * X;
        p.disk += v[i] * node_disk_[static_cast<std::size_t>(en[i])];
        for (int c = 0; c < 2; ++c) {
            p.jac(c, 0) += X[c] * g[i][0];
            p.jac(c, 1) += X[c] * g[i][1];
            p.second[c](0, 0) += X[c] * hs[i][0];
            p.second[c](0, 1) += X[c] * hs[i][1];
            p.second[c](1, 1) += X[c] * hs[i][2];
        }
    }
    for (int c = 0; c < 2; ++c) p.second[c](1, 0) = p.second[c](0, 1);
    p.det = p.jac.determinant();
    p.inv = p.jac.inverse();
    return p;
}

Vec2 MappedMesh::element_point(int e, const Vec2& xi) const {
    const LagrangeBasis& b = basis();
    double v[10];
    b.eval(xi, v);
    Vec2 x = Vec2::Zero();
    const int* en = element_nodes(e);
    for (int i = 0; i < b.size(); ++i) x += v[i] * node_pos_[static_cast<std::size_t>(en[i])];
    return x;
}

double MappedMesh::area() const {
    const QuadratureRule& q = triangle_rule(6);
    double a = 0.0;
    for (int e = 0; e < num_elements(); ++e)
        for (std::size_t i = 0; i < q.points.size(); ++i) a += q.weights[i] * geometry(e, q.points[i]).det;
    return a;
}

std::pair<double, int> MappedMesh::min_det() const {
    const QuadratureRule& q = triangle_rule(5);
    double best = std::numeric_limits<double>::infinity();
    int where = -1;
    for (int e = 0; e < num_elements(); ++e) {
        auto consider = [&](const Vec2& xi) {
            const double d = geometry(e, xi).det;
            if (!(d >= best)) {
                best = d;
                where = e;
            }
        };
        for (const Vec2& xi : q.points) consider(xi);
        for (const Vec2& xi : basis().nodes()) consider(xi);
    }
    return {best, where};
}

MappedMesh map_mesh(std::shared_ptr<const RefMesh> ref, const MapExpr& map, int degree) {
    return MappedMesh(std::move(ref), map, degree);
}

void write_mesh(std::ostream& os, const MappedMesh& mesh) {
    const RefMesh& m = mesh.ref();
    os.precision(17);
    os << "MESH v1\n" << m.vertices.size() << "\n";
    for (std::size_t v = 0; v < m.vertices.size(); ++v) {
        const Vec2& p = mesh.node_position(static_cast<int>(v));
        os << p.x() << " " << p.y() << "\n";
    }
    os << m.triangles.size() << "\n";
    for (const auto& t : m.triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
    os << m.boundary_edges.size() << "\n";
    for (const auto& b : m.boundary_edges) os << b.v0 << " " << b.v1 << " " << b.theta0 << " " << b.theta1 << "\n";
}

}  // namespace spectra_shape
