#include "homog2/mesh.hpp"

#include "homog2/errors.hpp"
#include "homog2/spline.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace homog2 {

namespace {

using nlohmann::json;

constexpr std::array<std::array<int, 3>, 3> kEdgeLocal{{{0, 1, 3}, {1, 2, 4}, {2, 0, 5}}};

const std::vector<int>& tag_or_empty(const Mesh& m, const std::string& name) {
  static const std::vector<int> empty;
  auto it = m.tags.find(name);
  return it == m.tags.end() ? empty : it->second;
}

bool is_known_tag(const std::string& name) {
  static const std::set<std::string> known{"top", "bottom", "left", "right", "corners",
                                           "hole_0", "hole_1", "hole_2", "hole_3"};
  return known.count(name) > 0;
}

void check_tag_exclusivity(const Mesh& m) {
  std::vector<std::string> owner(m.num_nodes());
  for (const auto& [name, ids] : m.tags) {
    for (int id : ids) {
      if (!owner[id].empty() && owner[id] != name)
        throw InputError("node " + std::to_string(id) + " carries two boundary tags: " + owner[id] + " and " +
                         name);
      owner[id] = name;
    }
  }
}

std::vector<std::pair<int, int>> pair_edges(const Mesh& m, const std::vector<int>& from, const std::vector<int>& to,
                                            const Vec2& shift, const char* from_name, const char* to_name,
                                            double tol) {
  if (from.size() != to.size())
    throw InputError(std::string("periodic edges '") + from_name + "' and '" + to_name + "' have " +
                     std::to_string(from.size()) + " and " + std::to_string(to.size()) + " nodes");
  std::vector<std::pair<int, int>> pairs;
  std::vector<bool> used(to.size(), false);
  for (int a : from) {
    const Vec2 target = m.nodes.col(a) + shift;
    int best = -1;
    double best_d = 1e300;
    for (std::size_t k = 0; k < to.size(); ++k) {
      const double d = (m.nodes.col(to[k]) - target).norm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(k);
      }
    }
    if (best < 0 || best_d > tol || used[best]) {
      std::ostringstream msg;
      msg << "unpaired periodic node " << a << " on edge '" << from_name << "': nearest '" << to_name
          << "' partner at distance " << best_d << " mm (tolerance " << tol << ")";
      throw InputError(msg.str());
    }
    used[best] = true;
    pairs.emplace_back(a, to[best]);
  }
  return pairs;
}

std::vector<Edge3> collect_edges(const Mesh& m, const std::set<int>& on_edge) {
  std::vector<Edge3> edges;
  for (const auto& el : m.elements)
    for (const auto& le : kEdgeLocal) {
      const Edge3 e{el[le[0]], el[le[1]], el[le[2]]};
      if (on_edge.count(e[0]) && on_edge.count(e[1]) && on_edge.count(e[2])) edges.push_back(e);
    }
  return edges;
}

void resolve_periodic_cell(Mesh& m, const MeshOptions& opts) {
  const double tol = opts.pairing_tolerance;
  const auto& corners = tag_or_empty(m, "corners");
  if (corners.size() != 4) throw InputError("periodic mesh needs exactly 4 corner nodes");
  const double x0 = m.bounds(0), x1 = m.bounds(1), y0 = m.bounds(2), y1 = m.bounds(3);
  const std::array<Vec2, 4> expect{Vec2(x0, y0), Vec2(x1, y0), Vec2(x1, y1), Vec2(x0, y1)};
  for (int c = 0; c < 4; ++c) {
    for (int id : corners)
      if ((m.nodes.col(id) - expect[c]).norm() <= tol) m.corner[c] = id;
    if (m.corner[c] < 0) throw InputError("corner node at (" + std::to_string(expect[c](0)) + ", " +
                                          std::to_string(expect[c](1)) + ") missing");
  }
  const Vec2 dx(x1 - x0, 0.0), dy(0.0, y1 - y0);
  m.lr_pairs = pair_edges(m, tag_or_empty(m, "left"), tag_or_empty(m, "right"), dx, "left", "right", tol);
  m.bt_pairs = pair_edges(m, tag_or_empty(m, "bottom"), tag_or_empty(m, "top"), dy, "bottom", "top", tol);
  // Corners: both horizontal pairs, one vertical (the fourth would close a cycle).
  m.lr_pairs.emplace_back(m.corner[0], m.corner[1]);
  m.lr_pairs.emplace_back(m.corner[3], m.corner[2]);
  m.bt_pairs.emplace_back(m.corner[0], m.corner[3]);

  for (const auto& side : {"left", "right"})
    for (int id : tag_or_empty(m, side))
      if (std::abs(m.nodes(0, id) - (side[0] == 'l' ? x0 : x1)) > tol)
        throw InputError("node " + std::to_string(id) + " tagged " + side + " is off the edge");
  for (const auto& side : {"bottom", "top"})
    for (int id : tag_or_empty(m, side))
      if (std::abs(m.nodes(1, id) - (side[0] == 'b' ? y0 : y1)) > tol)
        throw InputError("node " + std::to_string(id) + " tagged " + side + " is off the edge");

  std::set<int> top(tag_or_empty(m, "top").begin(), tag_or_empty(m, "top").end());
  top.insert({m.corner[2], m.corner[3]});
  std::set<int> right(tag_or_empty(m, "right").begin(), tag_or_empty(m, "right").end());
  right.insert({m.corner[1], m.corner[2]});
  m.top_edges = collect_edges(m, top);
  m.right_edges = collect_edges(m, right);

  std::set<int> outer;
  for (const auto& side : {"top", "bottom", "left", "right", "corners"})
    for (int id : tag_or_empty(m, side)) outer.insert(id);
  m.outer_nodes.assign(outer.begin(), outer.end());
}

void resolve_holes(Mesh& m, const MeshOptions& opts) {
  for (int k = 0; k < kNumHoles; ++k) {
    for (int id : tag_or_empty(m, "hole_" + std::to_string(k))) {
      const Vec2 x = m.nodes.col(id);
      const double t = project_to_spline(opts.zeta_parent, k, x);
      const double gap = (spline_boundary_target(opts.zeta_parent, k, t) - x).norm();
      if (gap > 1e-7) {
        std::ostringstream msg;
        msg << "hole node " << id << " lies " << gap << " mm off the hole_" << k << " spline at zeta "
            << opts.zeta_parent;
        throw InputError(msg.str());
      }
      m.hole_nodes.push_back({id, k, t});
    }
  }
}

}  // namespace

Mesh parse_mesh(const std::string& json_text, const MeshOptions& opts) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InputError(std::string("mesh file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("elements"))
    throw InputError("mesh file needs 'nodes' and 'elements'");

  Mesh m;
  m.zeta_parent = opts.zeta_parent;
  try {
    const auto& nodes = doc.at("nodes");
    m.nodes.resize(2, static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].size() != 2) throw InputError("node " + std::to_string(i) + " is not a coordinate pair");
      m.nodes(0, i) = nodes[i][0].get<double>();
      m.nodes(1, i) = nodes[i][1].get<double>();
    }
    for (const auto& e : doc.at("elements")) {
      if (e.size() != 6) throw InputError("element with " + std::to_string(e.size()) + " nodes, expected 6");
      Tri6 el;
      for (int a = 0; a < 6; ++a) {
        el[a] = e[a].get<int>();
        if (el[a] < 0 || el[a] >= m.num_nodes())
          throw InputError("element " + std::to_string(m.elements.size()) + " references node " +
                           std::to_string(el[a]));
      }
      m.elements.push_back(el);
    }
    if (doc.contains("tags")) {
      for (const auto& [name, ids] : doc.at("tags").items()) {
        if (!is_known_tag(name)) throw InputError("unknown mesh tag '" + name + "'");
        auto& dst = m.tags[name];
        for (const auto& v : ids) {
          const int id = v.get<int>();
          if (id < 0 || id >= m.num_nodes()) throw InputError("tag '" + name + "' references node " + std::to_string(id));
          dst.push_back(id);
        }
      }
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed mesh file: ") + e.what());
  }
  if (m.elements.empty()) throw InputError("mesh has no elements");

  m.bounds << m.nodes.row(0).minCoeff(), m.nodes.row(0).maxCoeff(), m.nodes.row(1).minCoeff(),
      m.nodes.row(1).maxCoeff();
  check_tag_exclusivity(m);
  try {
    build_quadrature(m);
  } catch (const GeometryError& e) {
    throw InputError(e.what());
  }
  const bool periodic = m.tags.count("left") || m.tags.count("right") || m.tags.count("top") ||
                        m.tags.count("bottom");
  if (periodic) resolve_periodic_cell(m, opts);
  if (opts.has_holes) resolve_holes(m, opts);
  return m;
}

Mesh load_mesh(const std::filesystem::path& path, const MeshOptions& opts) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open mesh file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_mesh(buf.str(), opts);
}

Mesh Mesh::with_nodes(const Eigen::Matrix2Xd& moved) const {
  if (moved.cols() != nodes.cols()) throw InputError("node count mismatch in with_nodes");
  for (int id : outer_nodes)
    if ((moved.col(id) - nodes.col(id)).norm() > 1e-12)
      throw InputError("outer boundary node " + std::to_string(id) + " moved");
  Mesh out = *this;
  out.nodes = moved;
  build_quadrature(out);
  return out;
}

QuadratureCache build_quadrature(const Mesh& mesh) {
  const auto& rule = triangle_rule3();
  QuadratureCache qc;
  const int nq = mesh.num_quad();
  qc.grad.resize(nq);
  qc.value.resize(nq);
  qc.weight.resize(nq);
  qc.point.resize(2, nq);
  Eigen::Matrix<double, 2, 6> xe;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (int a = 0; a < 6; ++a) xe.col(a) = mesh.nodes.col(mesh.elements[e][a]);
    for (int p = 0; p < kQuadPerElement; ++p) {
      const auto s = shape_tri6(rule.points[p](0), rule.points[p](1));
      const Mat2 jac = xe * s.dn;
      const double det = jac.determinant();
      if (!(det > 0.0)) {
        std::ostringstream msg;
        msg << "element " << e << " has non-positive Jacobian " << det << " at quadrature point " << p;
        throw GeometryError(msg.str());
      }
      const int q = kQuadPerElement * e + p;
      qc.grad[q] = s.dn * jac.inverse();
      qc.value[q] = s.n;
      qc.weight(q) = rule.weights[p] * det;
      qc.point.col(q) = xe * s.n;
    }
  }
  return qc;
}

double mesh_area(const Mesh& mesh) {
  const auto& rule = line_rule3();
  double area = 0.0;
  for (const auto& el : mesh.elements)
    for (const auto& le : kEdgeLocal) {
      const Vec2 a = mesh.nodes.col(el[le[0]]), b = mesh.nodes.col(el[le[1]]), c = mesh.nodes.col(el[le[2]]);
      for (int g = 0; g < 3; ++g) {
        const double s = rule.points[g];
        const Eigen::Vector3d n = shape_line3(s);
        const Eigen::Vector3d dn(4 * s - 3, 4 * s - 1, 4 - 8 * s);
        const Vec2 x = n(0) * a + n(1) * b + n(2) * c;
        const Vec2 dx = dn(0) * a + dn(1) * b + dn(2) * c;
        area += rule.weights[g] * 0.5 * (x(0) * dx(1) - x(1) * dx(0));
      }
    }
  return area;
}

}  // namespace homog2
