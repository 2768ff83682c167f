#include "homog2/rom.hpp"

#include "homog2/errors.hpp"
#include "homog2/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <sstream>

namespace homog2 {

namespace {
constexpr double kMaxIncrement = 0.05;  // largest Newton displacement update per unit cell length
}  // namespace

using nlohmann::json;

namespace {

constexpr const char* kMagic = "HOMOG2ROM1\n";

json pod_sizes(const PodBasis& b) {
  return {{"rows", b.v.rows()}, {"rank", b.rank()}, {"spectrum", b.sigma_all.size()}};
}

void append_pod(std::string& buf, const PodBasis& b) {
  append_f64(buf, b.v);
  append_f64(buf, b.sigma);
  append_f64(buf, b.sigma_all);
}

PodBasis take_pod(std::string_view& buf, const json& sizes) {
  PodBasis b;
  const auto rows = sizes.at("rows").get<Eigen::Index>(), rank = sizes.at("rank").get<Eigen::Index>();
  b.v = take_f64(buf, rows, rank);
  b.sigma = take_f64(buf, rank, 1);
  b.sigma_all = take_f64(buf, sizes.at("spectrum").get<Eigen::Index>(), 1);
  return b;
}

}  // namespace

std::string RomArtifact::serialize() const {
  json header;
  header["schema_version"] = kSchemaVersion;
  header["zeta_parent"] = zeta_parent;
  header["material"] = {{"c1", params.c1}, {"c2", params.c2}, {"bulk", params.bulk}};
  header["provenance"] = json::parse(provenance);
  header["mesh"] = mesh_json;
  header["w"] = pod_sizes(w);
  header["y"] = pod_sizes(y);
  header["yh"] = pod_sizes(yh);
  json cub;
  cub["indices"] = scheme.indices;
  cub["converged"] = scheme.converged;
  cub["nnls_kkt"] = scheme.nnls_kkt;
  cub["eps"] = scheme.config.eps;
  cub["c"] = scheme.config.c;
  cub["k_max"] = scheme.config.k_max;
  json hist = json::array();
  for (const auto& st : scheme.history) hist.push_back({st.q, st.r[0], st.r[1], st.r[2], st.r[3]});
  cub["history"] = std::move(hist);
  header["cubature"] = std::move(cub);
  header["blocks"] = {"w.v", "w.sigma", "w.sigma_all", "y.v", "y.sigma", "y.sigma_all",
                      "yh.v", "yh.sigma", "yh.sigma_all", "cubature.weights"};
  const std::string text = header.dump();
  std::string out = kMagic;
  const std::uint64_t len = text.size();
  out.append(reinterpret_cast<const char*>(&len), sizeof(len));
  out += text;
  append_pod(out, w);
  append_pod(out, y);
  append_pod(out, yh);
  append_f64(out, scheme.weights);
  return out;
}

RomArtifact RomArtifact::deserialize(const std::string& bytes) {
  std::string_view view(bytes);
  const std::size_t magic_len = std::strlen(kMagic);
  if (view.substr(0, magic_len) != kMagic) throw InputError("not a ROM artifact (bad magic)");
  view.remove_prefix(magic_len);
  std::uint64_t len = 0;
  if (view.size() < sizeof(len)) throw InputError("ROM artifact truncated");
  std::memcpy(&len, view.data(), sizeof(len));
  view.remove_prefix(sizeof(len));
  if (view.size() < len) throw InputError("ROM artifact header truncated");
  RomArtifact art;
  try {
    const json header = json::parse(view.substr(0, len));
    view.remove_prefix(len);
    if (header.at("schema_version").get<int>() != kSchemaVersion) throw InputError("unsupported ROM artifact schema");
    art.zeta_parent = header.at("zeta_parent").get<double>();
    const auto& mat = header.at("material");
    art.params.c1 = mat.at("c1").get<double>();
    art.params.c2 = mat.at("c2").get<double>();
    art.params.bulk = mat.at("bulk").get<double>();
    art.provenance = header.at("provenance").dump();
    art.mesh_json = header.at("mesh").get<std::string>();
    art.w = take_pod(view, header.at("w"));
    art.y = take_pod(view, header.at("y"));
    art.yh = take_pod(view, header.at("yh"));
    const auto& cub = header.at("cubature");
    art.scheme.indices = cub.at("indices").get<std::vector<int>>();
    art.scheme.converged = cub.at("converged").get<bool>();
    art.scheme.nnls_kkt = cub.at("nnls_kkt").get<double>();
    art.scheme.config.eps = cub.at("eps").get<std::array<double, 4>>();
    art.scheme.config.c = cub.at("c").get<std::array<double, 3>>();
    art.scheme.config.k_max = cub.at("k_max").get<int>();
    for (const auto& row : cub.at("history"))
      art.scheme.history.push_back({row.at(0).get<int>(),
                                    {row.at(1).get<double>(), row.at(2).get<double>(), row.at(3).get<double>(),
                                     row.at(4).get<double>()}});
    art.scheme.weights = take_f64(view, static_cast<Eigen::Index>(art.scheme.indices.size()), 1);
  } catch (const json::exception& e) {
    throw InputError(std::string("ROM artifact header: ") + e.what());
  }
  if (!view.empty()) throw InputError("ROM artifact has trailing bytes");
  return art;
}

void write_artifact(const std::filesystem::path& path, const RomArtifact& artifact) {
  write_text(path, artifact.serialize());
}

RomArtifact read_artifact(const std::filesystem::path& path) { return RomArtifact::deserialize(read_text(path)); }

RomModel::RomModel(std::shared_ptr<const Mesh> mesh, const PodBasis& w, const CubatureScheme& scheme,
                   const MaterialParams& params, const RomOptions& opts)
    : mesh_(std::move(mesh)), vw_(w.v), params_(params), opts_(opts) {
  params_.validate();
  qc_ = build_quadrature(*mesh_);
  if (vw_.rows() != mesh_->num_dofs()) throw InputError("ROM basis does not match the mesh");
  if (opts_.full_quadrature) {
    points_.resize(qc_.size());
    for (int q = 0; q < qc_.size(); ++q) points_[q] = q;
    h_ = qc_.weight;
  } else {
    points_ = scheme.indices;
    h_ = scheme.weights;
    if (static_cast<int>(h_.size()) != static_cast<int>(points_.size()))
      throw InputError("cubature indices and weights differ in length");
    for (int q : points_)
      if (q < 0 || q >= qc_.size()) throw InputError("cubature index out of range");
  }
  grad_.reserve(points_.size());
  for (int q : points_) grad_.push_back(mode_gradients(*mesh_, qc_, vw_, q));
}

RomModel RomModel::from_artifact(const RomArtifact& artifact, const RomOptions& opts) {
  MeshOptions mo;
  mo.zeta_parent = artifact.zeta_parent;
  auto mesh = std::make_shared<const Mesh>(parse_mesh(artifact.mesh_json, mo));
  return RomModel(std::move(mesh), artifact.w, artifact.scheme, artifact.params, opts);
}

std::shared_ptr<RomModel> RomModel::shared_from_artifact(const RomArtifact& artifact, const RomOptions& opts) {
  MeshOptions mo;
  mo.zeta_parent = artifact.zeta_parent;
  auto mesh = std::make_shared<const Mesh>(parse_mesh(artifact.mesh_json, mo));
  return std::make_shared<RomModel>(std::move(mesh), artifact.w, artifact.scheme, artifact.params, opts);
}

double RomModel::newton_tol() const { return opts_.newton_tol > 0 ? opts_.newton_tol : 1e-8 * params_.c1; }

std::shared_ptr<const RomModel::Geometry> RomModel::geometry(double zeta) const {
  const long long key = std::llround(zeta * 1e12);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = geometry_.find(key); it != geometry_.end()) return it->second;
  }
  const TransformationMap map = solve_auxiliary_transform(*mesh_, qc_, zeta, opts_.min_jdet);
  auto geo = std::make_shared<Geometry>();
  geo->zeta = zeta;
  geo->v_norm = map.volume;
  const int np = num_points();
  geo->f_mu_inv.resize(np);
  geo->jdet.resize(np);
  geo->x_mu.resize(2, np);
  geo->b.resize(np);
  for (int k = 0; k < np; ++k) {
    const int q = points_[k];
    geo->f_mu_inv[k] = map.f_mu_inv[q];
    geo->jdet(k) = map.jdet(q);
    geo->x_mu.col(k) = map.x_mu.col(q);
    geo->b[k] = right_multiply_map(map.f_mu_inv[q]) * grad_[k];
  }
  geo->rigid = Eigen::MatrixXd::Zero(2, size());
  for (int q = 0; q < qc_.size(); ++q) {
    const Tri6& el = mesh_->elements[q / kQuadPerElement];
    const double w = qc_.weight(q) * map.jdet(q);
    for (int a = 0; a < 6; ++a)
      for (int c = 0; c < 2; ++c) geo->rigid.row(c) += w * qc_.value[q](a) * vw_.row(2 * el[a] + c);
  }
  std::lock_guard<std::mutex> lock(mutex_);
  return geometry_.emplace(key, std::move(geo)).first->second;
}

void RomModel::assemble(const Eigen::VectorXd& a, const MacroInput& input, Eigen::VectorXd& f, Eigen::MatrixXd* k,
                        PointCache* cache) const {
  const auto geo = geometry(input.zeta);
  const int n = size();
  const Vec8 g8 = expand_gradient(input.gbar);
  f.setZero(n);
  if (k) k->setZero(n, n);
  if (cache) {
    cache->f.resize(num_points());
    cache->p.resize(num_points());
    cache->a.resize(num_points());
  }
  for (int p = 0; p < num_points(); ++p) {
    const Eigen::MatrixXd& b = geo->b[p];
    const Vec4 h = b * a;
    const Mat2 fq = input.fbar + contract_position(Vec2(geo->x_mu.col(p)), g8) + unflatten(h);
    const PointResponse r = stress_and_tangent(fq, params_);
    const double w = h_(p) * geo->jdet(p);
    f.noalias() += w * b.transpose() * flatten(r.stress);
    if (k) k->noalias() += w * b.transpose() * r.tangent * b;
    if (cache) {
      cache->f[p] = fq;
      cache->p[p] = r.stress;
      cache->a[p] = r.tangent;
    }
  }
}

Eigen::MatrixXd RomModel::solve_linear(const Eigen::MatrixXd& k, const Eigen::MatrixXd& rhs, const Geometry& geo,
                                       bool constrained, Eigen::MatrixXd* mult) const {
  const int n = size();
  const double scale = std::max(k.cwiseAbs().maxCoeff(), 1e-300);
  if (!constrained) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(k);
    const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
    if (ldlt.info() != Eigen::Success || d.minCoeff() <= 1e-13 * scale)
      throw SolverError("reduced stiffness is numerically singular");
    Eigen::MatrixXd x = ldlt.solve(rhs);
    if (!x.allFinite() || (k * x - rhs).norm() > 1e-8 * std::max(rhs.norm(), 1e-300)) {
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(k);
      x = lu.solve(rhs);
    }
    if (!x.allFinite()) throw SolverError("reduced linear solve produced non-finite values");
    return x;
  }
  const Eigen::MatrixXd c = geo.rigid * (scale / std::max(geo.rigid.cwiseAbs().maxCoeff(), 1e-300));
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + 2, n + 2);
  kkt.topLeftCorner(n, n) = k;
  kkt.topRightCorner(n, 2) = c.transpose();
  kkt.bottomLeftCorner(2, n) = c;
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n + 2, rhs.cols());
  full.topRows(n) = rhs;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (lu.rank() < n + 2) throw SolverError("reduced stiffness with rigid-body rows is singular");
  const Eigen::MatrixXd x = lu.solve(full);
  if (mult) *mult = x.bottomRows(2) * (scale / std::max(geo.rigid.cwiseAbs().maxCoeff(), 1e-300));
  return x.topRows(n);
}

bool RomModel::newton(RomState& st, const MacroInput& input, const Geometry& geo) const {
  const double tol = newton_tol();
  Eigen::VectorXd a = st.a, f;
  Eigen::MatrixXd k;
  double first = -1.0;
  for (int it = 0;; ++it) {
    try {
      assemble(a, input, f, &k);
    } catch (const InadmissibleState&) {
      return false;
    }
    if (it > 0) {
      double r;
      if (st.constrained) {
        // least-squares multipliers for the two rigid-body rows
        const Eigen::MatrixXd ct = geo.rigid.transpose();
        const Eigen::Vector2d m = -(ct.transpose() * ct).ldlt().solve(ct.transpose() * f);
        r = (f + ct * m).norm();
        st.mult = m;
      } else {
        r = f.norm();
      }
      if (!std::isfinite(r)) return false;
      if (first < 0) first = r;
      if (r <= tol) {
        st.a = std::move(a);
        st.input = input;
        st.newton_iterations = it;
        st.total_iterations += it;
        assemble(st.a, input, f, nullptr, &st.points);
        return true;
      }
      if (r > 1e6 * std::max(first, tol)) return false;
    }
    if (it >= opts_.max_iterations) return false;
    Eigen::MatrixXd da;
    try {
      da = solve_linear(k, -f, geo, st.constrained);
    } catch (const SolverError&) {
      if (opts_.rigid_guard && !st.constrained) {
        st.constrained = true;
        --it;
        continue;
      }
      return false;
    }
    const double step = (vw_ * da.col(0)).cwiseAbs().maxCoeff();
    const double cap = kMaxIncrement * std::sqrt(geo.v_norm);
    a += (step > cap ? cap / step : 1.0) * da.col(0);
  }
}

double RomModel::energy(const Eigen::VectorXd& a, const MacroInput& input) const {
  const auto geo = geometry(input.zeta);
  const Vec8 g8 = expand_gradient(input.gbar);
  double e = 0.0;
  for (int p = 0; p < num_points(); ++p) {
    const Mat2 fq = input.fbar + contract_position(Vec2(geo->x_mu.col(p)), g8) + unflatten(Vec4(geo->b[p] * a));
    e += h_(p) * geo->jdet(p) * homog2::energy<double>(fq, params_);
  }
  return e;
}

void RomModel::stabilize(RomState& st, const Geometry& geo) const {
  if (st.constrained) return;
  const double noise = 1e-9 * (params_.bulk + 2.0 * params_.c1) * geo.v_norm / std::max(1, mesh_->num_elements());
  const double length = std::sqrt(geo.v_norm);
  const Eigen::VectorXd ref = vw_.transpose() * pattern_reference(*mesh_);
  for (int attempt = 0; attempt < 3; ++attempt) {
    Eigen::VectorXd f;
    Eigen::MatrixXd k;
    assemble(st.a, st.input, f, &k);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    st.min_eigenvalue = es.eigenvalues()(0);
    if (st.min_eigenvalue >= -noise) return;
    Eigen::VectorXd mode = es.eigenvectors().col(0);
    mode /= (vw_ * mode).cwiseAbs().maxCoeff();
    if (mode.dot(ref) < 0.0) mode = -mode;
    double e0;
    try {
      e0 = energy(st.a, st.input);
    } catch (const InadmissibleState&) {
      return;
    }
    e0 -= 1e-12 * std::abs(e0);
    bool moved = false;
    for (double sign : {1.0, -1.0}) {
      for (double amp : {0.005, 0.02, 0.06}) {
        RomState trial = st;
        trial.a = st.a + sign * amp * length * mode;
        if (!newton(trial, st.input, geo)) continue;
        if (sign * (trial.a - st.a).dot(mode) < 0.02 * amp * length * mode.squaredNorm()) continue;
        try {
          if (!(energy(trial.a, st.input) < e0)) continue;
        } catch (const InadmissibleState&) {
          continue;
        }
        trial.branch_switches = st.branch_switches + 1;
        st = std::move(trial);
        moved = true;
        break;
      }
      if (moved) break;
    }
    if (!moved) return;
  }
}

RomState RomModel::continuation(RomState cur, const MacroInput& target, int nsteps) const {
  if (nsteps < 1) throw InputError("load steps must be positive");
  if (!(target.fbar.determinant() > 0.0)) throw InputError("det Fbar must be positive");
  const auto geo = geometry(target.zeta);
  const MacroInput from = cur.input;
  cur.total_iterations = 0;
  cur.step_cuts = 0;
  cur.branch_switches = 0;
  double s = 0.0;
  for (int kstep = 1; kstep <= nsteps; ++kstep) {
    const double s_target = static_cast<double>(kstep) / nsteps;
    double ds = s_target - s;
    int cuts = 0;
    while (s < s_target - 1e-14) {
      const double s_try = std::min(s + ds, s_target);
      RomState trial = cur;
      if (newton(trial, interpolate(from, target, s_try), *geo)) {
        if (opts_.stability) stabilize(trial, *geo);
        cur = std::move(trial);
        s = s_try;
      } else {
        ++cuts;
        ++cur.step_cuts;
        if (cuts > opts_.max_cuts) {
          std::ostringstream msg;
          msg << "reduced Newton failed after " << opts_.max_cuts << " step cuts; last converged load factor " << s;
          cur.converged = false;
          cur.t_reached = s;
          cur.message = msg.str();
          return cur;
        }
        ds *= 0.5;
      }
    }
  }
  cur.converged = true;
  cur.t_reached = 1.0;
  return cur;
}

RomState RomModel::solve(const MacroInput& input, int loadsteps) const {
  RomState start;
  start.a = Eigen::VectorXd::Zero(size());
  start.input = MacroInput{};
  start.input.zeta = input.zeta;
  start.converged = true;
  return continuation(std::move(start), input, loadsteps);
}

RomState RomModel::solve_from(const RomState& start, const MacroInput& input, int loadsteps) const {
  if (!start.converged || start.a.size() != size()) throw InputError("warm start needs a converged reduced state");
  if (std::abs(start.input.zeta - input.zeta) > 1e-12) throw InputError("warm start has a different zeta");
  return continuation(start, input, loadsteps);
}

std::pair<Mat2, Vec8> RomModel::effective_stress(const RomState& st) const {
  if (!st.converged) throw SolverError("effective stress needs a converged reduced state");
  const auto geo = geometry(st.input.zeta);
  Mat2 p = Mat2::Zero();
  Vec8 qm = Vec8::Zero();
  for (int k = 0; k < num_points(); ++k) {
    const double w = h_(k) * geo->jdet(k);
    p += w * st.points.p[k] * geo->f_mu_inv[k].transpose();
    qm += w * stress_moment(st.points.p[k], geo->x_mu.col(k));
  }
  return {p / geo->v_norm, qm / geo->v_norm};
}

EffectiveResponse RomModel::effective(const RomState& st) const {
  if (!st.converged) throw SolverError("effective response needs a converged reduced state");
  const auto geo = geometry(st.input.zeta);
  using Mat4x10 = Eigen::Matrix<double, 4, 10>;
  const int n = size(), np = num_points();
  std::vector<Mat4x10> direct(np);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 10);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (int p = 0; p < np; ++p) {
    Mat4x10& d = direct[p];
    d.setZero();
    d.leftCols<4>().setIdentity();
    const Vec2 x = geo->x_mu.col(p);
    for (int s = 0; s < 6; ++s) d.col(4 + s) = flatten(contract_position(x, expand_gradient(Vec6::Unit(s))));
    const double w = h_(p) * geo->jdet(p);
    const Eigen::MatrixXd bta = w * geo->b[p].transpose() * st.points.a[p];
    rhs.noalias() -= bta * d;
    k.noalias() += bta * geo->b[p];
  }
  const Eigen::MatrixXd sens = solve_linear(k, rhs, *geo, st.constrained);
  Mat4x10 dp = Mat4x10::Zero();
  Eigen::Matrix<double, 8, 10> dq = Eigen::Matrix<double, 8, 10>::Zero();
  for (int p = 0; p < np; ++p) {
    const Mat4x10 t = st.points.a[p] * (direct[p] + geo->b[p] * sens);
    const double w = h_(p) * geo->jdet(p);
    dp += w * right_multiply_map(geo->f_mu_inv[p].transpose()) * t;
    dq += w * stress_moment_map(geo->x_mu.col(p)) * t;
  }
  EffectiveResponse out;
  std::tie(out.pbar, out.qbar) = effective_stress(st);
  out.dp_df = dp.leftCols<4>() / geo->v_norm;
  out.dp_dg = dp.rightCols<6>() / geo->v_norm;
  out.dq_df = dq.leftCols<4>() / geo->v_norm;
  out.dq_dg = dq.rightCols<6>() / geo->v_norm;
  return out;
}

}  // namespace homog2
