#include "homog2/micro.hpp"

#include "homog2/errors.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace homog2 {

namespace {

using Mat4x12 = Eigen::Matrix<double, 4, 12>;

// dF (vec) = B * (local nodal values, index 2 a + i)
Mat4x12 gradient_operator(const Tri6Grads& g) {
  Mat4x12 b = Mat4x12::Zero();
  for (int a = 0; a < 6; ++a)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) b(idx2(i, j), 2 * a + i) = g(a, j);
  return b;
}

std::array<int, 12> element_dofs(const Tri6& el) {
  std::array<int, 12> d;
  for (int a = 0; a < 6; ++a) {
    d[2 * a] = 2 * el[a];
    d[2 * a + 1] = 2 * el[a] + 1;
  }
  return d;
}

void add_edge_rows(const Mesh& mesh, const std::vector<Edge3>& edges, int row0,
                   std::vector<Eigen::Triplet<double>>& trip) {
  const auto& rule = line_rule3();
  for (const auto& e : edges) {
    const Vec2 a = mesh.nodes.col(e[0]), b = mesh.nodes.col(e[1]), c = mesh.nodes.col(e[2]);
    for (int g = 0; g < 3; ++g) {
      const double s = rule.points[g];
      const Eigen::Vector3d n = shape_line3(s);
      const Vec2 dx = (4 * s - 3) * a + (4 * s - 1) * b + (4 - 8 * s) * c;
      const double ds = rule.weights[g] * dx.norm();
      for (int k = 0; k < 3; ++k)
        for (int comp = 0; comp < 2; ++comp) trip.emplace_back(row0 + comp, 2 * e[k] + comp, n(k) * ds);
    }
  }
}

}  // namespace

MacroInput interpolate(const MacroInput& a, const MacroInput& b, double s) {
  MacroInput out;
  out.fbar = a.fbar + s * (b.fbar - a.fbar);
  out.gbar = a.gbar + s * (b.gbar - a.gbar);
  out.zeta = b.zeta;
  return out;
}

ConstraintSet build_constraints(const Mesh& mesh, const QuadratureCache& qc, const TransformationMap& map) {
  if (!mesh.is_periodic_cell()) throw InputError("constraints need a periodic cell mesh");
  ConstraintSet cs;
  std::vector<Eigen::Triplet<double>> trip;
  int row = 0;
  for (const auto* pairs : {&mesh.lr_pairs, &mesh.bt_pairs})
    for (const auto& [from, to] : *pairs)
      for (int comp = 0; comp < 2; ++comp) {
        trip.emplace_back(row, 2 * to + comp, 1.0);
        trip.emplace_back(row, 2 * from + comp, -1.0);
        cs.kind.push_back(ConstraintKind::PbcPair);
        ++row;
      }
  add_edge_rows(mesh, mesh.top_edges, row, trip);
  cs.kind.insert(cs.kind.end(), 2, ConstraintKind::TopIntegral);
  row += 2;
  add_edge_rows(mesh, mesh.right_edges, row, trip);
  cs.kind.insert(cs.kind.end(), 2, ConstraintKind::RightIntegral);
  row += 2;
  for (int e = 0; e < mesh.num_elements(); ++e)
    for (int p = 0; p < kQuadPerElement; ++p) {
      const int q = kQuadPerElement * e + p;
      const double w = qc.weight(q) * map.jdet(q);
      for (int a = 0; a < 6; ++a)
        for (int comp = 0; comp < 2; ++comp) trip.emplace_back(row + comp, 2 * mesh.elements[e][a] + comp, qc.value[q](a) * w);
    }
  cs.kind.insert(cs.kind.end(), 2, ConstraintKind::RigidBody);
  row += 2;
  cs.c.resize(row, mesh.num_dofs());
  cs.c.setFromTriplets(trip.begin(), trip.end());
  cs.c.makeCompressed();
  check_constraint_rank(cs);
  return cs;
}

MicroModel::MicroModel(std::shared_ptr<const Mesh> mesh, double zeta, const MaterialParams& params,
                       const MicroOptions& opts)
    : mesh_(std::move(mesh)), params_(params), opts_(opts) {
  params_.validate();
  qc_ = build_quadrature(*mesh_);
  map_ = solve_auxiliary_transform(*mesh_, qc_, zeta, opts_.min_jdet);
  finish_setup();
}

MicroModel::MicroModel(std::shared_ptr<const Mesh> mesh, QuadratureCache qc, TransformationMap map,
                       const MaterialParams& params, const MicroOptions& opts)
    : mesh_(std::move(mesh)), qc_(std::move(qc)), map_(std::move(map)), params_(params), opts_(opts) {
  params_.validate();
  finish_setup();
}

MicroModel MicroModel::physical(std::shared_ptr<const Mesh> mesh, const MaterialParams& params,
                                const MicroOptions& opts) {
  QuadratureCache qc = build_quadrature(*mesh);
  TransformationMap map = identity_transform(*mesh, qc);
  return MicroModel(std::move(mesh), std::move(qc), std::move(map), params, opts);
}

void MicroModel::finish_setup() {
  const int nq = qc_.size();
  grad_.resize(nq);
  wq_.resize(nq);
  for (int q = 0; q < nq; ++q) {
    grad_[q] = qc_.grad[q] * map_.f_mu_inv[q];
    wq_(q) = qc_.weight(q) * map_.jdet(q);
  }
  constraints_ = build_constraints(*mesh_, qc_, map_);
  SpMat cct = constraints_.c * SpMat(constraints_.c.transpose());
  auto ldlt = std::make_shared<Eigen::SimplicialLDLT<SpMat>>(cct);
  if (ldlt->info() != Eigen::Success) throw SolverError("factorization of C C^T failed");
  cct_ = std::move(ldlt);
}

double MicroModel::newton_tol() const { return opts_.newton_tol > 0 ? opts_.newton_tol : 1e-8 * params_.c1 * 1.0; }

Mat2 MicroModel::deformation(const Eigen::VectorXd& w, const Mat2& fbar, const Vec8& g8, int q) const {
  const Tri6& el = mesh_->elements[q / kQuadPerElement];
  const Tri6Grads& g = grad_[q];
  Mat2 h = Mat2::Zero();
  for (int a = 0; a < 6; ++a) h += w.segment<2>(2 * el[a]) * g.row(a);
  const Vec2 x = map_.x_mu.col(q);
  return fbar + contract_position(x, g8) + h;
}

void MicroModel::assemble(const Eigen::VectorXd& w, const MacroInput& input, Eigen::VectorXd& f, SpMat* k,
                          PointCache* cache) const {
  const int n = num_dofs();
  const Vec8 g8 = expand_gradient(input.gbar);
  f.setZero(n);
  std::vector<Eigen::Triplet<double>> trip;
  if (k) trip.reserve(static_cast<std::size_t>(mesh_->num_elements()) * 144);
  if (cache) {
    cache->f.resize(num_quad());
    cache->p.resize(num_quad());
    cache->a.resize(num_quad());
  }
  Eigen::Matrix<double, 12, 1> fe;
  Eigen::Matrix<double, 12, 12> ke;
  for (int e = 0; e < mesh_->num_elements(); ++e) {
    fe.setZero();
    ke.setZero();
    for (int p = 0; p < kQuadPerElement; ++p) {
      const int q = kQuadPerElement * e + p;
      const Mat2 fq = deformation(w, input.fbar, g8, q);
      const PointResponse r = stress_and_tangent(fq, params_);
      const Mat4x12 b = gradient_operator(grad_[q]);
      fe.noalias() += wq_(q) * b.transpose() * flatten(r.stress);
      if (k) ke.noalias() += wq_(q) * b.transpose() * r.tangent * b;
      if (cache) {
        cache->f[q] = fq;
        cache->p[q] = r.stress;
        cache->a[q] = r.tangent;
      }
    }
    const auto dofs = element_dofs(mesh_->elements[e]);
    for (int r = 0; r < 12; ++r) {
      f(dofs[r]) += fe(r);
      if (k)
        for (int c = 0; c < 12; ++c) trip.emplace_back(dofs[r], dofs[c], ke(r, c));
    }
  }
  if (k) {
    k->resize(n, n);
    k->setFromTriplets(trip.begin(), trip.end());
  }
}

double MicroModel::constrained_residual(const Eigen::VectorXd& f, Eigen::VectorXd* m) const {
  const Eigen::VectorXd mult = -cct_->solve(constraints_.c * f);
  const double r = (f + constraints_.c.transpose() * mult).norm();
  if (m) *m = mult;
  return r;
}

std::unique_ptr<SaddleSolver> MicroModel::make_solver() const {
  return std::make_unique<SaddleSolver>(constraints_.c, params_.bulk + 2.0 * params_.c1);
}

bool MicroModel::newton(MicroSolution& sol, const MacroInput& input, SaddleSolver& solver) const {
  const double tol = newton_tol();
  Eigen::VectorXd w = sol.w;
  Eigen::VectorXd f, m;
  SpMat k;
  std::vector<double> history;
  for (int it = 0;; ++it) {
    try {
      assemble(w, input, f, &k);
    } catch (const InadmissibleState&) {
      return false;
    }
    if (it > 0) {
      const double r = constrained_residual(f, &m);
      history.push_back(r);
      if (!std::isfinite(r)) return false;
      if (r <= tol) {
        sol.w = std::move(w);
        sol.m = std::move(m);
        sol.input = input;
        sol.newton_iterations = it;
        sol.total_iterations += it;
        sol.residuals = std::move(history);
        assemble(sol.w, input, f, nullptr, &sol.points);
        sol.factor.reset();
        return true;
      }
      if (r > 1e6 * std::max(history.front(), tol)) return false;
    }
    if (it >= opts_.max_iterations) return false;
    Eigen::MatrixXd dw, mult;
    try {
      solver.factorize(k);
      solver.solve(-f, Eigen::MatrixXd(), dw, mult);
    } catch (const SolverError&) {
      return false;
    }
    w += dw.col(0);
  }
}

double MicroModel::energy(const Eigen::VectorXd& w, const MacroInput& input) const {
  const Vec8 g8 = expand_gradient(input.gbar);
  double e = 0.0;
  for (int q = 0; q < num_quad(); ++q) e += wq_(q) * homog2::energy<double>(deformation(w, input.fbar, g8, q), params_);
  return e;
}

std::pair<double, Eigen::VectorXd> MicroModel::lowest_mode(const MicroSolution& sol) const {
  Eigen::VectorXd f;
  SpMat k;
  assemble(sol.w, sol.input, f, &k);
  const int n = num_dofs();
  SpMat eye(n, n);
  eye.setIdentity();
  double shift = 1e-4 * params_.c1;
  for (int attempt = 0;; ++attempt) {
    try {
      auto solver = make_solver();
      solver->factorize(k + shift * eye);
      std::mt19937_64 rng(20240611);
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      Eigen::MatrixXd v(n, 1), x, mult;
      for (int i = 0; i < n; ++i) v(i, 0) = dist(rng);
      solver->solve(v, Eigen::MatrixXd(), x, mult);
      v = x / x.norm();
      double mu = 0.0;
      for (int it = 0; it < 80; ++it) {
        solver->solve(v, Eigen::MatrixXd(), x, mult);
        const double vx = v.col(0).dot(x.col(0));
        const double xn = x.norm();
        const double change = (x.col(0) / (vx > 0 ? xn : -xn) - v.col(0)).norm();
        v = x / (vx > 0 ? xn : -xn);
        mu = 1.0 / vx;
        if (change < 1e-8) break;
      }
      return {mu - shift, v.col(0)};
    } catch (const SolverError&) {
      if (attempt >= 3) throw;
      shift *= 3.0;
    }
  }
}

void MicroModel::stabilize(MicroSolution& sol, SaddleSolver& solver) const {
  const double noise = 1e-9 * (params_.bulk + 2.0 * params_.c1) * volume() / std::max(1, mesh_->num_elements());
  const double length = std::sqrt(volume());
  const Eigen::VectorXd ref = pattern_reference(*mesh_);
  for (int attempt = 0; attempt < 3; ++attempt) {
    auto [lambda, mode] = lowest_mode(sol);
    sol.min_eigenvalue = lambda;
    if (lambda >= -noise) return;
    mode /= mode.cwiseAbs().maxCoeff();
    if (mode.dot(ref) < 0.0) mode = -mode;
    double e0;
    try {
      e0 = energy(sol.w, sol.input);
    } catch (const InadmissibleState&) {
      return;
    }
    e0 -= 1e-12 * std::abs(e0);
    bool moved = false;
    for (double sign : {1.0, -1.0}) {
      for (double amp : {0.005, 0.02, 0.06}) {
        MicroSolution trial;
        trial.w = sol.w + sign * amp * length * mode;
        trial.total_iterations = sol.total_iterations;
        if (!newton(trial, sol.input, solver)) continue;
        if (sign * (trial.w - sol.w).dot(mode) < 0.02 * amp * length * mode.squaredNorm()) continue;
        try {
          if (!(energy(trial.w, sol.input) < e0)) continue;
        } catch (const InadmissibleState&) {
          continue;
        }
        trial.step_cuts = sol.step_cuts;
        trial.branch_switches = sol.branch_switches + 1;
        trial.converged = sol.converged;
        trial.t_reached = sol.t_reached;
        sol = std::move(trial);
        moved = true;
        break;
      }
      if (moved) break;
    }
    if (!moved) return;
  }
}

Eigen::VectorXd pattern_reference(const Mesh& mesh) {
  Eigen::VectorXd r(mesh.num_dofs());
  for (int a = 0; a < mesh.num_nodes(); ++a) {
    const double x = M_PI * mesh.nodes(0, a), y = M_PI * mesh.nodes(1, a);
    r(2 * a) = -std::cos(x) * std::sin(y);
    r(2 * a + 1) = std::sin(x) * std::cos(y);
  }
  return r;
}

MicroSolution MicroModel::continuation(MicroSolution cur, const MacroInput& target, int nsteps,
                                       const StepCallback& on_step) const {
  if (nsteps < 1) throw InputError("load steps must be positive");
  if (std::abs(target.zeta - zeta()) > 1e-12) throw InputError("macro input zeta does not match the micro model");
  if (!(target.fbar.determinant() > 0.0)) throw InputError("det Fbar must be positive");
  auto solver = make_solver();
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
      MicroSolution trial;
      trial.w = cur.w;
      trial.total_iterations = cur.total_iterations;
      if (newton(trial, interpolate(from, target, s_try), *solver)) {
        trial.step_cuts = cur.step_cuts;
        trial.branch_switches = cur.branch_switches;
        if (opts_.stability) stabilize(trial, *solver);
        cur = std::move(trial);
        s = s_try;
      } else {
        ++cuts;
        ++cur.step_cuts;
        if (cuts > opts_.max_cuts) {
          std::ostringstream msg;
          msg << "micro Newton failed after " << opts_.max_cuts << " step cuts; last converged load factor " << s;
          cur.converged = false;
          cur.t_reached = s;
          cur.message = msg.str();
          return cur;
        }
        ds *= 0.5;
      }
    }
    cur.t_reached = s_target;
    cur.converged = true;
    if (on_step) on_step(cur, s_target);
  }
  cur.converged = true;
  cur.t_reached = 1.0;
  return cur;
}

MicroSolution MicroModel::solve(const MacroInput& input, int loadsteps, const StepCallback& on_step) const {
  MicroSolution start;
  start.w = Eigen::VectorXd::Zero(num_dofs());
  start.input = MacroInput{};
  start.input.zeta = input.zeta;
  start.converged = true;
  return continuation(std::move(start), input, loadsteps, on_step);
}

MicroSolution MicroModel::solve_from(const MicroSolution& start, const MacroInput& input, int loadsteps,
                                     const StepCallback& on_step) const {
  if (!start.converged || start.w.size() != num_dofs()) throw InputError("warm start needs a converged solution");
  MicroSolution cur;
  cur.w = start.w;
  cur.m = start.m;
  cur.input = start.input;
  cur.points = start.points;
  cur.converged = true;
  return continuation(std::move(cur), input, loadsteps, on_step);
}

std::pair<Mat2, Vec8> MicroModel::effective_stress(const MicroSolution& sol) const {
  Mat2 p = Mat2::Zero();
  Vec8 qm = Vec8::Zero();
  for (int q = 0; q < num_quad(); ++q) {
    p += wq_(q) * sol.points.p[q];
    qm += wq_(q) * stress_moment(sol.points.p[q], map_.x_mu.col(q));
  }
  return {p / volume(), qm / volume()};
}

Mat2 MicroModel::effective_stress_weighted(const MicroSolution& sol) const {
  Mat2 p = Mat2::Zero();
  for (int q = 0; q < num_quad(); ++q)
    p += qc_.weight(q) * map_.jdet(q) * sol.points.p[q] * map_.f_mu_inv[q].transpose();
  return p / volume();
}

Eigen::VectorXd MicroModel::weighted_stress(const MicroSolution& sol) const {
  Eigen::VectorXd y(4 * num_quad());
  for (int q = 0; q < num_quad(); ++q)
    y.segment<4>(4 * q) = flatten(Mat2(map_.jdet(q) * sol.points.p[q] * map_.f_mu_inv[q].transpose()));
  return y;
}

Eigen::VectorXd MicroModel::weighted_moment(const MicroSolution& sol) const {
  Eigen::VectorXd y(8 * num_quad());
  for (int q = 0; q < num_quad(); ++q)
    y.segment<8>(8 * q) = map_.jdet(q) * stress_moment(sol.points.p[q], map_.x_mu.col(q));
  return y;
}

EffectiveResponse MicroModel::effective_tangents(MicroSolution& sol) const {
  if (!sol.converged) throw SolverError("effective tangents need a converged micro solution");
  if (!sol.factor) {
    Eigen::VectorXd f;
    SpMat k;
    assemble(sol.w, sol.input, f, &k);
    auto solver = make_solver();
    solver->factorize(k);
    sol.factor = std::move(solver);
  }
  using Mat4x10 = Eigen::Matrix<double, 4, 10>;
  const int n = num_dofs();
  std::vector<Mat4x10> direct(num_quad());
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 10);
  for (int e = 0; e < mesh_->num_elements(); ++e) {
    const auto dofs = element_dofs(mesh_->elements[e]);
    for (int p = 0; p < kQuadPerElement; ++p) {
      const int q = kQuadPerElement * e + p;
      Mat4x10& d = direct[q];
      d.setZero();
      d.leftCols<4>().setIdentity();
      const Vec2 x = map_.x_mu.col(q);
      for (int s = 0; s < 6; ++s) d.col(4 + s) = flatten(contract_position(x, expand_gradient(Vec6::Unit(s))));
      const Mat4x12 b = gradient_operator(grad_[q]);
      const Eigen::Matrix<double, 12, 10> re = -wq_(q) * b.transpose() * sol.points.a[q] * d;
      for (int r = 0; r < 12; ++r) rhs.row(dofs[r]) += re.row(r);
    }
  }
  Eigen::MatrixXd sens, mult;
  sol.factor->solve(rhs, Eigen::MatrixXd(), sens, mult);

  Mat4x10 dp = Mat4x10::Zero();
  Eigen::Matrix<double, 8, 10> dq = Eigen::Matrix<double, 8, 10>::Zero();
  Eigen::Matrix<double, 12, 10> local;
  for (int e = 0; e < mesh_->num_elements(); ++e) {
    const auto dofs = element_dofs(mesh_->elements[e]);
    for (int r = 0; r < 12; ++r) local.row(r) = sens.row(dofs[r]);
    for (int p = 0; p < kQuadPerElement; ++p) {
      const int q = kQuadPerElement * e + p;
      const Mat4x10 t = sol.points.a[q] * (direct[q] + gradient_operator(grad_[q]) * local);
      dp += wq_(q) * t;
      dq += wq_(q) * stress_moment_map(map_.x_mu.col(q)) * t;
    }
  }
  EffectiveResponse out;
  std::tie(out.pbar, out.qbar) = effective_stress(sol);
  out.dp_df = dp.leftCols<4>() / volume();
  out.dp_dg = dp.rightCols<6>() / volume();
  out.dq_df = dq.leftCols<4>() / volume();
  out.dq_dg = dq.rightCols<6>() / volume();
  return out;
}

}  // namespace homog2
