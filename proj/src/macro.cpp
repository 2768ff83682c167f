#include "homog2/macro.hpp"

#include "homog2/errors.hpp"
#include "homog2/io.hpp"
#include "homog2/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace homog2 {

using nlohmann::json;

namespace {

constexpr std::array<std::array<double, 2>, 8> kQ8Ref{
    {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}, {0, -1}, {1, 0}, {0, 1}, {-1, 0}}};

// Serendipity shape function derivatives w.r.t. (xi, eta).
Eigen::Matrix<double, 8, 2> q8_ref_grad(double xi, double eta) {
  Eigen::Matrix<double, 8, 2> d;
  for (int a = 0; a < 8; ++a) {
    const double xa = kQ8Ref[a][0], ya = kQ8Ref[a][1];
    if (a < 4) {
      d(a, 0) = 0.25 * xa * (1 + eta * ya) * (2 * xi * xa + eta * ya);
      d(a, 1) = 0.25 * ya * (1 + xi * xa) * (xi * xa + 2 * eta * ya);
    } else if (xa == 0) {
      d(a, 0) = -xi * (1 + eta * ya);
      d(a, 1) = 0.5 * ya * (1 - xi * xi);
    } else {
      d(a, 0) = 0.5 * xa * (1 - eta * eta);
      d(a, 1) = -eta * (1 + xi * xa);
    }
  }
  return d;
}

Eigen::Vector4d bilinear(double xi, double eta) {
  Eigen::Vector4d m;
  for (int b = 0; b < 4; ++b) m(b) = 0.25 * (1 + xi * kQ8Ref[b][0]) * (1 + eta * kQ8Ref[b][1]);
  return m;
}

Eigen::Matrix<double, 4, 2> bilinear_ref_grad(double xi, double eta) {
  Eigen::Matrix<double, 4, 2> d;
  for (int b = 0; b < 4; ++b) {
    const double xb = kQ8Ref[b][0], yb = kQ8Ref[b][1];
    d(b, 0) = 0.25 * xb * (1 + eta * yb);
    d(b, 1) = 0.25 * yb * (1 + xi * xb);
  }
  return d;
}

Mat2 element_jacobian(const MacroMesh& mesh, int e, double xi, double eta) {
  const auto d = q8_ref_grad(xi, eta);
  Mat2 j = Mat2::Zero();
  for (int a = 0; a < 8; ++a) j += mesh.nodes.col(mesh.elements[e][a]) * d.row(a);
  return j;
}

class FullPoint : public PointModel {
 public:
  explicit FullPoint(std::shared_ptr<const MicroModel> model) : model_(std::move(model)) {
    MacroInput id;
    id.zeta = model_->zeta();
    committed_ = model_->solve(id, 1);
    trial_ = committed_;
  }
  EffectiveResponse evaluate(const MacroInput& input) override {
    MicroSolution s = model_->solve_from(trial_, input, 1);
    if (!s.converged) throw SolverError(s.message);
    trial_ = std::move(s);
    iterations_ = trial_.total_iterations;
    return model_->effective_tangents(trial_);
  }
  void commit() override { committed_ = trial_; }
  void revert() override { trial_ = committed_; }
  int last_iterations() const override { return iterations_; }

 private:
  std::shared_ptr<const MicroModel> model_;
  MicroSolution committed_, trial_;
  int iterations_ = 0;
};

class RomPoint : public PointModel {
 public:
  RomPoint(std::shared_ptr<const RomModel> rom, double zeta) : rom_(std::move(rom)) {
    MacroInput id;
    id.zeta = zeta;
    committed_ = rom_->solve(id, 1);
    trial_ = committed_;
  }
  EffectiveResponse evaluate(const MacroInput& input) override {
    RomState s = rom_->solve_from(trial_, input, 1);
    if (!s.converged) throw SolverError(s.message);
    trial_ = std::move(s);
    iterations_ = trial_.total_iterations;
    return rom_->effective(trial_);
  }
  void commit() override { committed_ = trial_; }
  void revert() override { trial_ = committed_; }
  int last_iterations() const override { return iterations_; }

 private:
  std::shared_ptr<const RomModel> rom_;
  RomState committed_, trial_;
  int iterations_ = 0;
};

class SurrogatePoint : public PointModel {
 public:
  SurrogatePoint(const MaterialParams& params, double k) : params_(params), k_(k) {}
  EffectiveResponse evaluate(const MacroInput& input) override {
    const PointResponse r = stress_and_tangent(input.fbar, params_);
    const double c = k_ * (params_.c1 + params_.c2);
    EffectiveResponse out;
    out.pbar = r.stress;
    out.dp_df = r.tangent;
    out.qbar = c * expand_gradient(input.gbar);
    out.dq_dg = c * expansion_map();
    return out;
  }
  void commit() override {}
  void revert() override {}

 private:
  MaterialParams params_;
  double k_;
};

}  // namespace

PointFactory full_micro_factory(std::shared_ptr<const MicroModelCache> models) {
  return [models](double zeta) -> std::unique_ptr<PointModel> { return std::make_unique<FullPoint>(models->get(zeta)); };
}

PointFactory rom_factory(std::shared_ptr<const RomModel> rom) {
  return [rom](double zeta) -> std::unique_ptr<PointModel> { return std::make_unique<RomPoint>(rom, zeta); };
}

PointFactory surrogate_factory(const MaterialParams& params, double k) {
  return [params, k](double) -> std::unique_ptr<PointModel> { return std::make_unique<SurrogatePoint>(params, k); };
}

MacroMesh MacroMesh::rectangle(double width, double height, int nx, int ny, double zeta) {
  if (nx < 1 || ny < 1 || !(width > 0) || !(height > 0)) throw InputError("rectangle needs positive sizes");
  MacroMesh m;
  const int nc = (nx + 1) * (ny + 1);
  const int nh = nx * (ny + 1);  // mid-nodes on horizontal edges
  const int nv = (nx + 1) * ny;  // mid-nodes on vertical edges
  m.nodes.resize(2, nc + nh + nv);
  auto corner = [&](int i, int j) { return j * (nx + 1) + i; };
  auto hmid = [&](int i, int j) { return nc + j * nx + i; };
  auto vmid = [&](int i, int j) { return nc + nh + j * (nx + 1) + i; };
  const double dx = width / nx, dy = height / ny;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) m.nodes.col(corner(i, j)) = Vec2(i * dx, j * dy);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) m.nodes.col(hmid(i, j)) = Vec2((i + 0.5) * dx, j * dy);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i) m.nodes.col(vmid(i, j)) = Vec2(i * dx, (j + 0.5) * dy);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      m.elements.push_back({corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1), hmid(i, j),
                            vmid(i + 1, j), hmid(i, j + 1), vmid(i, j)});
  m.fnode.assign(m.nodes.cols(), -1);
  for (int a = 0; a < nc; ++a) m.fnode[a] = a;
  m.num_fnodes = nc;
  m.zeta.assign(m.elements.size(), zeta);
  m.validate();
  return m;
}

void MacroMesh::validate() const {
  if (zeta.size() != elements.size()) throw InputError("macro mesh needs one zeta per element");
  if (static_cast<int>(fnode.size()) != num_nodes()) throw InputError("macro mesh Fhat node map has the wrong size");
  for (int e = 0; e < num_elements(); ++e) {
    for (int a = 0; a < 8; ++a) {
      const int n = elements[e][a];
      if (n < 0 || n >= num_nodes()) throw InputError("macro element " + std::to_string(e) + " has an invalid node");
      if (a < 4 && (fnode[n] < 0 || fnode[n] >= num_fnodes))
        throw InputError("macro element " + std::to_string(e) + " corner without Fhat node");
    }
    for (double xi : {-1.0, 1.0})
      for (double eta : {-1.0, 1.0})
        if (!(element_jacobian(*this, e, xi / std::sqrt(3.0), eta / std::sqrt(3.0)).determinant() > 0))
          throw InputError("macro element " + std::to_string(e) + " has a non-positive Jacobian");
  }
}

MacroProblem::MacroProblem(MacroMesh mesh, MacroBC bc, PointFactory factory, MacroOptions opts)
    : mesh_(std::move(mesh)), bc_(std::move(bc)), factory_(std::move(factory)), opts_(opts) {
  mesh_.validate();
  const double g = 1.0 / std::sqrt(3.0);
  for (int e = 0; e < mesh_.num_elements(); ++e)
    for (double eta : {-g, g})
      for (double xi : {-g, g}) {
        Point p;
        p.element = e;
        const Mat2 j = element_jacobian(mesh_, e, xi, eta);
        const Mat2 jinv = j.inverse();
        p.dn = q8_ref_grad(xi, eta) * jinv;
        p.m = bilinear(xi, eta);
        p.dm = bilinear_ref_grad(xi, eta) * jinv;
        p.weight = j.determinant();
        points_.push_back(p);
      }
  // point order within an element: (xi, eta) = (-,-), (+,-), (-,+), (+,+)
  is_fixed_.assign(mesh_.num_dofs(), false);
  for (const auto& f : bc_.fixed) {
    if (f.dof < 0 || f.dof >= mesh_.num_dofs()) throw InputError("boundary condition on an invalid dof");
    is_fixed_[f.dof] = true;
  }
  for (int d = 0; d < mesh_.num_dofs(); ++d)
    if (!is_fixed_[d]) free_.push_back(d);
  models_.resize(points_.size());
  parallel_for(static_cast<int>(points_.size()), opts_.threads,
               [&](int q) { models_[q] = factory_(mesh_.zeta[points_[q].element]); });
}

Eigen::VectorXd MacroProblem::initial_state() const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(mesh_.num_dofs());
  for (int fn = 0; fn < mesh_.num_fnodes; ++fn) {
    x(mesh_.f_dof(fn, 0)) = 1.0;
    x(mesh_.f_dof(fn, 3)) = 1.0;
  }
  return x;
}

std::vector<MacroInput> MacroProblem::point_inputs(const Eigen::VectorXd& x) const {
  std::vector<MacroInput> out(points_.size());
  for (std::size_t q = 0; q < points_.size(); ++q) {
    const Point& p = points_[q];
    const auto& el = mesh_.elements[p.element];
    Mat2 f = Mat2::Identity();
    for (int a = 0; a < 8; ++a) f += x.segment<2>(mesh_.u_dof(el[a], 0)) * p.dn.row(a);
    Vec8 g8 = Vec8::Zero();
    for (int b = 0; b < 4; ++b) {
      const Vec4 fh = x.segment<4>(mesh_.f_dof(mesh_.fnode[el[b]], 0));
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k) g8(idx3(i, j, k)) += p.dm(b, i) * fh(idx2(j, k));
    }
    out[q].fbar = f;
    out[q].gbar = symmetrize_gradient(g8);
    out[q].zeta = mesh_.zeta[p.element];
  }
  return out;
}

void MacroProblem::assemble(const Eigen::VectorXd& x, const std::vector<EffectiveResponse>& resp, Eigen::VectorXd& r,
                            Eigen::MatrixXd* k) const {
  if (resp.size() != points_.size()) throw InputError("constitutive responses missing for some macro points");
  const int n = mesh_.num_dofs();
  r.setZero(n);
  if (k) k->setZero(n, n);
  const auto inputs = point_inputs(x);
  const Mat68 sym = symmetrize_map();
  using Mat4x16 = Eigen::Matrix<double, 4, 16>;
  using Mat8x16 = Eigen::Matrix<double, 8, 16>;
  for (std::size_t q = 0; q < points_.size(); ++q) {
    const Point& p = points_[q];
    const int e = p.element;
    const auto& el = mesh_.elements[e];
    std::array<int, 36> dofs;
    for (int a = 0; a < 8; ++a)
      for (int i = 0; i < 2; ++i) dofs[2 * a + i] = mesh_.u_dof(el[a], i);
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) dofs[16 + 4 * b + c] = mesh_.f_dof(mesh_.fnode[el[b]], c);
    for (int c = 0; c < 4; ++c) dofs[32 + c] = mesh_.l_dof(e, c);

    Mat4x16 bu = Mat4x16::Zero(), mf = Mat4x16::Zero();
    Mat8x16 bg = Mat8x16::Zero();
    for (int a = 0; a < 8; ++a)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) bu(idx2(i, j), 2 * a + i) = p.dn(a, j);
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) {
        mf(c, 4 * b + c) = p.m(b);
        for (int i = 0; i < 2; ++i) bg(4 * i + c, 4 * b + c) = p.dm(b, i);
      }
    Vec4 lam;
    for (int c = 0; c < 4; ++c) lam(c) = x(dofs[32 + c]);
    Eigen::Matrix<double, 16, 1> fh;
    for (int c = 0; c < 16; ++c) fh(c) = x(dofs[16 + c]);
    const EffectiveResponse& s = resp[q];
    const double w = p.weight;

    Eigen::Matrix<double, 36, 1> re;
    re.segment<16>(0) = w * bu.transpose() * (flatten(s.pbar) - lam);
    re.segment<16>(16) = w * (mf.transpose() * lam + bg.transpose() * s.qbar);
    re.segment<4>(32) = w * (mf * fh - flatten(inputs[q].fbar));
    for (int a = 0; a < 36; ++a) r(dofs[a]) += re(a);

    if (k) {
      Eigen::Matrix<double, 36, 36> ke = Eigen::Matrix<double, 36, 36>::Zero();
      const Eigen::Matrix<double, 6, 16> gs = sym * bg;
      ke.block<16, 16>(0, 0) = bu.transpose() * s.dp_df * bu;
      ke.block<16, 16>(0, 16) = bu.transpose() * s.dp_dg * gs;
      ke.block<16, 4>(0, 32) = -bu.transpose();
      ke.block<16, 16>(16, 0) = bg.transpose() * s.dq_df * bu;
      ke.block<16, 16>(16, 16) = bg.transpose() * s.dq_dg * gs;
      ke.block<16, 4>(16, 32) = mf.transpose();
      ke.block<4, 16>(32, 0) = -bu;
      ke.block<4, 16>(32, 16) = mf;
      ke *= w;
      for (int a = 0; a < 36; ++a)
        for (int b = 0; b < 36; ++b) (*k)(dofs[a], dofs[b]) += ke(a, b);
    }
  }
}

std::vector<EffectiveResponse> MacroProblem::evaluate(const Eigen::VectorXd& x) {
  const auto inputs = point_inputs(x);
  std::vector<EffectiveResponse> out(points_.size());
  parallel_for(static_cast<int>(points_.size()), opts_.threads,
               [&](int q) { out[q] = models_[q]->evaluate(inputs[q]); });
  return out;
}

void MacroProblem::commit() {
  for (auto& m : models_) m->commit();
}

void MacroProblem::revert() {
  for (auto& m : models_) m->revert();
}

bool MacroProblem::solve_step(Eigen::VectorXd& x, double load, bool perturb, int& iterations, std::string& why) {
  for (const auto& f : bc_.fixed) x(f.dof) = f.value + load * f.rate;
  double area = 0.0;
  for (const auto& p : points_) area += p.weight;
  const double abs_tol = opts_.abs_tol > 0 ? opts_.abs_tol : 1e-10 * 0.55 * area;
  const int nf = static_cast<int>(free_.size());
  double r0 = -1.0;
  Eigen::VectorXd r;
  Eigen::MatrixXd k;
  for (int it = 0;; ++it) {
    std::vector<EffectiveResponse> resp;
    try {
      resp = evaluate(x);
    } catch (const SolverError& e) {
      why = std::string("micro solve failed: ") + e.what();
      return false;
    }
    assemble(x, resp, r, &k);
    if (perturb && bc_.perturbation) r(bc_.perturbation->first) -= bc_.perturbation->second;
    Eigen::VectorXd rf(nf);
    for (int a = 0; a < nf; ++a) rf(a) = r(free_[a]);
    const double norm = rf.norm();
    if (!std::isfinite(norm)) {
      why = "non-finite macro residual";
      return false;
    }
    if (r0 < 0) r0 = norm;
    if (norm <= std::max(abs_tol, opts_.rel_tol * r0)) {
      iterations = it;
      return true;
    }
    if (it >= opts_.max_iterations) {
      std::ostringstream msg;
      msg << "macro Newton did not converge in " << opts_.max_iterations << " iterations (residual " << norm << ")";
      why = msg.str();
      return false;
    }
    Eigen::MatrixXd kff(nf, nf);
    for (int a = 0; a < nf; ++a)
      for (int b = 0; b < nf; ++b) kff(a, b) = k(free_[a], free_[b]);
    const Eigen::VectorXd dx = kff.partialPivLu().solve(-rf);
    if (!dx.allFinite()) {
      why = "singular macro tangent";
      return false;
    }
    for (int a = 0; a < nf; ++a) x(free_[a]) += dx(a);
  }
}

MacroResult MacroProblem::run(double load_max) {
  if (opts_.steps < 1) throw InputError("macro load steps must be positive");
  MacroResult res;
  Eigen::VectorXd x = initial_state();
  const int np = static_cast<int>(points_.size());
  if (opts_.record_trajectories) res.trajectories.assign(np, {});
  res.curve.push_back({0, 0.0, 0.0, 0});
  double load = 0.0;
  int counter = 0;
  for (int kstep = 1; kstep <= opts_.steps; ++kstep) {
    const double target = load_max * kstep / opts_.steps;
    double dl = target - load;
    int cuts = 0;
    while (load < target - 1e-14 * std::max(1.0, std::abs(load_max))) {
      const double trial_load = std::min(load + dl, target);
      Eigen::VectorXd trial = x;
      int iterations = 0;
      std::string why;
      if (solve_step(trial, trial_load, kstep == 1, iterations, why)) {
        commit();
        x = trial;
        load = trial_load;
        Eigen::VectorXd r;
        assemble(x, evaluate(x), r, nullptr);
        revert();
        double reaction = 0.0;
        for (int d : bc_.reaction_dofs) reaction -= r(d);
        for (int e = 0; e < mesh_.num_elements(); ++e)
          for (int c = 0; c < 4; ++c) res.constraint_gap = std::max(res.constraint_gap, std::abs(r(mesh_.l_dof(e, c))));
        res.curve.push_back({++counter, load, reaction, iterations});
        if (opts_.on_step) opts_.on_step(res.curve.back());
        if (opts_.record_trajectories) {
          const auto inputs = point_inputs(x);
          for (int q = 0; q < np; ++q) res.trajectories[q].push_back(inputs[q]);
        }
        if (opts_.record_fields) res.fields.push_back(x);
        dl *= 2.0;
      } else {
        revert();
        ++cuts;
        ++res.cuts;
        if (cuts > opts_.max_cuts) {
          std::ostringstream msg;
          msg << "macro step failed after " << opts_.max_cuts << " cuts at load " << load << ": " << why;
          res.message = msg.str();
          res.final_state.x = x;
          return res;
        }
        dl *= 0.5;
      }
    }
  }
  res.completed = true;
  res.final_state.x = x;
  return res;
}

std::pair<MacroMesh, MacroBC> plate_problem(const PlateSpec& spec) {
  MacroMesh mesh = MacroMesh::rectangle(spec.width, spec.height, spec.nx, spec.ny, spec.zeta);
  MacroBC bc;
  const double tol = 1e-9 * spec.height;
  const double drop = -1.0;  // per unit load parameter (mm)
  for (int a = 0; a < mesh.num_nodes(); ++a) {
    const double y = mesh.nodes(1, a);
    const bool bottom = std::abs(y) < tol, top = std::abs(y - spec.height) < tol;
    if (bottom) {
      bc.fixed.push_back({mesh.u_dof(a, 0), 0.0, 0.0});
      bc.fixed.push_back({mesh.u_dof(a, 1), 0.0, 0.0});
    }
    if (top) {
      bc.fixed.push_back({mesh.u_dof(a, 0), 0.0, 0.0});
      bc.fixed.push_back({mesh.u_dof(a, 1), 0.0, drop});
      bc.reaction_dofs.push_back(mesh.u_dof(a, 1));
    }
    const int fn = mesh.fnode[a];
    if (fn < 0 || !(bottom || top)) continue;
    if (bottom && std::abs(mesh.nodes(0, a)) < tol) {
      for (int c = 0; c < 4; ++c) bc.fixed.push_back({mesh.f_dof(fn, c), (c == 0 || c == 3) ? 1.0 : 0.0, 0.0});
    } else {
      bc.fixed.push_back({mesh.f_dof(fn, idx2(0, 0)), 1.0, 0.0});
      bc.fixed.push_back({mesh.f_dof(fn, idx2(1, 0)), 0.0, 0.0});
    }
  }
  if (spec.perturb) {
    int best = -1;
    for (int a = 0; a < mesh.num_nodes(); ++a)
      if (std::abs(mesh.nodes(0, a)) < tol &&
          (best < 0 || std::abs(mesh.nodes(1, a) - 0.5 * spec.height) < std::abs(mesh.nodes(1, best) - 0.5 * spec.height)))
        best = a;
    const MaterialParams mp;
    bc.perturbation = std::make_pair(mesh.u_dof(best, 0), 1e-6 * mp.c1 * spec.width);
  }
  return {std::move(mesh), std::move(bc)};
}

Curve nominal_curve(const MacroResult& result, double height, double width) {
  Curve c;
  for (const auto& p : result.curve) {
    c.strain.push_back(p.load / height);
    c.force.push_back(p.reaction / width);
  }
  return c;
}

std::string curve_csv(const MacroResult& result, double height, double width, const std::string& config_hash) {
  std::ostringstream out;
  out << "# schema_version " << kSchemaVersion << ", config_hash " << (config_hash.empty() ? "none" : config_hash)
      << '\n';
  out << "step,displacement_over_height,force_over_width\n";
  for (const auto& c : result.curve) out << c.step << ',' << fmt17(c.load / height) << ',' << fmt17(c.reaction / width) << '\n';
  return out.str();
}

Curve parse_curve_csv(const std::string& text) {
  Curve c;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::istringstream row(line);
    std::string step, strain, force;
    if (!std::getline(row, step, ',') || !std::getline(row, strain, ',') || !std::getline(row, force))
      throw InputError("malformed curve row: " + line);
    try {
      c.strain.push_back(std::stod(strain));
      c.force.push_back(std::stod(force));
    } catch (const std::exception&) {
      throw InputError("malformed curve row: " + line);
    }
  }
  return c;
}

std::optional<std::size_t> first_peak(const Curve& curve) {
  for (std::size_t i = 1; i + 1 < curve.force.size(); ++i)
    if (curve.force[i] > curve.force[i - 1] && curve.force[i] > curve.force[i + 1]) return i;
  return std::nullopt;
}

CurveComparison compare_curves(const Curve& ref, const Curve& other) {
  CurveComparison out;
  if (ref.force.empty() || other.force.empty()) throw InputError("cannot compare empty curves");
  out.peak_force = *std::max_element(ref.force.begin(), ref.force.end());
  out.covered = std::min(ref.strain.back(), other.strain.back());
  for (std::size_t i = 0; i < ref.strain.size(); ++i) {
    const double s = ref.strain[i];
    if (s > out.covered + 1e-14) break;
    std::size_t k = 1;
    while (k + 1 < other.strain.size() && other.strain[k] < s) ++k;
    double f = other.force[0];
    if (other.strain.size() > 1) {
      const double s0 = other.strain[k - 1], s1 = other.strain[k];
      const double t = s1 > s0 ? std::clamp((s - s0) / (s1 - s0), 0.0, 1.0) : 1.0;
      f = (1 - t) * other.force[k - 1] + t * other.force[k];
    }
    out.max_gap = std::max(out.max_gap, std::abs(f - ref.force[i]));
  }
  out.relative_gap = out.max_gap / std::max(std::abs(out.peak_force), 1e-300);
  if (auto p = first_peak(ref)) out.peak_strain_ref = ref.strain[*p];
  if (auto p = first_peak(other)) out.peak_strain_other = other.strain[*p];
  return out;
}

void write_fields(const std::filesystem::path& dir, const MacroMesh& mesh, const MacroResult& result) {
  std::filesystem::create_directories(dir);
  json j;
  j["schema_version"] = kSchemaVersion;
  json nodes = json::array();
  for (int a = 0; a < mesh.num_nodes(); ++a) nodes.push_back({mesh.nodes(0, a), mesh.nodes(1, a)});
  j["nodes"] = nodes;
  j["elements"] = mesh.elements;
  j["fnode"] = mesh.fnode;
  j["zeta"] = mesh.zeta;
  j["layout"] = {{"u", {0, 2 * mesh.num_nodes()}},
                 {"fhat", {2 * mesh.num_nodes(), 4 * mesh.num_fnodes}},
                 {"l", {2 * mesh.num_nodes() + 4 * mesh.num_fnodes, 4 * mesh.num_elements()}}};
  j["steps"] = result.fields.size();
  json loads = json::array();
  for (std::size_t s = 1; s < result.curve.size() && s <= result.fields.size(); ++s) loads.push_back(result.curve[s].load);
  j["loads"] = loads;
  write_text(dir / "fields.json", j.dump(1));
  Eigen::MatrixXd all(mesh.num_dofs(), static_cast<Eigen::Index>(result.fields.size()));
  for (std::size_t s = 0; s < result.fields.size(); ++s) all.col(s) = result.fields[s];
  write_f64(dir / "fields.f64", all);
}

std::vector<Trajectory> to_trajectories(const MacroMesh& mesh, const MacroResult& result) {
  std::vector<Trajectory> out;
  for (std::size_t q = 0; q < result.trajectories.size(); ++q) {
    Trajectory t;
    t.zeta = mesh.zeta[q / 4];
    t.states = result.trajectories[q];
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace homog2
