#include "homog2/training.hpp"

#include "homog2/errors.hpp"
#include "homog2/fem.hpp"
#include "homog2/mesh.hpp"

namespace homog2 {

TrainingResult train_rom(const std::string& mesh_json, const SnapshotSet& snapshots, const TrainingSettings& settings) {
  if (snapshots.cols() == 0) throw InputError("snapshot set is empty");
  const Mesh mesh = parse_mesh(mesh_json);
  if (snapshots.w.rows() != mesh.num_dofs()) throw InputError("snapshots do not match the parent mesh");
  TrainingResult out;
  RomArtifact& art = out.artifact;
  art.mesh_json = mesh_json;
  art.params = settings.params;
  art.provenance = settings.provenance;
  art.w = compute_basis(snapshots.w, settings.w);
  art.y = compute_basis(snapshots.y, settings.y);
  art.yh = compute_basis(snapshots.yh, settings.yh);
  const QuadratureCache qc = build_quadrature(mesh);
  out.system = build_cubature_system(mesh, qc, art.w, art.y, art.yh);
  art.scheme = select_points(out.system, settings.cubature);
  return out;
}

}  // namespace homog2
