#include "screwgen/vtk.hpp"

#include <fstream>

namespace screwgen {

void write_vtk(std::ostream& out, const BackgroundMesh& mesh, const QualityReport& quality) {
  if (quality.scaled_jacobian.size() != mesh.cells.size())
    fail(ErrorCode::kIo, "quality field does not match the mesh cells");
  const int nc = mesh.corners();
  out.precision(17);
  out << "# vtk DataFile Version 3.0\nscrewgen background mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.vertices.size() << " double\n";
  for (const Vec3& v : mesh.vertices) out << v.x << ' ' << v.y << ' ' << v.z << '\n';
  out << "CELLS " << mesh.cells.size() << ' ' << mesh.cells.size() * static_cast<size_t>(nc + 1) << '\n';
  for (const auto& c : mesh.cells) {
    out << nc;
    for (int k = 0; k < nc; ++k) out << ' ' << c[static_cast<size_t>(k)];
    out << '\n';
  }
  out << "CELL_TYPES " << mesh.cells.size() << '\n';
  for (size_t k = 0; k < mesh.cells.size(); ++k) out << (mesh.dim == 2 ? 9 : 12) << '\n';
  out << "CELL_DATA " << mesh.cells.size() << "\nSCALARS scaled_jacobian double 1\nLOOKUP_TABLE default\n";
  for (double q : quality.scaled_jacobian) out << q << '\n';
  out << "POINT_DATA " << mesh.vertices.size() << "\nSCALARS boundary_tag int 1\nLOOKUP_TABLE default\n";
  for (BoundaryTag t : mesh.tags) out << static_cast<int>(t) << '\n';
}

void write_vtk(const std::filesystem::path& path, const BackgroundMesh& mesh, const QualityReport& quality) {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::kIo, "cannot write " + path.string());
  write_vtk(f, mesh, quality);
  if (!f) fail(ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace screwgen
