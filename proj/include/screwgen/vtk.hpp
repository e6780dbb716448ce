#pragma once

#include <filesystem>
#include <ostream>

#include "screwgen/quality.hpp"

namespace screwgen {

/// Legacy ASCII unstructured grid: quads (type 9) or hexahedra (type 12),
/// CELL_DATA scaled_jacobian and POINT_DATA boundary_tag.
void write_vtk(std::ostream& out, const BackgroundMesh& mesh, const QualityReport& quality);
void write_vtk(const std::filesystem::path& path, const BackgroundMesh& mesh, const QualityReport& quality);

}  // namespace screwgen
