#pragma once

#include <filesystem>
#include <string>

#include "screwgen/scaffold.hpp"

namespace screwgen {

/// sgdb-1 archive: 8-byte magic "SGDB\x01\0\0\0", uint64 index length, the
/// JSON index, zero padding to a multiple of 8, then one block of
/// little-endian float64 (x, y) pairs per (angle, patch) in the point order
/// of PatchGrid. Block offsets in the index count bytes from the first block.
std::string encode_database(const ScaffoldDatabase& db);
ScaffoldDatabase decode_database(const std::string& bytes);

void write_database(const ScaffoldDatabase& db, const std::filesystem::path& path);
ScaffoldDatabase read_database(const std::filesystem::path& path);

}  // namespace screwgen
