#pragma once

#include <filesystem>
#include <string>

#include "cogen/geometry.hpp"

namespace cogen {

enum class FieldFormat { Pgm, Vtk, Raw };

/// Accepts "pgm", "vtk" or "raw".
FieldFormat parse_field_format(const std::string& name);

/// PGM is 2D only, VTK is 3D only; RAW takes either. Throws DimensionError
/// on a format/dimension mismatch.
void export_field(const DensityField& field, FieldFormat format, const std::filesystem::path& path);

// Raw field container: 64-byte little-endian header
//   magic "COGF1\0\0\0", u32 d, u32 dims[3], u32 reserved, f64 eps, f64 origin[3]
// followed by the densities as f64 in linear index order.
void write_raw_field(const DensityField& field, const std::filesystem::path& path);
DensityField read_raw_field(const std::filesystem::path& path);

void write_pgm(const DensityField& field, const std::filesystem::path& path);
void write_vtk(const DensityField& field, const std::filesystem::path& path);

}  // namespace cogen
