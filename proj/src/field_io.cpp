#include "cogen/field_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>

#include "cogen/errors.hpp"

namespace cogen {

static_assert(std::endian::native == std::endian::little, "raw fields are written in native little-endian order");

namespace {

constexpr char kMagic[8] = {'C', 'O', 'G', 'F', '1', 0, 0, 0};

struct RawHeader {
  char magic[8];
  std::uint32_t dimension;
  std::uint32_t dims[3];
  std::uint32_t reserved0;
  double spacing;
  double origin[3];
};
static_assert(sizeof(RawHeader) == 64);

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(path, mode);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  return os;
}

}  // namespace

FieldFormat parse_field_format(const std::string& name) {
  if (name == "pgm") return FieldFormat::Pgm;
  if (name == "vtk") return FieldFormat::Vtk;
  if (name == "raw") return FieldFormat::Raw;
  throw ConfigError("unknown field format '" + name + "' (expected pgm, vtk or raw)");
}

void export_field(const DensityField& field, FieldFormat format, const std::filesystem::path& path) {
  switch (format) {
    case FieldFormat::Pgm: write_pgm(field, path); break;
    case FieldFormat::Vtk: write_vtk(field, path); break;
    case FieldFormat::Raw: write_raw_field(field, path); break;
  }
}

void write_raw_field(const DensityField& field, const std::filesystem::path& path) {
  const Grid& g = field.grid();
  RawHeader h{};
  std::memcpy(h.magic, kMagic, sizeof kMagic);
  h.dimension = static_cast<std::uint32_t>(g.dimension());
  for (int a = 0; a < 3; ++a) {
    h.dims[a] = static_cast<std::uint32_t>(g.dims()[static_cast<std::size_t>(a)]);
    h.origin[a] = g.origin()[a];
  }
  h.spacing = g.spacing();
  auto os = open_out(path, std::ios::binary);
  os.write(reinterpret_cast<const char*>(&h), sizeof h);
  const auto v = field.values();
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!os) throw ConfigError("failed writing '" + path.string() + "'");
}

DensityField read_raw_field(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open field file '" + path.string() + "'");
  RawHeader h{};
  is.read(reinterpret_cast<char*>(&h), sizeof h);
  if (!is || std::memcmp(h.magic, kMagic, sizeof kMagic) != 0) {
    throw ConfigError("'" + path.string() + "' is not a COGF1 field file");
  }
  if (h.dimension != 2 && h.dimension != 3) throw ConfigError("field file has invalid dimension");
  const int d = static_cast<int>(h.dimension);
  std::vector<double> origin(h.origin, h.origin + d);
  std::vector<int> dims;
  for (int a = 0; a < d; ++a) dims.push_back(static_cast<int>(h.dims[a]));
  const Grid g = build_grid(origin, h.spacing, dims);
  std::vector<double> values(g.size());
  is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!is) throw ConfigError("field file '" + path.string() + "' is truncated");
  if (is.peek() != std::ifstream::traits_type::eof()) {
    throw ConfigError("field file '" + path.string() + "' has trailing data");
  }
  return DensityField(g, std::move(values));
}

void write_pgm(const DensityField& field, const std::filesystem::path& path) {
  const Grid& g = field.grid();
  if (g.dimension() != 2) throw DimensionError("PGM export needs a 2D field");
  const int nx = g.dims()[0];
  const int ny = g.dims()[1];
  auto os = open_out(path, std::ios::binary);
  os << "P5\n# origin " << std::setprecision(17) << g.origin().x() << ' ' << g.origin().y() << " spacing "
     << g.spacing() << "\n"
     << nx << ' ' << ny << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(nx));
  for (int y = ny - 1; y >= 0; --y) {
    for (int x = 0; x < nx; ++x) {
      row[static_cast<std::size_t>(x)] =
          static_cast<unsigned char>(std::lround(255.0 * field[g.linear_index(x, y)]));
    }
    os.write(reinterpret_cast<const char*>(row.data()), nx);
  }
  if (!os) throw ConfigError("failed writing '" + path.string() + "'");
}

void write_vtk(const DensityField& field, const std::filesystem::path& path) {
  const Grid& g = field.grid();
  if (g.dimension() != 3) throw DimensionError("VTK export needs a 3D field");
  const auto& n = g.dims();
  auto os = open_out(path);
  os << std::setprecision(17);
  os << "# vtk DataFile Version 3.0\ndensity\nASCII\nDATASET STRUCTURED_POINTS\n";
  os << "DIMENSIONS " << n[0] + 1 << ' ' << n[1] + 1 << ' ' << n[2] + 1 << "\n";
  os << "SPACING " << g.spacing() << ' ' << g.spacing() << ' ' << g.spacing() << "\n";
  os << "ORIGIN " << g.origin().x() << ' ' << g.origin().y() << ' ' << g.origin().z() << "\n";
  os << "CELL_DATA " << g.size() << "\nSCALARS density double 1\nLOOKUP_TABLE default\n";
  for (std::size_t i = 0; i < field.size(); ++i) os << field[i] << "\n";
  if (!os) throw ConfigError("failed writing '" + path.string() + "'");
}

}  // namespace cogen
