#include "ringsim/magnetics/fieldmap.hpp"

#include <cstdio>
#include <ostream>

#include "ringsim/core/error.hpp"
#include "ringsim/core/parallel.hpp"

namespace ringsim {

std::size_t GridSpec::size() const {
  return static_cast<std::size_t>(count[0]) * count[1] * count[2];
}

Vec3 GridSpec::point(int i, int j, int k) const {
  auto coord = [&](int axis, int idx) {
    if (count[axis] == 1) return lower[axis];
    return lower[axis] + (upper[axis] - lower[axis]) * idx / (count[axis] - 1);
  };
  return {coord(0, i), coord(1, j), coord(2, k)};
}

void GridSpec::validate() const {
  for (int a = 0; a < 3; ++a) {
    require(count[a] >= 1, ErrorCategory::invalid_input, "grid counts must be >= 1");
    require(std::isfinite(lower[a]) && std::isfinite(upper[a]), ErrorCategory::invalid_input,
            "grid bounds must be finite");
  }
}

std::vector<FieldMapRow> field_map_serial(const GridSpec& grid, const FieldSource& source, double t) {
  grid.validate();
  std::vector<FieldMapRow> rows;
  rows.reserve(grid.size());
  for (int i = 0; i < grid.count[0]; ++i)
    for (int j = 0; j < grid.count[1]; ++j)
      for (int k = 0; k < grid.count[2]; ++k) {
        const Vec3 p = grid.point(i, j, k);
        rows.push_back({p, source.field(p, t)});
      }
  return rows;
}

std::vector<FieldMapRow> field_map(const GridSpec& grid, const FieldSource& source, double t, int workers) {
  grid.validate();
  const long n = static_cast<long>(grid.size());
  const int ny = grid.count[1];
  const int nz = grid.count[2];
  std::vector<FieldMapRow> rows(static_cast<std::size_t>(n));
  ThreadCount threads(workers);
#pragma omp parallel for schedule(static) num_threads(threads.value())
  for (long idx = 0; idx < n; ++idx) {
    const int k = static_cast<int>(idx % nz);
    const int j = static_cast<int>((idx / nz) % ny);
    const int i = static_cast<int>(idx / (static_cast<long>(nz) * ny));
    const Vec3 p = grid.point(i, j, k);
    rows[static_cast<std::size_t>(idx)] = {p, source.field(p, t)};
  }
  return rows;
}

void write_field_map_csv(std::ostream& os, const std::vector<FieldMapRow>& rows,
                         const std::vector<std::string>& comment) {
  for (const auto& c : comment) os << "# " << c << '\n';
  os << "x_m,y_m,z_m,Bx_T,By_T,Bz_T,Bnorm_T\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.9e,%.9e,%.9e,%.12e,%.12e,%.12e,%.12e\n", r.position.x, r.position.y,
                  r.position.z, r.B.x, r.B.y, r.B.z, norm(r.B));
    os << buf;
  }
}

}  // namespace ringsim
