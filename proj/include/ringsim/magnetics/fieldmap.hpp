#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "ringsim/magnetics/field.hpp"

namespace ringsim {

/// Regular grid; rows are emitted with z varying fastest, then y, then x.
struct GridSpec {
  Vec3 lower;
  Vec3 upper;
  std::array<int, 3> count{1, 1, 1};

  std::size_t size() const;
  Vec3 point(int i, int j, int k) const;
  void validate() const;
};

struct FieldMapRow {
  Vec3 position;
  Vec3 B;
};

/// Reference kernel.
std::vector<FieldMapRow> field_map_serial(const GridSpec& grid, const FieldSource& source, double t = 0.0);
/// OpenMP kernel; identical output to the serial kernel.
std::vector<FieldMapRow> field_map(const GridSpec& grid, const FieldSource& source, double t = 0.0,
                                   int workers = 0);

/// CSV `x_m,y_m,z_m,Bx_T,By_T,Bz_T,Bnorm_T`; `comment` lines (prefixed by '#')
/// precede the header when non-empty.
void write_field_map_csv(std::ostream& os, const std::vector<FieldMapRow>& rows,
                         const std::vector<std::string>& comment = {});

}  // namespace ringsim
