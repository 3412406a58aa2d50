#pragma once

#include <string_view>

#include "ringsim/core/vec3.hpp"

namespace ringsim {

enum class LossCause { none, majorana, over_barrier, background_gas, removed_by_shaping, reload_scatter };

std::string_view to_string(LossCause c);

/// Which field model currently holds the atom in a scenario.
enum class Stage { guide, ring };

struct AtomState {
  Vec3 position;
  Vec3 velocity;
  Vec3 spin{0, 0, -1};  // unit magnetic-moment direction
  double t = 0.0;
  LossCause cause = LossCause::none;
  Stage stage = Stage::ring;

  bool alive() const { return cause == LossCause::none; }
  /// One-way transition; a second call keeps the first cause.
  void mark_lost(LossCause c) {
    if (alive()) cause = c;
  }
};

}  // namespace ringsim
