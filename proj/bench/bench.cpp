// Serial reference kernels against their OpenMP versions. Prints wall time per
// kernel and checks that both produce the same output.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "ringsim/ensemble/scenario.hpp"
#include "ringsim/magnetics/field.hpp"
#include "ringsim/magnetics/fieldmap.hpp"

using namespace ringsim;

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void line(const char* name, double serial, double parallel, bool same) {
  std::printf("%-22s serial %8.3f s  openmp %8.3f s  speedup %5.2f  %s\n", name, serial, parallel, serial / parallel,
              same ? "identical" : "MISMATCH");
}

std::string summary(const ScenarioResult& r) {
  std::ostringstream os;
  write_summary_json(os, r);
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t atoms = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 400;
  const int n = argc > 2 ? std::atoi(argv[2]) : 201;
  std::printf("threads: %d\n", omp_get_max_threads());
  bool ok = true;

  RingGeometry ring;
  const RingField field(ring);
  GridSpec grid;
  grid.lower = {0.0095, -0.35e-3, 0.0};
  grid.upper = {0.0105, 0.35e-3, 0.0};
  grid.count = {n, n, 1};
  std::vector<FieldMapRow> a, b;
  const double ts = seconds([&] { a = field_map_serial(grid, field); });
  const double tp = seconds([&] { b = field_map(grid, field); });
  bool same = a.size() == b.size();
  for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].B == b[i].B;
  line("field map (ring)", ts, tp, same);
  ok = ok && same;

  ScenarioConfig cfg;
  cfg.seed = 7;
  cfg.cloud.placement = CloudPlacement::ring;
  cfg.cloud.atoms = atoms;
  cfg.cloud.sigma_long = 1e-3;
  cfg.cloud.T_long = 3.4e-6;
  cfg.cloud.mean_speed = 0.8857;
  cfg.cloud.sigma_trans = 10e-6;
  cfg.t_end = 0.25;
  ScenarioResult rs, rp;
  const double es = seconds([&] { rs = run_scenario(cfg, Kernel::serial); });
  const double ep = seconds([&] { rp = run_scenario(cfg, Kernel::parallel); });
  same = summary(rs) == summary(rp);
  line("ensemble (ring start)", es, ep, same);
  ok = ok && same;
  return ok ? 0 : 1;
}
