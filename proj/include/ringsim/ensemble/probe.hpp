#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace ringsim {

struct ScenarioResult;

struct ProbeConfig {
  double azimuth = 0.0;        // rad, window center (ring azimuth convention)
  double window = 1e-3;        // m of arc on the trap-zero circle
  double duration = 1e-3;      // s
  std::vector<double> delays;  // s after the reference time; strictly increasing
  bool destructive = false;
  bool auto_reference = true;  // reference = first arrival of the central atom minus duration/2
  double reference = 0.0;      // s, used when auto_reference is false

  void validate() const;

  friend bool operator==(const ProbeConfig&, const ProbeConfig&) = default;
};

struct ProbeTrace {
  std::vector<double> delay;
  std::vector<double> signal;
  std::uint64_t seed = 0;
  std::string scenario_hash;
  std::size_t atoms = 0;
  double reference = 0.0;  // absolute time of delay 0

  friend bool operator==(const ProbeTrace&, const ProbeTrace&) = default;
};

/// Counts, per delay, atoms alive inside the window at any time during the
/// pulse [ref + delay, ref + delay + duration]. Non-destructive pulses leave the
/// ensemble untouched (each delay sees the same replayed run); destructive ones
/// remove counted atoms from later pulses.
ProbeTrace probe_trace(const ScenarioResult& result, const ProbeConfig& probe);

/// Regular delay grid [first, last] with the given step.
std::vector<double> delay_grid(double first, double last, double step);

/// CSV `delay_s,signal` preceded by `# ` metadata lines.
void write_probe_csv(std::ostream& os, const ProbeTrace& trace, const std::vector<std::string>& comment = {});

struct ProbeCsv {
  ProbeTrace trace;
  std::map<std::string, std::string> meta;  // `# key=value` lines
};

/// Inverse of write_probe_csv. The keys scenario_hash, seed, atoms and
/// reference_s, when present, fill the matching trace fields.
ProbeCsv read_probe_csv(std::istream& is);

}  // namespace ringsim
