#include "ringsim/ensemble/probe.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

#include "ringsim/core/error.hpp"
#include "ringsim/ensemble/scenario.hpp"

namespace ringsim {

void ProbeConfig::validate() const {
  require(window > 0.0 && std::isfinite(window), ErrorCategory::invalid_input, "probe window must be positive");
  require(duration > 0.0 && std::isfinite(duration), ErrorCategory::invalid_input, "probe duration must be positive");
  require(std::isfinite(azimuth) && std::isfinite(reference), ErrorCategory::invalid_input,
          "probe azimuth and reference must be finite");
  for (std::size_t i = 1; i < delays.size(); ++i) {
    require(delays[i] > delays[i - 1], ErrorCategory::invalid_input, "probe delays must be strictly increasing");
  }
}

std::vector<double> delay_grid(double first, double last, double step) {
  require(step > 0.0 && last >= first, ErrorCategory::invalid_input, "delay grid needs step > 0 and last >= first");
  const auto n = static_cast<std::size_t>(std::floor((last - first) / step + 1e-9)) + 1;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = first + step * static_cast<double>(i);
  return d;
}

ProbeTrace probe_trace(const ScenarioResult& result, const ProbeConfig& probe) {
  probe.validate();
  require(!probe.delays.empty(), ErrorCategory::invalid_input, "probe delay list is empty");
  const ProbeConfig& run = result.config.probe;
  require(run.azimuth == probe.azimuth && run.window == probe.window, ErrorCategory::invalid_input,
          "probe azimuth and window must match the ones recorded by the scenario run");
  const double ref = probe.auto_reference ? result.reference.first_pass - 0.5 * probe.duration : probe.reference;
  require(ref + probe.delays.back() + probe.duration <= result.config.t_end * (1.0 + 1e-12),
          ErrorCategory::invalid_input, "scenario run does not cover the last probe delay");

  ProbeTrace tr;
  tr.seed = result.config.seed.value_or(0);
  tr.scenario_hash = result.hash;
  tr.atoms = result.atoms.size();
  tr.reference = ref;
  std::vector<char> removed(result.atoms.size(), 0);
  for (double d : probe.delays) {
    const double a = ref + d;
    const double b = a + probe.duration;
    std::size_t count = 0;
    for (std::size_t i = 0; i < result.atoms.size(); ++i) {
      if (removed[i]) continue;
      const auto& p = result.atoms[i].passes;
      for (std::size_t k = 0; k + 1 < p.size(); k += 2) {
        if (p[k] <= b && p[k + 1] >= a) {
          ++count;
          if (probe.destructive) removed[i] = 1;
          break;
        }
        if (p[k] > b) break;
      }
    }
    tr.delay.push_back(d);
    tr.signal.push_back(static_cast<double>(count));
  }
  return tr;
}

void write_probe_csv(std::ostream& os, const ProbeTrace& trace, const std::vector<std::string>& comment) {
  for (const auto& c : comment) os << "# " << c << '\n';
  os << "delay_s,signal\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.delay.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9e,%.17g\n", trace.delay[i], trace.signal[i]);
    os << buf;
  }
}

ProbeCsv read_probe_csv(std::istream& is) {
  ProbeCsv out;
  std::string line;
  int n = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = "trace line " + std::to_string(n);
    if (line.front() == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const auto b = line.find_first_not_of(" #");
      out.meta[line.substr(b, eq - b)] = line.substr(eq + 1);
      continue;
    }
    if (!header) {
      require(line == "delay_s,signal", ErrorCategory::parse, where + ": expected header 'delay_s,signal'");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    require(comma != std::string::npos, ErrorCategory::parse, where + ": expected two columns");
    try {
      std::size_t used = 0;
      const double d = std::stod(line.substr(0, comma), &used);
      const std::string rest = line.substr(comma + 1);
      std::size_t used2 = 0;
      const double s = std::stod(rest, &used2);
      require(used == comma && used2 == rest.size(), ErrorCategory::parse, where + ": trailing characters");
      out.trace.delay.push_back(d);
      out.trace.signal.push_back(s);
    } catch (const std::logic_error&) {
      fail(ErrorCategory::parse, where + ": not a number");
    }
  }
  require(header, ErrorCategory::parse, "trace has no header line");
  auto& m = out.meta;
  try {
    if (m.count("scenario_hash")) out.trace.scenario_hash = m["scenario_hash"];
    if (m.count("seed")) out.trace.seed = std::stoull(m["seed"]);
    if (m.count("atoms")) out.trace.atoms = std::stoull(m["atoms"]);
    if (m.count("reference_s")) out.trace.reference = std::stod(m["reference_s"]);
  } catch (const std::logic_error&) {
    fail(ErrorCategory::parse, "trace metadata is not numeric");
  }
  return out;
}

}  // namespace ringsim
