#include "ringsim/analysis/peak_train.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <Eigen/Dense>

#include "json.hpp"
#include "ringsim/core/constants.hpp"
#include "ringsim/core/error.hpp"

namespace ringsim {

namespace {

constexpr double inv_sqrt_2pi = 0.39894228040143267794;
constexpr double cut = 8.0;  // exp(-32) ~ 1e-14 of a peak maximum
constexpr int max_terms = 100000;

bool finite_or_inf(double x) { return !std::isnan(x); }

}  // namespace

void PeakTrainParams::validate() const {
  require(std::isfinite(N0) && std::isfinite(T_orb) && std::isfinite(sigma0) && std::isfinite(sigma_v) &&
              std::isfinite(v_bar) && finite_or_inf(tau) && std::isfinite(beta) && finite_or_inf(tau_fill) &&
              std::isfinite(probe_width),
          ErrorCategory::invalid_input, "peak-train parameters must be finite");
  require(T_orb > 0.0 && tau > 0.0 && tau_fill > 0.0 && v_bar > 0.0, ErrorCategory::invalid_input,
          "T_orb, tau, tau_fill and v_bar must be positive");
  require(sigma0 >= 0.0 && sigma_v >= 0.0 && beta >= 0.0 && probe_width >= 0.0, ErrorCategory::invalid_input,
          "sigma0, sigma_v, beta and probe_width must be >= 0");
}

double PeakTrainParams::sigma_n(int n) const {
  const double nt = n * T_orb;
  return std::sqrt((sigma0 * sigma0 + sigma_v * sigma_v * nt * nt) / (v_bar * v_bar) + probe_width * probe_width);
}

double peak_train_model(const PeakTrainParams& p, double t) {
  p.validate();
  require(std::isfinite(t), ErrorCategory::invalid_input, "model time must be finite");
  double sum = 0.0;
  for (int n = 1; n <= max_terms; ++n) {
    const double s = p.sigma_n(n);
    const double u = t - n * p.T_orb;
    if (u < -cut * s) break;
    if (u > cut * s || s == 0.0) continue;
    sum += p.N0 * inv_sqrt_2pi / s * std::exp(-0.5 * u * u / (s * s));
  }
  const double decay = std::isinf(p.tau) ? 1.0 : std::exp(-t / p.tau);
  const double fill = std::isinf(p.tau_fill) ? 0.0 : -std::expm1(-t / p.tau_fill);
  return decay * (sum + p.N0 * p.beta * fill);
}

std::array<double, param_count> peak_train_gradient(const PeakTrainParams& p, double t) {
  p.validate();
  std::array<double, param_count> g{};
  const double v2 = p.v_bar * p.v_bar;
  double peaks = 0.0;
  double d_N0 = 0.0, d_T = 0.0, d_s0 = 0.0, d_sv = 0.0, d_v = 0.0, d_w = 0.0;
  for (int n = 1; n <= max_terms; ++n) {
    const double s = p.sigma_n(n);
    const double nt = n * p.T_orb;
    const double u = t - nt;
    if (u < -cut * s) break;
    if (u > cut * s || s == 0.0) continue;
    const double gauss = inv_sqrt_2pi / s * std::exp(-0.5 * u * u / (s * s));
    const double a = p.N0 * gauss;
    peaks += a;
    d_N0 += gauss;
    // dA/d(s^2) = A (u^2 - s^2) / (2 s^4)
    const double dA_ds2 = a * (u * u - s * s) / (2.0 * s * s * s * s);
    const double ds2_dT = 2.0 * p.sigma_v * p.sigma_v * n * nt / v2;
    d_T += a * u / (s * s) * n + dA_ds2 * ds2_dT;
    d_s0 += dA_ds2 * 2.0 * p.sigma0 / v2;
    d_sv += dA_ds2 * 2.0 * p.sigma_v * nt * nt / v2;
    d_v += dA_ds2 * (-2.0 * (p.sigma0 * p.sigma0 + p.sigma_v * p.sigma_v * nt * nt) / (v2 * p.v_bar));
    d_w += dA_ds2 * 2.0 * p.probe_width;
  }
  const double decay = std::isinf(p.tau) ? 1.0 : std::exp(-t / p.tau);
  const double fill = std::isinf(p.tau_fill) ? 0.0 : -std::expm1(-t / p.tau_fill);
  const double total = decay * (peaks + p.N0 * p.beta * fill);

  g[static_cast<int>(Param::N0)] = decay * (d_N0 + p.beta * fill);
  g[static_cast<int>(Param::T_orb)] = decay * d_T;
  g[static_cast<int>(Param::sigma0)] = decay * d_s0;
  g[static_cast<int>(Param::sigma_v)] = decay * d_sv;
  g[static_cast<int>(Param::v_bar)] = decay * d_v;
  g[static_cast<int>(Param::tau)] = std::isinf(p.tau) ? 0.0 : total * t / (p.tau * p.tau);
  g[static_cast<int>(Param::beta)] = decay * p.N0 * fill;
  g[static_cast<int>(Param::tau_fill)] =
      std::isinf(p.tau_fill) ? 0.0
                             : decay * p.N0 * p.beta * (-std::exp(-t / p.tau_fill) * t / (p.tau_fill * p.tau_fill));
  g[static_cast<int>(Param::probe_width)] = decay * d_w;
  return g;
}

namespace {

struct Regression {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

Regression linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  Regression r;
  r.slope = sxx > 0 ? sxy / sxx : 0.0;
  r.intercept = my - r.slope * mx;
  r.r2 = syy > 0 && sxx > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return r;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Period from the autocorrelation of the linearly detrended trace: the first
// local maximum past the central lobe that reaches half of the largest one.
double autocorrelation_period(const std::vector<double>& y, double step) {
  const std::size_t n = y.size();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i);
  std::vector<double> z(n);
  {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sxx += (x[i] - mx) * (x[i] - mx);
      sxy += (x[i] - mx) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    for (std::size_t i = 0; i < n; ++i) z[i] = y[i] - my - slope * (x[i] - mx);
  }
  std::vector<double> r(n / 2 + 1, 0.0);
  for (std::size_t k = 0; k < r.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) s += z[i] * z[i + k];
    r[k] = s / static_cast<double>(n - k);
  }
  if (!(r[0] > 0.0)) fail(ErrorCategory::statistics, "trace has no variation; no peaks to fit");
  std::size_t lobe = 1;
  while (lobe < r.size() && r[lobe] > 0.5 * r[0]) ++lobe;
  double top = 0.0;
  for (std::size_t j = lobe; j + 1 < r.size(); ++j) top = std::max(top, r[j]);
  std::size_t best = 0;
  for (std::size_t j = std::max<std::size_t>(lobe, 1); j + 1 < r.size(); ++j) {
    if (r[j] >= 0.5 * top && r[j] > 0.0 && r[j] >= r[j - 1] && r[j] >= r[j + 1]) {
      best = j;
      break;
    }
  }
  if (best == 0) fail(ErrorCategory::statistics, "no periodicity found in the trace");
  const double a = r[best - 1], b = r[best], c = r[best + 1];
  const double den = a - 2.0 * b + c;
  const double shift = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
  return (static_cast<double>(best) + shift) * step;
}

struct Window {
  double centroid = 0.0, sigma = 0.0, area = 0.0, height = 0.0, base = 0.0;
  std::size_t count = 0;
};

Window measure(const ProbeTrace& tr, double lo, double hi, double step) {
  Window w;
  std::vector<double> in;
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < tr.delay.size(); ++i) {
    if (tr.delay[i] < lo || tr.delay[i] > hi) continue;
    in.push_back(tr.signal[i]);
    top = std::max(top, tr.signal[i]);
  }
  w.count = in.size();
  if (w.count < 3) return w;
  // 10th percentile as the local floor; a plain minimum follows the noise.
  std::sort(in.begin(), in.end());
  const double base = in[static_cast<std::size_t>(0.1 * static_cast<double>(in.size() - 1))];
  double s0 = 0, s1 = 0, s2 = 0;
  for (std::size_t i = 0; i < tr.delay.size(); ++i) {
    if (tr.delay[i] < lo || tr.delay[i] > hi) continue;
    const double v = std::max(tr.signal[i] - base, 0.0);
    s0 += v;
    s1 += v * tr.delay[i];
  }
  if (s0 <= 0.0) return w;
  w.centroid = s1 / s0;
  for (std::size_t i = 0; i < tr.delay.size(); ++i) {
    if (tr.delay[i] < lo || tr.delay[i] > hi) continue;
    const double d = tr.delay[i] - w.centroid;
    s2 += std::max(tr.signal[i] - base, 0.0) * d * d;
  }
  w.sigma = std::sqrt(s2 / s0);
  w.area = s0 * step;
  w.height = top - base;
  w.base = base;
  return w;
}

}  // namespace

PeakAnalysis analyze_peaks(const ProbeTrace& trace, int min_peaks, double probe_width) {
  const std::size_t n = trace.delay.size();
  require(n == trace.signal.size(), ErrorCategory::invalid_input, "trace delay/signal size mismatch");
  require(n >= 8, ErrorCategory::statistics, "trace too short to locate peaks");
  for (std::size_t i = 1; i < n; ++i) {
    require(trace.delay[i] > trace.delay[i - 1], ErrorCategory::invalid_input, "trace delays must increase");
  }
  const double step = (trace.delay.back() - trace.delay.front()) / static_cast<double>(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    require(std::abs(trace.delay[i] - trace.delay[i - 1] - step) < 1e-6 * step + 1e-12, ErrorCategory::invalid_input,
            "peak detection needs a uniform delay grid");
  }

  PeakAnalysis pa;
  double period = autocorrelation_period(trace.signal, step);

  std::vector<double> diffs;
  for (std::size_t i = 1; i < n; ++i) diffs.push_back(std::abs(trace.signal[i] - trace.signal[i - 1]));
  const double noise = 1.4826 * median_of(diffs) / std::sqrt(2.0);

  for (int pass = 0; pass < 2; ++pass) {
    pa.peaks.clear();
    const int n_first = std::max(1, static_cast<int>(std::ceil(trace.delay.front() / period - 0.25)));
    const int n_last = static_cast<int>(std::floor(trace.delay.back() / period + 0.25));
    for (int k = n_first; k <= n_last; ++k) {
      double c = k * period;
      Window w;
      for (int it = 0; it < 3; ++it) {
        w = measure(trace, c - 0.5 * period, c + 0.5 * period, step);
        if (w.count < 3 || w.area <= 0.0) break;
        c = w.centroid;
      }
      if (w.count < 3 || w.area <= 0.0) continue;
      if (w.height < 5.0 * noise) continue;
      DetectedPeak p;
      p.n = k;
      p.t = w.centroid;
      p.height = w.height;
      p.area = w.area;
      p.sigma = w.sigma;
      pa.peaks.push_back(p);
    }
    // broadening lowers late peaks much faster than it shrinks their area
    double top_area = 0.0;
    for (const auto& p : pa.peaks) top_area = std::max(top_area, p.area);
    std::erase_if(pa.peaks, [&](const DetectedPeak& p) { return p.area < 0.02 * top_area; });
    if (static_cast<int>(pa.peaks.size()) < 2) break;
    double snt = 0.0, snn = 0.0;
    for (const auto& p : pa.peaks) {
      snt += p.n * p.t;
      snn += static_cast<double>(p.n) * p.n;
    }
    period = snt / snn;
  }
  if (static_cast<int>(pa.peaks.size()) < min_peaks) {
    fail(ErrorCategory::statistics, "found " + std::to_string(pa.peaks.size()) + " peaks, need at least " +
                                        std::to_string(min_peaks));
  }
  pa.period = period;

  std::vector<double> x, y, la, ta, bases;
  for (const auto& p : pa.peaks) {
    const double nt = p.n * period;
    x.push_back(nt * nt);
    y.push_back(p.sigma * p.sigma - probe_width * probe_width);
    ta.push_back(p.t);
    la.push_back(std::log(p.area));
  }
  const Regression wr = linear_fit(x, y);
  pa.width_intercept = wr.intercept;
  pa.width_slope = wr.slope;
  pa.width_r2 = wr.r2;
  const Regression ar = linear_fit(ta, la);
  pa.area_log_intercept = ar.intercept;
  pa.area_tau = ar.slope < 0.0 ? -1.0 / ar.slope : std::numeric_limits<double>::infinity();

  for (const auto& p : pa.peaks) {
    const Window w = measure(trace, p.t - 0.5 * period, p.t + 0.5 * period, step);
    bases.push_back(w.base);
  }
  pa.floor = median_of(bases);
  return pa;
}

namespace {

enum class Transform { identity, log };

struct FreeParam {
  Param which;
  Transform tr;
  std::string name;
  double lo = 0.0;  // bounds on the transformed value
  double hi = std::numeric_limits<double>::infinity();
};

double& field(PeakTrainParams& p, Param w) {
  switch (w) {
    case Param::N0: return p.N0;
    case Param::T_orb: return p.T_orb;
    case Param::sigma0: return p.sigma0;
    case Param::sigma_v: return p.sigma_v;
    case Param::v_bar: return p.v_bar;
    case Param::tau: return p.tau;
    case Param::beta: return p.beta;
    case Param::tau_fill: return p.tau_fill;
    case Param::probe_width: return p.probe_width;
  }
  return p.N0;
}

struct Problem {
  const ProbeTrace& trace;
  const FitOptions& opts;
  std::vector<FreeParam> free;
  std::vector<double> weight;

  PeakTrainParams unpack(const Eigen::VectorXd& th, PeakTrainParams p) const {
    for (std::size_t j = 0; j < free.size(); ++j) {
      const double v = std::clamp(th[j], free[j].lo, free[j].hi);
      field(p, free[j].which) = free[j].tr == Transform::log ? std::exp(v) : v;
    }
    if (opts.circumference) p.v_bar = *opts.circumference / p.T_orb;
    return p;
  }

  Eigen::VectorXd pack(const PeakTrainParams& p) const {
    Eigen::VectorXd th(free.size());
    for (std::size_t j = 0; j < free.size(); ++j) {
      const double v = field(const_cast<PeakTrainParams&>(p), free[j].which);
      th[j] = std::clamp(free[j].tr == Transform::log ? std::log(v) : v, free[j].lo, free[j].hi);
    }
    return th;
  }

  Eigen::VectorXd residual(const PeakTrainParams& p) const {
    Eigen::VectorXd r(trace.delay.size());
    for (std::size_t i = 0; i < trace.delay.size(); ++i) {
      r[i] = weight[i] * (peak_train_model(p, trace.delay[i]) - trace.signal[i]);
    }
    return r;
  }

  Eigen::MatrixXd jacobian(const PeakTrainParams& p) const {
    Eigen::MatrixXd J(trace.delay.size(), free.size());
    for (std::size_t i = 0; i < trace.delay.size(); ++i) {
      auto g = peak_train_gradient(p, trace.delay[i]);
      if (opts.circumference) {
        g[static_cast<int>(Param::T_orb)] +=
            g[static_cast<int>(Param::v_bar)] * (-*opts.circumference / (p.T_orb * p.T_orb));
      }
      for (std::size_t j = 0; j < free.size(); ++j) {
        double d = g[static_cast<int>(free[j].which)];
        if (free[j].tr == Transform::log) d *= field(const_cast<PeakTrainParams&>(p), free[j].which);
        J(i, j) = weight[i] * d;
      }
    }
    return J;
  }
};

PeakTrainParams initial_guess(const ProbeTrace& trace, const FitOptions& opts, const PeakTrainParams& fixed) {
  const PeakAnalysis pa = analyze_peaks(trace, 3, fixed.probe_width);
  PeakTrainParams p = fixed;
  p.T_orb = pa.period;
  if (opts.circumference) p.v_bar = *opts.circumference / p.T_orb;
  const double span = trace.delay.back();
  p.tau = std::isfinite(pa.area_tau) && pa.area_tau > 0.0 ? std::min(pa.area_tau, 100.0 * span) : 100.0 * span;
  p.N0 = std::exp(pa.area_log_intercept);
  // Keep the widths off zero; the fit works on their logarithms.
  const double s1 = pa.peaks.front().sigma;
  const double n1t = pa.peaks.front().n * pa.period;
  p.sigma_v = p.v_bar * std::sqrt(std::max(pa.width_slope, 0.01 * s1 * s1 / (n1t * n1t)));
  p.sigma0 = opts.fit_sigma0 ? p.v_bar * std::sqrt(std::max(pa.width_intercept, 0.1 * s1 * s1)) : fixed.sigma0;
  if (opts.fit_background) {
    const double env = p.N0 * std::exp(-span / p.tau);
    p.beta = env > 0.0 ? std::max(pa.floor, 0.0) / env : 0.0;
    p.tau_fill = pa.period;
  }
  return p;
}

}  // namespace

namespace {

struct Solve {
  Eigen::VectorXd th, r;
  Eigen::MatrixXd J;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

// Cosine between the residual and each informative Jacobian column, with
// components pinned at a bound (gradient pointing outward) projected away.
std::pair<Eigen::VectorXd, double> projected_gradient(const Problem& pr, const Eigen::MatrixXd& J,
                                                      const Eigen::VectorXd& r, const Eigen::VectorXd& th) {
  Eigen::VectorXd g = J.transpose() * r;
  double worst = 0.0;
  const double colmax = J.colwise().norm().maxCoeff();
  for (int j = 0; j < g.size(); ++j) {
    if ((th[j] <= pr.free[j].lo && g[j] > 0.0) || (th[j] >= pr.free[j].hi && g[j] < 0.0)) g[j] = 0.0;
    const double colnorm = J.col(j).norm();
    // columns that vanish (tau_fill with beta = 0) carry no information
    if (colnorm > 1e-12 * colmax && r.norm() > 0.0) worst = std::max(worst, std::abs(g[j]) / (colnorm * r.norm()));
  }
  return {g, worst};
}

Solve levenberg_marquardt(const Problem& pr, PeakTrainParams& p, int max_iterations, double tolerance,
                          std::vector<double>& history) {
  const int np = static_cast<int>(pr.free.size());
  int t_index = -1;
  for (int j = 0; j < np; ++j) {
    if (pr.free[j].which == Param::T_orb) t_index = j;
  }
  Solve sv;
  sv.th = pr.pack(p);
  p = pr.unpack(sv.th, p);
  sv.r = pr.residual(p);
  sv.cost = 0.5 * sv.r.squaredNorm();
  sv.J = pr.jacobian(p);
  sv.message = "maximum iterations reached";
  double lambda = 1e-3;

  for (; sv.iterations < max_iterations; ++sv.iterations) {
    const auto [g, gnorm] = projected_gradient(pr, sv.J, sv.r, sv.th);
    if (gnorm < 1e-8 || sv.cost == 0.0) {
      sv.converged = true;
      sv.message = "gradient below tolerance";
      break;
    }
    // Parameters pinned at a bound with the gradient pushing outward stay put.
    Eigen::MatrixXd A = sv.J.transpose() * sv.J;
    for (int j = 0; j < np; ++j) {
      if (g[j] == 0.0 && (sv.th[j] <= pr.free[j].lo || sv.th[j] >= pr.free[j].hi)) {
        A.row(j).setZero();
        A.col(j).setZero();
        A(j, j) = 1.0;
      }
    }
    const double dmax = A.diagonal().maxCoeff();
    bool accepted = false;
    for (int inner = 0; inner < 40 && !accepted; ++inner) {
      Eigen::MatrixXd M = A;
      for (int j = 0; j < np; ++j) M(j, j) += lambda * std::max(A(j, j), 1e-12 * dmax);
      Eigen::VectorXd delta = M.ldlt().solve(-g);
      // A period jump would realign peaks with the wrong revolution indices.
      if (t_index >= 0 && std::abs(delta[t_index]) > 0.02) delta *= 0.02 / std::abs(delta[t_index]);
      Eigen::VectorXd trial = sv.th + delta;
      for (int j = 0; j < np; ++j) trial[j] = std::clamp(trial[j], pr.free[j].lo, pr.free[j].hi);
      const PeakTrainParams q = pr.unpack(trial, p);
      bool ok = true;
      try {
        q.validate();
      } catch (const Error&) {
        ok = false;
      }
      if (ok) {
        const Eigen::VectorXd rq = pr.residual(q);
        const double cq = 0.5 * rq.squaredNorm();
        if (std::isfinite(cq) && cq <= sv.cost) {
          const double rel = (sv.cost - cq) / std::max(sv.cost, 1e-300);
          sv.th = trial;
          p = q;
          sv.r = rq;
          sv.cost = cq;
          history.push_back(cq);
          sv.J = pr.jacobian(p);
          lambda = std::max(lambda / 3.0, 1e-12);
          accepted = true;
          if (rel < tolerance && projected_gradient(pr, sv.J, sv.r, sv.th).second < 1e-4) {
            sv.converged = true;
            sv.message = "relative cost change below tolerance";
          }
          continue;
        }
      }
      lambda *= 4.0;
    }
    if (sv.converged) {
      ++sv.iterations;
      break;
    }
    if (!accepted) {
      sv.converged = projected_gradient(pr, sv.J, sv.r, sv.th).second < 1e-4;
      sv.message = sv.converged ? "no further decrease possible" : "step rejected at maximum damping";
      break;
    }
  }
  return sv;
}

}  // namespace

FitResult fit_peak_train(const ProbeTrace& trace, const std::optional<PeakTrainParams>& init, const FitOptions& opts,
                         const PeakTrainParams& fixed) {
  require(trace.delay.size() == trace.signal.size() && !trace.delay.empty(), ErrorCategory::invalid_input,
          "trace is empty or malformed");
  require(opts.max_iterations > 0, ErrorCategory::invalid_input, "max_iterations must be positive");
  PeakTrainParams p = init ? *init : initial_guess(trace, opts, fixed);
  if (init && opts.circumference) p.v_bar = *opts.circumference / p.T_orb;
  p.validate();

  // Lifetimes are confined to a few decades around the trace span; beyond
  // that they are indistinguishable from infinity and the fit wanders.
  const double span = trace.delay.back();
  const double inf = std::numeric_limits<double>::infinity();
  const FreeParam n0{Param::N0, Transform::identity, "N0", 0.0, inf};
  const FreeParam tau{Param::tau, Transform::log, "tau", std::log(1e-3 * span), std::log(1e3 * span)};
  const FreeParam beta{Param::beta, Transform::identity, "beta", 0.0, inf};
  const FreeParam tau_fill{Param::tau_fill, Transform::log, "tau_fill", std::log(1e-3 * span), std::log(10.0 * span)};

  Problem pr{trace, opts, {}, {}};
  pr.weight.resize(trace.signal.size(), 1.0);
  if (opts.weighting == Weighting::poisson) {
    for (std::size_t i = 0; i < trace.signal.size(); ++i) pr.weight[i] = 1.0 / std::sqrt(std::max(trace.signal[i], 1.0));
  }

  FitResult out;
  out.initial_residual_norm = pr.residual(p).norm();
  out.cost_history.push_back(0.5 * out.initial_residual_norm * out.initial_residual_norm);
  int used = 0;
  if (!init) {
    // Amplitudes first, with the peak positions and widths from the detector.
    pr.free = {n0, tau};
    if (opts.fit_background) pr.free.insert(pr.free.end(), {beta, tau_fill});
    used = levenberg_marquardt(pr, p, opts.max_iterations, opts.tolerance, out.cost_history).iterations;
  }

  // Widths enter squared, so zero is a stationary point; fit them in log space.
  // Above the caps the peaks merge into a smooth floor.
  const double arc = p.v_bar * p.T_orb;
  pr.free = {n0, {Param::T_orb, Transform::log, "T_orb", -inf, inf},
             {Param::sigma_v, Transform::log, "sigma_v", std::log(1e-12), std::log(p.v_bar)}, tau};
  if (opts.fit_sigma0) pr.free.push_back({Param::sigma0, Transform::log, "sigma0", std::log(1e-12), std::log(arc)});
  if (opts.fit_background) pr.free.insert(pr.free.end(), {beta, tau_fill});
  const int np = static_cast<int>(pr.free.size());
  const Solve sv = levenberg_marquardt(pr, p, opts.max_iterations, opts.tolerance, out.cost_history);
  const double cost = sv.cost;
  const Eigen::MatrixXd& J = sv.J;

  out.params = p;
  out.iterations = used + sv.iterations;
  out.converged = sv.converged;
  out.message = sv.message;
  out.residual_norm = sv.r.norm();
  out.gradient_norm = projected_gradient(pr, J, sv.r, sv.th).second;

  const int m = static_cast<int>(trace.delay.size());
  const double s2 = m > np ? 2.0 * cost / (m - np) : 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J.transpose() * J);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double emax = ev.maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(np);
  for (int j = 0; j < np; ++j) inv[j] = ev[j] > 1e-12 * emax ? 1.0 / ev[j] : 0.0;
  Eigen::MatrixXd C = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * s2;
  Eigen::VectorXd scale(np);
  for (int j = 0; j < np; ++j) scale[j] = pr.free[j].tr == Transform::log ? field(p, pr.free[j].which) : 1.0;
  C = scale.asDiagonal() * C * scale.asDiagonal();
  C = (0.5 * (C + C.transpose())).eval();
  out.covariance.assign(np, std::vector<double>(np));
  for (int a = 0; a < np; ++a) {
    out.names.push_back(pr.free[a].name);
    out.sigma.push_back(std::sqrt(std::max(C(a, a), 0.0)));
    for (int b = 0; b < np; ++b) out.covariance[a][b] = C(a, b);
  }
  return out;
}

double azimuthal_temperature(double sigma_v, double mass) { return mass * sigma_v * sigma_v / codata::kB; }

void write_fit_json(std::ostream& os, const FitResult& fit, const std::string& trace_hash, double mass) {
  using nlohmann::json;
  const PeakTrainParams& p = fit.params;
  json j;
  j["trace_hash"] = trace_hash;
  j["converged"] = fit.converged;
  j["message"] = fit.message;
  j["iterations"] = fit.iterations;
  j["residual_norm"] = fit.residual_norm;
  j["initial_residual_norm"] = fit.initial_residual_norm;
  j["gradient_norm"] = fit.gradient_norm;
  j["params"] = {{"N0", p.N0},       {"T_orb_s", p.T_orb},         {"sigma0_m", p.sigma0},
                 {"sigma_v_m_s", p.sigma_v}, {"v_bar_m_s", p.v_bar}, {"tau_s", p.tau},
                 {"beta", p.beta},   {"tau_fill_s", p.tau_fill},   {"probe_width_s", p.probe_width}};
  j["azimuthal_temperature_K"] = azimuthal_temperature(p.sigma_v, mass);
  json unc = json::object();
  for (std::size_t i = 0; i < fit.names.size(); ++i) unc[fit.names[i]] = fit.sigma[i];
  j["uncertainty"] = unc;
  j["free_parameters"] = fit.names;
  j["covariance"] = fit.covariance;
  os << j.dump(2) << '\n';
}

}  // namespace ringsim
