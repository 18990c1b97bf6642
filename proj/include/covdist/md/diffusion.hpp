#pragma once

// Self-diffusion coefficient estimators: Einstein (mean-squared displacement)
// and Green-Kubo (velocity autocorrelation).

#include <covdist/core.hpp>
#include <covdist/timeseries.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <span>
#include <string>
#include <vector>

namespace covdist::md {

// ---------------------------------------------------------------------------
// MSD
// ---------------------------------------------------------------------------

struct MsdOptions {
  std::size_t origin_stride{0};        // 0: about 512 origins
  std::size_t max_window_points{200};  // lags evaluated inside the fit window
  double min_r_squared{0.9};
  double max_diffusive_exponent{1.5};  // log-log slope above this is flagged ballistic
};

struct MsdResult {
  double diffusion{0.0};
  double slope{0.0};
  double intercept{0.0};
  double r_squared{1.0};
  double loglog_exponent{0.0};
  bool diffusive{true};
  std::vector<double> times;
  std::vector<double> msd;
};

namespace detail {
struct LineFit {
  double slope{0.0}, intercept{0.0}, r_squared{1.0};
};
inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 && sxx > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}
}  // namespace detail

/// Mean over particles and time origins of |r(t0 + lag) - r(t0)|^2.
inline double mean_squared_displacement(const FrameTrajectory& traj, std::size_t lag,
                                        std::size_t origin_stride) {
  const std::size_t frames = traj.n_frames();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t0 = 0; t0 + lag < frames; t0 += origin_stride) {
    const auto a = traj.frame(t0);
    const auto b = traj.frame(t0 + lag);
    for (std::size_t p = 0; p < traj.n_particles; ++p) sum += norm2(b[p] - a[p]);
    count += traj.n_particles;
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

/// D = slope / 6 of MSD(t) fitted over t in [t_max/4, t_max/2], where t_max
/// is the span of the trajectory. Positions must be unwrapped.
inline MsdResult diffusion_msd(const FrameTrajectory& unwrapped, MsdOptions opt = {}) {
  const std::size_t frames = unwrapped.n_frames();
  const std::size_t last = frames == 0 ? 0 : frames - 1;
  const std::size_t lo = (last + 3) / 4;
  const std::size_t hi = last / 2;
  if (frames < 2 || lo < 1 || hi < lo + 1) {
    throw ValidationError("diffusion_msd: too few frames (" + std::to_string(frames) + ")");
  }
  const std::size_t stride = opt.origin_stride ? opt.origin_stride : std::max<std::size_t>(1, frames / 512);
  const std::size_t span = hi - lo;
  const std::size_t points = std::min(span + 1, std::max<std::size_t>(2, opt.max_window_points));

  std::vector<std::size_t> lags;
  for (std::size_t i = 0; i < points; ++i) lags.push_back(lo + (span * i) / (points - 1));
  lags.erase(std::unique(lags.begin(), lags.end()), lags.end());

  MsdResult r;
  for (std::size_t lag : lags) {
    r.times.push_back(static_cast<double>(lag) * unwrapped.frame_spacing());
    r.msd.push_back(mean_squared_displacement(unwrapped, lag, stride));
  }
  auto fit = detail::least_squares(r.times, r.msd);
  r.slope = fit.slope;
  r.intercept = fit.intercept;
  r.r_squared = fit.r_squared;
  r.diffusion = r.slope / 6.0;

  const bool positive = std::all_of(r.msd.begin(), r.msd.end(), [](double m) { return m > 0.0; });
  if (positive) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < r.times.size(); ++i) {
      lx.push_back(std::log(r.times[i]));
      ly.push_back(std::log(r.msd[i]));
    }
    r.loglog_exponent = detail::least_squares(lx, ly).slope;
  }
  r.diffusive = r.r_squared >= opt.min_r_squared && r.loglog_exponent <= opt.max_diffusive_exponent;
  return r;
}

// ---------------------------------------------------------------------------
// VACF
// ---------------------------------------------------------------------------

/// Streams velocity frames and accumulates <v(t0) . v(t0 + k)> for lags
/// 0..max_lag, with a new time origin every origin_stride frames.
class VacfAccumulator {
 public:
  VacfAccumulator(std::size_t n_particles, std::size_t max_lag, std::size_t origin_stride = 1)
      : n_(n_particles), max_lag_(max_lag), stride_(std::max<std::size_t>(1, origin_stride)),
        sums_(max_lag + 1, 0.0), counts_(max_lag + 1, 0) {}

  void push(std::span<const Vec3> frame) {
    if (frame.size() != n_) throw ValidationError("vacf: frame has wrong particle count");
    if (frame_ % stride_ == 0) origins_.push_back({frame_, std::vector<Vec3>(frame.begin(), frame.end())});
    for (const auto& o : origins_) {
      const std::size_t lag = frame_ - o.start;
      double s = 0.0;
      for (std::size_t p = 0; p < n_; ++p) s += dot(o.v[p], frame[p]);
      sums_[lag] += s;
      counts_[lag] += n_;
    }
    while (!origins_.empty() && frame_ - origins_.front().start >= max_lag_) origins_.pop_front();
    ++frame_;
  }

  std::size_t frames_seen() const { return frame_; }

  /// Lags that received at least one sample.
  std::vector<double> vacf() const {
    std::vector<double> c;
    for (std::size_t k = 0; k <= max_lag_ && counts_[k] > 0; ++k) {
      c.push_back(sums_[k] / static_cast<double>(counts_[k]));
    }
    return c;
  }

 private:
  struct Origin {
    std::size_t start;
    std::vector<Vec3> v;
  };
  std::size_t n_;
  std::size_t max_lag_;
  std::size_t stride_;
  std::size_t frame_{0};
  std::deque<Origin> origins_;
  std::vector<double> sums_;
  std::vector<std::size_t> counts_;
};

struct VacfOptions {
  double max_lag_time{0.0};      // 0: half the trajectory span
  std::size_t origin_stride{0};  // 0: about 2000 origins
  double decay_fraction{0.01};
};

struct VacfResult {
  double diffusion{0.0};
  double t_cut{0.0};
  bool divergent{false};  // VACF never settled below the decay threshold
  double c0{0.0};
  double temperature{0.0};  // c0 / 3 for unit mass
  double lag_spacing{0.0};
  std::vector<double> vacf;
};

/// D = (1/3) * trapezoid integral of C(t) from 0 to t_cut, where t_cut is the
/// first lag after which |C| stays below decay_fraction * C(0) for the rest
/// of the computed window. Zero crossings of the VACF in dense liquids
/// therefore do not truncate the integral early.
inline VacfResult integrate_vacf(std::vector<double> c, double spacing, double decay_fraction = 0.01) {
  if (c.size() < 2) throw ValidationError("diffusion_vacf: too few frames");
  VacfResult r;
  r.lag_spacing = spacing;
  r.c0 = c.front();
  r.temperature = r.c0 / 3.0;
  r.vacf = std::move(c);
  const auto& v = r.vacf;
  if (!(r.c0 > 0.0)) return r;
  const double threshold = decay_fraction * r.c0;
  std::size_t cut = v.size();
  for (std::size_t k = v.size(); k-- > 0;) {
    if (std::abs(v[k]) >= threshold) break;
    cut = k;
  }
  if (cut == v.size()) {
    r.divergent = true;
    cut = v.size() - 1;
  }
  double integral = 0.0;
  for (std::size_t k = 0; k < cut; ++k) integral += 0.5 * (v[k] + v[k + 1]) * spacing;
  r.t_cut = static_cast<double>(cut) * spacing;
  r.diffusion = integral / 3.0;
  return r;
}

inline std::size_t vacf_max_lag(std::size_t frames, double spacing, double max_lag_time) {
  std::size_t lag = max_lag_time > 0.0 ? static_cast<std::size_t>(std::llround(max_lag_time / spacing))
                                       : (frames - 1) / 2;
  return std::clamp<std::size_t>(lag, 1, frames - 1);
}

inline std::size_t vacf_origin_stride(std::size_t frames, std::size_t requested) {
  return requested ? requested : std::max<std::size_t>(1, frames / 2000);
}

inline VacfResult diffusion_vacf(const FrameTrajectory& velocities, VacfOptions opt = {}) {
  const std::size_t frames = velocities.n_frames();
  if (frames < 2) throw ValidationError("diffusion_vacf: too few frames (" + std::to_string(frames) + ")");
  const double spacing = velocities.frame_spacing();
  VacfAccumulator acc(velocities.n_particles, vacf_max_lag(frames, spacing, opt.max_lag_time),
                      vacf_origin_stride(frames, opt.origin_stride));
  for (std::size_t f = 0; f < frames; ++f) acc.push(velocities.frame(f));
  return integrate_vacf(acc.vacf(), spacing, opt.decay_fraction);
}

}  // namespace covdist::md
