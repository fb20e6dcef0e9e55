#include "spinone/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "spinone/errors.hpp"

namespace spinone {

void ObservableCurve::validate() const {
  if (D.size() != value.size()) fail(ErrorCode::domain, "curve: D and value lengths differ");
  for (std::size_t i = 0; i < D.size(); ++i) {
    if (!std::isfinite(D[i]) || !std::isfinite(value[i])) fail(ErrorCode::domain, "curve: non-finite sample");
    if (i > 0 && !(D[i] > D[i - 1])) fail(ErrorCode::domain, "curve: D grid must be strictly increasing");
  }
}

ObservableCurve ObservableCurve::window(double lo, double hi) const {
  ObservableCurve out{L, {}, {}};
  for (std::size_t i = 0; i < D.size(); ++i)
    if (D[i] >= lo && D[i] <= hi) {
      out.D.push_back(D[i]);
      out.value.push_back(value[i]);
    }
  return out;
}

std::vector<std::size_t> interior_local_maxima(const ObservableCurve& curve) {
  curve.validate();
  std::vector<std::size_t> out;
  const auto& y = curve.value;
  const std::size_t n = y.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(y[i] > y[i - 1])) continue;
    std::size_t j = i;
    while (j + 1 < n && y[j + 1] == y[i]) ++j;
    if (j + 1 < n && y[j + 1] < y[i]) out.push_back(i);
  }
  return out;
}

Vertex parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
  // y = y1 + b (x - x1) + a (x - x1)^2 through the two neighbours.
  const double h0 = x0 - x1, h2 = x2 - x1;
  const double s0 = (y0 - y1) / h0, s2 = (y2 - y1) / h2;
  const double a = (s0 - s2) / (h0 - h2);
  const double b = s0 - a * h0;
  if (a == 0.0) return {x1, y1, 0.0};
  return {x1 - b / (2.0 * a), y1 - b * b / (4.0 * a), a};
}

PeakEstimate find_peak(const ObservableCurve& curve) {
  curve.validate();
  const std::size_t n = curve.D.size();
  if (n < 3) fail(ErrorCode::insufficient_data, "find_peak: need at least 3 points");
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (curve.value[i] > curve.value[best]) best = i;
  const auto [lo, hi] = std::minmax_element(curve.value.begin(), curve.value.end());
  if (*lo == *hi) fail(ErrorCode::not_found, "find_peak: curve is flat");
  if (best == 0 || best + 1 == n)
    fail(ErrorCode::boundary_peak, "find_peak: maximum on the grid boundary at L=" + std::to_string(curve.L) +
                                       ", D=" + std::to_string(curve.D[best]));
  const Vertex v = parabola_vertex(curve.D[best - 1], curve.value[best - 1], curve.D[best], curve.value[best],
                                   curve.D[best + 1], curve.value[best + 1]);
  if (!(v.a < 0.0)) fail(ErrorCode::not_found, "find_peak: refining parabola is not concave");
  PeakEstimate p;
  p.L = curve.L;
  p.D_max = v.x;
  p.value_max = v.y;
  p.curvature = v.a;
  p.grid_spacing = 0.5 * (curve.D[best + 1] - curve.D[best - 1]);
  p.grid_index = best;
  return p;
}

namespace {

std::vector<PeakEstimate> select_sizes(const std::vector<PeakEstimate>& peaks, int min_L) {
  std::vector<PeakEstimate> out;
  std::set<int> seen;
  for (const auto& p : peaks) {
    if (!seen.insert(p.L).second) fail(ErrorCode::domain, "fit: duplicate size L=" + std::to_string(p.L));
    if (p.L >= min_L) out.push_back(p);
  }
  std::sort(out.begin(), out.end(), [](const PeakEstimate& a, const PeakEstimate& b) { return a.L < b.L; });
  return out;
}

struct Linear {
  double intercept, slope, rss;
};

// Least squares y = intercept + slope * x.
Linear linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  const double intercept = my - slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - intercept - slope * x[i];
    rss += r * r;
  }
  return {intercept, slope, rss};
}

double total_sum_squares(const std::vector<double>& y) {
  double m = 0.0;
  for (double v : y) m += v;
  m /= static_cast<double>(y.size());
  double t = 0.0;
  for (double v : y) t += (v - m) * (v - m);
  return t;
}

double r_squared(double rss, double tss) {
  if (tss <= 0.0) return rss <= 0.0 ? 1.0 : 0.0;
  return std::clamp(1.0 - rss / tss, 0.0, 1.0);
}

}  // namespace

int default_min_L(const std::vector<PeakEstimate>& peaks) {
  std::set<int, std::greater<>> sizes;
  for (const auto& p : peaks) sizes.insert(p.L);
  if (sizes.size() < 3) return sizes.empty() ? 0 : *sizes.rbegin();
  return *std::next(sizes.begin(), 2);
}

FssFit fit_fss(const std::vector<PeakEstimate>& peaks, std::optional<int> min_L) {
  FssFit fit;
  fit.min_L = min_L.value_or(default_min_L(peaks));
  const auto used = select_sizes(peaks, fit.min_L);
  if (used.size() < 3) fail(ErrorCode::insufficient_data, "fit_fss: need at least 3 sizes >= min_L");
  std::vector<double> y;
  for (const auto& p : used) {
    fit.sizes_used.push_back(p.L);
    y.push_back(p.D_max);
  }

  auto solve = [&](double nu) {
    std::vector<double> x;
    for (const auto& p : used) x.push_back(std::pow(static_cast<double>(p.L), -1.0 / nu));
    return linear_fit(x, y);
  };
  auto rss = [&](double nu) { return solve(nu).rss; };

  // Coarse log-spaced scan locates the basin, golden section refines it.
  constexpr int kScan = 200;
  const double lmin = std::log(kNuMin), lmax = std::log(kNuMax);
  auto nu_at = [&](int k) { return std::exp(lmin + (lmax - lmin) * k / kScan); };
  int best = 0;
  double best_rss = rss(nu_at(0));
  for (int k = 1; k <= kScan; ++k) {
    const double r = rss(nu_at(k));
    if (r < best_rss) {
      best_rss = r;
      best = k;
    }
  }
  double a = nu_at(std::max(best - 1, 0)), b = nu_at(std::min(best + 1, kScan));
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = rss(c), fd = rss(d);
  while (b - a > 1e-13 * (a + b)) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = rss(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = rss(d);
    }
  }
  double nu = 0.5 * (a + b);
  if (best_rss < rss(nu)) nu = nu_at(best);

  const Linear lin = solve(nu);
  fit.nu = nu;
  fit.D_c = lin.intercept;
  fit.amplitude = lin.slope;
  fit.rss = lin.rss;
  fit.r2 = r_squared(lin.rss, total_sum_squares(y));
  for (const auto& p : used) fit.residuals.push_back(p.D_max - (lin.intercept + lin.slope * std::pow(p.L, -1.0 / nu)));
  const double edge = 1e-6;
  fit.bracket_warning = nu <= kNuMin * (1.0 + edge) || nu >= kNuMax * (1.0 - edge);
  return fit;
}

PowerLawFit fit_power_law(const std::vector<PeakEstimate>& peaks, std::optional<int> min_L) {
  PowerLawFit fit;
  fit.min_L = min_L.value_or(default_min_L(peaks));
  const auto used = select_sizes(peaks, fit.min_L);
  if (used.size() < 2) fail(ErrorCode::insufficient_data, "fit_power_law: need at least 2 sizes >= min_L");
  std::vector<double> x, y;
  for (const auto& p : used) {
    if (!(p.value_max > 0.0)) fail(ErrorCode::domain, "fit_power_law: peak values must be positive");
    fit.sizes_used.push_back(p.L);
    x.push_back(std::log(static_cast<double>(p.L)));
    y.push_back(std::log(p.value_max));
  }
  const Linear lin = linear_fit(x, y);
  fit.exponent = -lin.slope;
  fit.log_prefactor = lin.intercept;
  fit.r2 = r_squared(lin.rss, total_sum_squares(y));
  return fit;
}

double delta_v_from_delta_q(double dq, double z, double d) { return (dq + 2.0 * z + d) / 2.0; }

LuttingerK luttinger_k(std::optional<double> nu, std::optional<double> delta_v) {
  if (!nu && !delta_v) fail(ErrorCode::domain, "luttinger_k: need nu or Delta_V");
  LuttingerK k;
  if (nu) {
    if (*nu == 0.0) fail(ErrorCode::domain, "luttinger_k: nu must be nonzero");
    k.from_nu = 2.0 - 1.0 / *nu;
  }
  if (delta_v) k.from_delta_v = *delta_v;
  return k;
}

nlohmann::json to_json(const PeakEstimate& p) {
  return {{"L", p.L},
          {"D_max", p.D_max},
          {"value_max", p.value_max},
          {"curvature", p.curvature},
          {"grid_spacing", p.grid_spacing}};
}

nlohmann::json to_json(const FssFit& f) {
  return {{"model", "D_max(L) = D_c + a * L^(-1/nu)"},
          {"D_c", f.D_c},
          {"nu", f.nu},
          {"amplitude", f.amplitude},
          {"r2", f.r2},
          {"rss", f.rss},
          {"min_L", f.min_L},
          {"sizes_used", f.sizes_used},
          {"residuals", f.residuals},
          {"nu_bracket", {kNuMin, kNuMax}},
          {"bracket_warning", f.bracket_warning}};
}

nlohmann::json to_json(const PowerLawFit& f) {
  return {{"model", "S_max(L) ~ L^(-Delta_Q)"},
          {"delta_q", f.exponent},
          {"log_prefactor", f.log_prefactor},
          {"r2", f.r2},
          {"min_L", f.min_L},
          {"sizes_used", f.sizes_used}};
}

}  // namespace spinone
