#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace spinone {

// Sampled (D, value) points at fixed L, D strictly increasing.
struct ObservableCurve {
  int L = 0;
  std::vector<double> D;
  std::vector<double> value;

  // Throws Error(domain) on size mismatch, non-finite entries or a grid that
  // is not strictly increasing.
  void validate() const;
  // Points with D in [lo, hi], preserving order.
  ObservableCurve window(double lo, double hi) const;
};

struct PeakEstimate {
  int L = 0;
  double D_max = 0.0;
  double value_max = 0.0;
  double curvature = 0.0;  // quadratic coefficient of the refining parabola
  double grid_spacing = 0.0;
  std::size_t grid_index = 0;  // index of the grid maximum
};

// Indices i with value[i-1] < value[i] > value[i+1]. Runs of equal values at
// the top of a bump count once, at their lowest index.
std::vector<std::size_t> interior_local_maxima(const ObservableCurve& curve);

// Largest sample (ties to lower D) refined by the parabola through it and its
// two neighbours. Throws Error(boundary_peak) if the maximum sits on either end
// of the grid, Error(not_found) if the curve is flat, Error(insufficient_data)
// below three points.
PeakEstimate find_peak(const ObservableCurve& curve);

// Parabola vertex through three points (x0 < x1 < x2). Returns {x, y, a}
// with a the quadratic coefficient.
struct Vertex {
  double x, y, a;
};
Vertex parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2);

inline constexpr double kNuMin = 0.2;
inline constexpr double kNuMax = 5.0;

struct FssFit {
  double D_c = 0.0;
  double nu = 0.0;
  double amplitude = 0.0;
  double r2 = 0.0;
  double rss = 0.0;
  int min_L = 0;
  std::vector<int> sizes_used;
  std::vector<double> residuals;  // D_max(L) - model, per size used
  bool bracket_warning = false;   // nu landed on the search bracket
};

// Default size cutoff: the largest L leaving three sizes, i.e. the third
// largest distinct size.
int default_min_L(const std::vector<PeakEstimate>& peaks);

// Minimizes sum [D_max(L) - (D_c + a L^{-1/nu})]^2 by golden-section over nu in
// [0.2, 5] with the inner (D_c, a) solved by linear least squares. Throws
// Error(insufficient_data) with fewer than three sizes >= min_L.
FssFit fit_fss(const std::vector<PeakEstimate>& peaks, std::optional<int> min_L = std::nullopt);

struct PowerLawFit {
  double exponent = 0.0;  // Delta_Q, with S ~ L^{-Delta_Q}
  double log_prefactor = 0.0;
  double r2 = 0.0;
  int min_L = 0;
  std::vector<int> sizes_used;
};

// Least squares of ln(value_max) against ln(L). Throws Error(domain) on a
// non-positive peak value, Error(insufficient_data) below two sizes.
PowerLawFit fit_power_law(const std::vector<PeakEstimate>& peaks, std::optional<int> min_L = std::nullopt);

inline constexpr double kDynamicalZ = 1.0;
inline constexpr double kSpatialD = 1.0;

// Delta_V = (Delta_Q + 2z + d) / 2.
double delta_v_from_delta_q(double dq, double z = kDynamicalZ, double d = kSpatialD);

struct LuttingerK {
  std::optional<double> from_nu;       // 2 - 1/nu
  std::optional<double> from_delta_v;  // Delta_V
};

// Throws Error(domain) if both inputs are absent or nu == 0.
LuttingerK luttinger_k(std::optional<double> nu, std::optional<double> delta_v);

nlohmann::json to_json(const PeakEstimate& p);
nlohmann::json to_json(const FssFit& f);
nlohmann::json to_json(const PowerLawFit& f);

}  // namespace spinone
