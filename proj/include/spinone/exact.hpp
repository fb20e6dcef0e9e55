#pragma once

#include <cstdint>
#include <limits>

#include <Eigen/Dense>

#include "spinone/model.hpp"

namespace spinone {

struct EDGroundState {
  int L = 0;
  double energy = 0.0;
  Eigen::VectorXd vector;  // unit vector over the full 3^L basis
  int sector = 0;
  double gap = std::numeric_limits<double>::infinity();  // first excitation within the sector
  bool degenerate = false;                                // gap < 1e-10
  double residual = 0.0;
  Eigen::VectorXd excited;  // first excited vector in the sector (full basis); empty when the sector has dim 1
};

struct EDOptions {
  double tol = 1e-10;
  int max_iterations = 500;
  int max_L = kDenseGuardDefault;
  // Sectors up to this dimension are diagonalized densely.
  std::int64_t dense_cutoff = 400;
};

inline constexpr double kDegeneracyGap = 1e-10;

// Lowest eigenpair in the given Sz sector. The returned vector has its
// largest-magnitude component positive. Throws ConvergenceError when the
// Lanczos iteration cap is hit.
EDGroundState ed_ground_state(const ModelParams& params, int sector, const EDOptions& options = {});

// Minimum over all sectors; ties resolve to the smallest |Sz|, then positive Sz.
EDGroundState ed_ground_state_global(const ModelParams& params, const EDOptions& options = {});

// Flips the sign of v so its largest-magnitude entry (first on ties) is positive.
void apply_sign_convention(Eigen::VectorXd& v);

}  // namespace spinone
