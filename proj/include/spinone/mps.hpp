#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinone/model.hpp"

namespace spinone {

using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;

// Rank-3 site tensor A(a, s, b) with physical dimension 3, stored column-major
// as a + left*(s + 3*b). Both matrix groupings are free reshapes:
//   left_grouped():  (left*3) x right, row a + left*s
//   right_grouped(): left x (3*right), col s + 3*b
struct SiteTensor {
  int left = 1;
  int right = 1;
  std::vector<double> data;

  SiteTensor() = default;
  SiteTensor(int l, int r) : left(l), right(r), data(static_cast<std::size_t>(l) * 3 * static_cast<std::size_t>(r), 0.0) {}

  double& operator()(int a, int s, int b) { return data[index(a, s, b)]; }
  double operator()(int a, int s, int b) const { return data[index(a, s, b)]; }
  std::size_t index(int a, int s, int b) const {
    return static_cast<std::size_t>(a) + static_cast<std::size_t>(left) * (static_cast<std::size_t>(s) + 3 * static_cast<std::size_t>(b));
  }

  MatrixMap left_grouped() { return {data.data(), left * 3, right}; }
  ConstMatrixMap left_grouped() const { return {data.data(), left * 3, right}; }
  MatrixMap right_grouped() { return {data.data(), left, 3 * right}; }
  ConstMatrixMap right_grouped() const { return {data.data(), left, 3 * right}; }
};

// Open-boundary matrix product state. charges[k] labels the basis of bond k
// (k = 0..L) by the total Sz of the sites to its left; charges.front() = {0}
// and charges.back() = {target Sz}. Entries violating charge conservation are
// exactly zero.
struct Mps {
  std::vector<SiteTensor> sites;
  std::vector<std::vector<int>> charges;
  int center = 0;                          // orthogonality center, -1 if unknown
  std::vector<std::vector<double>> spectra;  // singular values on bonds 1..L-1, index k-1; may be empty

  int length() const { return static_cast<int>(sites.size()); }
  int bond_dim(int k) const { return k == 0 ? sites.front().left : sites[static_cast<std::size_t>(k - 1)].right; }
  int max_bond_dim() const;
  int target_sz() const { return charges.empty() ? 0 : charges.back().front(); }
};

// Product state from local basis indices (0 -> |+1>, 1 -> |0>, 2 -> |-1>).
Mps product_state(const std::vector<int>& local);

// Random charge-respecting MPS in the given Sz sector with bond dimension up
// to chi, right-canonical with center 0 and unit norm.
Mps random_mps(int L, int chi, int target_sz, std::uint64_t seed);

// Brings the state to right-canonical form with center at site 0 and unit norm.
void right_canonicalize(Mps& mps);

// Signed <a|b>.
double mps_inner(const Mps& a, const Mps& b);
// |<a|b>|; throws Error(domain) on length mismatch.
double mps_overlap(const Mps& a, const Mps& b);
double mps_norm(const Mps& a);

// Full contraction into a 3^L amplitude vector (site 1 most significant).
Eigen::VectorXd mps_to_dense(const Mps& a, int max_L = kDenseGuardDefault);

// Schmidt coefficients across the bond with `cut` sites on the left,
// obtained by moving the orthogonality center onto that bond.
std::vector<double> mps_schmidt_values(const Mps& a, int cut);

// Global spin flip P (m -> -m on every site) of a state in the Sz = 0
// sector. Bond bases are reversed so that grouped charge labels stay
// ascending. Throws Error(domain) for other sectors.
Mps spin_flip(const Mps& a);
// <a|P|a> / <a|a>.
double spin_flip_expectation(const Mps& a);

// (a + parity P a), normalized, right-canonical and truncated to chi_max by a
// charge-blocked SVD sweep. `discarded` receives the largest discarded weight.
// Throws Error(domain) when the projection vanishes (|a> lies in the other
// parity sector) or parity is not +1 or -1.
Mps project_spin_flip(const Mps& a, int parity, int chi_max, double cutoff, double* discarded = nullptr);

// Max-abs deviation of A^T A (resp. A A^T) from identity.
double left_isometry_error(const SiteTensor& t);
double right_isometry_error(const SiteTensor& t);
// Max isometry deviation over all sites, relative to `center`.
double canonical_form_error(const Mps& a, int center);

double mpo_expectation(const Mps& a, const HamiltonianMPO& mpo);

// Result of a charge-blocked truncated SVD  M = U diag(s) Vt.
struct BlockSvd {
  Eigen::MatrixXd u;
  Eigen::VectorXd s;
  Eigen::MatrixXd vt;
  std::vector<int> charges;  // charge of each kept singular triplet
  double discarded_weight = 0.0;
};

// Rows with charge r and columns with charge c couple only when r == c.
// Keeps the chi_max largest values above cutoff * max (at least one). Kept
// triplets are grouped by ascending charge, descending within each charge.
BlockSvd block_svd(const Eigen::MatrixXd& m, const std::vector<int>& row_charges, const std::vector<int>& col_charges,
                   int chi_max, double cutoff);

// Checkpoint file (JSON text); see README for the layout.
struct MpsCheckpoint {
  Mps state;
  std::string config_json = "{}";
  std::uint64_t seed = 0;
};
void save_checkpoint(const std::string& path, const MpsCheckpoint& ckpt);
MpsCheckpoint load_checkpoint(const std::string& path);

}  // namespace spinone
