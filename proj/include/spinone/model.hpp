#pragma once

// Spin-1 XXZ chain with uniaxial single-ion anisotropy, open boundaries:
//
//   H = sum_{j=1}^{L-1} [ (S+_j S-_{j+1} + S-_j S+_{j+1})/2 + lambda Sz_j Sz_{j+1} ]
//       + D sum_{j=1}^{L} (Sz_j)^2
//
// Local basis ordering is {|+1>, |0>, |-1>} (index 0, 1, 2). Product states
// are enumerated lexicographically with site 1 as the most significant digit.

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace spinone {

using Mat3 = Eigen::Matrix3d;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int64_t>;

inline constexpr int kLocalDim = 3;
inline constexpr int kDenseGuardDefault = 14;

struct ModelParams {
  int L = 2;
  double lambda = 1.0;
  double D = 0.0;

  // Throws Error(domain) on L < 1 or non-finite couplings.
  void validate() const;
};

struct LocalOps {
  Mat3 sx, sy_imag, sz, sz2, sp, sm;
};

// sy = i * sy_imag, so every stored matrix is real.
const LocalOps& local_ops();

// Magnetic quantum number of local basis index s (0 -> +1, 1 -> 0, 2 -> -1).
constexpr int local_sz(int s) noexcept { return 1 - s; }

std::int64_t hilbert_dim(int L);

// Operator-valued tensor W[j](bond_in, bond_out, out, in), stored as
// (bond_in x bond_out) blocks of 3x3 matrices.
struct MpoTensor {
  int bond_in = 0;
  int bond_out = 0;
  std::vector<Mat3> ops;  // row-major over (bond_in, bond_out)

  const Mat3& at(int w_in, int w_out) const { return ops[static_cast<std::size_t>(w_in * bond_out + w_out)]; }
  Mat3& at(int w_in, int w_out) { return ops[static_cast<std::size_t>(w_in * bond_out + w_out)]; }
};

struct HamiltonianMPO {
  ModelParams params;
  std::vector<MpoTensor> sites;
};

// Full-basis Hamiltonian of dimension 3^L in sparse storage. Guarded by
// max_L (3^L rows must be representable); throws Error(size) beyond it.
SparseMatrix build_dense(const ModelParams& params, int max_L = kDenseGuardDefault);

// Bulk bond dimension 5; W[1] is the first row and W[L] the last column of
// the bulk operator-valued matrix. Requires L >= 2.
HamiltonianMPO build_mpo(const ModelParams& params);

// Contracts the MPO into a full 3^L x 3^L matrix; test bridge for small L.
Eigen::MatrixXd contract_mpo(const HamiltonianMPO& mpo, int max_L = 8);

// Sorted full-basis indices of product states with sum_j m_j == sz_total.
std::vector<std::int64_t> total_sz_sector_basis(int L, int sz_total);

// Total Sz of a full-basis index.
int total_sz_of(std::int64_t index, int L);

// Hamiltonian restricted to one Sz sector, indexed like `basis`.
SparseMatrix build_sector(const ModelParams& params, const std::vector<std::int64_t>& basis);

}  // namespace spinone
