#pragma once

// Environment contractions shared by the DMRG engine and MPS utilities.
// Internal header; not installed.

#include <vector>

#include <Eigen/Dense>

#include "spinone/model.hpp"
#include "spinone/mps.hpp"

namespace spinone::detail {

// Nonzero <t|op|s> of an MPO site tensor, addressed by bond channels (w, v).
struct OpEntry {
  int w, v, t, s;
  double value;
};

struct SparseSiteOp {
  int bond_in = 1;
  int bond_out = 1;
  std::vector<OpEntry> entries;
};

SparseSiteOp sparse_op(const MpoTensor& w);
SparseSiteOp identity_op();

// Two-site operator with combined physical indices t12 = t1 + 3 t2, s12 = s1 + 3 s2.
SparseSiteOp fuse_two_site(const SparseSiteOp& first, const SparseSiteOp& second);

// Contraction of a block of sites with bra, MPO, ket legs exposed:
// E(a, w, a') stored as a + bra*(w + chan*a').
struct Env {
  int bra = 1;
  int chan = 1;
  int ket = 1;
  std::vector<double> data;

  static Env unit() { return Env{1, 1, 1, {1.0}}; }
};

// Env of sites < j+1 from env of sites < j.
Env extend_left(const Env& env, const SiteTensor& bra, const SiteTensor& ket, const SparseSiteOp& op);
// Env of sites >= j from env of sites >= j+1.
Env extend_right(const Env& env, const SiteTensor& bra, const SiteTensor& ket, const SparseSiteOp& op);

// y = H_eff theta for a two-site wavefunction theta(a, s1, s2, b) stored as
// a + left*(s1 + 3*s2 + 9*b).
void apply_two_site(const Env& left, const Env& right, const SparseSiteOp& op12, int chi_l, int chi_r,
                    const Eigen::VectorXd& theta, Eigen::VectorXd& y);

// Contiguous charge sectors of a bond basis sorted by charge.
struct ChargeBlocks {
  std::vector<int> charge, start, size;

  // ok is false unless equal labels are contiguous and ascending.
  static ChargeBlocks from(const std::vector<int>& labels, bool& ok);
  int find(int q) const;
};

// Total-Sz transfer carried by each MPO bond channel, per bond k = 0..L.
std::vector<std::vector<int>> channel_charges(const HamiltonianMPO& mpo);

// Same as apply_two_site but only touches charge-allowed blocks. Requires the
// environments and theta to vanish outside those blocks.
void apply_two_site_blocked(const Env& left, const Env& right, const SparseSiteOp& op12, const ChargeBlocks& lb,
                            const ChargeBlocks& rb, const std::vector<int>& left_chan, const std::vector<int>& right_chan,
                            const Eigen::VectorXd& theta, Eigen::VectorXd& y);

}  // namespace spinone::detail
