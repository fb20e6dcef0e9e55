#include "environment.hpp"

#include <algorithm>
#include <map>
#include <tuple>

namespace spinone::detail {

namespace {

using Stride = Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>;
using OuterStride = Eigen::OuterStride<Eigen::Dynamic>;
using Slab = Eigen::Map<Eigen::MatrixXd, 0, OuterStride>;
using ConstSlab = Eigen::Map<const Eigen::MatrixXd, 0, OuterStride>;
using StridedSlab = Eigen::Map<Eigen::MatrixXd, 0, Stride>;
using MatMap = Eigen::Map<Eigen::MatrixXd>;

// Per-thread scratch buffers that only grow. Large temporaries are otherwise
// mapped and unmapped on every matvec, which costs more than the arithmetic.
MatMap scratch(int slot, Eigen::Index rows, Eigen::Index cols, bool zero) {
  thread_local std::vector<double> buffers[4];
  auto& buf = buffers[slot];
  const auto n = static_cast<std::size_t>(rows * cols);
  if (buf.size() < n) buf.resize(n);
  MatMap out(buf.data(), rows, cols);
  if (zero) out.setZero();
  return out;
}

}  // namespace

SparseSiteOp sparse_op(const MpoTensor& w) {
  SparseSiteOp out{w.bond_in, w.bond_out, {}};
  for (int a = 0; a < w.bond_in; ++a)
    for (int b = 0; b < w.bond_out; ++b) {
      const Mat3& m = w.at(a, b);
      for (int t = 0; t < 3; ++t)
        for (int s = 0; s < 3; ++s)
          if (m(t, s) != 0.0) out.entries.push_back({a, b, t, s, m(t, s)});
    }
  return out;
}

SparseSiteOp identity_op() {
  SparseSiteOp out{1, 1, {}};
  for (int s = 0; s < 3; ++s) out.entries.push_back({0, 0, s, s, 1.0});
  return out;
}

SparseSiteOp fuse_two_site(const SparseSiteOp& first, const SparseSiteOp& second) {
  std::map<std::tuple<int, int, int, int>, double> acc;
  for (const OpEntry& x : first.entries)
    for (const OpEntry& y : second.entries) {
      if (x.v != y.w) continue;
      acc[{x.w, y.v, x.t + 3 * y.t, x.s + 3 * y.s}] += x.value * y.value;
    }
  SparseSiteOp out{first.bond_in, second.bond_out, {}};
  for (const auto& [key, value] : acc) {
    if (value == 0.0) continue;
    const auto [w, u, t, s] = key;
    out.entries.push_back({w, u, t, s, value});
  }
  return out;
}

Env extend_left(const Env& env, const SiteTensor& bra, const SiteTensor& ket, const SparseSiteOp& op) {
  const int cb = env.bra, ck = env.ket, wl = env.chan;
  const int rb = bra.right, rk = ket.right, wr = op.bond_out;
  Eigen::Map<const Eigen::MatrixXd> lmat(env.data.data(), cb * wl, ck);
  // X(a + cb*w, s + 3*b') = sum_a' E(a, w, a') ket(a', s, b')
  MatMap x = scratch(0, cb * wl, 3 * rk, false);
  x.noalias() = lmat * ket.right_grouped();
  // Z(a + cb*t, v + wr*b') = sum_{w,s} W(w, v, t, s) X(a, w, s, b')
  MatMap z = scratch(1, 3 * cb, wr * rk, true);
  for (const OpEntry& e : op.entries) {
    ConstSlab src(x.data() + cb * e.w + cb * wl * e.s, cb, rk, OuterStride(3 * cb * wl));
    Slab dst(z.data() + cb * e.t + 3 * cb * e.v, cb, rk, OuterStride(3 * cb * wr));
    dst += e.value * src;
  }
  Env out{rb, wr, rk, std::vector<double>(static_cast<std::size_t>(rb) * wr * rk)};
  Eigen::Map<Eigen::MatrixXd> res(out.data.data(), rb, wr * rk);
  res.noalias() = bra.left_grouped().transpose() * z;
  return out;
}

Env extend_right(const Env& env, const SiteTensor& bra, const SiteTensor& ket, const SparseSiteOp& op) {
  const int cb = env.bra, ck = env.ket, wr = env.chan;
  const int lb = bra.left, lk = ket.left, wl = op.bond_in;
  Eigen::Map<const Eigen::MatrixXd> rrows(env.data.data(), cb * wr, ck);
  // X(a' + lk*s, b + cb*v) = sum_b' ket(a', s, b') E(b, v, b')
  MatMap x = scratch(0, 3 * lk, cb * wr, false);
  x.noalias() = ket.left_grouped() * rrows.transpose();
  // Z(t + 3*b, w + wl*a') = sum_{v,s} W(w, v, t, s) X(a', s, b, v)
  MatMap z = scratch(1, 3 * cb, wl * lk, true);
  for (const OpEntry& e : op.entries) {
    ConstSlab src(x.data() + lk * e.s + 3 * lk * cb * e.v, lk, cb, OuterStride(3 * lk));
    StridedSlab dst(z.data() + e.t + 3 * cb * e.w, cb, lk, Stride(3 * cb * wl, 3));
    dst += e.value * src.transpose();
  }
  Env out{lb, wl, lk, std::vector<double>(static_cast<std::size_t>(lb) * wl * lk)};
  Eigen::Map<Eigen::MatrixXd> res(out.data.data(), lb, wl * lk);
  res.noalias() = bra.right_grouped() * z;
  return out;
}

void apply_two_site(const Env& left, const Env& right, const SparseSiteOp& op12, int chi_l, int chi_r,
                    const Eigen::VectorXd& theta, Eigen::VectorXd& y) {
  const int wl = left.chan, wr = right.chan;
  Eigen::Map<const Eigen::MatrixXd> lmat(left.data.data(), chi_l * wl, chi_l);
  Eigen::Map<const Eigen::MatrixXd> tmat(theta.data(), chi_l, 9 * chi_r);
  MatMap x = scratch(0, chi_l * wl, 9 * chi_r, false);
  x.noalias() = lmat * tmat;
  MatMap ymid = scratch(1, 9 * chi_l, wr * chi_r, true);
  for (const OpEntry& e : op12.entries) {
    ConstSlab src(x.data() + chi_l * e.w + chi_l * wl * e.s, chi_l, chi_r, OuterStride(9 * chi_l * wl));
    Slab dst(ymid.data() + chi_l * e.t + 9 * chi_l * e.v, chi_l, chi_r, OuterStride(9 * chi_l * wr));
    dst += e.value * src;
  }
  Eigen::Map<const Eigen::MatrixXd> rmat(right.data.data(), chi_r, wr * chi_r);
  y.resize(theta.size());
  Eigen::Map<Eigen::MatrixXd> out(y.data(), 9 * chi_l, chi_r);
  out.noalias() = ymid * rmat.transpose();
}

ChargeBlocks ChargeBlocks::from(const std::vector<int>& labels, bool& ok) {
  ChargeBlocks out;
  ok = true;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i == 0 || labels[i] != labels[i - 1]) {
      if (!out.charge.empty() && labels[i] < out.charge.back()) ok = false;
      out.charge.push_back(labels[i]);
      out.start.push_back(static_cast<int>(i));
      out.size.push_back(1);
    } else {
      ++out.size.back();
    }
  }
  return out;
}

int ChargeBlocks::find(int q) const {
  const auto it = std::lower_bound(charge.begin(), charge.end(), q);
  if (it == charge.end() || *it != q) return -1;
  return static_cast<int>(it - charge.begin());
}

std::vector<std::vector<int>> channel_charges(const HamiltonianMPO& mpo) {
  std::vector<std::vector<int>> out;
  out.push_back({0});
  for (const MpoTensor& w : mpo.sites) {
    std::vector<int> next(static_cast<std::size_t>(w.bond_out), 0);
    for (const OpEntry& e : sparse_op(w).entries)
      next[static_cast<std::size_t>(e.v)] = out.back()[static_cast<std::size_t>(e.w)] + local_sz(e.t) - local_sz(e.s);
    out.push_back(std::move(next));
  }
  return out;
}

void apply_two_site_blocked(const Env& left, const Env& right, const SparseSiteOp& op12, const ChargeBlocks& lb,
                            const ChargeBlocks& rb, const std::vector<int>& left_chan, const std::vector<int>& right_chan,
                            const Eigen::VectorXd& theta, Eigen::VectorXd& y) {
  const int wl = left.chan, wr = right.chan;
  const int chi_l = left.bra, chi_r = right.bra;
  auto pair_sz = [](int s12) { return local_sz(s12 % 3) + local_sz(s12 / 3); };

  // X(a, w, s12, b') = sum_a' L(a, w, a') theta(a', s12, b')
  MatMap x = scratch(0, chi_l * wl, 9 * chi_r, true);
  for (int w = 0; w < wl; ++w)
    for (int s12 = 0; s12 < 9; ++s12) {
      ConstSlab lw(left.data.data() + chi_l * w, chi_l, chi_l, OuterStride(chi_l * wl));
      ConstSlab ts(theta.data() + chi_l * s12, chi_l, chi_r, OuterStride(9 * chi_l));
      Slab xs(x.data() + chi_l * w + chi_l * wl * s12, chi_l, chi_r, OuterStride(9 * chi_l * wl));
      for (std::size_t i = 0; i < lb.charge.size(); ++i) {
        const int ia = lb.find(lb.charge[i] + left_chan[static_cast<std::size_t>(w)]);
        const int ib = rb.find(lb.charge[i] + pair_sz(s12));
        if (ia < 0 || ib < 0) continue;
        xs.block(lb.start[ia], rb.start[ib], lb.size[ia], rb.size[ib]).noalias() =
            lw.block(lb.start[ia], lb.start[i], lb.size[ia], lb.size[i]) *
            ts.block(lb.start[i], rb.start[ib], lb.size[i], rb.size[ib]);
      }
    }

  MatMap ymid = scratch(1, 9 * chi_l, wr * chi_r, true);
  for (const OpEntry& e : op12.entries) {
    ConstSlab src(x.data() + chi_l * e.w + chi_l * wl * e.s, chi_l, chi_r, OuterStride(9 * chi_l * wl));
    Slab dst(ymid.data() + chi_l * e.t + 9 * chi_l * e.v, chi_l, chi_r, OuterStride(9 * chi_l * wr));
    dst += e.value * src;
  }

  // y(a, t12, b) = sum_{u, b'} Ymid(a, t12, u, b') R(b, u, b')
  y.setZero(theta.size());
  for (int t12 = 0; t12 < 9; ++t12) {
    Slab ys(y.data() + chi_l * t12, chi_l, chi_r, OuterStride(9 * chi_l));
    for (int u = 0; u < wr; ++u) {
      ConstSlab ym(ymid.data() + chi_l * t12 + 9 * chi_l * u, chi_l, chi_r, OuterStride(9 * chi_l * wr));
      ConstSlab ru(right.data.data() + chi_r * u, chi_r, chi_r, OuterStride(chi_r * wr));
      for (std::size_t ia = 0; ia < lb.charge.size(); ++ia) {
        const int qb = lb.charge[ia] + pair_sz(t12);
        const int ib = rb.find(qb);
        const int ibp = rb.find(qb - right_chan[static_cast<std::size_t>(u)]);
        if (ib < 0 || ibp < 0) continue;
        ys.block(lb.start[ia], rb.start[ib], lb.size[ia], rb.size[ib]).noalias() +=
            ym.block(lb.start[ia], rb.start[ibp], lb.size[ia], rb.size[ibp]) *
            ru.block(rb.start[ib], rb.start[ibp], rb.size[ib], rb.size[ibp]).transpose();
      }
    }
  }
}

}  // namespace spinone::detail
