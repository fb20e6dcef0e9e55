#include "spinone/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spinone/errors.hpp"

namespace spinone {

namespace {

LocalOps make_local_ops() {
  LocalOps ops;
  const double r2 = std::sqrt(2.0);
  ops.sp.setZero();
  ops.sp(0, 1) = r2;  // |0> -> |+1>
  ops.sp(1, 2) = r2;  // |-1> -> |0>
  ops.sm = ops.sp.transpose();
  ops.sz.setZero();
  ops.sz.diagonal() << 1.0, 0.0, -1.0;
  ops.sz2 = ops.sz * ops.sz;
  ops.sx = 0.5 * (ops.sp + ops.sm);
  ops.sy_imag = 0.5 * (ops.sm - ops.sp);
  return ops;
}

std::int64_t pow3(int n) {
  std::int64_t p = 1;
  for (int i = 0; i < n; ++i) p *= 3;
  return p;
}

void digits_of(std::int64_t index, int L, std::vector<int>& s) {
  s.resize(static_cast<std::size_t>(L));
  for (int j = L - 1; j >= 0; --j) {
    s[static_cast<std::size_t>(j)] = static_cast<int>(index % 3);
    index /= 3;
  }
}

// Calls emit(column_index, value) for every nonzero in the row of `index`.
template <class Emit>
void for_each_element(const ModelParams& p, std::int64_t index, std::vector<int>& s, Emit&& emit) {
  const int L = p.L;
  digits_of(index, L, s);
  double diag = 0.0;
  for (int j = 0; j < L; ++j) {
    const int m = local_sz(s[static_cast<std::size_t>(j)]);
    diag += p.D * m * m;
    if (j + 1 < L) diag += p.lambda * m * local_sz(s[static_cast<std::size_t>(j + 1)]);
  }
  emit(index, diag);
  // (S+ S- + S- S+)/2 has amplitude sqrt(2)*sqrt(2)/2 = 1 for spin 1.
  for (int j = 0; j + 1 < L; ++j) {
    const int a = s[static_cast<std::size_t>(j)];
    const int b = s[static_cast<std::size_t>(j + 1)];
    const std::int64_t wa = pow3(L - 1 - j);
    const std::int64_t wb = pow3(L - 2 - j);
    if (a > 0 && b < 2) emit(index - wa + wb, 1.0);  // S+_j S-_{j+1}
    if (a < 2 && b > 0) emit(index + wa - wb, 1.0);  // S-_j S+_{j+1}
  }
}

}  // namespace

void ModelParams::validate() const {
  if (L < 1) fail(ErrorCode::domain, "site count must be >= 1, got " + std::to_string(L));
  if (!std::isfinite(lambda) || !std::isfinite(D)) fail(ErrorCode::domain, "couplings must be finite");
}

const LocalOps& local_ops() {
  static const LocalOps ops = make_local_ops();
  return ops;
}

std::int64_t hilbert_dim(int L) {
  if (L < 0 || L > 39) fail(ErrorCode::size, "hilbert_dim: L out of range");
  return pow3(L);
}

int total_sz_of(std::int64_t index, int L) {
  int total = 0;
  for (int j = 0; j < L; ++j) {
    total += local_sz(static_cast<int>(index % 3));
    index /= 3;
  }
  return total;
}

SparseMatrix build_dense(const ModelParams& params, int max_L) {
  params.validate();
  if (params.L > max_L)
    fail(ErrorCode::size, "build_dense: L=" + std::to_string(params.L) + " exceeds guard " + std::to_string(max_L));
  const std::int64_t dim = hilbert_dim(params.L);
  std::vector<Eigen::Triplet<double, std::int64_t>> triplets;
  triplets.reserve(static_cast<std::size_t>(dim) * static_cast<std::size_t>(2 * params.L - 1));
  std::vector<int> s;
  for (std::int64_t row = 0; row < dim; ++row) {
    for_each_element(params, row, s, [&](std::int64_t col, double v) {
      if (v != 0.0) triplets.emplace_back(row, col, v);
    });
  }
  SparseMatrix H(dim, dim);
  H.setFromTriplets(triplets.begin(), triplets.end());
  return H;
}

std::vector<std::int64_t> total_sz_sector_basis(int L, int sz_total) {
  if (L < 1) fail(ErrorCode::domain, "sector basis: L must be >= 1");
  if (std::abs(sz_total) > L)
    fail(ErrorCode::domain, "sector Sz=" + std::to_string(sz_total) + " is empty for L=" + std::to_string(L));
  // Depth-first enumeration in lexicographic order, pruned by reachability.
  std::vector<std::int64_t> out;
  std::vector<int> s(static_cast<std::size_t>(L), 0);
  auto rec = [&](auto&& self, int j, int partial, std::int64_t index) -> void {
    if (j == L) {
      if (partial == sz_total) out.push_back(index);
      return;
    }
    const int remaining = L - j - 1;
    for (int d = 0; d < 3; ++d) {
      const int next = partial + local_sz(d);
      if (std::abs(sz_total - next) > remaining) continue;
      self(self, j + 1, next, index * 3 + d);
    }
  };
  rec(rec, 0, 0, 0);
  return out;
}

SparseMatrix build_sector(const ModelParams& params, const std::vector<std::int64_t>& basis) {
  params.validate();
  const auto dim = static_cast<std::int64_t>(basis.size());
  std::vector<Eigen::Triplet<double, std::int64_t>> triplets;
  triplets.reserve(basis.size() * static_cast<std::size_t>(2 * params.L - 1));
  std::vector<int> s;
  for (std::int64_t row = 0; row < dim; ++row) {
    for_each_element(params, basis[static_cast<std::size_t>(row)], s, [&](std::int64_t full, double v) {
      if (v == 0.0) return;
      const auto it = std::lower_bound(basis.begin(), basis.end(), full);
      if (it == basis.end() || *it != full) fail(ErrorCode::internal, "sector basis is not closed under H");
      triplets.emplace_back(row, static_cast<std::int64_t>(it - basis.begin()), v);
    });
  }
  SparseMatrix H(dim, dim);
  H.setFromTriplets(triplets.begin(), triplets.end());
  return H;
}

HamiltonianMPO build_mpo(const ModelParams& params) {
  params.validate();
  if (params.L < 2) fail(ErrorCode::size, "build_mpo requires L >= 2");
  const auto& op = local_ops();
  const Mat3 id = Mat3::Identity();
  const Mat3 zero = Mat3::Zero();

  MpoTensor bulk{5, 5, std::vector<Mat3>(25, zero)};
  bulk.at(0, 0) = id;
  bulk.at(0, 1) = op.sp;
  bulk.at(0, 2) = op.sm;
  bulk.at(0, 3) = op.sz;
  bulk.at(0, 4) = params.D * op.sz2;
  bulk.at(1, 4) = 0.5 * op.sm;
  bulk.at(2, 4) = 0.5 * op.sp;
  bulk.at(3, 4) = params.lambda * op.sz;
  bulk.at(4, 4) = id;

  HamiltonianMPO mpo;
  mpo.params = params;
  mpo.sites.assign(static_cast<std::size_t>(params.L), bulk);
  MpoTensor& first = mpo.sites.front();
  first = MpoTensor{1, 5, std::vector<Mat3>(bulk.ops.begin(), bulk.ops.begin() + 5)};
  MpoTensor& last = mpo.sites.back();
  MpoTensor col{5, 1, std::vector<Mat3>(5, zero)};
  for (int w = 0; w < 5; ++w) col.at(w, 0) = bulk.at(w, 4);
  last = col;
  return mpo;
}

Eigen::MatrixXd contract_mpo(const HamiltonianMPO& mpo, int max_L) {
  const int L = static_cast<int>(mpo.sites.size());
  if (L > max_L) fail(ErrorCode::size, "contract_mpo: L exceeds guard");
  // acc[w] is the operator on sites 1..j carrying bond index w.
  std::vector<Eigen::MatrixXd> acc;
  for (int w = 0; w < mpo.sites[0].bond_out; ++w) acc.emplace_back(mpo.sites[0].at(0, w));
  for (int j = 1; j < L; ++j) {
    const MpoTensor& W = mpo.sites[static_cast<std::size_t>(j)];
    std::vector<Eigen::MatrixXd> next;
    const auto n = acc[0].rows() * 3;
    for (int v = 0; v < W.bond_out; ++v) {
      Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
      for (int w = 0; w < W.bond_in; ++w) {
        const Mat3& o = W.at(w, v);
        if (o.isZero(0.0)) continue;
        // Site 1 is the most significant digit: kron(acc, o).
        for (Eigen::Index r = 0; r < acc[static_cast<std::size_t>(w)].rows(); ++r)
          for (Eigen::Index c = 0; c < acc[static_cast<std::size_t>(w)].cols(); ++c) {
            const double a = acc[static_cast<std::size_t>(w)](r, c);
            if (a != 0.0) sum.block<3, 3>(r * 3, c * 3) += a * o;
          }
      }
      next.push_back(std::move(sum));
    }
    acc = std::move(next);
  }
  return acc[0];
}

}  // namespace spinone
