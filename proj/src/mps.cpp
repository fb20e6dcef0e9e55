#include "spinone/mps.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "environment.hpp"
#include "spinone/errors.hpp"

namespace spinone {

namespace {

std::vector<int> bond_charges(const Mps& m, int k) {
  if (m.charges.size() == static_cast<std::size_t>(m.length() + 1)) return m.charges[static_cast<std::size_t>(k)];
  return std::vector<int>(static_cast<std::size_t>(m.bond_dim(k)), 0);
}

// Row charges of A.left_grouped(): q(a) + m(s).
std::vector<int> left_group_charges(const std::vector<int>& ql) {
  std::vector<int> out(ql.size() * 3);
  for (int s = 0; s < 3; ++s)
    for (std::size_t a = 0; a < ql.size(); ++a) out[a + ql.size() * static_cast<std::size_t>(s)] = ql[a] + local_sz(s);
  return out;
}

// Column charges of A.right_grouped(): q(b) - m(s).
std::vector<int> right_group_charges(const std::vector<int>& qr) {
  std::vector<int> out(qr.size() * 3);
  for (std::size_t b = 0; b < qr.size(); ++b)
    for (int s = 0; s < 3; ++s) out[static_cast<std::size_t>(s) + 3 * b] = qr[b] - local_sz(s);
  return out;
}

SiteTensor from_right_grouped(const Eigen::MatrixXd& m) {
  SiteTensor t(static_cast<int>(m.rows()), static_cast<int>(m.cols() / 3));
  std::copy(m.data(), m.data() + m.size(), t.data.begin());
  return t;
}

SiteTensor from_left_grouped(const Eigen::MatrixXd& m) {
  SiteTensor t(static_cast<int>(m.rows() / 3), static_cast<int>(m.cols()));
  std::copy(m.data(), m.data() + m.size(), t.data.begin());
  return t;
}

// Moves the orthogonality center from site j to j-1 (site j becomes right-isometric).
void shift_center_left(Mps& mps, int j, double cutoff) {
  auto& site = mps.sites[static_cast<std::size_t>(j)];
  const auto rq = bond_charges(mps, j);
  const auto cq = right_group_charges(bond_charges(mps, j + 1));
  BlockSvd svd = block_svd(site.right_grouped(), rq, cq, std::numeric_limits<int>::max(), cutoff);
  site = from_right_grouped(svd.vt);
  auto& prev = mps.sites[static_cast<std::size_t>(j - 1)];
  const Eigen::MatrixXd us = svd.u * svd.s.asDiagonal();
  prev = from_left_grouped(prev.left_grouped() * us);
  if (!mps.charges.empty()) mps.charges[static_cast<std::size_t>(j)] = svd.charges;
}

// Moves the orthogonality center from site j to j+1 (site j becomes left-isometric).
// Returns the discarded weight when chi_max truncates.
double shift_center_right(Mps& mps, int j, double cutoff, int chi_max = std::numeric_limits<int>::max()) {
  auto& site = mps.sites[static_cast<std::size_t>(j)];
  const auto rq = left_group_charges(bond_charges(mps, j));
  const auto cq = bond_charges(mps, j + 1);
  BlockSvd svd = block_svd(site.left_grouped(), rq, cq, chi_max, cutoff);
  site = from_left_grouped(svd.u);
  auto& next = mps.sites[static_cast<std::size_t>(j + 1)];
  const Eigen::MatrixXd sv = svd.s.asDiagonal() * svd.vt;
  next = from_right_grouped(sv * next.right_grouped());
  if (!mps.charges.empty()) mps.charges[static_cast<std::size_t>(j + 1)] = svd.charges;
  return svd.discarded_weight;
}

void check_same_length(const Mps& a, const Mps& b) {
  if (a.length() != b.length() || a.length() == 0)
    fail(ErrorCode::domain, "MPS length mismatch: " + std::to_string(a.length()) + " vs " + std::to_string(b.length()));
}

}  // namespace

int Mps::max_bond_dim() const {
  int m = 1;
  for (const auto& s : sites) m = std::max(m, s.right);
  return m;
}

BlockSvd block_svd(const Eigen::MatrixXd& m, const std::vector<int>& row_charges, const std::vector<int>& col_charges,
                   int chi_max, double cutoff) {
  std::map<int, std::vector<Eigen::Index>> rows, cols;
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows[row_charges[static_cast<std::size_t>(i)]].push_back(i);
  for (Eigen::Index j = 0; j < m.cols(); ++j) cols[col_charges[static_cast<std::size_t>(j)]].push_back(j);

  struct Block {
    int charge;
    const std::vector<Eigen::Index>* rows;
    const std::vector<Eigen::Index>* cols;
    Eigen::MatrixXd u, vt;
    Eigen::VectorXd s;
  };
  std::vector<Block> blocks;
  for (const auto& [q, ri] : rows) {
    const auto it = cols.find(q);
    if (it == cols.end()) continue;
    const auto& ci = it->second;
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(ri.size()), static_cast<Eigen::Index>(ci.size()));
    for (std::size_t a = 0; a < ri.size(); ++a)
      for (std::size_t b = 0; b < ci.size(); ++b)
        sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = m(ri[a], ci[b]);
    Block blk{q, &ri, &ci, {}, {}, {}};
    if (sub.rows() * sub.cols() > 0) {
      Eigen::BDCSVD<Eigen::MatrixXd> svd(sub, Eigen::ComputeThinU | Eigen::ComputeThinV);
      blk.u = svd.matrixU();
      blk.vt = svd.matrixV().transpose();
      blk.s = svd.singularValues();
    }
    blocks.push_back(std::move(blk));
  }

  struct Candidate {
    double value;
    std::size_t block;
    Eigen::Index index;
  };
  std::vector<Candidate> all;
  double smax = 0.0;
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (Eigen::Index i = 0; i < blocks[b].s.size(); ++i) {
      all.push_back({blocks[b].s(i), b, i});
      smax = std::max(smax, blocks[b].s(i));
    }
  if (all.empty()) fail(ErrorCode::internal, "block_svd: no charge-compatible blocks");
  std::stable_sort(all.begin(), all.end(), [](const Candidate& x, const Candidate& y) { return x.value > y.value; });

  std::size_t keep = 0;
  while (keep < all.size() && keep < static_cast<std::size_t>(std::max(chi_max, 1)) &&
         all[keep].value > cutoff * smax)
    ++keep;
  keep = std::max<std::size_t>(keep, 1);

  // Kept triplets are grouped by ascending charge, descending value within a charge.
  std::stable_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep),
                   [&blocks](const Candidate& x, const Candidate& y) { return blocks[x.block].charge < blocks[y.block].charge; });

  BlockSvd out;
  const auto k = static_cast<Eigen::Index>(keep);
  out.u = Eigen::MatrixXd::Zero(m.rows(), k);
  out.vt = Eigen::MatrixXd::Zero(k, m.cols());
  out.s.resize(k);
  out.charges.resize(keep);
  for (std::size_t n = 0; n < all.size(); ++n) {
    if (n >= keep) {
      out.discarded_weight += all[n].value * all[n].value;
      continue;
    }
    const Block& blk = blocks[all[n].block];
    const auto col = static_cast<Eigen::Index>(n);
    out.s(col) = all[n].value;
    out.charges[n] = blk.charge;
    for (std::size_t a = 0; a < blk.rows->size(); ++a) out.u((*blk.rows)[a], col) = blk.u(static_cast<Eigen::Index>(a), all[n].index);
    for (std::size_t b = 0; b < blk.cols->size(); ++b) out.vt(col, (*blk.cols)[b]) = blk.vt(all[n].index, static_cast<Eigen::Index>(b));
  }
  return out;
}

Mps product_state(const std::vector<int>& local) {
  if (local.empty()) fail(ErrorCode::domain, "product_state: empty chain");
  Mps out;
  out.charges.push_back({0});
  int q = 0;
  for (int s : local) {
    if (s < 0 || s > 2) fail(ErrorCode::domain, "product_state: local index must be 0, 1 or 2");
    SiteTensor t(1, 1);
    t(0, s, 0) = 1.0;
    out.sites.push_back(std::move(t));
    q += local_sz(s);
    out.charges.push_back({q});
  }
  out.center = 0;
  return out;
}

Mps random_mps(int L, int chi, int target_sz, std::uint64_t seed) {
  if (L < 1) fail(ErrorCode::domain, "random_mps: L must be >= 1");
  if (chi < 1) fail(ErrorCode::domain, "random_mps: chi must be >= 1");
  if (std::abs(target_sz) > L) fail(ErrorCode::domain, "random_mps: empty Sz sector");
  Mps out;
  out.charges.resize(static_cast<std::size_t>(L + 1));
  out.charges.front() = {0};
  out.charges.back() = {target_sz};
  for (int k = 1; k < L; ++k) {
    // Charges reachable from the left boundary that can still reach the target.
    std::vector<int> allowed;
    for (int q = -k; q <= k; ++q)
      if (std::abs(target_sz - q) <= L - k) allowed.push_back(q);
    const double mid = static_cast<double>(target_sz) * k / L;
    std::stable_sort(allowed.begin(), allowed.end(),
                     [mid](int a, int b) { return std::abs(a - mid) < std::abs(b - mid); });
    double cap = 1.0;
    for (int i = 0; i < std::min(k, L - k) && cap < chi; ++i) cap *= 3.0;
    const int dim = static_cast<int>(std::min<double>(chi, cap));
    auto& q = out.charges[static_cast<std::size_t>(k)];
    for (int i = 0; i < dim; ++i) q.push_back(allowed[static_cast<std::size_t>(i) % allowed.size()]);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  for (int j = 0; j < L; ++j) {
    const auto& ql = out.charges[static_cast<std::size_t>(j)];
    const auto& qr = out.charges[static_cast<std::size_t>(j + 1)];
    SiteTensor t(static_cast<int>(ql.size()), static_cast<int>(qr.size()));
    for (int b = 0; b < t.right; ++b)
      for (int s = 0; s < 3; ++s)
        for (int a = 0; a < t.left; ++a)
          if (ql[static_cast<std::size_t>(a)] + local_sz(s) == qr[static_cast<std::size_t>(b)]) t(a, s, b) = gauss(rng);
    out.sites.push_back(std::move(t));
  }
  right_canonicalize(out);
  return out;
}

void right_canonicalize(Mps& mps) {
  const int L = mps.length();
  for (int j = L - 1; j >= 1; --j) shift_center_left(mps, j, 1e-14);
  auto& first = mps.sites.front();
  Eigen::Map<Eigen::VectorXd> v(first.data.data(), static_cast<Eigen::Index>(first.data.size()));
  const double n = v.norm();
  if (n == 0.0 || !std::isfinite(n)) fail(ErrorCode::domain, "right_canonicalize: state has zero or invalid norm");
  v /= n;
  mps.center = 0;
}

double mps_inner(const Mps& a, const Mps& b) {
  check_same_length(a, b);
  Eigen::MatrixXd e = Eigen::MatrixXd::Ones(1, 1);
  for (int j = 0; j < a.length(); ++j) {
    const auto& ta = a.sites[static_cast<std::size_t>(j)];
    const auto& tb = b.sites[static_cast<std::size_t>(j)];
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(ta.right, tb.right);
    for (int s = 0; s < 3; ++s) {
      Eigen::Map<const Eigen::MatrixXd, 0, Eigen::OuterStride<>> as(ta.data.data() + ta.left * s, ta.left, ta.right,
                                                                     Eigen::OuterStride<>(3 * ta.left));
      Eigen::Map<const Eigen::MatrixXd, 0, Eigen::OuterStride<>> bs(tb.data.data() + tb.left * s, tb.left, tb.right,
                                                                     Eigen::OuterStride<>(3 * tb.left));
      next.noalias() += as.transpose() * (e * bs);
    }
    e = std::move(next);
  }
  return e(0, 0);
}

// Averaging both contraction orders makes the result exactly symmetric.
double mps_overlap(const Mps& a, const Mps& b) {
  return 0.5 * (std::abs(mps_inner(a, b)) + std::abs(mps_inner(b, a)));
}

double mps_norm(const Mps& a) { return std::sqrt(std::max(0.0, mps_inner(a, a))); }

Eigen::VectorXd mps_to_dense(const Mps& a, int max_L) {
  const int L = a.length();
  if (L == 0) fail(ErrorCode::domain, "mps_to_dense: empty MPS");
  if (L > max_L) fail(ErrorCode::size, "mps_to_dense: L=" + std::to_string(L) + " exceeds guard");
  // v(idx, b) with the already-contracted sites as the most significant digits.
  Eigen::MatrixXd v = Eigen::MatrixXd::Ones(1, 1);
  for (int j = 0; j < L; ++j) {
    const auto& t = a.sites[static_cast<std::size_t>(j)];
    Eigen::MatrixXd next(v.rows() * 3, t.right);
    for (int s = 0; s < 3; ++s) {
      Eigen::Map<const Eigen::MatrixXd, 0, Eigen::OuterStride<>> ts(t.data.data() + t.left * s, t.left, t.right,
                                                                     Eigen::OuterStride<>(3 * t.left));
      const Eigen::MatrixXd part = v * ts;
      for (Eigen::Index i = 0; i < v.rows(); ++i) next.row(i * 3 + s) = part.row(i);
    }
    v = std::move(next);
  }
  return v.col(0);
}

std::vector<double> mps_schmidt_values(const Mps& a, int cut) {
  const int L = a.length();
  if (cut < 1 || cut > L - 1)
    fail(ErrorCode::domain, "cut must satisfy 1 <= cut <= L-1, got " + std::to_string(cut));
  Mps m = a;
  for (int j = 0; j < cut; ++j) shift_center_right(m, j, 0.0);
  for (int j = L - 1; j > cut; --j) shift_center_left(m, j, 0.0);
  const auto& c = m.sites[static_cast<std::size_t>(cut)];
  const BlockSvd svd = block_svd(c.right_grouped(), bond_charges(m, cut), right_group_charges(bond_charges(m, cut + 1)),
                                 std::numeric_limits<int>::max(), 0.0);
  std::vector<double> out(svd.s.data(), svd.s.data() + svd.s.size());
  double norm2 = 0.0;
  for (double x : out) norm2 += x * x;
  if (norm2 > 0.0)
    for (double& x : out) x /= std::sqrt(norm2);
  return out;
}

Mps spin_flip(const Mps& a) {
  if (a.length() == 0) fail(ErrorCode::domain, "spin_flip: empty MPS");
  if (a.target_sz() != 0) fail(ErrorCode::domain, "spin_flip: state must lie in the Sz = 0 sector");
  Mps out;
  out.center = a.center;
  for (const auto& t : a.sites) {
    SiteTensor f(t.left, t.right);
    for (int b = 0; b < t.right; ++b)
      for (int s = 0; s < 3; ++s)
        for (int x = 0; x < t.left; ++x) f(t.left - 1 - x, 2 - s, t.right - 1 - b) = t(x, s, b);
    out.sites.push_back(std::move(f));
  }
  for (int k = 0; k <= a.length(); ++k) {
    auto q = bond_charges(a, k);
    std::reverse(q.begin(), q.end());
    for (int& x : q) x = -x;
    out.charges.push_back(std::move(q));
  }
  for (auto sp : a.spectra) {
    std::reverse(sp.begin(), sp.end());
    out.spectra.push_back(std::move(sp));
  }
  return out;
}

double spin_flip_expectation(const Mps& a) { return mps_inner(a, spin_flip(a)) / mps_inner(a, a); }

Mps project_spin_flip(const Mps& a, int parity, int chi_max, double cutoff, double* discarded) {
  if (parity != 1 && parity != -1) fail(ErrorCode::domain, "project_spin_flip: parity must be +1 or -1");
  const Mps b = spin_flip(a);
  const int L = a.length();
  // Direct sum a (+) parity * b: block-diagonal bulk tensors, concatenated ends.
  Mps sum;
  sum.charges.push_back({0});
  for (int j = 0; j < L; ++j) {
    const auto& ta = a.sites[static_cast<std::size_t>(j)];
    const auto& tb = b.sites[static_cast<std::size_t>(j)];
    const bool first = j == 0, last = j == L - 1;
    const int left = first ? 1 : ta.left + tb.left;
    const int right = last ? 1 : ta.right + tb.right;
    SiteTensor t(left, right);
    const int la = first ? 0 : ta.left, ra = last ? 0 : ta.right;
    for (int s = 0; s < 3; ++s) {
      for (int y = 0; y < ta.right; ++y)
        for (int x = 0; x < ta.left; ++x) t(x, s, y) = ta(x, s, y);
      for (int y = 0; y < tb.right; ++y)
        for (int x = 0; x < tb.left; ++x) t(la + x, s, ra + y) = (last ? parity : 1) * tb(x, s, y);
    }
    sum.sites.push_back(std::move(t));
    if (last) {
      sum.charges.push_back({0});
    } else {
      auto q = bond_charges(a, j + 1);
      const auto qb = bond_charges(b, j + 1);
      q.insert(q.end(), qb.begin(), qb.end());
      sum.charges.push_back(std::move(q));
    }
  }
  const double n2 = mps_inner(sum, sum);
  if (!(n2 > 1e-12 * mps_inner(a, a)))
    fail(ErrorCode::domain, "project_spin_flip: the state has no weight in the requested parity sector");
  right_canonicalize(sum);
  double worst = 0.0;
  for (int j = 0; j + 1 < L; ++j) worst = std::max(worst, shift_center_right(sum, j, cutoff, chi_max));
  right_canonicalize(sum);
  if (discarded) *discarded = worst;
  return sum;
}

double left_isometry_error(const SiteTensor& t) {
  const Eigen::MatrixXd g = t.left_grouped().transpose() * t.left_grouped();
  return (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

double right_isometry_error(const SiteTensor& t) {
  const Eigen::MatrixXd g = t.right_grouped() * t.right_grouped().transpose();
  return (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

double canonical_form_error(const Mps& a, int center) {
  double err = 0.0;
  for (int j = 0; j < a.length(); ++j) {
    if (j < center) err = std::max(err, left_isometry_error(a.sites[static_cast<std::size_t>(j)]));
    if (j > center) err = std::max(err, right_isometry_error(a.sites[static_cast<std::size_t>(j)]));
  }
  return err;
}

double mpo_expectation(const Mps& a, const HamiltonianMPO& mpo) {
  if (static_cast<int>(mpo.sites.size()) != a.length()) fail(ErrorCode::domain, "mpo_expectation: length mismatch");
  detail::Env env = detail::Env::unit();
  for (int j = 0; j < a.length(); ++j) {
    const auto& t = a.sites[static_cast<std::size_t>(j)];
    env = detail::extend_left(env, t, t, detail::sparse_op(mpo.sites[static_cast<std::size_t>(j)]));
  }
  return env.data.at(0);
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const std::string& path, const MpsCheckpoint& ckpt) {
  using nlohmann::json;
  const Mps& m = ckpt.state;
  json j;
  j["format"] = "spinone-mps";
  j["version"] = 1;
  j["L"] = m.length();
  j["center"] = m.center;
  j["seed"] = ckpt.seed;
  j["config"] = json::parse(ckpt.config_json);
  j["bond_charges"] = m.charges;
  json sites = json::array();
  for (const auto& t : m.sites) {
    std::vector<double> row_major;
    row_major.reserve(t.data.size());
    for (int a = 0; a < t.left; ++a)
      for (int s = 0; s < 3; ++s)
        for (int b = 0; b < t.right; ++b) row_major.push_back(t(a, s, b));
    sites.push_back({{"shape", {t.left, 3, t.right}}, {"data", row_major}});
  }
  j["sites"] = std::move(sites);
  // Written beside the target and renamed so a crash never leaves a torn file.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp);
    if (!f) fail(ErrorCode::io, "cannot open checkpoint for writing: " + path);
    f << j.dump() << '\n';
    if (!f) fail(ErrorCode::io, "failed writing checkpoint: " + path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::io, "cannot move checkpoint into place: " + path);
}

MpsCheckpoint load_checkpoint(const std::string& path) {
  using nlohmann::json;
  std::ifstream f(path);
  if (!f) fail(ErrorCode::io, "cannot open checkpoint: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::io, std::string("malformed checkpoint: ") + e.what());
  }
  if (j.value("format", "") != "spinone-mps" || j.value("version", 0) != 1)
    fail(ErrorCode::io, "unsupported checkpoint format in " + path);
  MpsCheckpoint out;
  try {
    out.seed = j.at("seed").get<std::uint64_t>();
    out.config_json = j.at("config").dump();
    out.state.center = j.at("center").get<int>();
    out.state.charges = j.at("bond_charges").get<std::vector<std::vector<int>>>();
    for (const auto& s : j.at("sites")) {
      const auto shape = s.at("shape").get<std::vector<int>>();
      const auto data = s.at("data").get<std::vector<double>>();
      if (shape.size() != 3 || shape[1] != 3 ||
          data.size() != static_cast<std::size_t>(shape[0]) * 3 * static_cast<std::size_t>(shape[2]))
        fail(ErrorCode::io, "checkpoint site tensor has inconsistent shape");
      SiteTensor t(shape[0], shape[2]);
      std::size_t n = 0;
      for (int a = 0; a < t.left; ++a)
        for (int q = 0; q < 3; ++q)
          for (int b = 0; b < t.right; ++b) t(a, q, b) = data[n++];
      out.state.sites.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::io, std::string("malformed checkpoint: ") + e.what());
  }
  if (out.state.length() != j.value("L", -1)) fail(ErrorCode::io, "checkpoint L does not match site count");
  if (!out.state.charges.empty() && out.state.charges.size() != out.state.sites.size() + 1)
    fail(ErrorCode::io, "checkpoint bond charges do not match site count");
  return out;
}

}  // namespace spinone
