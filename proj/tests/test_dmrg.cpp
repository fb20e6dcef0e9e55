#include <algorithm>
#include <functional>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "spinone/dmrg.hpp"
#include "spinone/errors.hpp"
#include "spinone/exact.hpp"
#include "spinone/mps.hpp"

using namespace spinone;

namespace {

DmrgConfig config_chi(int chi) {
  DmrgConfig c;
  c.chi_max = chi;
  c.n_sweeps = 8;
  return c;
}

bool non_increasing(const std::vector<double>& e) {
  for (std::size_t i = 1; i < e.size(); ++i)
    if (e[i] > e[i - 1] + 1e-12 * std::max(1.0, std::abs(e[i - 1]))) return false;
  return true;
}

}  // namespace

TEST_CASE("mps_to_dense on product states") {
  const Mps zero = product_state({1});
  CHECK(mps_to_dense(zero) == Eigen::Vector3d(0, 1, 0));
  const Eigen::VectorXd pm = mps_to_dense(product_state({0, 2}));
  Eigen::VectorXd expect = Eigen::VectorXd::Zero(9);
  expect(2) = 1.0;
  CHECK(pm == expect);
  CHECK_THROWS_AS(mps_to_dense(product_state(std::vector<int>(5, 1)), 4), Error);
}

TEST_CASE("mps_overlap basics") {
  const Mps zeros = product_state(std::vector<int>(6, 1));
  const Mps ups = product_state(std::vector<int>(6, 0));
  CHECK(mps_overlap(zeros, zeros) == doctest::Approx(1.0));
  CHECK(mps_overlap(zeros, ups) == 0.0);
  CHECK_THROWS_AS(mps_overlap(zeros, product_state({1, 1})), Error);
  const Mps r = random_mps(7, 8, 0, 3);
  CHECK(std::abs(mps_overlap(r, r) - 1.0) < 1e-12);
}

TEST_CASE("random_mps is canonical and charge conserving") {
  for (int target : {0, 1, -2}) {
    const Mps r = random_mps(6, 8, target, 99);
    CHECK(r.max_bond_dim() <= 8);
    CHECK(canonical_form_error(r, 0) < 1e-12);
    const Eigen::VectorXd v = mps_to_dense(r);
    CHECK(std::abs(v.norm() - 1.0) < 1e-12);
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (total_sz_of(i, 6) != target) REQUIRE(v(i) == 0.0);
  }
}

TEST_CASE("block_svd reconstructs and truncates by weight") {
  Eigen::MatrixXd m(4, 4);
  m << 3, 0, 1, 0,  //
      0, 2, 0, 0,   //
      1, 0, 1, 0,   //
      0, 0, 0, 0.1;
  const std::vector<int> rq{0, 1, 0, 2}, cq{0, 1, 0, 2};
  const BlockSvd full = block_svd(m, rq, cq, 10, 0.0);
  CHECK((full.u * full.s.asDiagonal() * full.vt - m).norm() < 1e-12);
  CHECK(full.discarded_weight == 0.0);
  const BlockSvd cut = block_svd(m, rq, cq, 2, 0.0);
  CHECK(cut.s.size() == 2);
  std::vector<double> sorted(full.s.data(), full.s.data() + full.s.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  CHECK(cut.discarded_weight == doctest::Approx(sorted[2] * sorted[2] + sorted[3] * sorted[3]));
  CHECK(std::max(cut.s(0), cut.s(1)) == doctest::Approx(sorted[0]));
  CHECK(std::min(cut.s(0), cut.s(1)) == doctest::Approx(sorted[1]));
  // Kept triplets come grouped by ascending charge.
  CHECK(std::is_sorted(full.charges.begin(), full.charges.end()));
  CHECK(std::is_sorted(cut.charges.begin(), cut.charges.end()));
}

TEST_CASE("dmrg: L=8 energy matches ED") {
  const ModelParams p{8, 1.0, 0.0};
  const auto r = dmrg_ground_state(p, config_chi(100));
  const auto ed = ed_ground_state_global(p);
  CHECK(std::abs(r.energy - ed.energy) <= 1e-8);
  CHECK(r.energy - ed.energy >= -1e-10);
  CHECK(non_increasing(r.energy_history));
  CHECK(r.max_canonical_error < 1e-10);
  CHECK(std::abs(mps_norm(r.state) - 1.0) < 1e-10);
}

TEST_CASE("dmrg: large-D limit approaches the |000...> product state") {
  const ModelParams p{4, 1.0, 100.0};
  const auto r = dmrg_ground_state(p, config_chi(20));
  const auto ed = ed_ground_state(p, 0);
  CHECK(std::abs(r.energy - ed.energy) <= 1e-6);
  for (const auto& spectrum : r.state.spectra) {
    REQUIRE(!spectrum.empty());
    CHECK(spectrum.front() >= 0.999);
  }
  CHECK(mps_overlap(r.state, product_state(std::vector<int>(4, 1))) > 0.999);
}

TEST_CASE("dmrg: dense contraction agrees with the ED vector") {
  const ModelParams p{6, 1.0, 0.5};
  const auto r = dmrg_ground_state(p, config_chi(100));
  const auto ed = ed_ground_state(p, 0);
  const Eigen::VectorXd v = mps_to_dense(r.state);
  CHECK(std::abs(v.norm() - 1.0) < 1e-10);
  CHECK(std::abs(v.dot(ed.vector)) >= 1.0 - 1e-9);
}

TEST_CASE("dmrg: variational bound and untruncated equality") {
  for (int L : {4, 6, 8, 10})
    for (double D : {-0.4, 0.5, 1.5}) {
      const ModelParams p{L, 1.0, D};
      const auto r = dmrg_ground_state(p, config_chi(60));
      const auto ed = ed_ground_state(p, 0);
      INFO("L=" << L << " D=" << D);
      CHECK(r.energy - ed.energy >= -1e-10);
      CHECK(r.max_canonical_error < 1e-10);
      CHECK(r.state.max_bond_dim() <= 60);
    }
  DmrgConfig c = config_chi(27);  // 3^(L/2): no truncation possible
  const ModelParams p{6, 1.0, 0.99};
  const auto r = dmrg_ground_state(p, c);
  CHECK(std::abs(r.energy - ed_ground_state(p, 0).energy) <= 1e-9);
  CHECK(r.max_discarded_weight < 1e-20);
}

TEST_CASE("dmrg: warm start converges to the same energy") {
  const ModelParams p{8, 1.0, 0.9};
  DmrgConfig c = config_chi(100);
  const auto cold = dmrg_ground_state(p, c);
  const auto neighbour = dmrg_ground_state({8, 1.0, 0.8}, c);
  const auto warm = dmrg_ground_state(p, c, &neighbour.state);
  CHECK(warm.warm_started);
  CHECK(std::abs(warm.energy - cold.energy) <= 1e-8);
}

TEST_CASE("dmrg: overlaps at D and D+delta match ED") {
  const double delta = 1e-3;
  const ModelParams a{8, 1.0, 0.9}, b{8, 1.0, 0.9 + delta};
  const auto ra = dmrg_ground_state(a, config_chi(100));
  const auto rb = dmrg_ground_state(b, config_chi(100), &ra.state);
  const double f_ed = std::abs(ed_ground_state(a, 0).vector.dot(ed_ground_state(b, 0).vector));
  CHECK(std::abs(mps_overlap(ra.state, rb.state) - f_ed) <= 1e-6);
  CHECK(std::abs(mps_overlap(ra.state, rb.state) - mps_overlap(rb.state, ra.state)) == 0.0);
}

TEST_CASE("dmrg: errors") {
  CHECK_THROWS_AS(dmrg_ground_state({3, 1.0, 0.0}, DmrgConfig{}), Error);
  DmrgConfig bad;
  bad.chi_max = 0;
  CHECK_THROWS_AS(dmrg_ground_state({6, 1.0, 0.0}, bad), Error);
  const Mps wrong = random_mps(5, 4, 0, 1);
  CHECK_THROWS_AS(dmrg_ground_state({6, 1.0, 0.0}, DmrgConfig{}, &wrong), Error);
}

TEST_CASE("checkpoint round trip preserves overlaps") {
  const auto r = dmrg_ground_state({8, 1.0, 0.3}, config_chi(50));
  const auto path = std::filesystem::temp_directory_path() / "spinone_ckpt_test.json";
  save_checkpoint(path.string(), {r.state, config_chi(50).to_json(), r.seed});
  const MpsCheckpoint back = load_checkpoint(path.string());
  CHECK(back.seed == r.seed);
  CHECK(std::abs(mps_overlap(back.state, r.state) - 1.0) <= 1e-12);
  const Mps other = random_mps(8, 6, 0, 5);
  CHECK(std::abs(mps_overlap(back.state, other) - mps_overlap(r.state, other)) <= 1e-12);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path.string()), Error);
}

namespace {

// Basis index of the globally spin-flipped product state.
std::int64_t flipped_index(std::int64_t i, int L) {
  std::int64_t j = 0, m = 1;
  for (int k = 0; k < L; ++k) {
    j += (2 - i % 3) * m;
    i /= 3;
    m *= 3;
  }
  return j;
}

Eigen::VectorXd dense_flip(const Eigen::VectorXd& v, int L) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(flipped_index(i, L)) = v(i);
  return out;
}

// Lowest energy with total Sz = 0 and spin-flip parity p, by penalties on a
// dense Hamiltonian.
double lowest_with_parity(int L, double D, int p) {
  const Eigen::MatrixXd h = Eigen::MatrixXd(build_dense({L, 1.0, D}));
  const auto n = h.rows();
  Eigen::MatrixXd pen = h;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int sz = total_sz_of(i, L);
    pen(i, i) += 50.0 * sz * sz + 25.0;
    pen(i, flipped_index(i, L)) -= 25.0 * p;
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(pen).eigenvalues()(0);
}

}  // namespace

TEST_CASE("spin_flip matches the dense flip and is an involution") {
  const Mps a = random_mps(7, 12, 0, 5);
  const Mps f = spin_flip(a);
  const Eigen::VectorXd va = mps_to_dense(a), vf = mps_to_dense(f);
  CHECK((vf - dense_flip(va, 7)).norm() < 1e-12);
  CHECK(std::abs(mps_inner(spin_flip(f), a) - 1.0) < 1e-12);
  CHECK(std::abs(spin_flip_expectation(a) - va.dot(dense_flip(va, 7))) < 1e-12);
  for (int k = 0; k <= 7; ++k) CHECK(std::is_sorted(f.charges[k].begin(), f.charges[k].end()));
  CHECK_THROWS_AS(spin_flip(random_mps(6, 4, 1, 1)), Error);
}

TEST_CASE("project_spin_flip equals the dense projection") {
  const Mps a = random_mps(8, 20, 0, 9);
  const Eigen::VectorXd va = mps_to_dense(a);
  for (int p : {1, -1}) {
    double w = -1.0;
    const Mps proj = project_spin_flip(a, p, 1000, 0.0, &w);
    Eigen::VectorXd ref = va + p * dense_flip(va, 8);
    ref.normalize();
    const Eigen::VectorXd got = mps_to_dense(proj);
    CHECK(std::abs(std::abs(got.dot(ref)) - 1.0) < 1e-12);
    CHECK(std::abs(spin_flip_expectation(proj) - p) < 1e-12);
    CHECK(w < 1e-20);
    CHECK(canonical_form_error(proj, 0) < 1e-12);
  }
  const Mps even = project_spin_flip(a, 1, 1000, 0.0);
  CHECK_THROWS_AS(project_spin_flip(even, -1, 1000, 0.0), Error);
  CHECK_THROWS_AS(project_spin_flip(a, 2, 10, 0.0), Error);
}

TEST_CASE("dmrg: spin-flip sectors match penalized dense spectra") {
  for (double D : {-0.6, 0.2, 1.2}) {
    CAPTURE(D);
    for (int p : {1, -1}) {
      DmrgConfig c = config_chi(60);
      c.spin_flip_parity = p;
      const auto r = dmrg_ground_state({6, 1.0, D}, c);
      CHECK(std::abs(r.energy - lowest_with_parity(6, D, p)) < 1e-8);
      CHECK(std::abs(r.spin_flip - p) < 1e-8);
    }
    // The even sector holds the Sz = 0 ground state.
    CHECK(std::abs(lowest_with_parity(6, D, 1) - ed_ground_state({6, 1.0, D}, 0).energy) < 1e-9);
  }
}

TEST_CASE("dmrg: a broken-symmetry state is restored to even parity") {
  // Deep in the Neel phase of a long chain the cat splitting is far below the
  // sweep tolerance, so sweeps from a Neel product state stay broken.
  const int L = 24;
  std::vector<int> neel;
  for (int j = 0; j < L; ++j) neel.push_back(j % 2 == 0 ? 0 : 2);
  const Mps start = product_state(neel);
  CHECK(std::abs(spin_flip_expectation(start)) < 1e-14);
  const ModelParams deep{L, 3.0, 0.0};
  DmrgConfig off = config_chi(20);
  off.spin_flip_parity = 0;
  const auto broken = dmrg_ground_state(deep, off, &start);
  CHECK(broken.parity_projections == 0);
  CHECK(std::abs(broken.spin_flip) < 1e-6);

  // The cat needs twice the bond dimension of one branch.
  const auto even = dmrg_ground_state(deep, config_chi(40), &start);
  CHECK(even.parity_projections >= 1);
  CHECK(std::abs(even.spin_flip - 1.0) < 1e-9);
  CAPTURE(even.energy - broken.energy);
  CAPTURE(even.max_discarded_weight);
  CHECK(even.energy <= broken.energy + 1e-10);
  // The cat of two orthogonal branches carries one extra bit across every cut.
  auto bits = [](const Mps& m) {
    double s = 0.0;
    for (double x : mps_schmidt_values(m, 12))
      if (x * x > 1e-15) s -= x * x * std::log2(x * x);
    return s;
  };
  CHECK(std::abs(bits(even.state) - bits(broken.state) - 1.0) < 1e-6);
}
