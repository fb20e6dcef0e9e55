#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "spinone/errors.hpp"
#include "spinone/model.hpp"

using namespace spinone;

namespace {

Eigen::MatrixXd dense(const ModelParams& p) { return Eigen::MatrixXd(build_dense(p)); }

}  // namespace

TEST_CASE("local operators") {
  const auto& o = local_ops();
  CHECK(o.sz.isApprox(Eigen::Vector3d(1, 0, -1).asDiagonal().toDenseMatrix()));
  CHECK(o.sz2 == o.sz * o.sz);
  CHECK(o.sp == o.sm.transpose());
  // sp|m> = sqrt(2)|m+1> for m in {-1, 0}
  CHECK(o.sp(0, 1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(o.sp(1, 2) == doctest::Approx(std::sqrt(2.0)));
  CHECK(o.sp.col(0).isZero());

  // Sx Sx + Sy Sy == (S+ S- + S- S+)/2 on a bond.
  Eigen::MatrixXd xy = Eigen::kroneckerProduct(Eigen::MatrixXd(o.sx), Eigen::MatrixXd(o.sx));
  xy -= Eigen::kroneckerProduct(Eigen::MatrixXd(o.sy_imag), Eigen::MatrixXd(o.sy_imag));
  Eigen::MatrixXd pm = 0.5 * (Eigen::kroneckerProduct(Eigen::MatrixXd(o.sp), Eigen::MatrixXd(o.sm)) +
                              Eigen::kroneckerProduct(Eigen::MatrixXd(o.sm), Eigen::MatrixXd(o.sp)));
  CHECK((xy - pm).cwiseAbs().maxCoeff() < 1e-15);
  // Spin-1 Casimir.
  Eigen::Matrix3d s2 = o.sx * o.sx - o.sy_imag * o.sy_imag + o.sz * o.sz;
  CHECK(s2.isApprox(2.0 * Eigen::Matrix3d::Identity()));
}

TEST_CASE("build_dense: single site") {
  const Eigen::MatrixXd h = dense({1, 1.0, 1.0});
  CHECK(h.isApprox(Eigen::Vector3d(1, 0, 1).asDiagonal().toDenseMatrix()));
}

TEST_CASE("build_dense: two sites match the closed form") {
  for (double D : {-1.0, 0.0, 0.5, 1.0, 10.0}) {
    const Eigen::MatrixXd h = dense({2, 1.0, D});
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    // The Sz = 0 symmetric block gives the global minimum only for D > -1/2 roughly;
    // compare the closed form against the sector-0 spectrum instead.
    const auto basis = total_sz_sector_basis(2, 0);
    Eigen::MatrixXd block(3, 3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) block(a, b) = h(basis[a], basis[b]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> bs(block);
    CHECK(bs.eigenvalues()(0) == doctest::Approx(oracle::two_site_energy(1.0, D)).epsilon(1e-12));
  }
  const Eigen::MatrixXd h = dense({2, 1.0, 0.0});
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  CHECK(es.eigenvalues()(0) == doctest::Approx(-2.0).epsilon(1e-14));
}

TEST_CASE("build_dense agrees with the Kronecker-product oracle") {
  for (int L = 1; L <= 5; ++L)
    for (double lambda : {0.0, 1.0, 3.0})
      for (double D : {-1.0, 0.0, 2.0}) {
        const Eigen::MatrixXd h = dense({L, lambda, D});
        CHECK((h - oracle::kron_hamiltonian(L, lambda, D)).cwiseAbs().maxCoeff() < 1e-14);
      }
}

TEST_CASE("build_dense: exact symmetry, Sz block structure, spin flip") {
  for (int L = 1; L <= 4; ++L)
    for (double D : {-0.7, 0.0, 1.3}) {
      const ModelParams p{L, 1.0, D};
      const Eigen::MatrixXd h = dense(p);
      CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
      for (Eigen::Index r = 0; r < h.rows(); ++r)
        for (Eigen::Index c = 0; c < h.cols(); ++c)
          if (total_sz_of(r, L) != total_sz_of(c, L)) REQUIRE(h(r, c) == 0.0);
      // Global flip |m> -> |-m> maps digit d to 2 - d, i.e. index -> 3^L - 1 - index.
      const auto n = h.rows();
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) REQUIRE(h(n - 1 - r, n - 1 - c) == h(r, c));
    }
}

TEST_CASE("build_dense: guard") {
  CHECK_THROWS_AS(build_dense({5, 1.0, 0.0}, 4), Error);
  try {
    build_dense({5, 1.0, 0.0}, 4);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::size);
  }
  CHECK_THROWS_AS(build_dense({0, 1.0, 0.0}), Error);
  CHECK_THROWS_AS(build_dense({2, std::nan(""), 0.0}), Error);
}

TEST_CASE("build_mpo: contraction reproduces the dense Hamiltonian") {
  SUBCASE("L=3 example") {
    const ModelParams p{3, 1.0, 0.5};
    CHECK((contract_mpo(build_mpo(p)) - dense(p)).cwiseAbs().maxCoeff() <= 1e-13);
  }
  SUBCASE("pure XX two-site") {
    const ModelParams p{2, 0.0, 0.0};
    const auto& o = local_ops();
    Eigen::MatrixXd xx = Eigen::kroneckerProduct(Eigen::MatrixXd(o.sx), Eigen::MatrixXd(o.sx));
    xx -= Eigen::kroneckerProduct(Eigen::MatrixXd(o.sy_imag), Eigen::MatrixXd(o.sy_imag));
    CHECK((contract_mpo(build_mpo(p)) - xx).cwiseAbs().maxCoeff() <= 1e-13);
  }
  SUBCASE("grid") {
    for (int L = 2; L <= 6; ++L)
      for (double lambda : {0.0, 1.0, 3.0})
        for (double D : {-1.0, 0.0, 2.0}) {
          const ModelParams p{L, lambda, D};
          CHECK((contract_mpo(build_mpo(p)) - dense(p)).cwiseAbs().maxCoeff() <= 1e-13);
        }
  }
}

TEST_CASE("build_mpo: structure") {
  const auto mpo = build_mpo({6, 1.0, 0.3});
  REQUIRE(mpo.sites.size() == 6);
  CHECK(mpo.sites.front().bond_in == 1);
  CHECK(mpo.sites.front().bond_out == 5);
  CHECK(mpo.sites.back().bond_in == 5);
  CHECK(mpo.sites.back().bond_out == 1);
  for (std::size_t j = 1; j + 1 < mpo.sites.size(); ++j) {
    CHECK(mpo.sites[j].bond_in == 5);
    CHECK(mpo.sites[j].bond_out == 5);
    for (const auto& m : mpo.sites[j].ops) CHECK(m.allFinite());
  }
  CHECK_THROWS_AS(build_mpo({1, 1.0, 0.0}), Error);
}

TEST_CASE("total_sz_sector_basis") {
  CHECK(total_sz_sector_basis(1, 0) == std::vector<std::int64_t>{1});
  // |+-> = (0,2) -> 2, |00> -> 4, |-+> -> 6
  CHECK(total_sz_sector_basis(2, 0) == std::vector<std::int64_t>{2, 4, 6});
  for (int L = 1; L <= 6; ++L) {
    std::vector<int> seen(static_cast<std::size_t>(hilbert_dim(L)), 0);
    std::size_t total = 0;
    for (int s = -L; s <= L; ++s) {
      const auto b = total_sz_sector_basis(L, s);
      total += b.size();
      for (auto i : b) {
        CHECK(total_sz_of(i, L) == s);
        ++seen[static_cast<std::size_t>(i)];
      }
    }
    CHECK(total == static_cast<std::size_t>(hilbert_dim(L)));
    for (int c : seen) CHECK(c == 1);
  }
  CHECK_THROWS_AS(total_sz_sector_basis(2, 3), Error);
}

TEST_CASE("build_sector equals the dense block") {
  const ModelParams p{4, 1.0, 0.7};
  const Eigen::MatrixXd h = dense(p);
  for (int s = -4; s <= 4; ++s) {
    const auto basis = total_sz_sector_basis(4, s);
    const Eigen::MatrixXd blk(build_sector(p, basis));
    for (std::size_t a = 0; a < basis.size(); ++a)
      for (std::size_t b = 0; b < basis.size(); ++b)
        REQUIRE(blk(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) == h(basis[a], basis[b]));
  }
}
