#include <doctest.h>

#include <cmath>

#include "hud/latent.hpp"
#include "hud/unmixing.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace hud;

namespace {

// smooth positive spectra with pairwise-distinct shapes
Eigen::MatrixXd smooth_endmembers(int c, int d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd a(c, d);
  for (int i = 0; i < d; ++i) {
    for (int b = 0; b < c; ++b) {
      const double mu1 = (i + 1.0) * c / (d + 1.0);
      const double mu2 = c - mu1;
      a(b, i) = 0.1 + std::exp(-0.5 * (b - mu1) * (b - mu1) / (c * 0.6)) +
                0.5 * std::exp(-0.5 * (b - mu2) * (b - mu2) / (c * 1.2)) +
                0.02 * rng.uniform();
    }
  }
  return a;
}

HsiCube cube_from(const Eigen::MatrixXd& a, const Eigen::MatrixXd& x, int h, int w) {
  const Eigen::MatrixXd y = a * x;
  HsiCube cube(static_cast<int>(a.rows()), h, w);
  for (int b = 0; b < cube.bands; ++b)
    for (int j = 0; j < h * w; ++j)
      cube.data[static_cast<std::size_t>(b) * h * w + j] = static_cast<float>(y(b, j));
  return cube;
}

EndmemberMatrix as_endmembers(Eigen::MatrixXd a) {
  EndmemberMatrix em;
  em.c = static_cast<int>(a.rows());
  em.d = static_cast<int>(a.cols());
  em.A = std::move(a);
  em.validate();
  return em;
}

double pixel_objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& x) {
  return (y - a * x).squaredNorm();
}

}  // namespace

TEST_CASE("vca: two distinct pixel values are recovered exactly") {
  Rng rng(3);
  Eigen::VectorXd a1(16), a2(16);
  for (int b = 0; b < 16; ++b) {
    a1(b) = 0.2 + rng.uniform();
    a2(b) = 0.2 + rng.uniform();
  }
  HsiCube cube(16, 4, 5);
  for (int j = 0; j < 20; ++j)
    for (int b = 0; b < 16; ++b)
      cube.data[static_cast<std::size_t>(b) * 20 + j] =
          static_cast<float>(j % 3 == 0 ? a2(b) : a1(b));

  const EndmemberMatrix got = vca(cube, 2, 7);
  Eigen::MatrixXd truth(16, 2);
  truth.col(0) = a1.cast<float>().cast<double>();
  truth.col(1) = a2.cast<float>().cast<double>();
  CHECK(oracle::match_spectral_angle(truth, got.A) < 1e-9);
}

TEST_CASE("vca: pure pixels in mixed data are recovered within 1e-2 rad") {
  const int c = 64, d = 4, h = 24, w = 24;
  const Eigen::MatrixXd a = smooth_endmembers(c, d, 99);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(1000 + seed);
    Eigen::MatrixXd x(d, h * w);
    for (int j = 0; j < h * w; ++j) {
      double sum = 0.0;
      for (int i = 0; i < d; ++i) {
        x(i, j) = 0.05 + rng.uniform();  // strict interior after normalization
        sum += x(i, j);
      }
      x.col(j) /= sum;
    }
    for (int i = 0; i < d; ++i) x.col(i * 37 + 5) = Eigen::VectorXd::Unit(d, i);

    const HsiCube cube = cube_from(a, x, h, w);
    const EndmemberMatrix got = vca(cube, d, seed);
    // compare against the float-quantized truth the cube actually stores
    Eigen::MatrixXd truth = a;
    for (int i = 0; i < d; ++i)
      for (int b = 0; b < c; ++b)
        truth(b, i) = static_cast<float>(a(b, i));
    CHECK(oracle::match_spectral_angle(truth, got.A) < 1e-2);
  }
}

TEST_CASE("vca: identical pixels are rank deficient") {
  HsiCube cube(8, 3, 3);
  for (int b = 0; b < 8; ++b)
    for (int j = 0; j < 9; ++j)
      cube.data[static_cast<std::size_t>(b) * 9 + j] = 0.5f + 0.1f * b;
  CHECK_THROWS_WITH_AS(vca(cube, 2, 0), doctest::Contains("rank"),
                       std::runtime_error);
}

TEST_CASE("vca: deterministic for equal seeds") {
  const Eigen::MatrixXd a = smooth_endmembers(32, 3, 5);
  const AbundanceField xf = testsup::random_abundance(3, 10, 10, 8);
  Eigen::MatrixXd x(3, 100);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 100; ++j) x(i, j) = xf.data[static_cast<std::size_t>(i) * 100 + j];
  const HsiCube cube = cube_from(a, x, 10, 10);
  const EndmemberMatrix g1 = vca(cube, 3, 21);
  const EndmemberMatrix g2 = vca(cube, 3, 21);
  CHECK(g1.A == g2.A);
  CHECK_NOTHROW(vca(cube, 3, 22).validate());
}

TEST_CASE("project_to_simplex: feasible points are fixed") {
  Eigen::VectorXd v(2);
  v << 0.5, 0.5;
  CHECK((project_to_simplex(v) - v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("project_to_simplex: symmetric point shifts uniformly") {
  Eigen::VectorXd v(3);
  v << 0.3, 0.3, 0.3;
  const Eigen::VectorXd p = project_to_simplex(v);
  for (int i = 0; i < 3; ++i) CHECK(p(i) == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("project_to_simplex: matches the grid oracle") {
  Eigen::VectorXd v(2);
  v << 2.0, 0.0;
  const Eigen::VectorXd p = project_to_simplex(v);
  CHECK(p(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p(1) == doctest::Approx(0.0).epsilon(1e-12));

  const auto grid = oracle::simplex_grid_min(Eigen::MatrixXd::Identity(2, 2), v,
                                             v.squaredNorm(), 1000);
  CHECK((p - grid.x).norm() < 2e-3);

  // random instances: exact projection can only beat the lattice minimum
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd u(4);
    for (int i = 0; i < 4; ++i) u(i) = rng.normal() * 2.0;
    const Eigen::VectorXd px = project_to_simplex(u);
    const auto g = oracle::simplex_grid_min(Eigen::MatrixXd::Identity(4, 4), u,
                                            u.squaredNorm(), 200);
    CHECK((px - u).squaredNorm() <= g.objective + 1e-9);
    CHECK((px - g.x).cwiseAbs().maxCoeff() < 1.0 / 200 * 4);
  }
}

TEST_CASE("project_to_simplex: idempotent and 1-Lipschitz") {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + rng.uniform_int(0, 6);
    Eigen::VectorXd u(d), v(d);
    for (int i = 0; i < d; ++i) {
      u(i) = rng.normal() * 3.0;
      v(i) = rng.normal() * 3.0;
    }
    const Eigen::VectorXd pu = project_to_simplex(u);
    const Eigen::VectorXd pv = project_to_simplex(v);
    CHECK((project_to_simplex(pu) - pu).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((pu - pv).norm() <= (u - v).norm() + 1e-12);
    CHECK(pu.minCoeff() >= 0.0);
    CHECK(pu.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("project_to_simplex: rejects non-finite input") {
  Eigen::VectorXd v(2);
  v << 1.0, std::nan("");
  CHECK_THROWS_AS(project_to_simplex(v), std::invalid_argument);
}

TEST_CASE("solve_abundance_linear: exact on range(A)") {
  const Eigen::MatrixXd a = smooth_endmembers(24, 3, 1);
  Rng rng(2);
  Eigen::MatrixXd xt(3, 30);
  for (int j = 0; j < 30; ++j) {
    for (int i = 0; i < 3; ++i) xt(i, j) = rng.uniform();
    xt.col(j) /= xt.col(j).sum();
  }
  const HsiCube cube = cube_from(a, xt, 5, 6);
  const CoefficientField x = solve_abundance_linear(as_endmembers(a), cube);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 30; ++j)
      CHECK(x.data[static_cast<std::size_t>(i) * 30 + j] ==
            doctest::Approx(xt(i, j)).epsilon(1e-6));
}

TEST_CASE("solve_abundance_linear: identity endmembers return the data") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3) * 1.0;
  // strictly: c = d with A = I
  EndmemberMatrix em = as_endmembers(a);
  const HsiCube cube = testsup::random_cube(3, 4, 4, 77, 0.1f, 1.0f);
  const CoefficientField x = solve_abundance_linear(em, cube);
  for (std::size_t i = 0; i < cube.data.size(); ++i)
    CHECK(x.data[i] == doctest::Approx(cube.data[i]).epsilon(1e-7));
}

TEST_CASE("solve_abundance_linear: normal equations hold under noise") {
  const Eigen::MatrixXd a = smooth_endmembers(32, 4, 9);
  Rng rng(5);
  Eigen::MatrixXd xt(4, 50);
  for (int j = 0; j < 50; ++j) {
    for (int i = 0; i < 4; ++i) xt(i, j) = rng.uniform();
    xt.col(j) /= xt.col(j).sum();
  }
  HsiCube cube = cube_from(a, xt, 5, 10);
  for (float& v : cube.data) v += 0.01f * static_cast<float>(rng.normal());

  const CoefficientField x = solve_abundance_linear(as_endmembers(a), cube);
  // oracle: direct evaluation of A^T Y and A^T A X
  Eigen::MatrixXd xm(4, 50), ym(32, 50);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 50; ++j) xm(i, j) = x.data[static_cast<std::size_t>(i) * 50 + j];
  for (int b = 0; b < 32; ++b)
    for (int j = 0; j < 50; ++j)
      ym(b, j) = cube.data[static_cast<std::size_t>(b) * 50 + j];
  const Eigen::MatrixXd aty = a.transpose() * ym;
  const Eigen::MatrixXd resid = aty - a.transpose() * a * xm;
  CHECK(resid.cwiseAbs().maxCoeff() <= 1e-5 * aty.cwiseAbs().maxCoeff());
}

TEST_CASE("solve_abundance_linear: band mismatch and ill-conditioning") {
  const Eigen::MatrixXd a = smooth_endmembers(16, 3, 4);
  const HsiCube wrong = testsup::random_cube(8, 2, 2, 1);
  CHECK_THROWS_AS(solve_abundance_linear(as_endmembers(a), wrong),
                  std::invalid_argument);

  Eigen::MatrixXd bad = a;
  bad.col(2) = bad.col(1) + 1e-9 * Eigen::VectorXd::Ones(16);
  EndmemberMatrix em;
  em.c = 16;
  em.d = 3;
  em.A = bad;
  const HsiCube cube = testsup::random_cube(16, 2, 2, 2);
  CHECK_THROWS(solve_abundance_fcls(em, cube));
  CHECK_THROWS(solve_abundance_linear(em, cube));
}

TEST_CASE("fcls: a pure endmember pixel maps to a unit vector") {
  const Eigen::MatrixXd a = smooth_endmembers(32, 4, 13);
  Eigen::MatrixXd x(4, 1);
  x.col(0) = Eigen::VectorXd::Unit(4, 1);
  const HsiCube cube = cube_from(a, x, 1, 1);
  const AbundanceField f = solve_abundance_fcls(as_endmembers(a), cube);
  CHECK(f.at(1, 0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(f.at(0, 0, 0) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(f.at(2, 0, 0) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(f.at(3, 0, 0) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("fcls: interior mixture matches the grid oracle") {
  const Eigen::MatrixXd a = smooth_endmembers(32, 2, 19);
  Eigen::MatrixXd x(2, 1);
  x << 0.3, 0.7;
  const HsiCube cube = cube_from(a, x, 1, 1);
  const AbundanceField f = solve_abundance_fcls(as_endmembers(a), cube);
  CHECK(f.at(0, 0, 0) == doctest::Approx(0.3).epsilon(1e-4));
  CHECK(f.at(1, 0, 0) == doctest::Approx(0.7).epsilon(1e-4));

  Eigen::VectorXd y(32);
  for (int b = 0; b < 32; ++b) y(b) = cube.data[static_cast<std::size_t>(b)];
  const auto grid = oracle::grid_lsq(a, y, 1000);
  Eigen::VectorXd fx(2);
  fx << f.at(0, 0, 0), f.at(1, 0, 0);
  CHECK(pixel_objective(a, y, fx) <= grid.objective + 1e-4);
}

TEST_CASE("fcls: pixel orthogonal to the endmembers stays on the simplex") {
  // columns of A live in the first 4 coordinates; the pixel in the 5th
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(5, 4);
  a.topRows(4) = smooth_endmembers(4, 4, 31).topRows(4);
  EndmemberMatrix em = as_endmembers(a);
  HsiCube cube(5, 1, 1);
  cube.data = {0.0f, 0.0f, 0.0f, 0.0f, 1.0f};

  const AbundanceField f = solve_abundance_fcls(em, cube);
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    CHECK(f.at(i, 0, 0) >= -1e-9f);
    sum += f.at(i, 0, 0);
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));

  Eigen::VectorXd y(5);
  y << 0, 0, 0, 0, 1;
  Eigen::VectorXd fx(4);
  for (int i = 0; i < 4; ++i) fx(i) = f.at(i, 0, 0);
  const auto grid = oracle::grid_lsq(a, y, 1000);
  CHECK(pixel_objective(a, y, fx) <= grid.objective + 1e-4);
}

TEST_CASE("fcls: feasible output and monotone improvement over the warm start") {
  const Eigen::MatrixXd a = smooth_endmembers(24, 4, 41);
  EndmemberMatrix em = as_endmembers(a);
  const HsiCube cube = testsup::random_cube(24, 6, 6, 55, -0.5f, 1.5f);

  const AbundanceField f = solve_abundance_fcls(em, cube);
  CHECK_NOTHROW(validate_abundance(f));

  const CoefficientField lin = solve_abundance_linear(em, cube);
  const int n = cube.pixel_count();
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd y(24), xf(4), xw(4);
    for (int b = 0; b < 24; ++b) y(b) = cube.data[static_cast<std::size_t>(b) * n + j];
    for (int i = 0; i < 4; ++i) {
      xf(i) = f.data[static_cast<std::size_t>(i) * n + j];
      xw(i) = lin.data[static_cast<std::size_t>(i) * n + j];
    }
    const Eigen::VectorXd warm = project_to_simplex(xw);
    CHECK(pixel_objective(a, y, xf) <= pixel_objective(a, y, warm) + 1e-9);
  }
}

TEST_CASE("autoencoder: encoder times decoder is the identity") {
  for (std::uint64_t s : {1ULL, 2ULL, 3ULL}) {
    const UnmixingAutoencoder uae =
        make_autoencoder(as_endmembers(smooth_endmembers(48, 5, s)));
    CHECK((uae.E * uae.A.A - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <
          1e-6);
    CHECK(uae.frozen);
  }
}

TEST_CASE("encode: pure pixels give one-hot abundances in both modes") {
  const Eigen::MatrixXd a = smooth_endmembers(32, 4, 61);
  const UnmixingAutoencoder uae = make_autoencoder(as_endmembers(a));
  Eigen::MatrixXd x(4, 4);
  x.setIdentity();
  const HsiCube cube = cube_from(a, x, 2, 2);
  for (const EncodeMode mode : {EncodeMode::kLinear, EncodeMode::kFcls}) {
    const AbundanceField f = encode(uae, cube, mode);
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i)
        CHECK(f.data[static_cast<std::size_t>(i) * 4 + j] ==
              doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-6));
  }
}

TEST_CASE("encode: linear mode is exact on simplex-valued range(A)") {
  const Eigen::MatrixXd a = smooth_endmembers(40, 3, 71);
  const UnmixingAutoencoder uae = make_autoencoder(as_endmembers(a));
  Rng rng(6);
  Eigen::MatrixXd xt(3, 25);
  for (int j = 0; j < 25; ++j) {
    for (int i = 0; i < 3; ++i) xt(i, j) = 0.05 + rng.uniform();
    xt.col(j) /= xt.col(j).sum();
  }
  const HsiCube cube = cube_from(a, xt, 5, 5);
  const AbundanceField f = encode(uae, cube, EncodeMode::kLinear);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 25; ++j)
      CHECK(f.data[static_cast<std::size_t>(i) * 25 + j] ==
            doctest::Approx(xt(i, j)).epsilon(1e-6));
}

TEST_CASE("encode: fcls mode delegates to solve_abundance_fcls") {
  const Eigen::MatrixXd a = smooth_endmembers(16, 3, 81);
  const UnmixingAutoencoder uae = make_autoencoder(as_endmembers(a));
  const HsiCube cube = testsup::random_cube(16, 3, 4, 91, 0.0f, 1.0f);
  const AbundanceField via_encode = encode(uae, cube, EncodeMode::kFcls);
  const AbundanceField direct = solve_abundance_fcls(uae.A, cube);
  CHECK(via_encode.data == direct.data);
}

TEST_CASE("decode: one-hot abundances give constant endmember spectra") {
  const Eigen::MatrixXd a = smooth_endmembers(20, 3, 101);
  const UnmixingAutoencoder uae = make_autoencoder(as_endmembers(a));
  AbundanceField x(3, 2, 2);
  for (int j = 0; j < 4; ++j) x.data[static_cast<std::size_t>(1) * 4 + j] = 1.0f;
  const HsiCube y = decode(uae, x);
  for (int b = 0; b < 20; ++b)
    for (int j = 0; j < 4; ++j)
      CHECK(y.data[static_cast<std::size_t>(b) * 4 + j] ==
            doctest::Approx(a(b, 1)).epsilon(1e-6));
}

TEST_CASE("decode(encode) reconstructs range(A); uniform abundances average A") {
  const Eigen::MatrixXd a = smooth_endmembers(28, 4, 111);
  const UnmixingAutoencoder uae = make_autoencoder(as_endmembers(a));
  Rng rng(8);
  Eigen::MatrixXd xt(4, 36);
  for (int j = 0; j < 36; ++j) {
    for (int i = 0; i < 4; ++i) xt(i, j) = rng.uniform();
    xt.col(j) /= xt.col(j).sum();
  }
  const HsiCube cube = cube_from(a, xt, 6, 6);
  const HsiCube rec = decode(uae, encode(uae, cube, EncodeMode::kLinear));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < cube.data.size(); ++i) {
    num += (rec.data[i] - cube.data[i]) * static_cast<double>(rec.data[i] - cube.data[i]);
    den += cube.data[i] * static_cast<double>(cube.data[i]);
  }
  CHECK(std::sqrt(num / den) < 1e-5);

  AbundanceField uni(4, 1, 1);
  for (int i = 0; i < 4; ++i) uni.data[i] = 0.25f;
  const HsiCube mean_cube = decode(uae, uni);
  for (int b = 0; b < 28; ++b)
    CHECK(mean_cube.data[b] == doctest::Approx(a.row(b).mean()).epsilon(1e-6));
}

TEST_CASE("decode: permutation equivariance") {
  const Eigen::MatrixXd a = smooth_endmembers(16, 3, 121);
  const AbundanceField x = testsup::random_abundance(3, 4, 4, 9);

  const std::vector<int> perm = {2, 0, 1};
  Eigen::MatrixXd ap(16, 3);
  AbundanceField xp(3, 4, 4);
  for (int i = 0; i < 3; ++i) {
    ap.col(i) = a.col(perm[i]);
    for (int j = 0; j < 16; ++j)
      xp.data[static_cast<std::size_t>(i) * 16 + j] =
          x.data[static_cast<std::size_t>(perm[i]) * 16 + j];
  }
  const HsiCube y1 = decode(make_autoencoder(as_endmembers(a)), x);
  const HsiCube y2 = decode(make_autoencoder(as_endmembers(ap)), xp);
  for (std::size_t i = 0; i < y1.data.size(); ++i)
    CHECK(y1.data[i] == doctest::Approx(y2.data[i]).epsilon(1e-6));
}

TEST_CASE("reconstruction_report basics") {
  const HsiCube y = testsup::random_cube(4, 3, 3, 7, 0.1f, 1.0f);
  const ReconstructionReport same = reconstruction_report(y, y);
  CHECK(same.rmse == 0.0);
  CHECK(same.mean_spectral_angle == 0.0);

  HsiCube twice = y;
  for (float& v : twice.data) v *= 2.0f;
  const ReconstructionReport scaled = reconstruction_report(y, twice);
  CHECK(scaled.mean_spectral_angle == doctest::Approx(0.0).epsilon(1e-6));
  double rms = 0.0;
  for (const float v : y.data) rms += v * static_cast<double>(v);
  rms = std::sqrt(rms / y.data.size());
  CHECK(scaled.rmse == doctest::Approx(rms).epsilon(1e-6));

  HsiCube e1(2, 1, 1), e2(2, 1, 1);
  e1.data = {1.0f, 0.0f};
  e2.data = {0.0f, 1.0f};
  CHECK(reconstruction_report(e1, e2).mean_spectral_angle ==
        doctest::Approx(M_PI / 2).epsilon(1e-9));

  const HsiCube other = testsup::random_cube(4, 3, 2, 8);
  CHECK_THROWS_AS(reconstruction_report(y, other), std::invalid_argument);
}

TEST_CASE("endmember persistence round trip") {
  testsup::TempDir tmp;
  const EndmemberMatrix em = as_endmembers(smooth_endmembers(24, 4, 131));
  // quantize to f32 so the round trip compares equal
  EndmemberMatrix q = em;
  for (int b = 0; b < q.c; ++b)
    for (int i = 0; i < q.d; ++i) q.A(b, i) = static_cast<float>(em.A(b, i));
  save_endmembers(q, 12345, tmp / "em.hsc");
  const EndmemberMatrix back = load_endmembers(tmp / "em.hsc");
  CHECK(back.c == q.c);
  CHECK(back.d == q.d);
  CHECK(back.A == q.A);
  CHECK(std::filesystem::exists(tmp / "em.hsc.json"));
}
