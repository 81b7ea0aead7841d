#include "hud/unmixing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "hud/hsc_io.hpp"
#include "hud/rng.hpp"
#include "hud/threads.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hud {

namespace {

// cube pixels as a c x N column-per-pixel matrix (band-major layout is
// row-major c x N, so this is a cast, not a reshuffle)
Eigen::MatrixXd pixel_matrix(const HsiCube& cube) {
  using RowMajorF =
      Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajorF>(cube.data.data(), cube.bands,
                                     cube.pixel_count())
      .cast<double>();
}

constexpr double kRankRatio = 1e-12;  // eigenvalue ratio ~ (1e-6 singular ratio)^2

}  // namespace

void EndmemberMatrix::validate() const {
  if (d < 2) throw std::invalid_argument("endmembers: d must be >= 2");
  if (c < d) throw std::invalid_argument("endmembers: need c >= d");
  if (A.rows() != c || A.cols() != d)
    throw std::invalid_argument("endmembers: matrix shape mismatch");
  if (!A.allFinite()) throw std::invalid_argument("endmembers: non-finite entries");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-8 * sv(0))
    throw std::invalid_argument("endmembers: column-rank deficient matrix");
}

UnmixingAutoencoder make_autoencoder(EndmemberMatrix A) {
  A.validate();
  UnmixingAutoencoder uae;
  const Eigen::MatrixXd G = A.A.transpose() * A.A;
  uae.E = G.ldlt().solve(A.A.transpose());
  const double err =
      (uae.E * A.A - Eigen::MatrixXd::Identity(A.d, A.d)).cwiseAbs().maxCoeff();
  if (err > 1e-6)
    throw std::runtime_error("autoencoder: E*A deviates from identity by " +
                             std::to_string(err));
  uae.A = std::move(A);
  return uae;
}

EndmemberMatrix vca(const HsiCube& cube, int d, std::uint64_t seed) {
  validate_cube(cube);
  const int c = cube.bands;
  const int n = cube.pixel_count();
  if (d < 2) throw std::invalid_argument("vca: d must be >= 2");
  if (d > c) throw std::invalid_argument("vca: d exceeds band count");
  if (d > n) throw std::invalid_argument("vca: d exceeds pixel count");

  const Eigen::MatrixXd r = pixel_matrix(cube);
  const Eigen::VectorXd r_mean = r.rowwise().mean();
  const Eigen::MatrixXd r0 = r.colwise() - r_mean;

  const Eigen::MatrixXd corr = (r * r.transpose()) / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_corr(corr);
  if (es_corr.info() != Eigen::Success)
    throw std::runtime_error("vca: eigendecomposition failed");
  const Eigen::VectorXd ev = es_corr.eigenvalues();  // ascending
  const double ev_max = ev(c - 1);
  int rank = 0;
  for (int i = 0; i < c; ++i)
    if (ev(i) > ev_max * kRankRatio) ++rank;
  if (rank < d)
    throw std::runtime_error("vca: pixel matrix is rank deficient (rank " +
                             std::to_string(rank) + " < d)");

  const Eigen::MatrixXd cov = (r0 * r0.transpose()) / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_cov(cov);
  if (es_cov.info() != Eigen::Success)
    throw std::runtime_error("vca: eigendecomposition failed");

  // SNR estimate in the top-d mean-removed subspace
  const Eigen::MatrixXd ud_cov = es_cov.eigenvectors().rightCols(d);
  const double p_y = r.squaredNorm() / n;
  const double p_x =
      (ud_cov.transpose() * r0).squaredNorm() / n + r_mean.squaredNorm();
  const double noise_power = p_y - p_x;
  double snr_db;
  if (noise_power <= p_y * 1e-14) {
    snr_db = std::numeric_limits<double>::infinity();
  } else {
    snr_db = 10.0 *
             std::log10((p_x - (static_cast<double>(d) / c) * p_y) / noise_power);
  }
  const double snr_threshold = 15.0 + 10.0 * std::log10(static_cast<double>(d));

  Eigen::MatrixXd y(d, n);  // projected points the vertices are picked from
  if (snr_db > snr_threshold) {
    // high SNR: projective projection in the top-d subspace of R*R^T
    const Eigen::MatrixXd ud = es_corr.eigenvectors().rightCols(d);
    const Eigen::MatrixXd xp = ud.transpose() * r;
    const Eigen::VectorXd u = xp.rowwise().mean();
    Eigen::RowVectorXd denom = u.transpose() * xp;
    const double guard = 1e-12 * denom.cwiseAbs().maxCoeff() + 1e-300;
    for (int j = 0; j < n; ++j) {
      double dj = denom(j);
      if (std::abs(dj) < guard) dj = dj < 0 ? -guard : guard;
      y.col(j) = xp.col(j) / dj;
    }
  } else {
    // low SNR: (d-1)-dimensional mean-removed subspace plus a constant row
    const Eigen::MatrixXd ud = es_cov.eigenvectors().rightCols(d - 1);
    const Eigen::MatrixXd xp = ud.transpose() * r0;
    const double scale = xp.colwise().norm().maxCoeff();
    y.topRows(d - 1) = xp;
    y.row(d - 1).setConstant(scale);
  }

  Rng rng(seed);
  Eigen::MatrixXd picked = Eigen::MatrixXd::Zero(d, d);
  picked(d - 1, 0) = 1.0;
  std::vector<int> idx(d, 0);
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd f(d);
    double norm = 0.0;
    do {
      Eigen::VectorXd w(d);
      for (int k = 0; k < d; ++k) w(k) = rng.normal();
      f = w - picked * picked.completeOrthogonalDecomposition().solve(w);
      norm = f.norm();
    } while (norm < 1e-12);
    f /= norm;
    const Eigen::RowVectorXd proj = f.transpose() * y;
    int best = 0;
    double best_abs = -1.0;
    for (int j = 0; j < n; ++j) {
      const double a = std::abs(proj(j));
      if (a > best_abs) {
        best_abs = a;
        best = j;
      }
    }
    idx[i] = best;
    picked.col(i) = y.col(best);
  }

  EndmemberMatrix out;
  out.c = c;
  out.d = d;
  out.A.resize(c, d);
  for (int i = 0; i < d; ++i) out.A.col(i) = r.col(idx[i]);
  out.validate();
  return out;
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  if (!v.allFinite())
    throw std::invalid_argument("project_to_simplex: non-finite input");
  const int d = static_cast<int>(v.size());
  std::vector<double> u(v.data(), v.data() + d);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double theta = 0.0;
  int support = 0;
  for (int j = 0; j < d; ++j) {
    cumsum += u[j];
    const double t = (cumsum - 1.0) / (j + 1);
    if (u[j] - t > 0.0) {
      support = j + 1;
      theta = t;
    }
  }
  (void)support;
  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x(i) = std::max(v(i) - theta, 0.0);
  return x;
}

CoefficientField solve_abundance_linear(const EndmemberMatrix& A,
                                        const HsiCube& cube) {
  A.validate();
  validate_cube(cube);
  if (cube.bands != A.c)
    throw std::invalid_argument("solve_abundance_linear: band count mismatch");

  const Eigen::MatrixXd gram = A.A.transpose() * A.A;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double cond =
      es.eigenvalues()(A.d - 1) / std::max(es.eigenvalues()(0), 1e-300);
  if (!(cond < 1e12))
    throw std::runtime_error("solve_abundance_linear: A^T A condition number " +
                             std::to_string(cond) + " exceeds 1e12");

  const Eigen::MatrixXd enc = gram.ldlt().solve(A.A.transpose());
  const Eigen::MatrixXd x = enc * pixel_matrix(cube);

  CoefficientField out(A.d, cube.height, cube.width);
  for (int i = 0; i < A.d; ++i)
    for (int j = 0; j < cube.pixel_count(); ++j)
      out.data[static_cast<std::size_t>(i) * cube.pixel_count() + j] =
          static_cast<float>(x(i, j));
  return out;
}

AbundanceField solve_abundance_fcls(const EndmemberMatrix& A, const HsiCube& cube,
                                    double tol, int max_iter,
                                    FclsDiagnostics* diag) {
  A.validate();
  validate_cube(cube);
  if (cube.bands != A.c)
    throw std::invalid_argument("solve_abundance_fcls: band count mismatch");
  if (!(tol > 0.0)) throw std::invalid_argument("solve_abundance_fcls: tol must be > 0");
  if (max_iter < 1)
    throw std::invalid_argument("solve_abundance_fcls: max_iter must be >= 1");

  const int d = A.d;
  const int n = cube.pixel_count();
  const Eigen::MatrixXd r = pixel_matrix(cube);
  const Eigen::MatrixXd gram = A.A.transpose() * A.A;
  const Eigen::MatrixXd b_all = A.A.transpose() * r;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double lip = es.eigenvalues()(d - 1);
  const Eigen::MatrixXd warm_lin = gram.ldlt().solve(b_all);

  AbundanceField out(d, cube.height, cube.width);
  std::vector<int> iters(n, 0);
  std::vector<char> converged(n, 1);

  const int threads = thread_budget();
#ifdef _OPENMP
#pragma omp parallel for num_threads(threads) schedule(static)
#endif
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd b = b_all.col(j);
    const double yty = r.col(j).squaredNorm();
    const auto objective = [&](const Eigen::VectorXd& x) {
      return x.dot(gram * x) - 2.0 * b.dot(x) + yty;
    };

    Eigen::VectorXd x = project_to_simplex(warm_lin.col(j));
    Eigen::VectorXd best = x;
    double f_prev = objective(x);
    double f_best = f_prev;
    Eigen::VectorXd momentum = x;
    double tk = 1.0;
    int it = 0;
    bool hit_tol = false;
    for (; it < max_iter; ++it) {
      const Eigen::VectorXd grad = gram * momentum - b;
      const Eigen::VectorXd xn = project_to_simplex(momentum - grad / lip);
      const double fn = objective(xn);
      if (fn < f_best) {
        f_best = fn;
        best = xn;
      }
      const double tk1 = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
      momentum = xn + ((tk - 1.0) / tk1) * (xn - x);
      x = xn;
      tk = tk1;
      if (f_prev - fn < tol) {
        hit_tol = true;
        ++it;
        break;
      }
      f_prev = fn;
    }
    iters[j] = it;
    converged[j] = hit_tol ? 1 : 0;

    for (int i = 0; i < d; ++i)
      out.data[static_cast<std::size_t>(i) * n + j] = static_cast<float>(best(i));
  }
  (void)threads;

  if (diag != nullptr) {
    diag->pixels_not_converged = 0;
    diag->max_iterations_used = 0;
    for (int j = 0; j < n; ++j) {
      if (!converged[j]) ++diag->pixels_not_converged;
      diag->max_iterations_used = std::max(diag->max_iterations_used, iters[j]);
    }
  }
  return out;
}

AbundanceField encode(const UnmixingAutoencoder& uae, const HsiCube& cube,
                      EncodeMode mode, double fcls_tol, int fcls_max_iter) {
  validate_cube(cube);
  if (cube.bands != uae.A.c)
    throw std::invalid_argument("encode: band count mismatch");
  if (mode == EncodeMode::kFcls)
    return solve_abundance_fcls(uae.A, cube, fcls_tol, fcls_max_iter);

  const int d = uae.A.d;
  const int n = cube.pixel_count();
  const Eigen::MatrixXd x = uae.E * pixel_matrix(cube);
  AbundanceField out(d, cube.height, cube.width);
  const int threads = thread_budget();
#ifdef _OPENMP
#pragma omp parallel for num_threads(threads) schedule(static)
#endif
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd p = project_to_simplex(x.col(j));
    for (int i = 0; i < d; ++i)
      out.data[static_cast<std::size_t>(i) * n + j] = static_cast<float>(p(i));
  }
  (void)threads;
  return out;
}

HsiCube decode(const UnmixingAutoencoder& uae, const AbundanceField& x) {
  if (x.d != uae.A.d) throw std::invalid_argument("decode: channel count mismatch");
  const int n = x.pixel_count();
  using RowMajorF =
      Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::MatrixXd xm =
      Eigen::Map<const RowMajorF>(x.data.data(), x.d, n).cast<double>();
  const Eigen::MatrixXd y = uae.A.A * xm;

  HsiCube out(uae.A.c, x.h, x.w);
  for (int b = 0; b < uae.A.c; ++b)
    for (int j = 0; j < n; ++j)
      out.data[static_cast<std::size_t>(b) * n + j] = static_cast<float>(y(b, j));
  return out;
}

ReconstructionReport reconstruction_report(const HsiCube& y, const HsiCube& y_hat) {
  if (y.bands != y_hat.bands || y.height != y_hat.height || y.width != y_hat.width)
    throw std::invalid_argument("reconstruction_report: shape mismatch");

  double sq = 0.0;
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    const double ddiff = static_cast<double>(y.data[i]) - y_hat.data[i];
    sq += ddiff * ddiff;
  }
  const double rmse = std::sqrt(sq / static_cast<double>(y.data.size()));

  const int n = y.pixel_count();
  double angle_sum = 0.0;
  for (int j = 0; j < n; ++j) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int b = 0; b < y.bands; ++b) {
      const double a = y.data[static_cast<std::size_t>(b) * n + j];
      const double h = y_hat.data[static_cast<std::size_t>(b) * n + j];
      dot += a * h;
      na += a * a;
      nb += h * h;
    }
    if (na == 0.0 && nb == 0.0) continue;  // both zero: angle 0
    if (na == 0.0 || nb == 0.0) {
      angle_sum += 1.57079632679489662;  // one zero: pi/2
      continue;
    }
    const double cos = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
    angle_sum += std::acos(cos);
  }
  return {rmse, angle_sum / n};
}

void save_endmembers(const EndmemberMatrix& A, std::uint64_t seed,
                     const std::filesystem::path& path) {
  A.validate();
  HsiCube cube(A.c, A.d, 1);
  for (int b = 0; b < A.c; ++b)
    for (int i = 0; i < A.d; ++i)
      cube.data[static_cast<std::size_t>(b) * A.d + i] =
          static_cast<float>(A.A(b, i));
  save_cube(cube, path);

  nlohmann::ordered_json side;
  side["d"] = A.d;
  side["seed"] = seed;
  side["mode"] = "vca";
  std::filesystem::path sp = path;
  sp += ".json";
  std::ofstream sf(sp, std::ios::binary | std::ios::trunc);
  if (!sf) throw std::runtime_error("save_endmembers: cannot open " + sp.string());
  sf << side.dump(2) << "\n";
}

EndmemberMatrix load_endmembers(const std::filesystem::path& path) {
  const HsiCube cube = load_cube(path);
  if (cube.width != 1)
    throw std::runtime_error("load_endmembers: expected width-1 HSC file");
  EndmemberMatrix out;
  out.c = cube.bands;
  out.d = cube.height;
  out.A.resize(out.c, out.d);
  for (int b = 0; b < out.c; ++b)
    for (int i = 0; i < out.d; ++i)
      out.A(b, i) = cube.data[static_cast<std::size_t>(b) * out.d + i];
  out.validate();
  return out;
}

}  // namespace hud
