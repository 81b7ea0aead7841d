#pragma once

#include <cstdint>
#include <filesystem>

#include <Eigen/Dense>

#include "hud/cube.hpp"
#include "hud/fields.hpp"

namespace hud {

// Endmember spectra, one column per material.
struct EndmemberMatrix {
  int c = 0;  // bands
  int d = 0;  // endmember count
  Eigen::MatrixXd A;  // c x d

  // throws if d < 2, c < d, entries non-finite, or A is column-rank deficient
  // (smallest singular value <= 1e-8 * largest)
  void validate() const;
};

// Linear autoencoder pair: decoder = A, encoder = (A^T A)^{-1} A^T.
struct UnmixingAutoencoder {
  EndmemberMatrix A;
  Eigen::MatrixXd E;  // d x c
  bool frozen = true;
};

UnmixingAutoencoder make_autoencoder(EndmemberMatrix A);

enum class EncodeMode { kLinear, kFcls };

struct FclsDiagnostics {
  int pixels_not_converged = 0;  // hit max_iter before the tol stop
  int max_iterations_used = 0;
};

struct ReconstructionReport {
  double rmse = 0.0;
  double mean_spectral_angle = 0.0;  // radians
};

// Vertex component analysis. Estimates SNR, projects pixels to a d- or
// (d-1)-dimensional singular subspace, then iteratively picks the pixel with
// the largest absolute projection onto a seeded random direction orthogonal
// to the endmembers found so far. Every returned column is an actual pixel
// spectrum of the cube. Deterministic for equal seeds.
EndmemberMatrix vca(const HsiCube& cube, int d, std::uint64_t seed);

// Euclidean projection onto the probability simplex (sort-based, exact).
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

// Per-pixel unconstrained least squares X = (A^T A)^{-1} A^T Y.
CoefficientField solve_abundance_linear(const EndmemberMatrix& A,
                                        const HsiCube& cube);

// Per-pixel simplex-constrained least squares by accelerated projected
// gradient (step 1/L, L = largest eigenvalue of A^T A), warm-started at the
// simplex-projected linear solution. Non-convergence returns the best iterate
// and is reported through `diag`, never an error.
AbundanceField solve_abundance_fcls(const EndmemberMatrix& A, const HsiCube& cube,
                                    double tol = 1e-10, int max_iter = 500,
                                    FclsDiagnostics* diag = nullptr);

// kLinear: E*y then simplex projection per pixel. kFcls: solve_abundance_fcls.
AbundanceField encode(const UnmixingAutoencoder& uae, const HsiCube& cube,
                      EncodeMode mode = EncodeMode::kLinear, double fcls_tol = 1e-10,
                      int fcls_max_iter = 500);

// Y_hat[:,j,k] = A * x[:,j,k]
HsiCube decode(const UnmixingAutoencoder& uae, const AbundanceField& x);

ReconstructionReport reconstruction_report(const HsiCube& y, const HsiCube& y_hat);

// Endmember persistence: an HSC file with bands=c, height=d, width=1 (one
// column per stored pixel row) plus a JSON sidecar <path>.json
// {"d":d,"seed":seed,"mode":"vca"}.
void save_endmembers(const EndmemberMatrix& A, std::uint64_t seed,
                     const std::filesystem::path& path);
EndmemberMatrix load_endmembers(const std::filesystem::path& path);

}  // namespace hud
