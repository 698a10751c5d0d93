#pragma once

#include <cstddef>
#include <filesystem>
#include <span>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "eigenspine/contour.hpp"

// Low-rank eigen-spine parameterization of vertebra contours.
//
// The contour matrix is decomposed as-is: no mean-centering or
// translation/scale normalization is applied before the SVD, so coefficients
// are plain projections c = U^T a of raw pixel coordinates. Statistical shape
// models usually center first; doing so here would change what a coefficient
// vector means.
namespace eigenspine {

/// 2N x L matrix whose columns are contours, in input order.
struct ContourMatrix {
  Eigen::MatrixXd data;
  std::size_t n_vertices = 0;

  std::size_t rows() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(data.cols()); }
};

/// Truncated left singular vectors (the eigen-spines) of a contour matrix.
///
/// Each column is sign-normalized so that its largest-magnitude entry is
/// positive; fits are then reproducible across SVD backends.
struct EigenSpineBasis {
  Eigen::MatrixXd basis;            // 2N x M, orthonormal columns
  Eigen::VectorXd singular_values;  // M, non-increasing, positive
  std::size_t n_vertices = 0;

  std::size_t m() const { return static_cast<std::size_t>(basis.cols()); }
  std::size_t dim() const { return static_cast<std::size_t>(basis.rows()); }
};

struct CoeffVector {
  Eigen::VectorXd values;
  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

/// Singular values below this fraction of the largest one count as zero.
inline constexpr double kRankTolerance = 1e-12;

ContourMatrix build_contour_matrix(std::span<const ContourVector> contours);

/// Keeps the first m left singular vectors of the contour matrix.
/// Throws kInvalidM unless 1 <= m <= min(2N, L), and kRankDeficient when
/// sigma_m < kRankTolerance * sigma_1.
EigenSpineBasis fit_basis(const ContourMatrix& matrix, std::size_t m);

/// c = U_M^T a
CoeffVector project(const EigenSpineBasis& basis, const ContourVector& contour);

/// a = U_M c
ContourVector reconstruct(const EigenSpineBasis& basis, const CoeffVector& coeffs);

/// ||A - U_M U_M^T A||_F
double reconstruction_error(const EigenSpineBasis& basis, const ContourMatrix& matrix);

void to_json(nlohmann::json& j, const EigenSpineBasis& basis);
void from_json(const nlohmann::json& j, EigenSpineBasis& basis);

void save_basis(const EigenSpineBasis& basis, const std::filesystem::path& path);
EigenSpineBasis load_basis(const std::filesystem::path& path);

}  // namespace eigenspine
