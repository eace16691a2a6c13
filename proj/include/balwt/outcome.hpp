#pragma once

#include <optional>

#include "balwt/dataset.hpp"
#include "balwt/types.hpp"

// Linear base learners: minimum-norm OLS, (generalized) ridge, lasso via
// cyclic coordinate descent, and Gram-matrix kernel ridge.

namespace balwt {

enum class OutcomeFamily { ols, ridge, generalized_ridge, lasso, kernel_ridge };

struct OutcomeFit {
  Vector beta;                        // empty for kernel fits
  OutcomeFamily family = OutcomeFamily::ols;
  Vector lambda;                      // scalar stored as size-1, Λ diagonal as size-d
  std::optional<Vector> dual_alpha;   // kernel ridge dual coefficients
};

enum class KernelKind { linear, gaussian };

struct KernelSpec {
  KernelKind kind = KernelKind::linear;
  double bandwidth = 1.0;  // gaussian only
};

OutcomeFit fit_ols(const ProblemData& data);

// (Phi'Phi + diag(Lambda))^{-1} Phi'y; pseudoinverse path when singular.
OutcomeFit fit_generalized_ridge(const ProblemData& data, const Vector& lambda);

// Convenience: Lambda = lambda * I.
OutcomeFit fit_ridge(const ProblemData& data, double lambda);

struct LassoOptions {
  double coef_change_tol = 1e-9;
  long max_sweeps = 100000;
};

// argmin (1/2)||y - Phi b||^2 + lambda ||b||_1 by cyclic coordinate descent.
OutcomeFit fit_lasso(const ProblemData& data, double lambda, LassoOptions opts = {});

// Max |Phi'(y - Phi b) - lambda * subgradient| over coordinates.
double lasso_kkt_residual(const ProblemData& data, const Vector& beta, double lambda);

OutcomeFit fit_kernel_ridge(const ProblemData& data, const KernelSpec& kernel, double lambda);

// Gram matrix between row sets (centered coordinates for the linear kernel).
Matrix gram_matrix(const Matrix& a, const Matrix& b, const KernelSpec& kernel);

// Predictions at (centered) feature rows.
Vector predict(const OutcomeFit& fit, const ProblemData& data, const Matrix& phi_rows,
               const KernelSpec& kernel = {});

}  // namespace balwt
