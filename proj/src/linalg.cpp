#include "lqgame/linalg.hpp"

#include "lqgame/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <string>

namespace lqgame::linalg {

double spectral_radius(const Matrix& X) {
  if (X.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(X, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double min_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(symmetric), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_psd(const Matrix& X) {
  const double tol = -1e-9 * std::max(1.0, X.norm());
  return min_eigenvalue(X) >= tol;
}

bool is_pd(const Matrix& X, double floor) { return min_eigenvalue(X) > floor; }

bool is_symmetric(const Matrix& X, double tol) {
  return X.rows() == X.cols() && (X - X.transpose()).norm() <= tol;
}

Matrix solve(const Matrix& lhs, const Matrix& rhs, std::string_view what) {
  Eigen::PartialPivLU<Matrix> lu(lhs);
  const double rcond = lu.rcond();
  const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxCondition)) {
    throw IllConditioned(std::string(what) + ": condition number " + std::to_string(cond) +
                             " exceeds " + std::to_string(kMaxCondition),
                         cond);
  }
  return lu.solve(rhs);
}

int svec_size(int m) { return m * (m + 1) / 2; }

Vector quadratic_features(const Vector& v) {
  const auto m = static_cast<int>(v.size());
  Vector r(svec_size(m));
  int c = 0;
  for (int a = 0; a < m; ++a) {
    for (int b = a; b < m; ++b) {
      r(c++) = (a == b ? 1.0 : 2.0) * v(a) * v(b);
    }
  }
  return r;
}

Matrix unsvec(const Vector& h, int m) {
  Matrix H(m, m);
  int c = 0;
  for (int a = 0; a < m; ++a) {
    for (int b = a; b < m; ++b) {
      H(a, b) = h(c);
      H(b, a) = h(c);
      ++c;
    }
  }
  return H;
}

Vector svec(const Matrix& symmetric) {
  const auto m = static_cast<int>(symmetric.rows());
  Vector h(svec_size(m));
  int c = 0;
  for (int a = 0; a < m; ++a) {
    for (int b = a; b < m; ++b) h(c++) = symmetric(a, b);
  }
  return h;
}

double gram_condition(const Matrix& M) {
  if (M.rows() < M.cols() || M.cols() == 0) return std::numeric_limits<double>::infinity();
  Eigen::JacobiSVD<Matrix> svd(M);
  const Vector& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
  const double ratio = s(0) / smin;
  return ratio * ratio;
}

}  // namespace lqgame::linalg
