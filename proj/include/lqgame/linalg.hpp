#pragma once

#include "lqgame/types.hpp"

#include <string_view>

namespace lqgame::linalg {

// Condition numbers above this make a linear solve raise IllConditioned.
inline constexpr double kMaxCondition = 1e12;

inline Matrix symmetrize(const Matrix& X) { return 0.5 * (X + X.transpose()); }

double spectral_radius(const Matrix& X);
double min_eigenvalue(const Matrix& symmetric);

// PSD test with threshold -1e-9 * max(1, ||X||_F).
bool is_psd(const Matrix& X);
// Strict definiteness: min eigenvalue above `floor`.
bool is_pd(const Matrix& X, double floor = 1e-12);
bool is_symmetric(const Matrix& X, double tol = 1e-10);

// Solves lhs * X = rhs with an LU factorization. Throws IllConditioned when
// the reciprocal condition estimate puts cond(lhs) above kMaxCondition.
Matrix solve(const Matrix& lhs, const Matrix& rhs, std::string_view what);

// Half-vectorization of a symmetric m x m matrix: upper triangle, row by row.
// For a vector v, quadratic_features(v) gives the row r with
// r . svec(H) = v^T H v, i.e. off-diagonal products doubled.
int svec_size(int m);
Vector quadratic_features(const Vector& v);
Matrix unsvec(const Vector& h, int m);
Vector svec(const Matrix& symmetric);

// 2-norm condition number cond(M^T M) = (s_max / s_min)^2. Infinite when
// M is rank deficient.
double gram_condition(const Matrix& M);

}  // namespace lqgame::linalg
