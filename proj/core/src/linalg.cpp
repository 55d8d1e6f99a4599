#include "robustkf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "robustkf/error.hpp"

namespace robustkf {

namespace {

void require_finite(const Matrix& a, const char* what) {
  if (!a.all_finite()) {
    throw Error(ErrorCode::NonFiniteInput, std::string(what) + ": non-finite entry");
  }
}

void require_square(const Matrix& a, const char* what) {
  if (!a.is_square() || a.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": matrix must be square");
  }
}

std::optional<Matrix> try_cholesky(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = a(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > 0.0)) return std::nullopt;
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = a(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      l(i, j) = acc / ljj;
    }
  }
  return l;
}

}  // namespace

void require_symmetric(const Matrix& a, const char* what) {
  require_square(a, what);
  const double tol = kSymmetryTolerance * (1.0 + a.max_abs());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      if (std::abs(a(i, j) - a(j, i)) > tol) {
        throw Error(ErrorCode::NotSymmetric, std::string(what) + ": matrix is not symmetric");
      }
    }
  }
}

Matrix cholesky_lower(const Matrix& a, bool allow_jitter) {
  require_finite(a, "cholesky_lower");
  require_symmetric(a, "cholesky_lower");
  Matrix sym = symmetrized(a);
  if (auto l = try_cholesky(sym)) return *std::move(l);
  if (allow_jitter) {
    const double delta = 1e-12 * std::max(1.0, sym.max_abs());
    for (std::size_t i = 0; i < sym.rows(); ++i) sym(i, i) += delta;
    if (auto l = try_cholesky(sym)) return *std::move(l);
  }
  throw Error(ErrorCode::NotPositiveDefinite, "cholesky_lower: non-positive pivot");
}

Matrix solve_lower(const Matrix& lower, const Matrix& b) {
  const std::size_t n = lower.rows();
  if (!lower.is_square() || b.rows() != n) {
    throw Error(ErrorCode::DimensionMismatch, "solve_lower: shape mismatch");
  }
  Matrix x = b;
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = x(i, c);
      for (std::size_t k = 0; k < i; ++k) acc -= lower(i, k) * x(k, c);
      x(i, c) = acc / lower(i, i);
    }
  }
  return x;
}

Vector solve_lower(const Matrix& lower, const Vector& b) {
  return solve_lower(lower, Matrix::column(b)).col_vector(0);
}

Matrix solve_lower_transpose(const Matrix& lower, const Matrix& b) {
  const std::size_t n = lower.rows();
  if (!lower.is_square() || b.rows() != n) {
    throw Error(ErrorCode::DimensionMismatch, "solve_lower_transpose: shape mismatch");
  }
  Matrix x = b;
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t ii = n; ii-- > 0;) {
      double acc = x(ii, c);
      for (std::size_t k = ii + 1; k < n; ++k) acc -= lower(k, ii) * x(k, c);
      x(ii, c) = acc / lower(ii, ii);
    }
  }
  return x;
}

Vector solve_lower_transpose(const Matrix& lower, const Vector& b) {
  return solve_lower_transpose(lower, Matrix::column(b)).col_vector(0);
}

Matrix solve_spd(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw Error(ErrorCode::DimensionMismatch, "solve_spd: shape mismatch");
  require_finite(b, "solve_spd");
  const Matrix l = cholesky_lower(a);
  return solve_lower_transpose(l, solve_lower(l, b));
}

Vector solve_spd(const Matrix& a, const Vector& b) {
  return solve_spd(a, Matrix::column(b)).col_vector(0);
}

SymmetricEigen eigen_symmetric(const Matrix& a) {
  require_finite(a, "eigen_symmetric");
  require_symmetric(a, "eigen_symmetric");
  const std::size_t n = a.rows();
  Matrix s = symmetrized(a);
  Matrix v = Matrix::identity(n);

  const auto off_diagonal = [&] {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) acc += s(i, j) * s(i, j);
    return std::sqrt(acc);
  };
  double frob = 0.0;
  for (double x : s.values()) frob += x * x;
  frob = std::sqrt(frob);

  for (int sweep = 0; sweep < 100; ++sweep) {
    if (off_diagonal() <= 1e-300 + 1e-16 * frob) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = s(p, q);
        if (apq == 0.0) continue;
        const double theta = (s(q, q) - s(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double skp = s(k, p);
          const double skq = s(k, q);
          s(k, p) = c * skp - sn * skq;
          s(k, q) = sn * skp + c * skq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double spk = s(p, k);
          const double sqk = s(q, k);
          s(p, k) = c * spk - sn * sqk;
          s(q, k) = sn * spk + c * sqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return s(i, i) < s(j, j); });
  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = s(order[j], order[j]);
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
  }
  return out;
}

double min_eigenvalue_symmetric(const Matrix& a) {
  if (a.rows() == 1 && a.cols() == 1) {
    require_finite(a, "min_eigenvalue_symmetric");
    return a(0, 0);
  }
  return eigen_symmetric(a).values[0];
}

double induced_l1_norm(const Matrix& a) {
  double best = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) acc += std::abs(a(r, c));
    best = std::max(best, acc);
  }
  return best;
}

}  // namespace robustkf
