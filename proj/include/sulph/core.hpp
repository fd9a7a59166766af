#pragma once

// Shared vocabulary: error types, space-time grids, gridded fields and the
// one-dimensional quadrature helpers every module uses.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sulph {

/// Input or configuration rejected before any numerical work (CLI exit 2).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A fixed-point iteration did not converge, even after interval bisection
/// (CLI exit 3).
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computed solution left the admissible set (max principle, porosity).
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

/// Discretization of [0,T] x [0,L] with uniform nodes in both directions.
struct GridSpec {
  double T = 1.0;
  std::size_t n_t = 2;
  double L = 1.0;
  std::size_t n_x = 2;

  double dt() const { return T / static_cast<double>(n_t - 1); }
  double dx() const { return L / static_cast<double>(n_x - 1); }
  double t(std::size_t k) const { return T * static_cast<double>(k) / static_cast<double>(n_t - 1); }
  double x(std::size_t j) const { return L * static_cast<double>(j) / static_cast<double>(n_x - 1); }

  void validate() const {
    require(std::isfinite(T) && T > 0.0, "grid: T must be positive");
    require(std::isfinite(L) && L > 0.0, "grid: L must be positive");
    require(n_t >= 2, "grid: n_t must be at least 2");
    require(n_x >= 2, "grid: n_x must be at least 2");
  }

  /// Same space grid, doubled resolution in both directions.
  GridSpec refined() const { return {T, 2 * n_t - 1, L, 2 * n_x - 1}; }

  bool operator==(const GridSpec&) const = default;
};

/// Scalar function on the nodes of a GridSpec, stored row-major in time.
class Field {
 public:
  Field() = default;
  explicit Field(GridSpec grid, double fill = 0.0)
      : grid_(grid), values_(grid.n_t * grid.n_x, fill) {}

  const GridSpec& grid() const { return grid_; }

  double& operator()(std::size_t k, std::size_t j) { return values_[k * grid_.n_x + j]; }
  double operator()(std::size_t k, std::size_t j) const { return values_[k * grid_.n_x + j]; }

  std::span<double> row(std::size_t k) { return {values_.data() + k * grid_.n_x, grid_.n_x}; }
  std::span<const double> row(std::size_t k) const {
    return {values_.data() + k * grid_.n_x, grid_.n_x};
  }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  /// Rows k0..k1 (inclusive) as a field on the shorter horizon t_{k1}-t_{k0}.
  Field time_window(std::size_t k0, std::size_t k1) const {
    GridSpec g{grid_.t(k1) - grid_.t(k0), k1 - k0 + 1, grid_.L, grid_.n_x};
    Field out(g);
    std::copy(values_.begin() + static_cast<std::ptrdiff_t>(k0 * grid_.n_x),
              values_.begin() + static_cast<std::ptrdiff_t>((k1 + 1) * grid_.n_x),
              out.values_.begin());
    return out;
  }

  /// Overwrite rows starting at k0 with the rows of `w`.
  void paste_window(std::size_t k0, const Field& w) {
    std::copy(w.values_.begin(), w.values_.end(),
              values_.begin() + static_cast<std::ptrdiff_t>(k0 * grid_.n_x));
  }

 private:
  GridSpec grid_{};
  std::vector<double> values_;
};

// Field arithmetic kept to what the solvers need.
inline Field operator+(const Field& a, const Field& b) {
  Field out(a.grid());
  for (std::size_t i = 0; i < a.values().size(); ++i) out.values()[i] = a.values()[i] + b.values()[i];
  return out;
}
inline Field operator-(const Field& a, const Field& b) {
  Field out(a.grid());
  for (std::size_t i = 0; i < a.values().size(); ++i) out.values()[i] = a.values()[i] - b.values()[i];
  return out;
}
inline Field operator*(double a, const Field& b) {
  Field out(b.grid());
  for (std::size_t i = 0; i < b.values().size(); ++i) out.values()[i] = a * b.values()[i];
  return out;
}

/// Nodes of a uniform grid on [0,T].
inline std::vector<double> uniform_nodes(double T, std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) t[k] = T * static_cast<double>(k) / static_cast<double>(n - 1);
  return t;
}

/// Composite trapezoid rule on a uniform grid.
inline double trapezoid(std::span<const double> f, double h) {
  if (f.size() < 2) return 0.0;
  double acc = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) acc += f[i];
  return acc * h;
}

/// Trapezoid rule applied to g(f_i).
template <class Fn>
double trapezoid_map(std::span<const double> f, double h, Fn&& g) {
  if (f.size() < 2) return 0.0;
  double acc = 0.5 * (g(f.front()) + g(f.back()));
  for (std::size_t i = 1; i + 1 < f.size(); ++i) acc += g(f[i]);
  return acc * h;
}

/// Centered differences, second-order one-sided stencils at the two ends.
inline std::vector<double> centered_derivative(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  if (n == 2) {
    d[0] = d[1] = (f[1] - f[0]) / h;
    return d;
  }
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  return d;
}

/// Spatial derivative of every time slice of `f`.
inline Field dx_field(const Field& f) {
  Field out(f.grid());
  for (std::size_t k = 0; k < f.grid().n_t; ++k) {
    auto d = centered_derivative(f.row(k), f.grid().dx());
    std::copy(d.begin(), d.end(), out.row(k).begin());
  }
  return out;
}

/// Worker count: SULPH_THREADS if set, otherwise hardware concurrency.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SULPH_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) n = static_cast<unsigned>(v);
  }
  return n;
}

/// Runs body(i) for i in [0,n) on up to worker_count() threads. Each index
/// is handled by exactly one thread; results must be written to
/// index-addressed storage so the outcome does not depend on scheduling.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) body(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace sulph
