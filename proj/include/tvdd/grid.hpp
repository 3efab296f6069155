#pragma once

// Discrete calculus on a uniform pixel mesh.
//
// Cells carry piecewise-constant values (one per pixel). Edge fields hold the
// lowest-order Raviart-Thomas degrees of freedom: the mean normal component on
// every interior edge, with normals pointing in +x1 (vertical edges) and +x2
// (horizontal edges). Boundary edges are not stored; they are structurally
// zero, which is the homogeneous normal-trace condition.
//
// Layouts are row-major with i running along x1 and j along x2:
//   cell (i, j)    -> j * m1 + i,        i < m1,     j < m2
//   x-edge (i, j)  -> j * (m1 - 1) + i,  i < m1 - 1, j < m2   (between cells i and i+1)
//   y-edge (i, j)  -> j * m1 + i,        i < m1,     j < m2-1 (between cells j and j+1)
//   vertex (a, b)  -> b * (m1 + 1) + a,  a <= m1,    b <= m2

#include <cstddef>
#include <span>
#include <vector>

namespace tvdd {

struct GridGeometry {
  std::size_t m1 = 1;
  std::size_t m2 = 1;
  double h = 1.0;

  GridGeometry() = default;
  GridGeometry(std::size_t m1, std::size_t m2, double h = 1.0);

  [[nodiscard]] std::size_t cell_count() const { return m1 * m2; }
  [[nodiscard]] std::size_t x_edge_count() const { return (m1 - 1) * m2; }
  [[nodiscard]] std::size_t y_edge_count() const { return m1 * (m2 - 1); }
  [[nodiscard]] std::size_t edge_count() const { return x_edge_count() + y_edge_count(); }
  [[nodiscard]] std::size_t vertex_count() const { return (m1 + 1) * (m2 + 1); }
  [[nodiscard]] double area() const { return static_cast<double>(m1 * m2) * h * h; }

  bool operator==(const GridGeometry&) const = default;
};

void require_same_geometry(const GridGeometry& a, const GridGeometry& b, const char* where);

/// Element of X_h: one value per cell.
class CellField {
 public:
  CellField() = default;
  explicit CellField(const GridGeometry& geometry, double value = 0.0);
  CellField(const GridGeometry& geometry, std::vector<double> values);

  [[nodiscard]] const GridGeometry& geometry() const { return geometry_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return values_[j * geometry_.m1 + i]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[j * geometry_.m1 + i]; }

  [[nodiscard]] std::span<double> values() { return values_; }
  [[nodiscard]] std::span<const double> values() const { return values_; }

  void fill(double value);
  [[nodiscard]] bool all_finite() const;

  CellField& operator+=(const CellField& other);
  CellField& operator-=(const CellField& other);
  CellField& operator*=(double s);
  bool operator==(const CellField&) const = default;

 private:
  GridGeometry geometry_;
  std::vector<double> values_ = std::vector<double>(1, 0.0);
};

CellField operator+(CellField a, const CellField& b);
CellField operator-(CellField a, const CellField& b);
CellField operator*(double s, CellField a);

/// Element of Y_h: one normal-component value per interior edge.
class EdgeField {
 public:
  EdgeField() = default;
  explicit EdgeField(const GridGeometry& geometry, double value = 0.0);
  EdgeField(const GridGeometry& geometry, std::vector<double> x_values, std::vector<double> y_values);

  [[nodiscard]] const GridGeometry& geometry() const { return geometry_; }
  [[nodiscard]] std::size_t size() const { return x_.size() + y_.size(); }

  double& x(std::size_t i, std::size_t j) { return x_[j * (geometry_.m1 - 1) + i]; }
  double x(std::size_t i, std::size_t j) const { return x_[j * (geometry_.m1 - 1) + i]; }
  double& y(std::size_t i, std::size_t j) { return y_[j * geometry_.m1 + i]; }
  double y(std::size_t i, std::size_t j) const { return y_[j * geometry_.m1 + i]; }

  [[nodiscard]] std::span<double> x_values() { return x_; }
  [[nodiscard]] std::span<const double> x_values() const { return x_; }
  [[nodiscard]] std::span<double> y_values() { return y_; }
  [[nodiscard]] std::span<const double> y_values() const { return y_; }

  // Flat DOF access: x-edges first, then y-edges.
  double& dof(std::size_t k) { return k < x_.size() ? x_[k] : y_[k - x_.size()]; }
  double dof(std::size_t k) const { return k < x_.size() ? x_[k] : y_[k - x_.size()]; }

  void fill(double value);
  [[nodiscard]] bool all_finite() const;
  [[nodiscard]] double max_abs() const;

  EdgeField& operator+=(const EdgeField& other);
  EdgeField& operator-=(const EdgeField& other);
  EdgeField& operator*=(double s);
  // this += s * other
  void axpy(double s, const EdgeField& other);
  bool operator==(const EdgeField&) const = default;

 private:
  GridGeometry geometry_;
  std::vector<double> x_;
  std::vector<double> y_;
};

EdgeField operator+(EdgeField a, const EdgeField& b);
EdgeField operator-(EdgeField a, const EdgeField& b);
EdgeField operator*(double s, EdgeField a);

/// Nodal values of a continuous piecewise-bilinear cutoff function.
class CutoffFunction {
 public:
  CutoffFunction() = default;
  explicit CutoffFunction(const GridGeometry& geometry, double value = 0.0);
  CutoffFunction(const GridGeometry& geometry, std::vector<double> nodal);

  [[nodiscard]] const GridGeometry& geometry() const { return geometry_; }
  double& operator()(std::size_t a, std::size_t b) { return nodal_[b * (geometry_.m1 + 1) + a]; }
  double operator()(std::size_t a, std::size_t b) const { return nodal_[b * (geometry_.m1 + 1) + a]; }
  [[nodiscard]] std::span<const double> values() const { return nodal_; }
  [[nodiscard]] std::span<double> values() { return nodal_; }

  /// True when every nodal value lies in [0, 1].
  [[nodiscard]] bool in_unit_range() const;
  /// max |grad theta| of the bilinear interpolant (attained at cell corners).
  [[nodiscard]] double gradient_max() const;

 private:
  GridGeometry geometry_;
  std::vector<double> nodal_ = std::vector<double>(4, 0.0);
};

// (div p)_ij = (pX_ij - pX_{i-1,j} + pY_ij - pY_{i,j-1}) / h, missing edges are zero.
CellField divergence(const EdgeField& p);
void divergence_into(const EdgeField& p, CellField& out);

// Negative forward difference: (div* u)x_ij = (u_ij - u_{i+1,j}) / h, same along x2.
EdgeField divergence_adjoint(const CellField& u);
void divergence_adjoint_into(const CellField& u, EdgeField& out);

double inner_product(const CellField& u, const CellField& v);
double inner_product(const EdgeField& p, const EdgeField& q);
double squared_norm(const CellField& u);
double squared_norm(const EdgeField& p);
double norm(const CellField& u);
double norm(const EdgeField& p);

/// Pi_h(theta p): each DOF scaled by the mean of theta over its edge.
EdgeField interpolate_cutoff(const CutoffFunction& theta, const EdgeField& p);

/// Mean of theta along every interior edge (the factor used by interpolate_cutoff).
EdgeField edge_means(const CutoffFunction& theta);

struct InverseInequality {
  double lhs = 0.0;  // ||div p||^2
  double rhs = 0.0;  // (8 / h^2) ||p||^2
};
InverseInequality inverse_inequality_check(const EdgeField& p);

}  // namespace tvdd
