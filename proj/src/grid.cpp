#include "tvdd/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tvdd/errors.hpp"

namespace tvdd {

namespace {

bool finite_range(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Left-to-right sum of products; the order is part of the determinism contract.
double dot(std::span<const double> a, std::span<const double> b, double acc = 0.0) {
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

}  // namespace

GridGeometry::GridGeometry(std::size_t m1_, std::size_t m2_, double h_) : m1(m1_), m2(m2_), h(h_) {
  if (m1 < 1 || m2 < 1) throw ContractError("GridGeometry: cell counts must be >= 1");
  if (!(h > 0.0) || !std::isfinite(h)) throw ContractError("GridGeometry: mesh size must be positive");
}

void require_same_geometry(const GridGeometry& a, const GridGeometry& b, const char* where) {
  if (!(a == b)) {
    throw ContractError(std::string(where) + ": geometry mismatch (" + std::to_string(a.m1) + "x" +
                        std::to_string(a.m2) + " vs " + std::to_string(b.m1) + "x" + std::to_string(b.m2) +
                        ")");
  }
}

// ---- CellField ------------------------------------------------------------

CellField::CellField(const GridGeometry& geometry, double value)
    : geometry_(geometry), values_(geometry.cell_count(), value) {}

CellField::CellField(const GridGeometry& geometry, std::vector<double> values)
    : geometry_(geometry), values_(std::move(values)) {
  if (values_.size() != geometry_.cell_count()) throw ContractError("CellField: value count != m1*m2");
  if (!finite_range(values_)) throw ContractError("CellField: non-finite value");
}

void CellField::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

bool CellField::all_finite() const { return finite_range(values_); }

CellField& CellField::operator+=(const CellField& other) {
  require_same_geometry(geometry_, other.geometry_, "CellField::operator+=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

CellField& CellField::operator-=(const CellField& other) {
  require_same_geometry(geometry_, other.geometry_, "CellField::operator-=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

CellField& CellField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

CellField operator+(CellField a, const CellField& b) { return a += b; }
CellField operator-(CellField a, const CellField& b) { return a -= b; }
CellField operator*(double s, CellField a) { return a *= s; }

// ---- EdgeField ------------------------------------------------------------

EdgeField::EdgeField(const GridGeometry& geometry, double value)
    : geometry_(geometry), x_(geometry.x_edge_count(), value), y_(geometry.y_edge_count(), value) {}

EdgeField::EdgeField(const GridGeometry& geometry, std::vector<double> x_values, std::vector<double> y_values)
    : geometry_(geometry), x_(std::move(x_values)), y_(std::move(y_values)) {
  if (x_.size() != geometry_.x_edge_count() || y_.size() != geometry_.y_edge_count()) {
    throw ContractError("EdgeField: DOF count does not match geometry");
  }
  if (!finite_range(x_) || !finite_range(y_)) throw ContractError("EdgeField: non-finite value");
}

void EdgeField::fill(double value) {
  std::fill(x_.begin(), x_.end(), value);
  std::fill(y_.begin(), y_.end(), value);
}

bool EdgeField::all_finite() const { return finite_range(x_) && finite_range(y_); }

double EdgeField::max_abs() const {
  double m = 0.0;
  for (double v : x_) m = std::max(m, std::abs(v));
  for (double v : y_) m = std::max(m, std::abs(v));
  return m;
}

EdgeField& EdgeField::operator+=(const EdgeField& other) {
  axpy(1.0, other);
  return *this;
}

EdgeField& EdgeField::operator-=(const EdgeField& other) {
  require_same_geometry(geometry_, other.geometry_, "EdgeField::operator-=");
  for (std::size_t k = 0; k < x_.size(); ++k) x_[k] -= other.x_[k];
  for (std::size_t k = 0; k < y_.size(); ++k) y_[k] -= other.y_[k];
  return *this;
}

EdgeField& EdgeField::operator*=(double s) {
  for (double& v : x_) v *= s;
  for (double& v : y_) v *= s;
  return *this;
}

void EdgeField::axpy(double s, const EdgeField& other) {
  require_same_geometry(geometry_, other.geometry_, "EdgeField::axpy");
  if (s == 1.0) {
    for (std::size_t k = 0; k < x_.size(); ++k) x_[k] += other.x_[k];
    for (std::size_t k = 0; k < y_.size(); ++k) y_[k] += other.y_[k];
    return;
  }
  for (std::size_t k = 0; k < x_.size(); ++k) x_[k] += s * other.x_[k];
  for (std::size_t k = 0; k < y_.size(); ++k) y_[k] += s * other.y_[k];
}

EdgeField operator+(EdgeField a, const EdgeField& b) { return a += b; }
EdgeField operator-(EdgeField a, const EdgeField& b) { return a -= b; }
EdgeField operator*(double s, EdgeField a) { return a *= s; }

// ---- CutoffFunction -------------------------------------------------------

CutoffFunction::CutoffFunction(const GridGeometry& geometry, double value)
    : geometry_(geometry), nodal_(geometry.vertex_count(), value) {}

CutoffFunction::CutoffFunction(const GridGeometry& geometry, std::vector<double> nodal)
    : geometry_(geometry), nodal_(std::move(nodal)) {
  if (nodal_.size() != geometry_.vertex_count()) throw ContractError("CutoffFunction: need (m1+1)(m2+1) values");
  if (!finite_range(nodal_)) throw ContractError("CutoffFunction: non-finite value");
}

bool CutoffFunction::in_unit_range() const {
  return std::all_of(nodal_.begin(), nodal_.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

double CutoffFunction::gradient_max() const {
  const auto& g = geometry_;
  double best = 0.0;
  for (std::size_t j = 0; j < g.m2; ++j) {
    for (std::size_t i = 0; i < g.m1; ++i) {
      const double t00 = (*this)(i, j), t10 = (*this)(i + 1, j);
      const double t01 = (*this)(i, j + 1), t11 = (*this)(i + 1, j + 1);
      // |grad|^2 of a bilinear function is convex in each variable; corners suffice.
      const double gx[2] = {t10 - t00, t11 - t01};
      const double gy[2] = {t01 - t00, t11 - t10};
      for (double a : gx)
        for (double b : gy) best = std::max(best, a * a + b * b);
    }
  }
  return std::sqrt(best) / g.h;
}

// ---- operators ------------------------------------------------------------

void divergence_into(const EdgeField& p, CellField& out) {
  const auto& g = p.geometry();
  if (!(out.geometry() == g)) out = CellField(g);
  const std::size_t m1 = g.m1, m2 = g.m2, mx = m1 - 1;
  const double inv_h = 1.0 / g.h;
  const auto px = p.x_values();
  const auto py = p.y_values();
  auto d = out.values();
  for (std::size_t j = 0; j < m2; ++j) {
    double* row = d.data() + j * m1;
    const double* xr = px.data() + j * mx;
    // x contributions: +pX_ij on cell i, -pX_ij on cell i+1
    if (m1 == 1) {
      row[0] = 0.0;
    } else {
      row[0] = xr[0];
      for (std::size_t i = 1; i < mx; ++i) row[i] = xr[i] - xr[i - 1];
      row[mx] = -xr[mx - 1];
    }
    if (j + 1 < m2) {
      const double* yr = py.data() + j * m1;
      for (std::size_t i = 0; i < m1; ++i) row[i] += yr[i];
    }
    if (j > 0) {
      const double* yb = py.data() + (j - 1) * m1;
      for (std::size_t i = 0; i < m1; ++i) row[i] -= yb[i];
    }
    if (inv_h != 1.0) {
      for (std::size_t i = 0; i < m1; ++i) row[i] *= inv_h;
    }
  }
}

CellField divergence(const EdgeField& p) {
  CellField out(p.geometry());
  divergence_into(p, out);
  return out;
}

void divergence_adjoint_into(const CellField& u, EdgeField& out) {
  const auto& g = u.geometry();
  if (!(out.geometry() == g)) out = EdgeField(g);
  const std::size_t m1 = g.m1, m2 = g.m2, mx = m1 - 1;
  const double inv_h = 1.0 / g.h;
  const auto v = u.values();
  auto ox = out.x_values();
  auto oy = out.y_values();
  for (std::size_t j = 0; j < m2; ++j) {
    const double* row = v.data() + j * m1;
    double* xr = ox.data() + j * mx;
    for (std::size_t i = 0; i < mx; ++i) xr[i] = (row[i] - row[i + 1]) * inv_h;
  }
  for (std::size_t j = 0; j + 1 < m2; ++j) {
    const double* row = v.data() + j * m1;
    const double* up = row + m1;
    double* yr = oy.data() + j * m1;
    for (std::size_t i = 0; i < m1; ++i) yr[i] = (row[i] - up[i]) * inv_h;
  }
}

EdgeField divergence_adjoint(const CellField& u) {
  EdgeField out(u.geometry());
  divergence_adjoint_into(u, out);
  return out;
}

double inner_product(const CellField& u, const CellField& v) {
  require_same_geometry(u.geometry(), v.geometry(), "inner_product(CellField)");
  const double h2 = u.geometry().h * u.geometry().h;
  return h2 * dot(u.values(), v.values());
}

double inner_product(const EdgeField& p, const EdgeField& q) {
  require_same_geometry(p.geometry(), q.geometry(), "inner_product(EdgeField)");
  const double h2 = p.geometry().h * p.geometry().h;
  return h2 * dot(p.y_values(), q.y_values(), dot(p.x_values(), q.x_values()));
}

double squared_norm(const CellField& u) { return inner_product(u, u); }
double squared_norm(const EdgeField& p) { return inner_product(p, p); }
double norm(const CellField& u) { return std::sqrt(squared_norm(u)); }
double norm(const EdgeField& p) { return std::sqrt(squared_norm(p)); }

EdgeField edge_means(const CutoffFunction& theta) {
  const auto& g = theta.geometry();
  EdgeField means(g);
  // A vertical x-edge (i, j) joins vertices (i+1, j) and (i+1, j+1).
  for (std::size_t j = 0; j < g.m2; ++j)
    for (std::size_t i = 0; i + 1 < g.m1; ++i) means.x(i, j) = 0.5 * (theta(i + 1, j) + theta(i + 1, j + 1));
  // A horizontal y-edge (i, j) joins vertices (i, j+1) and (i+1, j+1).
  for (std::size_t j = 0; j + 1 < g.m2; ++j)
    for (std::size_t i = 0; i < g.m1; ++i) means.y(i, j) = 0.5 * (theta(i, j + 1) + theta(i + 1, j + 1));
  return means;
}

EdgeField interpolate_cutoff(const CutoffFunction& theta, const EdgeField& p) {
  require_same_geometry(theta.geometry(), p.geometry(), "interpolate_cutoff");
  EdgeField out = edge_means(theta);
  for (std::size_t k = 0; k < out.size(); ++k) out.dof(k) *= p.dof(k);
  return out;
}

InverseInequality inverse_inequality_check(const EdgeField& p) {
  const double h = p.geometry().h;
  return {squared_norm(divergence(p)), 8.0 / (h * h) * squared_norm(p)};
}

}  // namespace tvdd
