#include "dane/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>

#include "dane/rng.hpp"

namespace dane {
namespace {

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// log(1 + exp(-t)) without overflow for large |t|.
inline double softplus_neg(double t) {
  if (t >= 0) return std::log1p(std::exp(-t));
  return -t + std::log1p(std::exp(t));
}

std::vector<Index> all_rows(const LabeledDataset& data) {
  std::vector<Index> rows(static_cast<std::size_t>(data.sample_count()));
  std::iota(rows.begin(), rows.end(), Index{0});
  return rows;
}

void check_dim(const Vector& w, Index p, const char* where) {
  if (w.size() != p)
    throw ContractError(std::string(where) + ": vector length " +
                        std::to_string(w.size()) + " != feature dim " +
                        std::to_string(p));
}

}  // namespace

void LabeledDataset::validate() const {
  if (features.rows() < 1 || features.cols() < 1)
    throw ContractError("dataset must have at least one sample and feature");
  if (labels.size() != features.rows())
    throw ContractError("label count does not match sample count");
  if (!features.allFinite() || !labels.allFinite())
    throw ContractError("dataset contains non-finite entries");
}

void LabeledDataset::validate_binary_labels() const {
  validate();
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1.0 && labels[i] != -1.0)
      throw ContractError("binary dataset label not in {-1,+1} at row " +
                          std::to_string(i));
  }
}

void normalize_rows(LabeledDataset& data) {
  double max_norm = 0;
  for (Index i = 0; i < data.features.rows(); ++i)
    max_norm = std::max(max_norm, data.features.row(i).norm());
  if (max_norm > 1.0) data.features /= max_norm;
}

ErmObjective::ErmObjective(const LabeledDataset* data, LossModel model)
    : ErmObjective(data, model, all_rows(*data)) {}

ErmObjective::ErmObjective(const LabeledDataset* data, LossModel model,
                           std::vector<Index> rows)
    : data_(data), model_(model), rows_(std::move(rows)) {
  if (rows_.empty()) throw ContractError("objective over an empty row set");
}

double ErmObjective::value(const Vector& w) const {
  check_dim(w, dim(), "value");
  const auto& x = data_->features;
  const auto& y = data_->labels;
  double sum = 0;
  if (model_.kind == LossKind::kRidgeQuadratic) {
    for (Index i : rows_) {
      double r = y[i] - x.row(i).dot(w);
      sum += 0.5 * r * r;
    }
  } else {
    for (Index i : rows_) sum += softplus_neg(y[i] * x.row(i).dot(w));
  }
  double out = sum / static_cast<double>(rows_.size()) +
               0.5 * model_.reg_mu * w.squaredNorm();
  if (!std::isfinite(out)) throw NumericError("objective value overflowed");
  return out;
}

Vector ErmObjective::gradient(const Vector& w) const {
  check_dim(w, dim(), "gradient");
  const auto& x = data_->features;
  const auto& y = data_->labels;
  Vector g = Vector::Zero(dim());
  if (model_.kind == LossKind::kRidgeQuadratic) {
    for (Index i : rows_) {
      double r = y[i] - x.row(i).dot(w);
      g.noalias() -= r * x.row(i).transpose();
    }
  } else {
    for (Index i : rows_) {
      double s = sigmoid(y[i] * x.row(i).dot(w));
      g.noalias() += (s - 1.0) * y[i] * x.row(i).transpose();
    }
  }
  g /= static_cast<double>(rows_.size());
  g.noalias() += model_.reg_mu * w;
  if (!g.allFinite()) throw NumericError("gradient overflowed");
  return g;
}

Vector ErmObjective::hessian_vec(const Vector& w, const Vector& v) const {
  check_dim(w, dim(), "hessian_vec");
  check_dim(v, dim(), "hessian_vec");
  const auto& x = data_->features;
  const auto& y = data_->labels;
  Vector h = Vector::Zero(dim());
  if (model_.kind == LossKind::kRidgeQuadratic) {
    for (Index i : rows_)
      h.noalias() += x.row(i).dot(v) * x.row(i).transpose();
  } else {
    for (Index i : rows_) {
      double s = sigmoid(y[i] * x.row(i).dot(w));
      h.noalias() += s * (1.0 - s) * x.row(i).dot(v) * x.row(i).transpose();
    }
  }
  h /= static_cast<double>(rows_.size());
  h.noalias() += model_.reg_mu * v;
  return h;
}

void ErmObjective::add_sample_gradient(Index k, const Vector& w, double scale,
                                       Vector& out) const {
  const Index i = rows_[static_cast<std::size_t>(k)];
  const auto& x = data_->features;
  const auto& y = data_->labels;
  if (model_.kind == LossKind::kRidgeQuadratic) {
    double r = y[i] - x.row(i).dot(w);
    out.noalias() -= scale * r * x.row(i).transpose();
  } else {
    double s = sigmoid(y[i] * x.row(i).dot(w));
    out.noalias() += scale * (s - 1.0) * y[i] * x.row(i).transpose();
  }
  out.noalias() += scale * model_.reg_mu * w;
}

QuadraticSurrogate::QuadraticSurrogate(const LabeledDataset* data,
                                       std::vector<Index> rows, Vector anchor,
                                       Vector linear_grad, double base_value,
                                       double ell, double mu)
    : data_(data),
      rows_(std::move(rows)),
      anchor_(std::move(anchor)),
      linear_grad_(std::move(linear_grad)),
      base_value_(base_value),
      ell_(ell),
      mu_(mu) {
  if (rows_.empty()) throw ContractError("surrogate over an empty row set");
  check_dim(anchor_, data_->feature_dim(), "surrogate anchor");
  check_dim(linear_grad_, data_->feature_dim(), "surrogate gradient");
}

double QuadraticSurrogate::value(const Vector& w) const {
  check_dim(w, dim(), "surrogate value");
  Vector d = w - anchor_;
  const auto& x = data_->features;
  double quad = 0;
  for (Index i : rows_) {
    double t = x.row(i).dot(d);
    quad += t * t;
  }
  return base_value_ + linear_grad_.dot(d) +
         0.5 * ell_ * quad / static_cast<double>(rows_.size()) +
         0.5 * mu_ * w.squaredNorm();
}

Vector QuadraticSurrogate::gradient(const Vector& w) const {
  check_dim(w, dim(), "surrogate gradient");
  Vector d = w - anchor_;
  const auto& x = data_->features;
  Vector g = Vector::Zero(dim());
  for (Index i : rows_)
    g.noalias() += x.row(i).dot(d) * x.row(i).transpose();
  g *= ell_ / static_cast<double>(rows_.size());
  g.noalias() += linear_grad_;
  g.noalias() += mu_ * w;
  return g;
}

Vector QuadraticSurrogate::hessian_vec(const Vector& w, const Vector& v) const {
  check_dim(w, dim(), "surrogate hessian_vec");
  check_dim(v, dim(), "surrogate hessian_vec");
  const auto& x = data_->features;
  Vector h = Vector::Zero(dim());
  for (Index i : rows_)
    h.noalias() += x.row(i).dot(v) * x.row(i).transpose();
  h *= ell_ / static_cast<double>(rows_.size());
  h.noalias() += mu_ * v;
  return h;
}

void QuadraticSurrogate::add_sample_gradient(Index k, const Vector& w,
                                             double scale, Vector& out) const {
  const Index i = rows_[static_cast<std::size_t>(k)];
  const auto& x = data_->features;
  double t = x.row(i).dot(w) - x.row(i).dot(anchor_);
  out.noalias() += (scale * ell_ * t) * x.row(i).transpose();
  out.noalias() += scale * linear_grad_;
  out.noalias() += scale * mu_ * w;
}

double value(const LossModel& model, const LabeledDataset& data,
             const Vector& w) {
  return ErmObjective(&data, model).value(w);
}

Vector gradient(const LossModel& model, const LabeledDataset& data,
                const Vector& w) {
  return ErmObjective(&data, model).gradient(w);
}

Vector hessian_vec(const LossModel& model, const LabeledDataset& data,
                   const Vector& w, const Vector& v) {
  return ErmObjective(&data, model).hessian_vec(w, v);
}

SpectralEstimate dominant_eigenvalue(
    const std::function<Vector(const Vector&)>& op, Index dim,
    double rel_tolerance, int max_iterations) {
  const Index steps = std::min<Index>(dim, max_iterations);
  Matrix basis(dim, steps);
  Vector alpha(steps), beta(steps);

  Rng rng(Seed{0x5eedULL});
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) v[i] = rng.normal();
  v.normalize();
  basis.col(0) = v;

  double best = 0;
  for (Index j = 0; j < steps; ++j) {
    Vector w = op(basis.col(j));
    alpha[j] = basis.col(j).dot(w);
    w.noalias() -= alpha[j] * basis.col(j);
    if (j > 0) w.noalias() -= beta[j - 1] * basis.col(j - 1);
    // two rounds of reorthogonalization keep the basis numerically exact
    auto span = basis.leftCols(j + 1);
    w.noalias() -= span * (span.transpose() * w);
    w.noalias() -= span * (span.transpose() * w);
    beta[j] = w.norm();

    // Ritz values of the j+1 step tridiagonal
    Matrix tri = Matrix::Zero(j + 1, j + 1);
    for (Index i = 0; i <= j; ++i) {
      tri(i, i) = alpha[i];
      if (i < j) tri(i, i + 1) = tri(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(tri);
    Index which = 0;
    eig.eigenvalues().cwiseAbs().maxCoeff(&which);
    best = eig.eigenvalues()[which];
    // residual bound for the dominant Ritz pair
    double residual = beta[j] * std::abs(eig.eigenvectors()(j, which));

    if (j + 1 == dim || beta[j] == 0 ||
        residual <= rel_tolerance * std::max(std::abs(best), 1e-300)) {
      return {best, static_cast<int>(j + 1)};
    }
    if (j + 1 < steps) basis.col(j + 1) = w / beta[j];
  }
  throw EstimationError("eigenvalue estimation did not converge", best);
}

SmoothnessProfile smoothness_profile(const LossModel& model,
                                     const LabeledDataset& data,
                                     std::optional<double> L_override) {
  data.validate();
  SmoothnessProfile prof;
  prof.mu = model.reg_mu;
  if (model.kind == LossKind::kRidgeQuadratic) {
    prof.ell = 1.0;
    prof.sigma = 1.0;
    prof.nu = 0.0;
  } else {
    prof.ell = 0.25;
    double s = sigmoid(model.domain_radius_b);
    prof.sigma = s * (1.0 - s);
    double max_norm = 0;
    for (Index i = 0; i < data.features.rows(); ++i)
      max_norm = std::max(max_norm, data.features.row(i).norm());
    prof.nu = max_norm * max_norm * max_norm / (6.0 * std::sqrt(3.0));
  }
  if (L_override) {
    prof.L = *L_override;
    return prof;
  }
  const double n = static_cast<double>(data.sample_count());
  const auto& x = data.features;
  const double ell = prof.ell;
  auto gram = [&](const Vector& v) {
    Vector h = Vector::Zero(x.cols());
    for (Index i = 0; i < x.rows(); ++i)
      h.noalias() += x.row(i).dot(v) * x.row(i).transpose();
    return Vector((ell / n) * h);
  };
  prof.L = dominant_eigenvalue(gram, data.feature_dim(), 1e-8, 1000).eigenvalue +
           model.reg_mu;
  return prof;
}

QuadraticSurrogate surrogate_quadratic(const LossModel& model,
                                       const LabeledDataset& data,
                                       const Vector& anchor, double ell) {
  ErmObjective f(&data, model);
  Vector g0 = f.gradient(anchor) - model.reg_mu * anchor;
  double f0 = f.value(anchor) - 0.5 * model.reg_mu * anchor.squaredNorm();
  return QuadraticSurrogate(&data, all_rows(data), anchor, std::move(g0), f0,
                            ell, model.reg_mu);
}

Matrix dense_hessian(const Objective& f, const Vector& w) {
  const Index p = f.dim();
  Matrix h(p, p);
  Vector e = Vector::Zero(p);
  for (Index j = 0; j < p; ++j) {
    e[j] = 1.0;
    h.col(j) = f.hessian_vec(w, e);
    e[j] = 0.0;
  }
  // symmetrize away round-off
  return 0.5 * (h + h.transpose());
}

}  // namespace dane
