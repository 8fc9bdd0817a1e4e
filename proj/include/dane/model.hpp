#ifndef DANE_MODEL_HPP
#define DANE_MODEL_HPP

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "dane/dataset.hpp"

namespace dane {

enum class LossKind {
  kRidgeQuadratic,  // 1/2 (y - <w,x>)^2 + mu/2 ||w||^2
  kLogisticL2,      // log(1 + exp(-y <w,x>)) + mu/2 ||w||^2
};

struct LossModel {
  LossKind kind = LossKind::kRidgeQuadratic;
  double reg_mu = 0.0;          // l2 strength; doubles as the strong convexity mu
  double domain_radius_b = 10;  // ||w|| <= B, only used for the logistic sigma
};

/// Curvature constants of an objective. `mu` is taken equal to the l2
/// strength (a valid lower bound: the data term only adds curvature).
/// `ell`/`sigma` bound the second derivative of the scalar link loss,
/// `nu` is a Hessian Lipschitz constant (0 for quadratics).
struct SmoothnessProfile {
  double L = 0;
  double mu = 0;
  double ell = 0;
  double sigma = 0;
  double nu = 0;
  double kappa() const { return L / mu; }
};

/// A finite-sum objective F(w) = (1/K) sum_k f_k(w) with first- and
/// second-order oracles. Implementations hold borrowed references to the
/// dataset; the dataset must outlive the objective.
///
/// All sample reductions run in ascending local sample order so that repeated
/// evaluations are bit-identical.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Index dim() const = 0;
  virtual Index samples() const = 0;

  virtual double value(const Vector& w) const = 0;
  virtual Vector gradient(const Vector& w) const = 0;
  /// Hessian-vector product at w; the p x p matrix is never materialized.
  virtual Vector hessian_vec(const Vector& w, const Vector& v) const = 0;
  /// Accumulates `out += scale * grad f_k(w)` for the k-th local sample.
  virtual void add_sample_gradient(Index k, const Vector& w, double scale,
                                   Vector& out) const = 0;
  /// True when the Hessian does not depend on w.
  virtual bool constant_hessian() const = 0;
};

/// Empirical risk over a subset of dataset rows (or all of them).
class ErmObjective final : public Objective {
 public:
  ErmObjective(const LabeledDataset* data, LossModel model);
  ErmObjective(const LabeledDataset* data, LossModel model,
               std::vector<Index> rows);

  Index dim() const override { return data_->feature_dim(); }
  Index samples() const override { return static_cast<Index>(rows_.size()); }

  double value(const Vector& w) const override;
  Vector gradient(const Vector& w) const override;
  Vector hessian_vec(const Vector& w, const Vector& v) const override;
  void add_sample_gradient(Index k, const Vector& w, double scale,
                           Vector& out) const override;
  bool constant_hessian() const override {
    return model_.kind == LossKind::kRidgeQuadratic;
  }

  const LossModel& model() const { return model_; }
  const LabeledDataset& data() const { return *data_; }
  const std::vector<Index>& rows() const { return rows_; }

 private:
  const LabeledDataset* data_;
  LossModel model_;
  std::vector<Index> rows_;
};

/// Quadratic model of a linear-prediction objective around an anchor point:
///   Q(w) = f0 + <g0, w - a> + ell/(2K) ||X_S (w - a)||^2 + mu/2 ||w||^2,
/// where f0 and g0 are the unregularized value and gradient at the anchor and
/// X_S is the feature block of the rows this view covers. The curvature
/// matrix only ever appears through matrix-vector products with X_S.
class QuadraticSurrogate final : public Objective {
 public:
  QuadraticSurrogate(const LabeledDataset* data, std::vector<Index> rows,
                     Vector anchor, Vector linear_grad, double base_value,
                     double ell, double mu);

  Index dim() const override { return data_->feature_dim(); }
  Index samples() const override { return static_cast<Index>(rows_.size()); }

  double value(const Vector& w) const override;
  Vector gradient(const Vector& w) const override;
  Vector hessian_vec(const Vector& w, const Vector& v) const override;
  void add_sample_gradient(Index k, const Vector& w, double scale,
                           Vector& out) const override;
  bool constant_hessian() const override { return true; }

  const Vector& anchor() const { return anchor_; }
  double ell() const { return ell_; }
  double mu() const { return mu_; }

 private:
  const LabeledDataset* data_;
  std::vector<Index> rows_;
  Vector anchor_;
  Vector linear_grad_;  // gradient of the unregularized part at the anchor
  double base_value_;
  double ell_;
  double mu_;
};

// ---- whole-dataset convenience oracles ----

double value(const LossModel& model, const LabeledDataset& data,
             const Vector& w);
Vector gradient(const LossModel& model, const LabeledDataset& data,
                const Vector& w);
Vector hessian_vec(const LossModel& model, const LabeledDataset& data,
                   const Vector& w, const Vector& v);

/// Measures the curvature constants of the objective. L is estimated as
/// lambda_max(ell * X^T X / N) + mu by power iteration (relative tolerance
/// 1e-8, at most 1000 iterations); pass `L_override` to skip the estimate.
/// For the logistic loss, nu = max_i ||x_i||^3 / (6 sqrt(3)) (the sharp bound
/// on the third derivative of the link, scaled by the feature norms) and
/// sigma = exp(B) / (1 + exp(B))^2 for the configured domain radius B.
SmoothnessProfile smoothness_profile(const LossModel& model,
                                     const LabeledDataset& data,
                                     std::optional<double> L_override = {});

/// Builds the quadratic model of F around `anchor` with link curvature `ell`
/// over all dataset rows. The result satisfies Q(anchor) = F(anchor) and
/// grad Q(anchor) = grad F(anchor).
QuadraticSurrogate surrogate_quadratic(const LossModel& model,
                                       const LabeledDataset& data,
                                       const Vector& anchor, double ell);

// ---- numeric utilities shared by estimators and audits ----

struct SpectralEstimate {
  double eigenvalue = 0;  // dominant in magnitude (signed)
  int iterations = 0;
};

/// Dominant (largest-magnitude) eigenvalue of a symmetric operator given
/// through matrix-vector products, by Lanczos iteration with full
/// reorthogonalization. Plain power iteration stalls on these spectra: a
/// sample Gram matrix has its top eigenvalues clustered within a fraction of
/// a percent, far too close to separate in the iteration budget. The start
/// vector is a fixed seeded Gaussian draw, so results are reproducible.
/// Converges when the Ritz residual drops below rel_tolerance * |estimate|
/// (always, once the Krylov space spans the full dimension); throws
/// EstimationError carrying the best estimate if max_iterations matvecs are
/// spent first.
SpectralEstimate dominant_eigenvalue(
    const std::function<Vector(const Vector&)>& op, Index dim,
    double rel_tolerance, int max_iterations);

/// Materializes the Hessian of `f` at w column by column via hessian_vec.
/// Intended for audits and tests at small p.
Matrix dense_hessian(const Objective& f, const Vector& w);

}  // namespace dane

#endif  // DANE_MODEL_HPP
