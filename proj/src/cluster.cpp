#include "dane/cluster.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace dane {
namespace {

std::vector<Index> union_rows(const std::vector<Partition>& parts) {
  std::vector<Index> rows;
  for (const auto& p : parts)
    rows.insert(rows.end(), p.sample_indices.begin(), p.sample_indices.end());
  std::sort(rows.begin(), rows.end());
  return rows;
}

void validate_partitions(const std::vector<Partition>& parts, Index n_rows) {
  if (parts.empty()) throw ContractError("cluster needs at least one machine");
  const std::size_t share = parts.front().sample_indices.size();
  if (share == 0) throw ContractError("empty partition");
  std::unordered_set<Index> seen;
  for (const auto& p : parts) {
    if (p.sample_indices.size() != share)
      throw ContractError("partitions must have equal sizes");
    for (Index i : p.sample_indices) {
      if (i < 0 || i >= n_rows)
        throw ContractError("partition index out of range");
      if (!seen.insert(i).second)
        throw ContractError("partitions must be disjoint");
    }
  }
}

}  // namespace

Cluster::Cluster(std::shared_ptr<const LabeledDataset> data, LossModel model,
                 std::vector<Partition> partitions)
    : data_(std::move(data)),
      model_(model),
      partitions_(std::move(partitions)),
      ledger_(std::make_shared<CommunicationLedger>()) {
  data_->validate();
  validate_partitions(partitions_, data_->sample_count());
  build_objectives();
}

void Cluster::build_objectives() {
  locals_.clear();
  if (kind_ == Kind::kErm) {
    for (const auto& p : partitions_)
      locals_.push_back(
          std::make_unique<ErmObjective>(data_.get(), model_,
                                         p.sample_indices));
    global_ = std::make_unique<ErmObjective>(data_.get(), model_,
                                             union_rows(partitions_));
  } else {
    for (const auto& p : partitions_)
      locals_.push_back(std::make_unique<QuadraticSurrogate>(
          data_.get(), p.sample_indices, sur_anchor_, sur_linear_grad_,
          sur_base_value_, sur_ell_, model_.reg_mu));
    global_ = std::make_unique<QuadraticSurrogate>(
        data_.get(), union_rows(partitions_), sur_anchor_, sur_linear_grad_,
        sur_base_value_, sur_ell_, model_.reg_mu);
  }
}

Cluster Cluster::clone_for_run() const {
  Cluster out;
  out.kind_ = kind_;
  out.data_ = data_;
  out.model_ = model_;
  out.partitions_ = partitions_;
  out.sur_anchor_ = sur_anchor_;
  out.sur_linear_grad_ = sur_linear_grad_;
  out.sur_base_value_ = sur_base_value_;
  out.sur_ell_ = sur_ell_;
  out.ledger_ = std::make_shared<CommunicationLedger>();
  out.build_objectives();
  return out;
}

Cluster Cluster::make_surrogate_cluster(const Vector& anchor, double ell,
                                        const Vector& grad_at_anchor) const {
  Cluster out;
  out.kind_ = Kind::kSurrogate;
  out.data_ = data_;
  out.model_ = model_;
  out.partitions_ = partitions_;
  out.sur_anchor_ = anchor;
  out.sur_linear_grad_ = grad_at_anchor - model_.reg_mu * anchor;
  out.sur_base_value_ =
      global_->value(anchor) - 0.5 * model_.reg_mu * anchor.squaredNorm();
  out.sur_ell_ = ell;
  out.ledger_ = ledger_;
  out.build_objectives();
  return out;
}

Vector Cluster::reduce_gradient(const Vector& w) {
  Vector acc = Vector::Zero(dim());
  for (const auto& local : locals_) acc += local->gradient(w);
  acc /= static_cast<double>(machine_count());

  ledger_->rounds += 1;
  ledger_->vectors_transmitted += machine_count() + 1;
  ledger_->ifo_calls +=
      static_cast<std::int64_t>(machine_count()) * local_sample_count();
  return acc;
}

double Cluster::reduce_value(const Vector& w) {
  double acc = 0;
  for (const auto& local : locals_) acc += local->value(w);
  acc /= static_cast<double>(machine_count());

  ledger_->rounds += 1;
  ledger_->scalars_transmitted += machine_count();
  ledger_->vectors_transmitted += 1;
  ledger_->ifo_calls +=
      static_cast<std::int64_t>(machine_count()) * local_sample_count();
  return acc;
}

void Cluster::charge_model_average_round() {
  if (machine_count() == 1) return;
  ledger_->rounds += 1;
  ledger_->vectors_transmitted += machine_count() + 1;
}

double Cluster::hessian_deviation(const Vector& w) const {
  if (w.size() != dim())
    throw ContractError("hessian_deviation: dimension mismatch");
  const Objective& local = *locals_.front();
  const Objective& global = *global_;
  if (dim() <= 256) {
    Matrix diff = dense_hessian(local, w) - dense_hessian(global, w);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(diff,
                                              Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
  }
  auto op = [&](const Vector& v) {
    return Vector(local.hessian_vec(w, v) - global.hessian_vec(w, v));
  };
  return std::abs(dominant_eigenvalue(op, dim(), 1e-6, 5000).eigenvalue);
}

}  // namespace dane
