#ifndef DANE_CLUSTER_HPP
#define DANE_CLUSTER_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "dane/data_io.hpp"
#include "dane/model.hpp"

namespace dane {

/// Running totals of everything the simulated cluster spends. A round is one
/// synchronized master/worker exchange; vectors and scalars count transmitted
/// payloads of dimension p and 1; an IFO call is one per-sample first-order
/// evaluation. Counters only ever increase.
struct CommunicationLedger {
  std::int64_t rounds = 0;
  std::int64_t vectors_transmitted = 0;
  std::int64_t scalars_transmitted = 0;
  std::int64_t ifo_calls = 0;
};

/// View of an objective that bills per-sample oracle work to a ledger:
/// a full value or gradient evaluation costs one IFO call per local sample,
/// a single-sample gradient costs one. Hessian-vector products are
/// second-order and outside the IFO model, so they are not billed.
class ChargedObjective final : public Objective {
 public:
  ChargedObjective(const Objective* inner, CommunicationLedger* ledger)
      : inner_(inner), ledger_(ledger) {}

  Index dim() const override { return inner_->dim(); }
  Index samples() const override { return inner_->samples(); }
  double value(const Vector& w) const override {
    ledger_->ifo_calls += samples();
    return inner_->value(w);
  }
  Vector gradient(const Vector& w) const override {
    ledger_->ifo_calls += samples();
    return inner_->gradient(w);
  }
  Vector hessian_vec(const Vector& w, const Vector& v) const override {
    return inner_->hessian_vec(w, v);
  }
  void add_sample_gradient(Index k, const Vector& w, double scale,
                           Vector& out) const override {
    ledger_->ifo_calls += 1;
    inner_->add_sample_gradient(k, w, scale, out);
  }
  bool constant_hessian() const override { return inner_->constant_hessian(); }

 private:
  const Objective* inner_;
  CommunicationLedger* ledger_;
};

/// Single-process simulation of m machines holding disjoint data shares,
/// with the first partition acting as the master. All reductions run in
/// ascending machine order so transcripts are reproducible. Not safe for
/// concurrent runs; clone per run.
class Cluster {
 public:
  Cluster(std::shared_ptr<const LabeledDataset> data, LossModel model,
          std::vector<Partition> partitions);

  /// Fresh ledger, shared immutable data.
  Cluster clone_for_run() const;

  /// Cluster over the quadratic models Q_j of each machine's share, anchored
  /// at `anchor`. Shares this cluster's ledger, so inner-loop communication
  /// lands in the same accounts. `grad_at_anchor` is the already-reduced
  /// global gradient at the anchor; the surrogate's constant term is filled
  /// in from an unbilled local evaluation since no iterate depends on it.
  Cluster make_surrogate_cluster(const Vector& anchor, double ell,
                                 const Vector& grad_at_anchor) const;

  int machine_count() const { return static_cast<int>(partitions_.size()); }
  Index local_sample_count() const {
    return static_cast<Index>(partitions_.front().sample_indices.size());
  }
  Index dim() const { return data_->feature_dim(); }
  bool quadratic() const { return global_->constant_hessian(); }

  /// One gradient round: every machine evaluates its local gradient at w,
  /// the master averages in ascending machine order. Charges 1 round,
  /// m vectors up + 1 vector down, and n IFO calls per machine.
  Vector reduce_gradient(const Vector& w);

  /// One value round: machines report local objective values, the master
  /// averages. Charges 1 round, m scalars up + 1 broadcast vector (the
  /// candidate point), and n IFO calls per machine.
  double reduce_value(const Vector& w);

  /// One model-averaging round (m models up, average down). Free at m = 1:
  /// a single machine exchanges nothing. Charges 1 round + m+1 vectors.
  void charge_model_average_round();

  /// Adds locally spent oracle work (e.g. an inner solver's bill).
  void charge_local_ifo(std::int64_t calls) { ledger_->ifo_calls += calls; }

  /// The master's local objective with IFO billing.
  ChargedObjective master_local_view() {
    return ChargedObjective(locals_.front().get(), ledger_.get());
  }
  /// Unbilled access for solver internals and diagnostics.
  const Objective& master_local_raw() const { return *locals_.front(); }
  const Objective& worker_raw(int machine) const {
    return *locals_[static_cast<std::size_t>(machine)];
  }
  /// Serial objective over the union of all shares; used for transcript
  /// diagnostics and test oracles, never billed.
  const Objective& global_view() const { return *global_; }

  /// Spectral norm of (local master Hessian - global Hessian) at w.
  /// Dense eigendecomposition up to p = 256, power iteration on the
  /// difference operator beyond that (relative tolerance 1e-6).
  double hessian_deviation(const Vector& w) const;

  const CommunicationLedger& ledger() const { return *ledger_; }
  const std::vector<Partition>& partitions() const { return partitions_; }
  const LabeledDataset& data() const { return *data_; }
  const LossModel& model() const { return model_; }

 private:
  enum class Kind { kErm, kSurrogate };

  Cluster() = default;
  void build_objectives();

  Kind kind_ = Kind::kErm;
  std::shared_ptr<const LabeledDataset> data_;
  LossModel model_;
  std::vector<Partition> partitions_;
  // surrogate parameters, meaningful when kind_ == kSurrogate
  Vector sur_anchor_;
  Vector sur_linear_grad_;
  double sur_base_value_ = 0;
  double sur_ell_ = 0;

  std::vector<std::unique_ptr<Objective>> locals_;
  std::unique_ptr<Objective> global_;
  std::shared_ptr<CommunicationLedger> ledger_;
};

}  // namespace dane

#endif  // DANE_CLUSTER_HPP
