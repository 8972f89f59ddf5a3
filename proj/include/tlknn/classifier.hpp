#pragma once

// Pooled-sample k-NN transfer classifier, the oracle choice of k, rate
// exponents, and the implicit-1-NN batch construction.

#include <cstdint>
#include <span>
#include <vector>

#include "tlknn/core.hpp"
#include "tlknn/synth.hpp"

namespace tlknn {

/// k-NN over source followed by labelled target, in pooled index order.
class PooledModel {
 public:
  PooledModel(NnIndex index, std::vector<Label> labels, std::size_t n_source,
              std::size_t n_target);

  std::size_t size() const { return labels_.size(); }
  std::size_t n_source() const { return n_source_; }
  std::size_t n_target() const { return n_target_; }
  const NnIndex& index() const { return index_; }
  std::span<const Label> labels() const { return labels_; }

  /// Mean label of the k nearest pooled points. Requires 1 <= k <= size().
  double eta_hat(std::span<const double> x, std::size_t k) const;

  /// 1 iff eta_hat >= 1/2.
  Label predict(std::span<const double> x, std::size_t k) const;

 private:
  NnIndex index_;
  std::vector<Label> labels_;
  std::size_t n_source_;
  std::size_t n_target_;
};

/// Rejects samples with unlabelled target points and empty samples.
PooledModel fit_pooled(const TransferSample& sample,
                       NnBackend backend = NnBackend::kd_tree);

struct RateSpec {
  FamilyParams params;

  explicit RateSpec(const FamilyParams& p);

  /// 2 + d/alpha (DM) or 2 + beta + d/alpha (BCN).
  double d0() const;
};

/// ceil((n_P^{d0/(d0 + gamma/alpha)} + n_Q)^{2/d0}) clamped to [1, n_P + n_Q].
/// For gamma = inf the source term is 1.
std::size_t optimal_k(std::size_t n_source, std::size_t n_target, const RateSpec& spec);

enum class RateRegime { source_dominated, target_dominated };

double rate_exponent(const RateSpec& spec, RateRegime which);

struct BatchPartition {
  std::size_t k = 0;
  std::size_t n_source = 0;
  std::size_t n_target = 0;
  std::vector<std::vector<std::size_t>> batches;  // pooled indices
};

/// k disjoint batches, each with floor(n_P/k) source and floor(n_Q/k) target
/// indices drawn without replacement.
BatchPartition make_batch_partition(std::size_t n_source, std::size_t n_target,
                                    std::size_t k, std::uint64_t seed);

/// Compares sum_{i<=k} rho(X_(i), x)^alpha for the true k-NN with the same sum
/// over per-batch nearest neighbours. Always true; exposed as a diagnostic.
bool check_bias_lemma(const PooledModel& model, const BatchPartition& partition,
                      std::span<const double> x, double alpha);

}  // namespace tlknn
