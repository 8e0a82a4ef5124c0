#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "episeq/rng.hpp"

namespace episeq {

// Smoothing pseudo-count added to every categorical cell during re-estimation
// so no probability collapses to an exact zero.
inline constexpr double kCategoricalSmoothing = 1e-6;

// Finite categorical over ids 0..size-1. Stores linear probabilities as the
// canonical representation and caches their logs; serialization round-trips
// the linear values bit-for-bit, so log-likelihoods are stable across
// save/load.
class CategoricalDist {
 public:
  // Normalizes. Entries must be finite, strictly positive, with a positive sum.
  explicit CategoricalDist(std::vector<double> probs);

  // Trusts the caller's normalization (sum must be within 1e-9 of one) and
  // keeps the values untouched. Used when loading serialized models.
  static CategoricalDist from_normalized(std::vector<double> probs);

  static CategoricalDist uniform(int n);

  int size() const { return static_cast<int>(probs_.size()); }
  double prob(int i) const { return probs_[static_cast<std::size_t>(i)]; }
  double log_prob(int i) const { return log_probs_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& probs() const { return probs_; }
  const std::vector<double>& log_probs() const { return log_probs_; }

  int sample(Rng& rng) const;

 private:
  CategoricalDist() = default;
  void fill_logs();

  std::vector<double> probs_;
  std::vector<double> log_probs_;
};

class PoissonDist {
 public:
  static constexpr double kRateFloor = 1e-6;

  explicit PoissonDist(double rate);

  double rate() const { return rate_; }
  // k * ln(rate) - rate - ln(k!); finite for any k >= 0 that fits the type.
  double log_pmf(std::int64_t k) const;
  std::int64_t sample(Rng& rng) const;

 private:
  double rate_;
  double log_rate_;
};

class BernoulliDist {
 public:
  // p is the probability of outcome 1; clamped away from {0,1} by the fit,
  // but the constructor accepts the exact endpoints.
  explicit BernoulliDist(double p);

  double p() const { return p_; }
  double log_pmf(int value) const;
  int sample(Rng& rng) const { return uniform01(rng) < p_ ? 1 : 0; }

 private:
  double p_;
};

// Gaussian evaluated on consecutive integers and renormalized over a closed
// support interval. Used for ages.
class QuantizedGaussianDist {
 public:
  static constexpr double kVarianceFloor = 0.25;

  QuantizedGaussianDist(double mean, double variance, int support_min,
                        int support_max);

  double mean() const { return mean_; }
  double variance() const { return variance_; }
  int support_min() const { return support_min_; }
  int support_max() const { return support_max_; }
  // log of the sum of unnormalized Gaussian densities over the support.
  double log_normalizer() const { return log_normalizer_; }

  double log_pmf(int a) const;  // throws OutOfSupportError outside the support
  int sample(Rng& rng) const;

 private:
  double mean_;
  double variance_;
  int support_min_;
  int support_max_;
  double log_normalizer_;
  std::vector<double> cdf_;  // cumulative pmf cached for sampling
};

// First-order Markov chain over item ids: initial distribution plus one
// transition row per item.
class MarkovChainDist {
 public:
  MarkovChainDist(CategoricalDist initial, std::vector<CategoricalDist> rows);

  int n_items() const { return initial_.size(); }
  const CategoricalDist& initial() const { return initial_; }
  const CategoricalDist& row(int i) const { return rows_[static_cast<std::size_t>(i)]; }
  double log_initial(int i) const { return initial_.log_prob(i); }
  double log_transition(int i, int j) const { return rows_[static_cast<std::size_t>(i)].log_prob(j); }

  // Chain term only (no length model). Throws EmptySequenceError on length 0
  // and UnknownTokenError on out-of-range ids.
  double log_likelihood(std::span<const int> seq) const;
  std::vector<int> sample_path(int length, Rng& rng) const;

  static MarkovChainDist uniform(int n_items);

 private:
  CategoricalDist initial_;
  std::vector<CategoricalDist> rows_;
};

// ---------------------------------------------------------------------------
// Weighted sufficient statistics. Each accumulator supports add + merge, and
// merges are associative, so block-wise parallel reduction gives the same
// bits as a serial pass.

struct CategoricalStats {
  std::vector<double> weight;
  double total = 0.0;

  explicit CategoricalStats(int n = 0) : weight(static_cast<std::size_t>(n), 0.0) {}
  void add(int i, double w) {
    weight[static_cast<std::size_t>(i)] += w;
    total += w;
  }
  void merge(const CategoricalStats& o);
};

struct PoissonStats {
  double weight = 0.0;
  double value = 0.0;

  void add(double k, double w) {
    weight += w;
    value += w * k;
  }
  void merge(const PoissonStats& o) {
    weight += o.weight;
    value += o.value;
  }
};

struct BernoulliStats {
  double weight = 0.0;
  double ones = 0.0;

  void add(int v, double w) {
    weight += w;
    if (v) ones += w;
  }
  void merge(const BernoulliStats& o) {
    weight += o.weight;
    ones += o.ones;
  }
};

struct QGaussStats {
  double weight = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(int a, double w) {
    double x = static_cast<double>(a);
    weight += w;
    sum += w * x;
    sum_sq += w * x * x;
  }
  void merge(const QGaussStats& o) {
    weight += o.weight;
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
};

struct MarkovChainStats {
  CategoricalStats initial;
  std::vector<CategoricalStats> rows;

  explicit MarkovChainStats(int n = 0)
      : initial(n), rows(static_cast<std::size_t>(n), CategoricalStats(n)) {}
  void add_path(std::span<const int> seq, double w);
  void merge(const MarkovChainStats& o);
};

// ---------------------------------------------------------------------------
// Weighted maximum-likelihood re-estimation. All throw ZeroWeightError when
// the accumulated weight is zero; callers treat that state as dead and keep
// its previous parameters.

CategoricalDist fit_categorical(const CategoricalStats& stats,
                                double smoothing = kCategoricalSmoothing);
PoissonDist fit_poisson(const PoissonStats& stats);
BernoulliDist fit_bernoulli(const BernoulliStats& stats);
QuantizedGaussianDist fit_qgauss(const QGaussStats& stats, int support_min,
                                 int support_max);
// Rows that saw no weight keep the corresponding row of `previous`.
MarkovChainDist fit_markov(const MarkovChainStats& stats,
                           const MarkovChainDist& previous,
                           double smoothing = kCategoricalSmoothing);

}  // namespace episeq
