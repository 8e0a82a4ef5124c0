#include "episeq/distributions.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "episeq/errors.hpp"
#include "episeq/numeric.hpp"

namespace episeq {

namespace {

constexpr double kHalfLogTwoPi = 0.9189385332046727417803297364;  // ln(2*pi)/2

}  // namespace

// --------------------------------------------------------------------------
// CategoricalDist

CategoricalDist::CategoricalDist(std::vector<double> probs) {
  if (probs.empty())
    throw SchemaViolationError("categorical distribution needs at least one entry");
  double total = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p <= 0.0)
      throw SchemaViolationError(
          "categorical entries must be finite and strictly positive, got " +
          std::to_string(p));
    total += p;
  }
  for (double& p : probs) p /= total;
  probs_ = std::move(probs);
  fill_logs();
}

CategoricalDist CategoricalDist::from_normalized(std::vector<double> probs) {
  if (probs.empty())
    throw SchemaViolationError("categorical distribution needs at least one entry");
  double total = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p <= 0.0)
      throw SchemaViolationError("categorical entries must be finite and strictly positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw SchemaViolationError("categorical entries sum to " + std::to_string(total) +
                               ", expected 1 within 1e-9");
  CategoricalDist d;
  d.probs_ = std::move(probs);
  d.fill_logs();
  return d;
}

CategoricalDist CategoricalDist::uniform(int n) {
  return CategoricalDist(std::vector<double>(static_cast<std::size_t>(n), 1.0));
}

void CategoricalDist::fill_logs() {
  log_probs_.resize(probs_.size());
  for (std::size_t i = 0; i < probs_.size(); ++i) log_probs_[i] = std::log(probs_[i]);
}

int CategoricalDist::sample(Rng& rng) const {
  double u = uniform01(rng);
  double c = 0.0;
  int last = size() - 1;
  for (int i = 0; i < last; ++i) {
    c += probs_[static_cast<std::size_t>(i)];
    if (u < c) return i;
  }
  return last;
}

// --------------------------------------------------------------------------
// PoissonDist

PoissonDist::PoissonDist(double rate) : rate_(rate) {
  if (!std::isfinite(rate) || rate < kRateFloor)
    throw SchemaViolationError("poisson rate must be finite and >= " +
                               std::to_string(kRateFloor));
  log_rate_ = std::log(rate_);
}

double PoissonDist::log_pmf(std::int64_t k) const {
  if (k < 0) throw OutOfSupportError("poisson count must be non-negative");
  return static_cast<double>(k) * log_rate_ - rate_ -
         std::lgamma(static_cast<double>(k) + 1.0);
}

std::int64_t PoissonDist::sample(Rng& rng) const {
  // Knuth's product method, applied in chunks so exp(-rate) never underflows.
  std::int64_t k = 0;
  double remaining = rate_;
  constexpr double kChunk = 30.0;
  for (;;) {
    double r = remaining > kChunk ? kChunk : remaining;
    double limit = std::exp(-r);
    double prod = 1.0;
    for (;;) {
      prod *= 1.0 - uniform01(rng);
      if (prod <= limit) break;
      ++k;
    }
    if (remaining <= kChunk) break;
    remaining -= kChunk;
  }
  return k;
}

// --------------------------------------------------------------------------
// BernoulliDist

BernoulliDist::BernoulliDist(double p) : p_(p) {
  if (!std::isfinite(p) || p < 0.0 || p > 1.0)
    throw SchemaViolationError("bernoulli parameter must lie in [0, 1]");
}

double BernoulliDist::log_pmf(int value) const {
  if (value != 0 && value != 1)
    throw OutOfSupportError("bernoulli outcome must be 0 or 1, got " +
                            std::to_string(value));
  return value ? std::log(p_) : std::log1p(-p_);
}

// --------------------------------------------------------------------------
// QuantizedGaussianDist

QuantizedGaussianDist::QuantizedGaussianDist(double mean, double variance,
                                             int support_min, int support_max)
    : mean_(mean),
      variance_(variance),
      support_min_(support_min),
      support_max_(support_max) {
  if (support_max < support_min)
    throw SchemaViolationError("quantized gaussian support is empty");
  if (!std::isfinite(mean))
    throw SchemaViolationError("quantized gaussian mean must be finite");
  if (!std::isfinite(variance) || variance <= 0.0)
    throw SchemaViolationError("quantized gaussian variance must be positive");

  std::size_t n = static_cast<std::size_t>(support_max - support_min) + 1;
  std::vector<double> log_dens(n);
  double inv_two_var = 1.0 / (2.0 * variance_);
  for (std::size_t i = 0; i < n; ++i) {
    double d = mean_ - static_cast<double>(support_min_ + static_cast<int>(i));
    log_dens[i] = -d * d * inv_two_var;
  }
  double half_log_var = 0.5 * std::log(variance_);
  // Sum of full densities, 1/sqrt(2*pi*var) factor included.
  log_normalizer_ = log_sum_exp(log_dens) - kHalfLogTwoPi - half_log_var;

  cdf_.resize(n);
  double acc = 0.0;
  double log_z = log_sum_exp(log_dens);
  for (std::size_t i = 0; i < n; ++i) {
    acc += std::exp(log_dens[i] - log_z);
    cdf_[i] = acc;
  }
}

double QuantizedGaussianDist::log_pmf(int a) const {
  if (a < support_min_ || a > support_max_)
    throw OutOfSupportError("value " + std::to_string(a) + " outside support [" +
                            std::to_string(support_min_) + ", " +
                            std::to_string(support_max_) + "]");
  double d = mean_ - static_cast<double>(a);
  return -d * d / (2.0 * variance_) - log_normalizer_ - kHalfLogTwoPi -
         0.5 * std::log(variance_);
}

int QuantizedGaussianDist::sample(Rng& rng) const {
  double u = uniform01(rng);
  // cdf_ is short (support is an age range), linear scan is fine.
  for (std::size_t i = 0; i + 1 < cdf_.size(); ++i)
    if (u < cdf_[i]) return support_min_ + static_cast<int>(i);
  return support_max_;
}

// --------------------------------------------------------------------------
// MarkovChainDist

MarkovChainDist::MarkovChainDist(CategoricalDist initial,
                                 std::vector<CategoricalDist> rows)
    : initial_(std::move(initial)), rows_(std::move(rows)) {
  if (rows_.size() != static_cast<std::size_t>(initial_.size()))
    throw SchemaViolationError("markov chain needs one transition row per item");
  for (const auto& r : rows_)
    if (r.size() != initial_.size())
      throw SchemaViolationError("markov transition rows must match item count");
}

MarkovChainDist MarkovChainDist::uniform(int n_items) {
  return MarkovChainDist(
      CategoricalDist::uniform(n_items),
      std::vector<CategoricalDist>(static_cast<std::size_t>(n_items),
                                   CategoricalDist::uniform(n_items)));
}

double MarkovChainDist::log_likelihood(std::span<const int> seq) const {
  if (seq.empty())
    throw EmptySequenceError("markov chain cannot score an empty sequence");
  int n = n_items();
  for (int id : seq)
    if (id < 0 || id >= n)
      throw UnknownTokenError("item id " + std::to_string(id) +
                              " outside chain of " + std::to_string(n) + " items");
  double ll = initial_.log_prob(seq[0]);
  for (std::size_t i = 1; i < seq.size(); ++i)
    ll += log_transition(seq[i - 1], seq[i]);
  return ll;
}

std::vector<int> MarkovChainDist::sample_path(int length, Rng& rng) const {
  std::vector<int> path;
  if (length <= 0) return path;
  path.reserve(static_cast<std::size_t>(length));
  int s = initial_.sample(rng);
  path.push_back(s);
  for (int i = 1; i < length; ++i) {
    s = rows_[static_cast<std::size_t>(s)].sample(rng);
    path.push_back(s);
  }
  return path;
}

// --------------------------------------------------------------------------
// Stats

void CategoricalStats::merge(const CategoricalStats& o) {
  if (weight.size() != o.weight.size())
    throw SchemaViolationError("cannot merge categorical stats of different sizes");
  for (std::size_t i = 0; i < weight.size(); ++i) weight[i] += o.weight[i];
  total += o.total;
}

void MarkovChainStats::add_path(std::span<const int> seq, double w) {
  if (seq.empty()) return;
  initial.add(seq[0], w);
  for (std::size_t i = 1; i < seq.size(); ++i)
    rows[static_cast<std::size_t>(seq[i - 1])].add(seq[i], w);
}

void MarkovChainStats::merge(const MarkovChainStats& o) {
  initial.merge(o.initial);
  if (rows.size() != o.rows.size())
    throw SchemaViolationError("cannot merge markov stats of different sizes");
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].merge(o.rows[i]);
}

// --------------------------------------------------------------------------
// Weighted MLE

CategoricalDist fit_categorical(const CategoricalStats& stats, double smoothing) {
  if (stats.total <= 0.0)
    throw ZeroWeightError("categorical update received zero total weight");
  std::vector<double> p(stats.weight.size());
  double denom = stats.total + smoothing * static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    p[i] = (stats.weight[i] + smoothing) / denom;
  return CategoricalDist(std::move(p));
}

PoissonDist fit_poisson(const PoissonStats& stats) {
  if (stats.weight <= 0.0)
    throw ZeroWeightError("poisson update received zero total weight");
  double rate = stats.value / stats.weight;
  if (rate < PoissonDist::kRateFloor) rate = PoissonDist::kRateFloor;
  return PoissonDist(rate);
}

BernoulliDist fit_bernoulli(const BernoulliStats& stats) {
  if (stats.weight <= 0.0)
    throw ZeroWeightError("bernoulli update received zero total weight");
  double p = stats.ones / stats.weight;
  constexpr double kClamp = 1e-9;
  if (p < kClamp) p = kClamp;
  if (p > 1.0 - kClamp) p = 1.0 - kClamp;
  return BernoulliDist(p);
}

QuantizedGaussianDist fit_qgauss(const QGaussStats& stats, int support_min,
                                 int support_max) {
  if (stats.weight <= 0.0)
    throw ZeroWeightError("quantized gaussian update received zero total weight");
  double mean = stats.sum / stats.weight;
  double var = stats.sum_sq / stats.weight - mean * mean;
  if (var < QuantizedGaussianDist::kVarianceFloor)
    var = QuantizedGaussianDist::kVarianceFloor;
  return QuantizedGaussianDist(mean, var, support_min, support_max);
}

MarkovChainDist fit_markov(const MarkovChainStats& stats,
                           const MarkovChainDist& previous, double smoothing) {
  if (stats.rows.size() != static_cast<std::size_t>(previous.n_items()))
    throw SchemaViolationError("markov stats do not match the previous chain");
  CategoricalDist init = stats.initial.total > 0.0
                             ? fit_categorical(stats.initial, smoothing)
                             : previous.initial();
  std::vector<CategoricalDist> rows;
  rows.reserve(stats.rows.size());
  for (std::size_t i = 0; i < stats.rows.size(); ++i) {
    rows.push_back(stats.rows[i].total > 0.0
                       ? fit_categorical(stats.rows[i], smoothing)
                       : previous.row(static_cast<int>(i)));
  }
  return MarkovChainDist(std::move(init), std::move(rows));
}

}  // namespace episeq
