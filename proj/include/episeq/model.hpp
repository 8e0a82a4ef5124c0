#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "episeq/distributions.hpp"
#include "episeq/episode.hpp"
#include "episeq/submodels.hpp"

namespace episeq {

// Selects which likelihood factors participate in a computation. Training can
// exclude scalar factors; inference conditions on stream subsets.
struct FactorMask {
  bool age = true;
  bool sex = true;
  bool death = true;
  std::array<bool, kNumStreams> streams = {true, true, true, true, true, true};

  static FactorMask all() { return {}; }
  static FactorMask none() {
    FactorMask m;
    m.age = m.sex = m.death = false;
    m.streams.fill(false);
    return m;
  }
};

// Layered mixture over whole episodes: a top categorical state drives the
// scalar distributions and, through one mixing row per stream, the sub-model
// state of each stream. Admission and discharge diagnoses share dx_pool.
struct EpisodeModel {
  VocabularySet vocab;
  CategoricalDist top_weights{CategoricalDist::uniform(1)};
  std::vector<QuantizedGaussianDist> age;
  std::vector<BernoulliDist> sex;
  std::vector<BernoulliDist> death;
  // mixing[stream][z] is a categorical over that stream's sub-model states.
  std::array<std::vector<CategoricalDist>, kNumStreams> mixing;
  CollectionModel dx_pool;
  MarkovSeqModel beds;
  std::array<HmmSeqModel, kNumHmmStreams> hmm;  // labs, neuro, meds

  int n_top() const { return top_weights.size(); }
  int n_states(Stream s) const;
  Hyperparams hyperparams() const;
  const std::vector<CategoricalDist>& mixing_for(Stream s) const {
    return mixing[static_cast<std::size_t>(static_cast<int>(s))];
  }
  void validate() const;

  // Log-likelihood of one stream's data under every sub-model state.
  std::vector<double> stream_state_log_liks(const Episode& ep, Stream s) const;

  double episode_log_lik_given_top(const Episode& ep, int z,
                                   const FactorMask& mask = FactorMask::all()) const;
  double episode_log_lik(const Episode& ep,
                         const FactorMask& mask = FactorMask::all()) const;

  // Posterior over top states given the masked factors.
  std::vector<double> top_posterior(const Episode& ep,
                                    const FactorMask& mask = FactorMask::all()) const;
};

// A uniform, weakly informative model of the given shape; also the fallback
// parameter source for states that never receive weight.
EpisodeModel uniform_model(const Hyperparams& hp, const VocabularySet& vocab,
                           int age_min, int age_max);

// ---------------------------------------------------------------------------
// E-step quantities for a single episode.

struct Responsibilities {
  double log_lik = 0.0;
  std::vector<double> gamma;  // over top states
  // joint[stream][z][z_x], rows sum to gamma[z].
  std::array<std::vector<std::vector<double>>, kNumStreams> joint;
  // Per HMM stream, one smoothed posterior per sub-model state.
  std::array<std::vector<HmmPosterior>, kNumHmmStreams> hmm;
};

Responsibilities e_step(const EpisodeModel& model, const Episode& ep,
                        const FactorMask& mask = FactorMask::all());

// Merged accumulators for everything the M-step re-estimates.
struct ModelStats {
  CategoricalStats top;
  std::vector<QGaussStats> age;
  std::vector<BernoulliStats> sex;
  std::vector<BernoulliStats> death;
  std::array<std::vector<CategoricalStats>, kNumStreams> mixing;
  std::vector<CollectionStats> dx_pool;
  std::vector<MarkovSeqStats> beds;
  std::array<std::vector<HmmSeqStateStats>, kNumHmmStreams> hmm_states;
  std::array<HmmEmissionStats, kNumHmmStreams> hmm_emission;
  double log_lik = 0.0;
  std::uint64_t episodes = 0;

  ModelStats() = default;
  ModelStats(const Hyperparams& hp, const VocabularySet& vocab);
  void merge(const ModelStats& o);
};

// Runs the E-step for one episode and adds its expected counts; returns the
// episode log-likelihood that was accumulated.
double accumulate_episode(const EpisodeModel& model, const Episode& ep,
                          ModelStats& stats, const FactorMask& mask = FactorMask::all());

// Weighted MLE across all tables. States with zero accumulated weight keep
// their parameters from `previous`.
EpisodeModel m_step(const ModelStats& stats, const EpisodeModel& previous);

// ---------------------------------------------------------------------------
// Fit driver.

struct FitConfig {
  std::uint64_t seed = 0;
  int max_iters = 200;
  double rel_tol = 1e-6;
  int restarts = 1;
  int threads = 1;
  int age_min = 0;
  int age_max = 120;
  // Scalar factors included in the training likelihood. Parameters of
  // excluded scalars are still re-estimated from responsibilities.
  bool use_age = true;
  bool use_sex = true;
  bool use_death = true;
};

struct FitReport {
  std::vector<double> log_lik_trace;  // one entry per E-step, best restart
  int iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
};

std::pair<EpisodeModel, FitReport> fit(const std::vector<Episode>& data,
                                       const Hyperparams& hp,
                                       const VocabularySet& vocab,
                                       const FitConfig& cfg);

// Total data log-likelihood, reduced blockwise so the result does not depend
// on the thread count.
double total_log_lik(const EpisodeModel& model, const std::vector<Episode>& data,
                     int threads = 1);

// Reorders top states by descending weight (ties keep original order) and
// permutes every per-top-state table consistently. Returns the permutation:
// entry k is the old index now stored at k.
std::vector<int> sort_top_states_by_weight(EpisodeModel& model);

// ---------------------------------------------------------------------------
// Parameter counting and BIC.

struct VocabSizes {
  int beds = 0;
  int dx = 0;
  int labs = 0;
  int neuro = 0;
  int meds = 0;
};

// Shared counts the diagnosis pool once and each emission table once;
// PaperTable counts collections per stream and emission items per mixture
// state, reproducing the published closed forms.
enum class CountConvention { Shared, PaperTable };

std::int64_t param_count(const Hyperparams& hp, const VocabSizes& sizes,
                         CountConvention convention);

// d * ln(n) - 2 * log_lik.
double bic_value(std::int64_t d, std::size_t n, double log_lik);

double bic(const EpisodeModel& model, const std::vector<Episode>& data,
           CountConvention convention = CountConvention::Shared, int threads = 1);

// ---------------------------------------------------------------------------
// Generative sampling.

struct LatentTrace {
  int top = 0;
  std::array<int, kNumStreams> sub = {0, 0, 0, 0, 0, 0};
  std::array<std::vector<int>, kNumHmmStreams> hmm_path;
};

std::pair<Episode, LatentTrace> sample_episode(const EpisodeModel& model, Rng& rng);

// Deterministic in (model, n, seed): episode i is drawn from its own derived
// stream, so generation parallelizes without changing output.
std::pair<std::vector<Episode>, std::vector<LatentTrace>> sample_corpus(
    const EpisodeModel& model, std::size_t n, std::uint64_t seed, int threads = 1);

}  // namespace episeq
