#pragma once

#include <span>
#include <vector>

#include "episeq/distributions.hpp"
#include "episeq/rng.hpp"

namespace episeq {

// ---------------------------------------------------------------------------
// Collections: a Poisson size and iid categorical items, order irrelevant.

struct CollectionState {
  PoissonDist length;
  CategoricalDist items;
};

struct CollectionModel {
  std::vector<CollectionState> states;

  int n_states() const { return static_cast<int>(states.size()); }
  int vocab_size() const { return states.empty() ? 0 : states[0].items.size(); }
};

double collection_log_lik(std::span<const int> items, const CollectionState& state);

// ---------------------------------------------------------------------------
// Markov sequences: a Poisson length and an observed-item chain.

struct MarkovSeqState {
  PoissonDist length;
  MarkovChainDist chain;
};

struct MarkovSeqModel {
  std::vector<MarkovSeqState> states;

  int n_states() const { return static_cast<int>(states.size()); }
  int vocab_size() const { return states.empty() ? 0 : states[0].chain.n_items(); }
};

// Poisson length term plus the chain term; empty sequences carry only the
// length term.
double mseq_log_lik(std::span<const int> seq, const MarkovSeqState& state);

// ---------------------------------------------------------------------------
// Hidden-state sequences: a Poisson number of timepoints, a Markov chain over
// hidden states, and per hidden state a Poisson item count with iid
// categorical items. The emission table is shared by all mixture states of a
// stream; each mixture state owns only its length and chain.

struct HmmEmission {
  std::vector<PoissonDist> count;      // per hidden state
  std::vector<CategoricalDist> items;  // per hidden state

  int n_states() const { return static_cast<int>(count.size()); }
  int vocab_size() const { return items.empty() ? 0 : items[0].size(); }
  // log density of one timepoint's multiset under hidden state s.
  double log_density(std::span<const int> multiset, int s) const;
};

struct HmmSeqState {
  PoissonDist length;
  MarkovChainDist state_chain;
};

struct HmmSeqModel {
  std::vector<HmmSeqState> states;
  HmmEmission emission;

  int n_states() const { return static_cast<int>(states.size()); }
  int n_hmm() const { return emission.n_states(); }
};

// Smoothed posteriors from one forward-backward sweep, linear space.
struct HmmPosterior {
  // state_marginal[t][s], each timepoint sums to 1.
  std::vector<std::vector<double>> state_marginal;
  // transition_marginal[t][s * S + s2] for the step t -> t+1.
  std::vector<std::vector<double>> transition_marginal;
};

struct HmmForwardResult {
  double log_lik = 0.0;
  HmmPosterior posterior;
};

// Log-likelihood of a whole timed sequence under one mixture state (Poisson
// length term included), optionally with smoothed posteriors for the E-step.
HmmForwardResult hmm_forward(const std::vector<std::vector<int>>& seq,
                             const HmmSeqState& state, const HmmEmission& emission,
                             bool with_posterior = false);

// ---------------------------------------------------------------------------
// Posterior over a small mixture given per-state log-likelihoods.

struct PosteriorResult {
  double log_marginal = 0.0;
  std::vector<double> gamma;
};

PosteriorResult mixture_posterior(std::span<const double> mixing_log,
                                  std::span<const double> log_lik);

// ---------------------------------------------------------------------------
// Sufficient statistics per sub-model family.

struct CollectionStats {
  PoissonStats length;
  CategoricalStats items;

  explicit CollectionStats(int vocab = 0) : items(vocab) {}
  void merge(const CollectionStats& o) {
    length.merge(o.length);
    items.merge(o.items);
  }
};

struct MarkovSeqStats {
  PoissonStats length;
  MarkovChainStats chain;

  explicit MarkovSeqStats(int vocab = 0) : chain(vocab) {}
  void merge(const MarkovSeqStats& o) {
    length.merge(o.length);
    chain.merge(o.chain);
  }
};

struct HmmSeqStateStats {
  PoissonStats length;
  MarkovChainStats state_chain;

  explicit HmmSeqStateStats(int n_hmm = 0) : state_chain(n_hmm) {}
  void merge(const HmmSeqStateStats& o) {
    length.merge(o.length);
    state_chain.merge(o.state_chain);
  }
};

struct HmmEmissionStats {
  std::vector<PoissonStats> count;
  std::vector<CategoricalStats> items;

  HmmEmissionStats(int n_hmm = 0, int vocab = 0)
      : count(static_cast<std::size_t>(n_hmm)),
        items(static_cast<std::size_t>(n_hmm), CategoricalStats(vocab)) {}
  void merge(const HmmEmissionStats& o);
};

void accumulate_collection(std::span<const int> items, double w, CollectionStats& stats);
void accumulate_mseq(std::span<const int> seq, double w, MarkovSeqStats& stats);
// Adds one sequence's expected counts, weighted by the mixture-state weight w
// and the sweep's smoothed posteriors.
void accumulate_hmm(const std::vector<std::vector<int>>& seq,
                    const HmmPosterior& posterior, double w,
                    HmmSeqStateStats& state_stats, HmmEmissionStats& emission_stats);

// Re-estimation with dead-state retention: any state (or emission row) whose
// accumulated weight is zero keeps its previous parameters.
CollectionState fit_collection_state(const CollectionStats& stats,
                                     const CollectionState& previous);
MarkovSeqState fit_mseq_state(const MarkovSeqStats& stats,
                              const MarkovSeqState& previous);
HmmSeqState fit_hmm_seq_state(const HmmSeqStateStats& stats,
                              const HmmSeqState& previous);
HmmEmission fit_hmm_emission(const HmmEmissionStats& stats,
                             const HmmEmission& previous);

}  // namespace episeq
