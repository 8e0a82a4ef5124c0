#pragma once

#include <string>
#include <utility>
#include <vector>

#include "episeq/model.hpp"

namespace episeq {

// ---------------------------------------------------------------------------
// Standalone single-stream mixtures used by the staged search. Each is the
// corresponding stream sub-model under a trivial one-state top layer: a plain
// mixing weight vector over sub-model states.

struct CollectionMixture {
  CategoricalDist mix{CategoricalDist::uniform(1)};
  CollectionModel model;
};

struct MarkovMixture {
  CategoricalDist mix{CategoricalDist::uniform(1)};
  MarkovSeqModel model;
};

struct HmmMixture {
  CategoricalDist mix{CategoricalDist::uniform(1)};
  HmmSeqModel model;
};

struct StreamFitStats {
  double log_lik = 0.0;
  int iterations = 0;
  bool converged = false;
};

std::pair<CollectionMixture, StreamFitStats> fit_collection_mixture(
    const std::vector<std::vector<int>>& data, int n_states, int vocab_size,
    const FitConfig& cfg);
std::pair<MarkovMixture, StreamFitStats> fit_markov_mixture(
    const std::vector<std::vector<int>>& data, int n_states, int vocab_size,
    const FitConfig& cfg);
std::pair<HmmMixture, StreamFitStats> fit_hmm_mixture(
    const std::vector<std::vector<std::vector<int>>>& data, int n_states,
    int n_hmm, int vocab_size, const FitConfig& cfg);

// Parameter counts for the standalone mixtures, shared-emission convention.
std::int64_t collection_mixture_params(int n_states, int vocab_size);
std::int64_t markov_mixture_params(int n_states, int vocab_size);
std::int64_t hmm_mixture_params(int n_states, int n_hmm, int vocab_size);

// ---------------------------------------------------------------------------
// Linear searches. Grids are deduplicated and scanned in ascending order; on
// BIC ties the smaller size wins.

struct StageCurve {
  std::string name;
  std::vector<int> sizes;
  std::vector<double> bics;
  int chosen = 0;
  int fits = 0;
};

// Hidden-state count for one timed stream, searched with a single mixture
// state.
StageCurve select_hmm_states(const std::vector<std::vector<std::vector<int>>>& data,
                             int vocab_size, const std::vector<int>& grid,
                             const FitConfig& cfg);
// Mixture-state count for one timed stream at a fixed hidden-state count.
StageCurve select_hmm_mixture(const std::vector<std::vector<std::vector<int>>>& data,
                              int vocab_size, int n_hmm, const std::vector<int>& grid,
                              const FitConfig& cfg);
StageCurve select_markov_mixture(const std::vector<std::vector<int>>& data,
                                 int vocab_size, const std::vector<int>& grid,
                                 const FitConfig& cfg);
StageCurve select_collection_mixture(const std::vector<std::vector<int>>& data,
                                     int vocab_size, const std::vector<int>& grid,
                                     const FitConfig& cfg);

// ---------------------------------------------------------------------------
// Staged hyperparameter search: hidden-state counts per timed stream, then
// mixture counts per stream (the diagnosis pool is fit jointly on admission
// and discharge collections), then the top-layer size, then one full retrain
// from scratch at the chosen sizes.

struct SelectionGrids {
  std::vector<int> labs_hmm, neuro_hmm, meds_hmm;
  std::vector<int> labs, neuro, meds;
  std::vector<int> beds;
  std::vector<int> dx;
  // Empty: keep fixed_top. Otherwise searched by full-model BIC.
  std::vector<int> top;
  int fixed_top = 1;
};

struct SelectionResult {
  Hyperparams chosen;
  std::vector<StageCurve> stages;
  EpisodeModel model;
  FitReport fit_report;
  int total_fits = 0;
};

SelectionResult staged_select(const std::vector<Episode>& data,
                              const VocabularySet& vocab, const SelectionGrids& grids,
                              const FitConfig& cfg,
                              CountConvention convention = CountConvention::Shared);

void write_selection_report(const SelectionResult& res, std::ostream& out);

}  // namespace episeq
