#pragma once

// Shared builders and brute-force oracles for the test suite. Oracles compute
// the same quantities as the library by direct enumeration or linear-space
// products, independently of the code under test.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "episeq/distributions.hpp"
#include "episeq/episode.hpp"
#include "episeq/model.hpp"
#include "episeq/rng.hpp"
#include "episeq/submodels.hpp"

namespace testutil {

using namespace episeq;

inline Vocabulary numbered_vocab(const std::string& prefix, int n) {
  std::vector<std::string> tokens;
  tokens.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) tokens.push_back(prefix + std::to_string(i));
  return Vocabulary(std::move(tokens));
}

inline VocabularySet tiny_vocab(int beds = 3, int dx = 3, int labs = 2,
                                int neuro = 2, int meds = 2) {
  return VocabularySet(numbered_vocab("B", beds), numbered_vocab("D", dx),
                       numbered_vocab("L", labs), numbered_vocab("N", neuro),
                       numbered_vocab("M", meds));
}

inline double uniform_in(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline CategoricalDist random_categorical(int n, Rng& rng) {
  return CategoricalDist(dirichlet1(n, rng));
}

inline MarkovChainDist random_chain(int n, Rng& rng) {
  std::vector<CategoricalDist> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rows.push_back(random_categorical(n, rng));
  return MarkovChainDist(random_categorical(n, rng), std::move(rows));
}

inline CollectionState random_collection_state(int vocab, Rng& rng,
                                               double rate_lo = 0.5,
                                               double rate_hi = 3.0) {
  return {PoissonDist(uniform_in(rng, rate_lo, rate_hi)),
          random_categorical(vocab, rng)};
}

inline MarkovSeqState random_mseq_state(int vocab, Rng& rng,
                                        double rate_lo = 0.5,
                                        double rate_hi = 3.0) {
  return {PoissonDist(uniform_in(rng, rate_lo, rate_hi)), random_chain(vocab, rng)};
}

inline HmmEmission random_emission(int n_hmm, int vocab, Rng& rng,
                                   double rate_lo = 0.5, double rate_hi = 2.0) {
  HmmEmission em;
  for (int s = 0; s < n_hmm; ++s) {
    em.count.push_back(PoissonDist(uniform_in(rng, rate_lo, rate_hi)));
    em.items.push_back(random_categorical(vocab, rng));
  }
  return em;
}

inline HmmSeqModel random_hmm_model(int n_states, int n_hmm, int vocab, Rng& rng) {
  HmmSeqModel model;
  for (int k = 0; k < n_states; ++k)
    model.states.push_back(
        {PoissonDist(uniform_in(rng, 0.5, 3.0)), random_chain(n_hmm, rng)});
  model.emission = random_emission(n_hmm, vocab, rng);
  return model;
}

// A fully random model of the given shape. Ages stay well inside the support
// so truncation effects are negligible.
inline EpisodeModel random_model(const Hyperparams& hp, const VocabularySet& vocab,
                                 Rng& rng) {
  EpisodeModel m;
  m.vocab = vocab;
  m.top_weights = random_categorical(hp.n_top, rng);
  for (int z = 0; z < hp.n_top; ++z) {
    m.age.emplace_back(uniform_in(rng, 30.0, 90.0), uniform_in(rng, 25.0, 100.0),
                       0, 120);
    m.sex.emplace_back(uniform_in(rng, 0.1, 0.9));
    m.death.emplace_back(uniform_in(rng, 0.05, 0.95));
  }
  for (Stream s : kAllStreams) {
    auto& rows = m.mixing[static_cast<std::size_t>(static_cast<int>(s))];
    for (int z = 0; z < hp.n_top; ++z)
      rows.push_back(random_categorical(hp.n_states(s), rng));
  }
  for (int k = 0; k < hp.n_dx_states; ++k)
    m.dx_pool.states.push_back(
        random_collection_state(vocab.diagnoses().size(), rng));
  for (int k = 0; k < hp.n_beds_states; ++k)
    m.beds.states.push_back(random_mseq_state(vocab.beds().size(), rng));
  for (int j = 0; j < kNumHmmStreams; ++j) {
    Stream s = hmm_stream_at(j);
    m.hmm[static_cast<std::size_t>(j)] = random_hmm_model(
        hp.n_states(s), hp.n_hmm(s), vocab.for_stream(s).size(), rng);
  }
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Linear-space and enumeration oracles.

inline double oracle_poisson_pmf(std::int64_t k, double rate) {
  long double acc = std::exp(-static_cast<long double>(rate));
  for (std::int64_t i = 1; i <= k; ++i)
    acc *= static_cast<long double>(rate) / static_cast<long double>(i);
  return static_cast<double>(acc);
}

inline double oracle_chain_prob(const MarkovChainDist& chain,
                                const std::vector<int>& seq) {
  double p = chain.initial().prob(seq[0]);
  for (std::size_t i = 0; i + 1 < seq.size(); ++i)
    p *= chain.row(seq[i]).prob(seq[i + 1]);
  return p;
}

// Brute-force HMM likelihood: sum over every hidden path in linear space.
inline double oracle_hmm_log_lik(const std::vector<std::vector<int>>& seq,
                                 const HmmSeqState& state,
                                 const HmmEmission& emission) {
  std::int64_t t_count = static_cast<std::int64_t>(seq.size());
  double length_term = std::exp(state.length.log_pmf(t_count));
  if (seq.empty()) return std::log(length_term);

  int s_count = emission.n_states();
  std::vector<int> path(seq.size(), 0);
  double total = 0.0;
  while (true) {
    double p = state.state_chain.initial().prob(path[0]);
    for (std::size_t t = 0; t + 1 < seq.size(); ++t)
      p *= state.state_chain.row(path[t]).prob(path[t + 1]);
    for (std::size_t t = 0; t < seq.size(); ++t)
      p *= std::exp(emission.log_density(seq[t], path[t]));
    total += p;
    // Next path in odometer order.
    std::size_t pos = 0;
    while (pos < path.size() && ++path[pos] == s_count) {
      path[pos] = 0;
      ++pos;
    }
    if (pos == path.size()) break;
  }
  return std::log(length_term * total);
}

// Every token sequence of length exactly n over the given vocabulary size.
inline std::vector<std::vector<int>> all_sequences(int vocab, int n) {
  std::vector<std::vector<int>> out;
  if (n == 0) {
    out.push_back({});
    return out;
  }
  std::vector<int> seq(static_cast<std::size_t>(n), 0);
  while (true) {
    out.push_back(seq);
    std::size_t pos = 0;
    while (pos < seq.size() && ++seq[pos] == vocab) {
      seq[pos] = 0;
      ++pos;
    }
    if (pos == seq.size()) break;
  }
  return out;
}

// Every sequence of length 0..max_len.
inline std::vector<std::vector<int>> all_sequences_up_to(int vocab, int max_len) {
  std::vector<std::vector<int>> out;
  for (int n = 0; n <= max_len; ++n)
    for (auto& s : all_sequences(vocab, n)) out.push_back(std::move(s));
  return out;
}

// Every timed sequence with up to max_points timepoints, each holding an
// item tuple of size up to max_items.
inline std::vector<std::vector<std::vector<int>>> all_timed_sequences(
    int vocab, int max_points, int max_items) {
  std::vector<std::vector<int>> points = all_sequences_up_to(vocab, max_items);
  std::vector<std::vector<std::vector<int>>> out;
  out.push_back({});
  std::vector<std::vector<std::vector<int>>> frontier = {{}};
  for (int t = 0; t < max_points; ++t) {
    std::vector<std::vector<std::vector<int>>> next;
    for (const auto& prefix : frontier)
      for (const auto& point : points) {
        auto seq = prefix;
        seq.push_back(point);
        out.push_back(seq);
        next.push_back(std::move(seq));
      }
    frontier = std::move(next);
  }
  return out;
}

inline double poisson_cdf(double rate, int k) {
  double total = 0.0;
  for (int i = 0; i <= k; ++i) total += oracle_poisson_pmf(i, rate);
  return total;
}

}  // namespace testutil
