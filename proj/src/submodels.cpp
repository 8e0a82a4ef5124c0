#include "episeq/submodels.hpp"

#include <cmath>
#include <string>

#include "episeq/errors.hpp"
#include "episeq/numeric.hpp"

namespace episeq {

namespace {

void check_item(int id, int vocab, const char* what) {
  if (id < 0 || id >= vocab)
    throw UnknownTokenError(std::string(what) + " item id " + std::to_string(id) +
                            " outside vocabulary of size " + std::to_string(vocab));
}

}  // namespace

double collection_log_lik(std::span<const int> items, const CollectionState& state) {
  double ll = state.length.log_pmf(static_cast<std::int64_t>(items.size()));
  int vocab = state.items.size();
  for (int id : items) {
    check_item(id, vocab, "collection");
    ll += state.items.log_prob(id);
  }
  return ll;
}

double mseq_log_lik(std::span<const int> seq, const MarkovSeqState& state) {
  double ll = state.length.log_pmf(static_cast<std::int64_t>(seq.size()));
  if (!seq.empty()) ll += state.chain.log_likelihood(seq);
  return ll;
}

double HmmEmission::log_density(std::span<const int> multiset, int s) const {
  const auto& cnt = count[static_cast<std::size_t>(s)];
  const auto& cat = items[static_cast<std::size_t>(s)];
  double ll = cnt.log_pmf(static_cast<std::int64_t>(multiset.size()));
  for (int id : multiset) {
    check_item(id, cat.size(), "emission");
    ll += cat.log_prob(id);
  }
  return ll;
}

HmmForwardResult hmm_forward(const std::vector<std::vector<int>>& seq,
                             const HmmSeqState& state, const HmmEmission& emission,
                             bool with_posterior) {
  HmmForwardResult res;
  std::size_t T = seq.size();
  double length_ll = state.length.log_pmf(static_cast<std::int64_t>(T));
  if (T == 0) {
    res.log_lik = length_ll;
    return res;
  }

  int S = emission.n_states();
  const MarkovChainDist& chain = state.state_chain;
  if (chain.n_items() != S)
    throw SchemaViolationError("state chain and emission table disagree on state count");

  // Per-timepoint emission log densities.
  std::vector<std::vector<double>> e(T, std::vector<double>(static_cast<std::size_t>(S)));
  for (std::size_t t = 0; t < T; ++t)
    for (int s = 0; s < S; ++s)
      e[t][static_cast<std::size_t>(s)] = emission.log_density(seq[t], s);

  // Forward pass in log space with per-step max normalization.
  std::vector<std::vector<double>> alpha(T, std::vector<double>(static_cast<std::size_t>(S)));
  double scale = 0.0;
  for (int s = 0; s < S; ++s)
    alpha[0][static_cast<std::size_t>(s)] = chain.log_initial(s) + e[0][static_cast<std::size_t>(s)];
  {
    double m = kNegInf;
    for (double v : alpha[0]) m = std::max(m, v);
    for (double& v : alpha[0]) v -= m;
    scale += m;
  }
  std::vector<double> terms(static_cast<std::size_t>(S));
  for (std::size_t t = 1; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      for (int s2 = 0; s2 < S; ++s2)
        terms[static_cast<std::size_t>(s2)] =
            alpha[t - 1][static_cast<std::size_t>(s2)] + chain.log_transition(s2, s);
      alpha[t][static_cast<std::size_t>(s)] = log_sum_exp(terms) + e[t][static_cast<std::size_t>(s)];
    }
    double m = kNegInf;
    for (double v : alpha[t]) m = std::max(m, v);
    for (double& v : alpha[t]) v -= m;
    scale += m;
  }
  res.log_lik = length_ll + scale + log_sum_exp(alpha[T - 1]);

  if (!with_posterior) return res;

  // Backward pass, normalized the same way. Normalization constants cancel in
  // the per-timepoint posteriors.
  std::vector<std::vector<double>> beta(T, std::vector<double>(static_cast<std::size_t>(S), 0.0));
  for (std::size_t ti = T - 1; ti > 0; --ti) {
    std::size_t t = ti - 1;
    for (int s = 0; s < S; ++s) {
      for (int s2 = 0; s2 < S; ++s2)
        terms[static_cast<std::size_t>(s2)] = chain.log_transition(s, s2) +
                                              e[t + 1][static_cast<std::size_t>(s2)] +
                                              beta[t + 1][static_cast<std::size_t>(s2)];
      beta[t][static_cast<std::size_t>(s)] = log_sum_exp(terms);
    }
    double m = kNegInf;
    for (double v : beta[t]) m = std::max(m, v);
    for (double& v : beta[t]) v -= m;
  }

  auto& marg = res.posterior.state_marginal;
  marg.assign(T, std::vector<double>(static_cast<std::size_t>(S)));
  std::vector<double> log_w(static_cast<std::size_t>(S));
  for (std::size_t t = 0; t < T; ++t) {
    for (int s = 0; s < S; ++s)
      log_w[static_cast<std::size_t>(s)] =
          alpha[t][static_cast<std::size_t>(s)] + beta[t][static_cast<std::size_t>(s)];
    normalize_log_weights(log_w, marg[t]);
  }

  auto& trans = res.posterior.transition_marginal;
  if (T >= 2) {
    trans.assign(T - 1, std::vector<double>(static_cast<std::size_t>(S * S)));
    std::vector<double> log_t(static_cast<std::size_t>(S * S));
    for (std::size_t t = 0; t + 1 < T; ++t) {
      for (int s = 0; s < S; ++s)
        for (int s2 = 0; s2 < S; ++s2)
          log_t[static_cast<std::size_t>(s * S + s2)] =
              alpha[t][static_cast<std::size_t>(s)] + chain.log_transition(s, s2) +
              e[t + 1][static_cast<std::size_t>(s2)] + beta[t + 1][static_cast<std::size_t>(s2)];
      normalize_log_weights(log_t, trans[t]);
    }
  }
  return res;
}

PosteriorResult mixture_posterior(std::span<const double> mixing_log,
                                  std::span<const double> log_lik) {
  if (mixing_log.size() != log_lik.size())
    throw SchemaViolationError("mixture posterior needs matching vector lengths");
  std::vector<double> joint(mixing_log.size());
  for (std::size_t i = 0; i < joint.size(); ++i) joint[i] = mixing_log[i] + log_lik[i];
  PosteriorResult res;
  res.log_marginal = normalize_log_weights(joint, res.gamma);
  return res;
}

// ---------------------------------------------------------------------------
// Accumulation

void HmmEmissionStats::merge(const HmmEmissionStats& o) {
  if (count.size() != o.count.size())
    throw SchemaViolationError("cannot merge emission stats of different sizes");
  for (std::size_t s = 0; s < count.size(); ++s) {
    count[s].merge(o.count[s]);
    items[s].merge(o.items[s]);
  }
}

void accumulate_collection(std::span<const int> items, double w, CollectionStats& stats) {
  stats.length.add(static_cast<double>(items.size()), w);
  for (int id : items) stats.items.add(id, w);
}

void accumulate_mseq(std::span<const int> seq, double w, MarkovSeqStats& stats) {
  stats.length.add(static_cast<double>(seq.size()), w);
  stats.chain.add_path(seq, w);
}

void accumulate_hmm(const std::vector<std::vector<int>>& seq,
                    const HmmPosterior& posterior, double w,
                    HmmSeqStateStats& state_stats, HmmEmissionStats& emission_stats) {
  std::size_t T = seq.size();
  state_stats.length.add(static_cast<double>(T), w);
  if (T == 0) return;

  std::size_t S = emission_stats.count.size();
  for (int s = 0; s < static_cast<int>(S); ++s)
    state_stats.state_chain.initial.add(s, w * posterior.state_marginal[0][static_cast<std::size_t>(s)]);
  for (std::size_t t = 0; t + 1 < T; ++t) {
    const auto& tr = posterior.transition_marginal[t];
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t s2 = 0; s2 < S; ++s2)
        state_stats.state_chain.rows[s].add(static_cast<int>(s2), w * tr[s * S + s2]);
  }
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double ws = w * posterior.state_marginal[t][s];
      emission_stats.count[s].add(static_cast<double>(seq[t].size()), ws);
      for (int id : seq[t]) emission_stats.items[s].add(id, ws);
    }
  }
}

// ---------------------------------------------------------------------------
// Re-estimation

CollectionState fit_collection_state(const CollectionStats& stats,
                                     const CollectionState& previous) {
  if (stats.length.weight <= 0.0) return previous;
  return CollectionState{fit_poisson(stats.length), fit_categorical(stats.items)};
}

MarkovSeqState fit_mseq_state(const MarkovSeqStats& stats,
                              const MarkovSeqState& previous) {
  if (stats.length.weight <= 0.0) return previous;
  return MarkovSeqState{fit_poisson(stats.length),
                        fit_markov(stats.chain, previous.chain)};
}

HmmSeqState fit_hmm_seq_state(const HmmSeqStateStats& stats,
                              const HmmSeqState& previous) {
  if (stats.length.weight <= 0.0) return previous;
  return HmmSeqState{fit_poisson(stats.length),
                     fit_markov(stats.state_chain, previous.state_chain)};
}

HmmEmission fit_hmm_emission(const HmmEmissionStats& stats,
                             const HmmEmission& previous) {
  if (stats.count.size() != static_cast<std::size_t>(previous.n_states()))
    throw SchemaViolationError("emission stats do not match the previous table");
  HmmEmission out;
  out.count.reserve(stats.count.size());
  out.items.reserve(stats.items.size());
  for (std::size_t s = 0; s < stats.count.size(); ++s) {
    if (stats.count[s].weight > 0.0) {
      out.count.push_back(fit_poisson(stats.count[s]));
    } else {
      out.count.push_back(previous.count[s]);
    }
    if (stats.items[s].total > 0.0) {
      out.items.push_back(fit_categorical(stats.items[s]));
    } else {
      out.items.push_back(previous.items[s]);
    }
  }
  return out;
}

}  // namespace episeq
