#include "episeq/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>

#include "episeq/errors.hpp"
#include "episeq/numeric.hpp"
#include "episeq/parallel.hpp"
#include "episeq/rng.hpp"

namespace episeq {

namespace {

constexpr std::uint64_t kSeedRestart = 0xE5;
constexpr std::uint64_t kSeedInit = 0xA1;

std::vector<int> clean_grid(std::vector<int> grid, const char* what) {
  if (grid.empty())
    throw SchemaViolationError(std::string(what) + " grid must not be empty");
  for (int v : grid)
    if (v < 1)
      throw SchemaViolationError(std::string(what) + " grid entries must be >= 1");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

bool em_converged(double prev, double cur, double rel_tol) {
  double denom = std::max(std::abs(prev), std::abs(cur));
  return denom > 0.0 ? std::abs(cur - prev) / denom < rel_tol : true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Collection mixture

namespace {

struct CollectionMixtureStats {
  CategoricalStats mix;
  std::vector<CollectionStats> states;
  double log_lik = 0.0;

  CollectionMixtureStats(int k, int vocab)
      : mix(k), states(static_cast<std::size_t>(k), CollectionStats(vocab)) {}
  void merge(const CollectionMixtureStats& o) {
    mix.merge(o.mix);
    for (std::size_t i = 0; i < states.size(); ++i) states[i].merge(o.states[i]);
    log_lik += o.log_lik;
  }
};

CollectionMixture collection_m_step(const CollectionMixtureStats& stats,
                                    const CollectionMixture& prev) {
  CollectionMixture out;
  out.mix = stats.mix.total > 0.0 ? fit_categorical(stats.mix) : prev.mix;
  out.model.states.reserve(stats.states.size());
  for (std::size_t i = 0; i < stats.states.size(); ++i)
    out.model.states.push_back(
        fit_collection_state(stats.states[i], prev.model.states[i]));
  return out;
}

}  // namespace

std::pair<CollectionMixture, StreamFitStats> fit_collection_mixture(
    const std::vector<std::vector<int>>& data, int n_states, int vocab_size,
    const FitConfig& cfg) {
  if (data.empty()) throw EmptyDatasetError("mixture fit needs observations");
  if (n_states < 1 || vocab_size < 1)
    throw SchemaViolationError("mixture shape must be >= 1");

  CollectionMixture fallback;
  fallback.mix = CategoricalDist::uniform(n_states);
  for (int k = 0; k < n_states; ++k)
    fallback.model.states.push_back(
        {PoissonDist(1.0), CategoricalDist::uniform(vocab_size)});

  CollectionMixture best = fallback;
  StreamFitStats best_stats;
  bool have_best = false;
  for (int restart = 0; restart < cfg.restarts; ++restart) {
    std::uint64_t rseed =
        derive_seed(cfg.seed, kSeedRestart, static_cast<std::uint64_t>(restart));
    // Dirichlet(1) responsibilities, then one M-step.
    std::vector<CollectionMixtureStats> parts(block_count(data.size()),
                                              CollectionMixtureStats(n_states, vocab_size));
    parallel_blocks(data.size(), cfg.threads,
                    [&](std::size_t b, std::size_t begin, std::size_t end) {
                      for (std::size_t i = begin; i < end; ++i) {
                        Rng rng(derive_seed(rseed, kSeedInit, i));
                        std::vector<double> r = dirichlet1(n_states, rng);
                        for (int k = 0; k < n_states; ++k) {
                          parts[b].mix.add(k, r[static_cast<std::size_t>(k)]);
                          accumulate_collection(data[i], r[static_cast<std::size_t>(k)],
                                                parts[b].states[static_cast<std::size_t>(k)]);
                        }
                      }
                    });
    CollectionMixtureStats init(n_states, vocab_size);
    for (auto& p : parts) init.merge(p);
    CollectionMixture mixture = collection_m_step(init, fallback);

    StreamFitStats fs;
    double prev_ll = 0.0;
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
      std::vector<CollectionMixtureStats> blocks(block_count(data.size()),
                                                 CollectionMixtureStats(n_states, vocab_size));
      parallel_blocks(data.size(), cfg.threads,
                      [&](std::size_t b, std::size_t begin, std::size_t end) {
                        std::vector<double> ll(static_cast<std::size_t>(n_states));
                        for (std::size_t i = begin; i < end; ++i) {
                          for (int k = 0; k < n_states; ++k)
                            ll[static_cast<std::size_t>(k)] = collection_log_lik(
                                data[i], mixture.model.states[static_cast<std::size_t>(k)]);
                          PosteriorResult post =
                              mixture_posterior(mixture.mix.log_probs(), ll);
                          blocks[b].log_lik += post.log_marginal;
                          for (int k = 0; k < n_states; ++k) {
                            double w = post.gamma[static_cast<std::size_t>(k)];
                            blocks[b].mix.add(k, w);
                            accumulate_collection(data[i], w,
                                                  blocks[b].states[static_cast<std::size_t>(k)]);
                          }
                        }
                      });
      CollectionMixtureStats stats(n_states, vocab_size);
      for (auto& p : blocks) stats.merge(p);
      fs.log_lik = stats.log_lik;
      ++fs.iterations;
      mixture = collection_m_step(stats, mixture);
      if (iter > 0 && em_converged(prev_ll, stats.log_lik, cfg.rel_tol)) {
        fs.converged = true;
        break;
      }
      prev_ll = stats.log_lik;
    }
    if (!have_best || fs.log_lik > best_stats.log_lik) {
      best = std::move(mixture);
      best_stats = fs;
      have_best = true;
    }
  }
  return {std::move(best), best_stats};
}

// ---------------------------------------------------------------------------
// Markov sequence mixture

namespace {

struct MarkovMixtureStats {
  CategoricalStats mix;
  std::vector<MarkovSeqStats> states;
  double log_lik = 0.0;

  MarkovMixtureStats(int k, int vocab)
      : mix(k), states(static_cast<std::size_t>(k), MarkovSeqStats(vocab)) {}
  void merge(const MarkovMixtureStats& o) {
    mix.merge(o.mix);
    for (std::size_t i = 0; i < states.size(); ++i) states[i].merge(o.states[i]);
    log_lik += o.log_lik;
  }
};

MarkovMixture markov_m_step(const MarkovMixtureStats& stats, const MarkovMixture& prev) {
  MarkovMixture out;
  out.mix = stats.mix.total > 0.0 ? fit_categorical(stats.mix) : prev.mix;
  out.model.states.reserve(stats.states.size());
  for (std::size_t i = 0; i < stats.states.size(); ++i)
    out.model.states.push_back(fit_mseq_state(stats.states[i], prev.model.states[i]));
  return out;
}

}  // namespace

std::pair<MarkovMixture, StreamFitStats> fit_markov_mixture(
    const std::vector<std::vector<int>>& data, int n_states, int vocab_size,
    const FitConfig& cfg) {
  if (data.empty()) throw EmptyDatasetError("mixture fit needs observations");
  if (n_states < 1 || vocab_size < 1)
    throw SchemaViolationError("mixture shape must be >= 1");

  MarkovMixture fallback;
  fallback.mix = CategoricalDist::uniform(n_states);
  for (int k = 0; k < n_states; ++k)
    fallback.model.states.push_back(
        {PoissonDist(1.0), MarkovChainDist::uniform(vocab_size)});

  MarkovMixture best = fallback;
  StreamFitStats best_stats;
  bool have_best = false;
  for (int restart = 0; restart < cfg.restarts; ++restart) {
    std::uint64_t rseed =
        derive_seed(cfg.seed, kSeedRestart, static_cast<std::uint64_t>(restart));
    std::vector<MarkovMixtureStats> parts(block_count(data.size()),
                                          MarkovMixtureStats(n_states, vocab_size));
    parallel_blocks(data.size(), cfg.threads,
                    [&](std::size_t b, std::size_t begin, std::size_t end) {
                      for (std::size_t i = begin; i < end; ++i) {
                        Rng rng(derive_seed(rseed, kSeedInit, i));
                        std::vector<double> r = dirichlet1(n_states, rng);
                        for (int k = 0; k < n_states; ++k) {
                          parts[b].mix.add(k, r[static_cast<std::size_t>(k)]);
                          accumulate_mseq(data[i], r[static_cast<std::size_t>(k)],
                                          parts[b].states[static_cast<std::size_t>(k)]);
                        }
                      }
                    });
    MarkovMixtureStats init(n_states, vocab_size);
    for (auto& p : parts) init.merge(p);
    MarkovMixture mixture = markov_m_step(init, fallback);

    StreamFitStats fs;
    double prev_ll = 0.0;
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
      std::vector<MarkovMixtureStats> blocks(block_count(data.size()),
                                             MarkovMixtureStats(n_states, vocab_size));
      parallel_blocks(data.size(), cfg.threads,
                      [&](std::size_t b, std::size_t begin, std::size_t end) {
                        std::vector<double> ll(static_cast<std::size_t>(n_states));
                        for (std::size_t i = begin; i < end; ++i) {
                          for (int k = 0; k < n_states; ++k)
                            ll[static_cast<std::size_t>(k)] = mseq_log_lik(
                                data[i], mixture.model.states[static_cast<std::size_t>(k)]);
                          PosteriorResult post =
                              mixture_posterior(mixture.mix.log_probs(), ll);
                          blocks[b].log_lik += post.log_marginal;
                          for (int k = 0; k < n_states; ++k) {
                            double w = post.gamma[static_cast<std::size_t>(k)];
                            blocks[b].mix.add(k, w);
                            accumulate_mseq(data[i], w,
                                            blocks[b].states[static_cast<std::size_t>(k)]);
                          }
                        }
                      });
      MarkovMixtureStats stats(n_states, vocab_size);
      for (auto& p : blocks) stats.merge(p);
      fs.log_lik = stats.log_lik;
      ++fs.iterations;
      mixture = markov_m_step(stats, mixture);
      if (iter > 0 && em_converged(prev_ll, stats.log_lik, cfg.rel_tol)) {
        fs.converged = true;
        break;
      }
      prev_ll = stats.log_lik;
    }
    if (!have_best || fs.log_lik > best_stats.log_lik) {
      best = std::move(mixture);
      best_stats = fs;
      have_best = true;
    }
  }
  return {std::move(best), best_stats};
}

// ---------------------------------------------------------------------------
// Hidden-state sequence mixture

namespace {

struct HmmMixtureStats {
  CategoricalStats mix;
  std::vector<HmmSeqStateStats> states;
  HmmEmissionStats emission;
  double log_lik = 0.0;

  HmmMixtureStats(int k, int n_hmm, int vocab)
      : mix(k),
        states(static_cast<std::size_t>(k), HmmSeqStateStats(n_hmm)),
        emission(n_hmm, vocab) {}
  void merge(const HmmMixtureStats& o) {
    mix.merge(o.mix);
    for (std::size_t i = 0; i < states.size(); ++i) states[i].merge(o.states[i]);
    emission.merge(o.emission);
    log_lik += o.log_lik;
  }
};

HmmMixture hmm_m_step(const HmmMixtureStats& stats, const HmmMixture& prev) {
  HmmMixture out;
  out.mix = stats.mix.total > 0.0 ? fit_categorical(stats.mix) : prev.mix;
  out.model.states.reserve(stats.states.size());
  for (std::size_t i = 0; i < stats.states.size(); ++i)
    out.model.states.push_back(
        fit_hmm_seq_state(stats.states[i], prev.model.states[i]));
  out.model.emission = fit_hmm_emission(stats.emission, prev.model.emission);
  return out;
}

}  // namespace

std::pair<HmmMixture, StreamFitStats> fit_hmm_mixture(
    const std::vector<std::vector<std::vector<int>>>& data, int n_states,
    int n_hmm, int vocab_size, const FitConfig& cfg) {
  if (data.empty()) throw EmptyDatasetError("mixture fit needs observations");
  if (n_states < 1 || n_hmm < 1 || vocab_size < 1)
    throw SchemaViolationError("mixture shape must be >= 1");

  HmmMixture fallback;
  fallback.mix = CategoricalDist::uniform(n_states);
  for (int k = 0; k < n_states; ++k)
    fallback.model.states.push_back({PoissonDist(1.0), MarkovChainDist::uniform(n_hmm)});
  fallback.model.emission.count.assign(static_cast<std::size_t>(n_hmm), PoissonDist(1.0));
  fallback.model.emission.items.assign(static_cast<std::size_t>(n_hmm),
                                       CategoricalDist::uniform(vocab_size));

  HmmMixture best = fallback;
  StreamFitStats best_stats;
  bool have_best = false;
  for (int restart = 0; restart < cfg.restarts; ++restart) {
    std::uint64_t rseed =
        derive_seed(cfg.seed, kSeedRestart, static_cast<std::uint64_t>(restart));
    std::vector<HmmMixtureStats> parts(block_count(data.size()),
                                       HmmMixtureStats(n_states, n_hmm, vocab_size));
    parallel_blocks(
        data.size(), cfg.threads, [&](std::size_t b, std::size_t begin, std::size_t end) {
          for (std::size_t i = begin; i < end; ++i) {
            Rng rng(derive_seed(rseed, kSeedInit, i));
            std::vector<double> r = dirichlet1(n_states, rng);
            const auto& seq = data[i];
            HmmPosterior post;
            post.state_marginal.reserve(seq.size());
            for (std::size_t t = 0; t < seq.size(); ++t)
              post.state_marginal.push_back(dirichlet1(n_hmm, rng));
            for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
              std::vector<double> tr(static_cast<std::size_t>(n_hmm * n_hmm));
              for (int a = 0; a < n_hmm; ++a)
                for (int bb = 0; bb < n_hmm; ++bb)
                  tr[static_cast<std::size_t>(a * n_hmm + bb)] =
                      post.state_marginal[t][static_cast<std::size_t>(a)] *
                      post.state_marginal[t + 1][static_cast<std::size_t>(bb)];
              post.transition_marginal.push_back(std::move(tr));
            }
            for (int k = 0; k < n_states; ++k) {
              parts[b].mix.add(k, r[static_cast<std::size_t>(k)]);
              accumulate_hmm(seq, post, r[static_cast<std::size_t>(k)],
                             parts[b].states[static_cast<std::size_t>(k)],
                             parts[b].emission);
            }
          }
        });
    HmmMixtureStats init(n_states, n_hmm, vocab_size);
    for (auto& p : parts) init.merge(p);
    HmmMixture mixture = hmm_m_step(init, fallback);

    StreamFitStats fs;
    double prev_ll = 0.0;
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
      std::vector<HmmMixtureStats> blocks(block_count(data.size()),
                                          HmmMixtureStats(n_states, n_hmm, vocab_size));
      parallel_blocks(
          data.size(), cfg.threads, [&](std::size_t b, std::size_t begin, std::size_t end) {
            std::vector<double> ll(static_cast<std::size_t>(n_states));
            std::vector<HmmPosterior> posts(static_cast<std::size_t>(n_states));
            for (std::size_t i = begin; i < end; ++i) {
              for (int k = 0; k < n_states; ++k) {
                HmmForwardResult fr =
                    hmm_forward(data[i], mixture.model.states[static_cast<std::size_t>(k)],
                                mixture.model.emission, true);
                ll[static_cast<std::size_t>(k)] = fr.log_lik;
                posts[static_cast<std::size_t>(k)] = std::move(fr.posterior);
              }
              PosteriorResult post = mixture_posterior(mixture.mix.log_probs(), ll);
              blocks[b].log_lik += post.log_marginal;
              for (int k = 0; k < n_states; ++k) {
                double w = post.gamma[static_cast<std::size_t>(k)];
                blocks[b].mix.add(k, w);
                accumulate_hmm(data[i], posts[static_cast<std::size_t>(k)], w,
                               blocks[b].states[static_cast<std::size_t>(k)],
                               blocks[b].emission);
              }
            }
          });
      HmmMixtureStats stats(n_states, n_hmm, vocab_size);
      for (auto& p : blocks) stats.merge(p);
      fs.log_lik = stats.log_lik;
      ++fs.iterations;
      mixture = hmm_m_step(stats, mixture);
      if (iter > 0 && em_converged(prev_ll, stats.log_lik, cfg.rel_tol)) {
        fs.converged = true;
        break;
      }
      prev_ll = stats.log_lik;
    }
    if (!have_best || fs.log_lik > best_stats.log_lik) {
      best = std::move(mixture);
      best_stats = fs;
      have_best = true;
    }
  }
  return {std::move(best), best_stats};
}

// ---------------------------------------------------------------------------
// Parameter counts for the standalone mixtures.

std::int64_t collection_mixture_params(int n_states, int vocab_size) {
  auto k = static_cast<std::int64_t>(n_states);
  auto c = static_cast<std::int64_t>(vocab_size);
  return k + k * (1 + c);
}

std::int64_t markov_mixture_params(int n_states, int vocab_size) {
  auto k = static_cast<std::int64_t>(n_states);
  auto c = static_cast<std::int64_t>(vocab_size);
  return k + k * (1 + c + c * c);
}

std::int64_t hmm_mixture_params(int n_states, int n_hmm, int vocab_size) {
  auto k = static_cast<std::int64_t>(n_states);
  auto s = static_cast<std::int64_t>(n_hmm);
  auto c = static_cast<std::int64_t>(vocab_size);
  return k + k * (1 + s + s * s) + s * (1 + c);
}

// ---------------------------------------------------------------------------
// Linear searches

namespace {

StageCurve run_search(const char* name, const std::vector<int>& raw_grid,
                      const std::function<std::pair<double, std::int64_t>(int)>& eval,
                      std::size_t n_obs) {
  StageCurve curve;
  curve.name = name;
  std::vector<int> grid = clean_grid(raw_grid, name);
  double best_bic = 0.0;
  for (int size : grid) {
    auto [ll, params] = eval(size);
    double b = bic_value(params, n_obs, ll);
    curve.sizes.push_back(size);
    curve.bics.push_back(b);
    ++curve.fits;
    // Ascending grid plus strict comparison makes ties favor the smaller size.
    if (curve.sizes.size() == 1 || b < best_bic) {
      best_bic = b;
      curve.chosen = size;
    }
  }
  return curve;
}

}  // namespace

StageCurve select_hmm_states(const std::vector<std::vector<std::vector<int>>>& data,
                             int vocab_size, const std::vector<int>& grid,
                             const FitConfig& cfg) {
  return run_search(
      "hmm_states", grid,
      [&](int s) {
        auto [mix, fs] = fit_hmm_mixture(data, 1, s, vocab_size, cfg);
        return std::make_pair(fs.log_lik, hmm_mixture_params(1, s, vocab_size));
      },
      data.size());
}

StageCurve select_hmm_mixture(const std::vector<std::vector<std::vector<int>>>& data,
                              int vocab_size, int n_hmm, const std::vector<int>& grid,
                              const FitConfig& cfg) {
  return run_search(
      "hmm_mixture", grid,
      [&](int k) {
        auto [mix, fs] = fit_hmm_mixture(data, k, n_hmm, vocab_size, cfg);
        return std::make_pair(fs.log_lik, hmm_mixture_params(k, n_hmm, vocab_size));
      },
      data.size());
}

StageCurve select_markov_mixture(const std::vector<std::vector<int>>& data,
                                 int vocab_size, const std::vector<int>& grid,
                                 const FitConfig& cfg) {
  return run_search(
      "markov_mixture", grid,
      [&](int k) {
        auto [mix, fs] = fit_markov_mixture(data, k, vocab_size, cfg);
        return std::make_pair(fs.log_lik, markov_mixture_params(k, vocab_size));
      },
      data.size());
}

StageCurve select_collection_mixture(const std::vector<std::vector<int>>& data,
                                     int vocab_size, const std::vector<int>& grid,
                                     const FitConfig& cfg) {
  return run_search(
      "collection_mixture", grid,
      [&](int k) {
        auto [mix, fs] = fit_collection_mixture(data, k, vocab_size, cfg);
        return std::make_pair(fs.log_lik, collection_mixture_params(k, vocab_size));
      },
      data.size());
}

// ---------------------------------------------------------------------------
// Staged search

SelectionResult staged_select(const std::vector<Episode>& data,
                              const VocabularySet& vocab, const SelectionGrids& grids,
                              const FitConfig& cfg, CountConvention convention) {
  if (data.empty()) throw EmptyDatasetError("selection needs a non-empty corpus");

  // Stream views extracted once and reused across every candidate size.
  std::vector<std::vector<std::vector<int>>> labs, neuro, meds;
  std::vector<std::vector<int>> beds_seqs, dx;
  labs.reserve(data.size());
  neuro.reserve(data.size());
  meds.reserve(data.size());
  beds_seqs.reserve(data.size());
  dx.reserve(2 * data.size());
  for (const Episode& ep : data) {
    labs.push_back(ep.labs);
    neuro.push_back(ep.neuro);
    meds.push_back(ep.meds);
    beds_seqs.push_back(ep.beds);
  }
  // The pool serves admission and discharge, so it is fit on both jointly.
  for (const Episode& ep : data) dx.push_back(ep.admission_dx);
  for (const Episode& ep : data) dx.push_back(ep.discharge_dx);

  SelectionResult res;
  res.chosen.n_top = grids.fixed_top;

  auto push = [&](StageCurve curve, const char* name) {
    curve.name = name;
    res.total_fits += curve.fits;
    res.stages.push_back(curve);
    return res.stages.back().chosen;
  };

  int labs_vocab = vocab.labs().size();
  int neuro_vocab = vocab.neuro().size();
  int meds_vocab = vocab.meds().size();

  res.chosen.n_labs_hmm =
      push(select_hmm_states(labs, labs_vocab, grids.labs_hmm, cfg), "labs_hmm_states");
  res.chosen.n_neuro_hmm = push(select_hmm_states(neuro, neuro_vocab, grids.neuro_hmm, cfg),
                                "neuro_hmm_states");
  res.chosen.n_meds_hmm =
      push(select_hmm_states(meds, meds_vocab, grids.meds_hmm, cfg), "meds_hmm_states");

  res.chosen.n_labs_states =
      push(select_hmm_mixture(labs, labs_vocab, res.chosen.n_labs_hmm, grids.labs, cfg),
           "labs_mixture");
  res.chosen.n_neuro_states = push(
      select_hmm_mixture(neuro, neuro_vocab, res.chosen.n_neuro_hmm, grids.neuro, cfg),
      "neuro_mixture");
  res.chosen.n_meds_states =
      push(select_hmm_mixture(meds, meds_vocab, res.chosen.n_meds_hmm, grids.meds, cfg),
           "meds_mixture");

  res.chosen.n_beds_states = push(
      select_markov_mixture(beds_seqs, vocab.beds().size(), grids.beds, cfg),
      "beds_mixture");
  res.chosen.n_dx_states = push(
      select_collection_mixture(dx, vocab.diagnoses().size(), grids.dx, cfg),
      "dx_pool_mixture");

  if (!grids.top.empty()) {
    StageCurve curve;
    curve.name = "top_states";
    std::vector<int> grid = clean_grid(grids.top, "top");
    double best_bic = 0.0;
    for (int t : grid) {
      Hyperparams hp = res.chosen;
      hp.n_top = t;
      auto [model, report] = fit(data, hp, vocab, cfg);
      double b = bic(model, data, convention, cfg.threads);
      curve.sizes.push_back(t);
      curve.bics.push_back(b);
      ++curve.fits;
      if (curve.sizes.size() == 1 || b < best_bic) {
        best_bic = b;
        curve.chosen = t;
      }
    }
    res.chosen.n_top = curve.chosen;
    res.total_fits += curve.fits;
    res.stages.push_back(std::move(curve));
  }

  auto [model, report] = fit(data, res.chosen, vocab, cfg);
  res.model = std::move(model);
  res.fit_report = std::move(report);
  res.total_fits += 1;
  return res;
}

void write_selection_report(const SelectionResult& res, std::ostream& out) {
  out << "# selection report\n";
  for (const StageCurve& st : res.stages) {
    out << "stage\t" << st.name << '\n';
    out << "size\tbic\n";
    char buf[64];
    for (std::size_t i = 0; i < st.sizes.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.6f", st.bics[i]);
      out << st.sizes[i] << '\t' << buf << '\n';
    }
    out << "chosen\t" << st.chosen << '\n';
    out << '\n';
  }
  const Hyperparams& hp = res.chosen;
  out << "chosen\tn_top=" << hp.n_top << "\tdx=" << hp.n_dx_states
      << "\tbeds=" << hp.n_beds_states << "\tlabs=" << hp.n_labs_states << '/'
      << hp.n_labs_hmm << "\tneuro=" << hp.n_neuro_states << '/' << hp.n_neuro_hmm
      << "\tmeds=" << hp.n_meds_states << '/' << hp.n_meds_hmm << '\n';
  out << "total_fits\t" << res.total_fits << '\n';
  out << "final_log_lik\t" << res.fit_report.log_lik_trace.back() << '\n';
  out << "converged\t" << (res.fit_report.converged ? 1 : 0) << '\n';
}

}  // namespace episeq
