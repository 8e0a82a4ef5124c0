#include <cmath>
#include <cstdint>

#include "episeq/errors.hpp"
#include "episeq/model.hpp"
#include "episeq/numeric.hpp"
#include "episeq/parallel.hpp"
#include "episeq/rng.hpp"

namespace episeq {

namespace {

// Tags keeping the derived random streams for different purposes disjoint.
constexpr std::uint64_t kSeedRestart = 0xE5;
constexpr std::uint64_t kSeedInit = 0xA1;

FactorMask mask_from_config(const FitConfig& cfg) {
  FactorMask mask;
  mask.age = cfg.use_age;
  mask.sex = cfg.use_sex;
  mask.death = cfg.use_death;
  return mask;
}

}  // namespace

ModelStats::ModelStats(const Hyperparams& hp, const VocabularySet& vocab)
    : top(hp.n_top),
      age(static_cast<std::size_t>(hp.n_top)),
      sex(static_cast<std::size_t>(hp.n_top)),
      death(static_cast<std::size_t>(hp.n_top)) {
  for (Stream s : kAllStreams)
    mixing[static_cast<std::size_t>(static_cast<int>(s))].assign(
        static_cast<std::size_t>(hp.n_top), CategoricalStats(hp.n_states(s)));
  dx_pool.assign(static_cast<std::size_t>(hp.n_dx_states),
                 CollectionStats(vocab.diagnoses().size()));
  beds.assign(static_cast<std::size_t>(hp.n_beds_states),
              MarkovSeqStats(vocab.beds().size()));
  for (int h = 0; h < kNumHmmStreams; ++h) {
    Stream s = hmm_stream_at(h);
    hmm_states[static_cast<std::size_t>(h)].assign(
        static_cast<std::size_t>(hp.n_states(s)), HmmSeqStateStats(hp.n_hmm(s)));
    hmm_emission[static_cast<std::size_t>(h)] =
        HmmEmissionStats(hp.n_hmm(s), vocab.for_stream(s).size());
  }
}

void ModelStats::merge(const ModelStats& o) {
  top.merge(o.top);
  for (std::size_t z = 0; z < age.size(); ++z) {
    age[z].merge(o.age[z]);
    sex[z].merge(o.sex[z]);
    death[z].merge(o.death[z]);
  }
  for (std::size_t x = 0; x < kNumStreams; ++x)
    for (std::size_t z = 0; z < mixing[x].size(); ++z)
      mixing[x][z].merge(o.mixing[x][z]);
  for (std::size_t k = 0; k < dx_pool.size(); ++k) dx_pool[k].merge(o.dx_pool[k]);
  for (std::size_t k = 0; k < beds.size(); ++k) beds[k].merge(o.beds[k]);
  for (std::size_t h = 0; h < kNumHmmStreams; ++h) {
    for (std::size_t k = 0; k < hmm_states[h].size(); ++k)
      hmm_states[h][k].merge(o.hmm_states[h][k]);
    hmm_emission[h].merge(o.hmm_emission[h]);
  }
  log_lik += o.log_lik;
  episodes += o.episodes;
}

Responsibilities e_step(const EpisodeModel& model, const Episode& ep,
                        const FactorMask& mask) {
  int Z = model.n_top();
  Responsibilities r;

  // Per-stream tables; independent of the top state.
  std::array<std::vector<double>, kNumStreams> state_ll;
  for (Stream s : kAllStreams) {
    std::size_t x = static_cast<std::size_t>(static_cast<int>(s));
    if (!mask.streams[x]) continue;
    if (is_hmm_stream(s)) {
      const HmmSeqModel& m = model.hmm[static_cast<std::size_t>(hmm_stream_index(s))];
      const auto& seq = ep.timed(s);
      auto& hmm_post = r.hmm[static_cast<std::size_t>(hmm_stream_index(s))];
      state_ll[x].resize(static_cast<std::size_t>(m.n_states()));
      hmm_post.resize(static_cast<std::size_t>(m.n_states()));
      for (int k = 0; k < m.n_states(); ++k) {
        HmmForwardResult fr =
            hmm_forward(seq, m.states[static_cast<std::size_t>(k)], m.emission, true);
        state_ll[x][static_cast<std::size_t>(k)] = fr.log_lik;
        hmm_post[static_cast<std::size_t>(k)] = std::move(fr.posterior);
      }
    } else {
      state_ll[x] = model.stream_state_log_liks(ep, s);
    }
  }

  // Joint weights per (top state, stream state), then the top posterior.
  std::vector<double> log_top(static_cast<std::size_t>(Z));
  std::array<std::vector<std::vector<double>>, kNumStreams> cond;
  for (Stream s : kAllStreams) {
    std::size_t x = static_cast<std::size_t>(static_cast<int>(s));
    if (!mask.streams[x]) continue;
    cond[x].resize(static_cast<std::size_t>(Z));
  }
  std::vector<double> joint;
  for (int z = 0; z < Z; ++z) {
    double ll = model.top_weights.log_prob(z);
    std::size_t zi = static_cast<std::size_t>(z);
    if (mask.age && ep.age) ll += model.age[zi].log_pmf(*ep.age);
    if (mask.sex && ep.sex) ll += model.sex[zi].log_pmf(*ep.sex);
    if (mask.death && ep.death) ll += model.death[zi].log_pmf(*ep.death);
    for (Stream s : kAllStreams) {
      std::size_t x = static_cast<std::size_t>(static_cast<int>(s));
      if (!mask.streams[x]) continue;
      const CategoricalDist& row = model.mixing_for(s)[zi];
      const auto& sll = state_ll[x];
      joint.resize(sll.size());
      for (std::size_t k = 0; k < sll.size(); ++k)
        joint[k] = row.log_prob(static_cast<int>(k)) + sll[k];
      double lse = normalize_log_weights(joint, cond[x][zi]);
      ll += lse;
    }
    log_top[zi] = ll;
  }
  r.log_lik = normalize_log_weights(log_top, r.gamma);

  for (Stream s : kAllStreams) {
    std::size_t x = static_cast<std::size_t>(static_cast<int>(s));
    if (!mask.streams[x]) continue;
    auto& jx = r.joint[x];
    jx.resize(static_cast<std::size_t>(Z));
    for (int z = 0; z < Z; ++z) {
      std::size_t zi = static_cast<std::size_t>(z);
      jx[zi].resize(cond[x][zi].size());
      for (std::size_t k = 0; k < cond[x][zi].size(); ++k)
        jx[zi][k] = r.gamma[zi] * cond[x][zi][k];
    }
  }
  return r;
}

double accumulate_episode(const EpisodeModel& model, const Episode& ep,
                          ModelStats& stats, const FactorMask& mask) {
  Responsibilities r = e_step(model, ep, mask);
  int Z = model.n_top();

  for (int z = 0; z < Z; ++z) {
    std::size_t zi = static_cast<std::size_t>(z);
    double g = r.gamma[zi];
    stats.top.add(z, g);
    // Observed scalars always feed the M-step, even when a factor is held out
    // of the likelihood, so the trained model still carries its rates.
    if (ep.age) stats.age[zi].add(*ep.age, g);
    if (ep.sex) stats.sex[zi].add(*ep.sex, g);
    if (ep.death) stats.death[zi].add(*ep.death, g);
  }

  for (Stream s : kAllStreams) {
    std::size_t x = static_cast<std::size_t>(static_cast<int>(s));
    if (!mask.streams[x]) continue;
    const auto& jx = r.joint[x];
    int K = model.n_states(s);
    for (int z = 0; z < Z; ++z)
      for (int k = 0; k < K; ++k)
        stats.mixing[x][static_cast<std::size_t>(z)].add(
            k, jx[static_cast<std::size_t>(z)][static_cast<std::size_t>(k)]);

    // Sub-model weight of state k is the joint summed over top states.
    for (int k = 0; k < K; ++k) {
      double u = 0.0;
      for (int z = 0; z < Z; ++z)
        u += jx[static_cast<std::size_t>(z)][static_cast<std::size_t>(k)];
      std::size_t ki = static_cast<std::size_t>(k);
      switch (s) {
        case Stream::Beds:
          accumulate_mseq(ep.beds, u, stats.beds[ki]);
          break;
        case Stream::AdmissionDx:
        case Stream::DischargeDx:
          accumulate_collection(ep.collection(s), u, stats.dx_pool[ki]);
          break;
        default: {
          std::size_t h = static_cast<std::size_t>(hmm_stream_index(s));
          accumulate_hmm(ep.timed(s), r.hmm[h][ki], u, stats.hmm_states[h][ki],
                         stats.hmm_emission[h]);
          break;
        }
      }
    }
  }
  stats.log_lik += r.log_lik;
  stats.episodes += 1;
  return r.log_lik;
}

EpisodeModel m_step(const ModelStats& stats, const EpisodeModel& previous) {
  EpisodeModel m;
  m.vocab = previous.vocab;
  m.top_weights = stats.top.total > 0.0 ? fit_categorical(stats.top)
                                        : previous.top_weights;
  int Z = previous.n_top();
  int age_min = previous.age[0].support_min();
  int age_max = previous.age[0].support_max();
  for (int z = 0; z < Z; ++z) {
    std::size_t zi = static_cast<std::size_t>(z);
    m.age.push_back(stats.age[zi].weight > 0.0
                        ? fit_qgauss(stats.age[zi], age_min, age_max)
                        : previous.age[zi]);
    m.sex.push_back(stats.sex[zi].weight > 0.0 ? fit_bernoulli(stats.sex[zi])
                                               : previous.sex[zi]);
    m.death.push_back(stats.death[zi].weight > 0.0 ? fit_bernoulli(stats.death[zi])
                                                   : previous.death[zi]);
  }
  for (Stream s : kAllStreams) {
    std::size_t x = static_cast<std::size_t>(static_cast<int>(s));
    auto& mix = m.mixing[x];
    mix.reserve(static_cast<std::size_t>(Z));
    for (int z = 0; z < Z; ++z) {
      std::size_t zi = static_cast<std::size_t>(z);
      mix.push_back(stats.mixing[x][zi].total > 0.0
                        ? fit_categorical(stats.mixing[x][zi])
                        : previous.mixing_for(s)[zi]);
    }
  }
  for (std::size_t k = 0; k < stats.dx_pool.size(); ++k)
    m.dx_pool.states.push_back(
        fit_collection_state(stats.dx_pool[k], previous.dx_pool.states[k]));
  for (std::size_t k = 0; k < stats.beds.size(); ++k)
    m.beds.states.push_back(fit_mseq_state(stats.beds[k], previous.beds.states[k]));
  for (std::size_t h = 0; h < kNumHmmStreams; ++h) {
    const HmmSeqModel& prev = previous.hmm[h];
    HmmSeqModel& out = m.hmm[h];
    for (std::size_t k = 0; k < stats.hmm_states[h].size(); ++k)
      out.states.push_back(fit_hmm_seq_state(stats.hmm_states[h][k], prev.states[k]));
    out.emission = fit_hmm_emission(stats.hmm_emission[h], prev.emission);
  }
  return m;
}

namespace {

// Parallel E-step over the corpus with a thread-count independent reduction.
ModelStats e_step_all(const EpisodeModel& model, const std::vector<Episode>& data,
                      const FactorMask& mask, const Hyperparams& hp, int threads) {
  std::size_t blocks = block_count(data.size());
  std::vector<ModelStats> parts(blocks);
  parallel_blocks(data.size(), threads,
                  [&](std::size_t b, std::size_t begin, std::size_t end) {
                    ModelStats local(hp, model.vocab);
                    for (std::size_t i = begin; i < end; ++i)
                      accumulate_episode(model, data[i], local, mask);
                    parts[b] = std::move(local);
                  });
  ModelStats total(hp, model.vocab);
  for (std::size_t b = 0; b < blocks; ++b) total.merge(parts[b]);
  return total;
}

// Builds the starting model: responsibilities drawn from symmetric
// Dirichlet(1) per episode (hidden-state timepoint marginals likewise), then
// one M-step.
EpisodeModel init_model(const std::vector<Episode>& data, const Hyperparams& hp,
                        const VocabularySet& vocab, const FitConfig& cfg,
                        std::uint64_t restart_seed) {
  std::size_t blocks = block_count(data.size());
  std::vector<ModelStats> parts(blocks);
  parallel_blocks(
      data.size(), cfg.threads, [&](std::size_t b, std::size_t begin, std::size_t end) {
        ModelStats local(hp, vocab);
        for (std::size_t i = begin; i < end; ++i) {
          const Episode& ep = data[i];
          Rng rng(derive_seed(restart_seed, kSeedInit, i));
          std::vector<double> gamma = dirichlet1(hp.n_top, rng);
          for (int z = 0; z < hp.n_top; ++z) {
            std::size_t zi = static_cast<std::size_t>(z);
            local.top.add(z, gamma[zi]);
            if (ep.age) local.age[zi].add(*ep.age, gamma[zi]);
            if (ep.sex) local.sex[zi].add(*ep.sex, gamma[zi]);
            if (ep.death) local.death[zi].add(*ep.death, gamma[zi]);
          }
          for (Stream s : kAllStreams) {
            std::size_t x = static_cast<std::size_t>(static_cast<int>(s));
            int K = hp.n_states(s);
            std::vector<double> r = dirichlet1(K, rng);
            for (int z = 0; z < hp.n_top; ++z)
              for (int k = 0; k < K; ++k)
                local.mixing[x][static_cast<std::size_t>(z)].add(
                    k, gamma[static_cast<std::size_t>(z)] * r[static_cast<std::size_t>(k)]);
            if (s == Stream::Beds) {
              for (int k = 0; k < K; ++k)
                accumulate_mseq(ep.beds, r[static_cast<std::size_t>(k)],
                                local.beds[static_cast<std::size_t>(k)]);
            } else if (is_collection_stream(s)) {
              for (int k = 0; k < K; ++k)
                accumulate_collection(ep.collection(s), r[static_cast<std::size_t>(k)],
                                      local.dx_pool[static_cast<std::size_t>(k)]);
            } else {
              std::size_t h = static_cast<std::size_t>(hmm_stream_index(s));
              const auto& seq = ep.timed(s);
              int S = hp.n_hmm(s);
              HmmPosterior post;
              post.state_marginal.reserve(seq.size());
              for (std::size_t t = 0; t < seq.size(); ++t)
                post.state_marginal.push_back(dirichlet1(S, rng));
              for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
                std::vector<double> tr(static_cast<std::size_t>(S * S));
                for (int a = 0; a < S; ++a)
                  for (int bb = 0; bb < S; ++bb)
                    tr[static_cast<std::size_t>(a * S + bb)] =
                        post.state_marginal[t][static_cast<std::size_t>(a)] *
                        post.state_marginal[t + 1][static_cast<std::size_t>(bb)];
                post.transition_marginal.push_back(std::move(tr));
              }
              for (int k = 0; k < K; ++k)
                accumulate_hmm(seq, post, r[static_cast<std::size_t>(k)],
                               local.hmm_states[h][static_cast<std::size_t>(k)],
                               local.hmm_emission[h]);
            }
          }
        }
        parts[b] = std::move(local);
      });
  ModelStats total(hp, vocab);
  for (std::size_t b = 0; b < blocks; ++b) total.merge(parts[b]);
  return m_step(total, uniform_model(hp, vocab, cfg.age_min, cfg.age_max));
}

}  // namespace

std::pair<EpisodeModel, FitReport> fit(const std::vector<Episode>& data,
                                       const Hyperparams& hp,
                                       const VocabularySet& vocab,
                                       const FitConfig& cfg) {
  if (data.empty()) throw EmptyDatasetError("fit needs at least one episode");
  hp.validate();
  if (cfg.restarts < 1) throw SchemaViolationError("restarts must be >= 1");
  if (cfg.max_iters < 1) throw SchemaViolationError("max_iters must be >= 1");
  FactorMask mask = mask_from_config(cfg);

  EpisodeModel best = uniform_model(hp, vocab, cfg.age_min, cfg.age_max);
  FitReport best_report;
  bool have_best = false;

  for (int restart = 0; restart < cfg.restarts; ++restart) {
    std::uint64_t rseed =
        derive_seed(cfg.seed, kSeedRestart, static_cast<std::uint64_t>(restart));
    EpisodeModel model = init_model(data, hp, vocab, cfg, rseed);
    FitReport report;
    report.seed = cfg.seed;
    double prev_ll = 0.0;
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
      ModelStats stats = e_step_all(model, data, mask, hp, cfg.threads);
      double ll = stats.log_lik;
      report.log_lik_trace.push_back(ll);
      model = m_step(stats, model);
      if (iter > 0) {
        double denom = std::max(std::abs(prev_ll), std::abs(ll));
        double rel = denom > 0.0 ? std::abs(ll - prev_ll) / denom : 0.0;
        if (rel < cfg.rel_tol) {
          report.converged = true;
          break;
        }
      }
      prev_ll = ll;
    }
    report.iterations = static_cast<int>(report.log_lik_trace.size());
    if (!have_best ||
        report.log_lik_trace.back() > best_report.log_lik_trace.back()) {
      best = std::move(model);
      best_report = std::move(report);
      have_best = true;
    }
  }
  sort_top_states_by_weight(best);
  return {std::move(best), std::move(best_report)};
}

}  // namespace episeq
