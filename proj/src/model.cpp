#include "episeq/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "episeq/errors.hpp"
#include "episeq/numeric.hpp"
#include "episeq/parallel.hpp"

namespace episeq {

int EpisodeModel::n_states(Stream s) const {
  switch (s) {
    case Stream::Beds: return beds.n_states();
    case Stream::AdmissionDx:
    case Stream::DischargeDx: return dx_pool.n_states();
    default: return hmm[static_cast<std::size_t>(hmm_stream_index(s))].n_states();
  }
}

Hyperparams EpisodeModel::hyperparams() const {
  Hyperparams hp;
  hp.n_top = n_top();
  hp.n_dx_states = dx_pool.n_states();
  hp.n_beds_states = beds.n_states();
  hp.n_labs_states = hmm[0].n_states();
  hp.n_neuro_states = hmm[1].n_states();
  hp.n_meds_states = hmm[2].n_states();
  hp.n_labs_hmm = hmm[0].n_hmm();
  hp.n_neuro_hmm = hmm[1].n_hmm();
  hp.n_meds_hmm = hmm[2].n_hmm();
  return hp;
}

void EpisodeModel::validate() const {
  int Z = n_top();
  if (Z < 1) throw SchemaViolationError("model needs at least one top state");
  if (age.size() != static_cast<std::size_t>(Z) ||
      sex.size() != static_cast<std::size_t>(Z) ||
      death.size() != static_cast<std::size_t>(Z))
    throw SchemaViolationError("scalar tables must have one entry per top state");
  for (std::size_t i = 1; i < age.size(); ++i)
    if (age[i].support_min() != age[0].support_min() ||
        age[i].support_max() != age[0].support_max())
      throw SchemaViolationError("age distributions must share one support");
  for (Stream s : kAllStreams) {
    const auto& mix = mixing_for(s);
    if (mix.size() != static_cast<std::size_t>(Z))
      throw SchemaViolationError(std::string("mixing for ") + stream_name(s) +
                                 " must have one row per top state");
    for (const auto& row : mix)
      if (row.size() != n_states(s))
        throw SchemaViolationError(std::string("mixing row for ") + stream_name(s) +
                                   " does not match its state count");
  }
  if (dx_pool.n_states() < 1 || beds.n_states() < 1)
    throw SchemaViolationError("every stream needs at least one state");
  if (dx_pool.vocab_size() != vocab.diagnoses().size())
    throw SchemaViolationError("diagnosis pool vocabulary size mismatch");
  if (beds.vocab_size() != vocab.beds().size())
    throw SchemaViolationError("beds vocabulary size mismatch");
  for (int h = 0; h < kNumHmmStreams; ++h) {
    const HmmSeqModel& m = hmm[static_cast<std::size_t>(h)];
    if (m.n_states() < 1 || m.n_hmm() < 1)
      throw SchemaViolationError("hidden-state streams need at least one state");
    if (m.emission.vocab_size() != vocab.for_stream(hmm_stream_at(h)).size())
      throw SchemaViolationError("emission vocabulary size mismatch");
    for (const auto& st : m.states)
      if (st.state_chain.n_items() != m.n_hmm())
        throw SchemaViolationError("state chain size does not match the emission table");
  }
}

std::vector<double> EpisodeModel::stream_state_log_liks(const Episode& ep,
                                                        Stream s) const {
  std::vector<double> ll;
  switch (s) {
    case Stream::Beds: {
      ll.resize(static_cast<std::size_t>(beds.n_states()));
      for (std::size_t k = 0; k < ll.size(); ++k)
        ll[k] = mseq_log_lik(ep.beds, beds.states[k]);
      break;
    }
    case Stream::AdmissionDx:
    case Stream::DischargeDx: {
      const auto& items = ep.collection(s);
      ll.resize(static_cast<std::size_t>(dx_pool.n_states()));
      for (std::size_t k = 0; k < ll.size(); ++k)
        ll[k] = collection_log_lik(items, dx_pool.states[k]);
      break;
    }
    default: {
      const HmmSeqModel& m = hmm[static_cast<std::size_t>(hmm_stream_index(s))];
      const auto& seq = ep.timed(s);
      ll.resize(static_cast<std::size_t>(m.n_states()));
      for (std::size_t k = 0; k < ll.size(); ++k)
        ll[k] = hmm_forward(seq, m.states[k], m.emission).log_lik;
      break;
    }
  }
  return ll;
}

namespace {

// Scalar factors for one top state; absent or masked scalars contribute 0.
double scalar_log_lik(const EpisodeModel& m, const Episode& ep, int z,
                      const FactorMask& mask) {
  double ll = 0.0;
  std::size_t zi = static_cast<std::size_t>(z);
  if (mask.age && ep.age) ll += m.age[zi].log_pmf(*ep.age);
  if (mask.sex && ep.sex) ll += m.sex[zi].log_pmf(*ep.sex);
  if (mask.death && ep.death) ll += m.death[zi].log_pmf(*ep.death);
  return ll;
}

bool stream_on(const FactorMask& mask, Stream s) {
  return mask.streams[static_cast<std::size_t>(static_cast<int>(s))];
}

}  // namespace

double EpisodeModel::episode_log_lik_given_top(const Episode& ep, int z,
                                               const FactorMask& mask) const {
  if (z < 0 || z >= n_top())
    throw OutOfSupportError("top state " + std::to_string(z) + " out of range");
  double ll = scalar_log_lik(*this, ep, z, mask);
  std::vector<double> joint;
  for (Stream s : kAllStreams) {
    if (!stream_on(mask, s)) continue;
    std::vector<double> state_ll = stream_state_log_liks(ep, s);
    const CategoricalDist& row = mixing_for(s)[static_cast<std::size_t>(z)];
    joint.resize(state_ll.size());
    for (std::size_t k = 0; k < state_ll.size(); ++k)
      joint[k] = row.log_prob(static_cast<int>(k)) + state_ll[k];
    ll += log_sum_exp(joint);
  }
  return ll;
}

double EpisodeModel::episode_log_lik(const Episode& ep, const FactorMask& mask) const {
  int Z = n_top();
  std::vector<double> per_top(static_cast<std::size_t>(Z));
  // Stream tables do not depend on z; compute them once.
  std::array<std::vector<double>, kNumStreams> state_ll;
  for (Stream s : kAllStreams)
    if (stream_on(mask, s))
      state_ll[static_cast<std::size_t>(static_cast<int>(s))] = stream_state_log_liks(ep, s);

  std::vector<double> joint;
  for (int z = 0; z < Z; ++z) {
    double ll = top_weights.log_prob(z) + scalar_log_lik(*this, ep, z, mask);
    for (Stream s : kAllStreams) {
      if (!stream_on(mask, s)) continue;
      const auto& sll = state_ll[static_cast<std::size_t>(static_cast<int>(s))];
      const CategoricalDist& row = mixing_for(s)[static_cast<std::size_t>(z)];
      joint.resize(sll.size());
      for (std::size_t k = 0; k < sll.size(); ++k)
        joint[k] = row.log_prob(static_cast<int>(k)) + sll[k];
      ll += log_sum_exp(joint);
    }
    per_top[static_cast<std::size_t>(z)] = ll;
  }
  return log_sum_exp(per_top);
}

std::vector<double> EpisodeModel::top_posterior(const Episode& ep,
                                                const FactorMask& mask) const {
  int Z = n_top();
  std::vector<double> log_w(static_cast<std::size_t>(Z));
  std::array<std::vector<double>, kNumStreams> state_ll;
  for (Stream s : kAllStreams)
    if (stream_on(mask, s))
      state_ll[static_cast<std::size_t>(static_cast<int>(s))] = stream_state_log_liks(ep, s);
  std::vector<double> joint;
  for (int z = 0; z < Z; ++z) {
    double ll = top_weights.log_prob(z) + scalar_log_lik(*this, ep, z, mask);
    for (Stream s : kAllStreams) {
      if (!stream_on(mask, s)) continue;
      const auto& sll = state_ll[static_cast<std::size_t>(static_cast<int>(s))];
      const CategoricalDist& row = mixing_for(s)[static_cast<std::size_t>(z)];
      joint.resize(sll.size());
      for (std::size_t k = 0; k < sll.size(); ++k)
        joint[k] = row.log_prob(static_cast<int>(k)) + sll[k];
      ll += log_sum_exp(joint);
    }
    log_w[static_cast<std::size_t>(z)] = ll;
  }
  std::vector<double> gamma;
  normalize_log_weights(log_w, gamma);
  return gamma;
}

EpisodeModel uniform_model(const Hyperparams& hp, const VocabularySet& vocab,
                           int age_min, int age_max) {
  hp.validate();
  if (vocab.beds().size() < 1 || vocab.diagnoses().size() < 1 ||
      vocab.labs().size() < 1 || vocab.neuro().size() < 1 || vocab.meds().size() < 1)
    throw SchemaViolationError("every stream needs a non-empty vocabulary");

  EpisodeModel m;
  m.vocab = vocab;
  m.top_weights = CategoricalDist::uniform(hp.n_top);
  double mid = 0.5 * (age_min + age_max);
  double spread = (age_max - age_min + 1) / 4.0;
  double var = std::max(spread * spread, QuantizedGaussianDist::kVarianceFloor);
  for (int z = 0; z < hp.n_top; ++z) {
    m.age.emplace_back(mid, var, age_min, age_max);
    m.sex.emplace_back(0.5);
    m.death.emplace_back(0.5);
  }
  for (Stream s : kAllStreams) {
    auto& mix = m.mixing[static_cast<std::size_t>(static_cast<int>(s))];
    mix.assign(static_cast<std::size_t>(hp.n_top),
               CategoricalDist::uniform(hp.n_states(s)));
  }
  for (int k = 0; k < hp.n_dx_states; ++k)
    m.dx_pool.states.push_back(
        {PoissonDist(1.0), CategoricalDist::uniform(vocab.diagnoses().size())});
  for (int k = 0; k < hp.n_beds_states; ++k)
    m.beds.states.push_back(
        {PoissonDist(1.0), MarkovChainDist::uniform(vocab.beds().size())});
  for (int h = 0; h < kNumHmmStreams; ++h) {
    Stream s = hmm_stream_at(h);
    HmmSeqModel& sm = m.hmm[static_cast<std::size_t>(h)];
    int S = hp.n_hmm(s);
    for (int k = 0; k < hp.n_states(s); ++k)
      sm.states.push_back({PoissonDist(1.0), MarkovChainDist::uniform(S)});
    sm.emission.count.assign(static_cast<std::size_t>(S), PoissonDist(1.0));
    sm.emission.items.assign(static_cast<std::size_t>(S),
                             CategoricalDist::uniform(vocab.for_stream(s).size()));
  }
  return m;
}

double total_log_lik(const EpisodeModel& model, const std::vector<Episode>& data,
                     int threads) {
  std::vector<double> block_ll(block_count(data.size()), 0.0);
  parallel_blocks(data.size(), threads,
                  [&](std::size_t b, std::size_t begin, std::size_t end) {
                    double acc = 0.0;
                    for (std::size_t i = begin; i < end; ++i)
                      acc += model.episode_log_lik(data[i]);
                    block_ll[b] = acc;
                  });
  double total = 0.0;
  for (double v : block_ll) total += v;
  return total;
}

std::vector<int> sort_top_states_by_weight(EpisodeModel& model) {
  int Z = model.n_top();
  std::vector<int> perm(static_cast<std::size_t>(Z));
  std::iota(perm.begin(), perm.end(), 0);
  const auto& w = model.top_weights.probs();
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
    return w[static_cast<std::size_t>(a)] > w[static_cast<std::size_t>(b)];
  });

  std::vector<double> new_w(static_cast<std::size_t>(Z));
  std::vector<QuantizedGaussianDist> new_age;
  std::vector<BernoulliDist> new_sex, new_death;
  new_age.reserve(static_cast<std::size_t>(Z));
  for (int k = 0; k < Z; ++k) {
    std::size_t src = static_cast<std::size_t>(perm[static_cast<std::size_t>(k)]);
    new_w[static_cast<std::size_t>(k)] = w[src];
    new_age.push_back(model.age[src]);
    new_sex.push_back(model.sex[src]);
    new_death.push_back(model.death[src]);
  }
  model.top_weights = CategoricalDist::from_normalized(std::move(new_w));
  model.age = std::move(new_age);
  model.sex = std::move(new_sex);
  model.death = std::move(new_death);
  for (Stream s : kAllStreams) {
    auto& mix = model.mixing[static_cast<std::size_t>(static_cast<int>(s))];
    std::vector<CategoricalDist> rows;
    rows.reserve(mix.size());
    for (int k = 0; k < Z; ++k)
      rows.push_back(mix[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])]);
    mix = std::move(rows);
  }
  return perm;
}

std::int64_t param_count(const Hyperparams& hp, const VocabSizes& sizes,
                         CountConvention convention) {
  hp.validate();
  if (sizes.beds < 1 || sizes.dx < 1 || sizes.labs < 1 || sizes.neuro < 1 ||
      sizes.meds < 1)
    throw SchemaViolationError("vocabulary sizes must be >= 1");

  auto i64 = [](int v) { return static_cast<std::int64_t>(v); };
  std::int64_t d = i64(hp.n_top);  // top weights
  // One mixing matrix per stream; admission and discharge each have one even
  // though they share the state pool.
  d += i64(hp.n_top) * (2 * i64(hp.n_dx_states) + i64(hp.n_beds_states) +
                        i64(hp.n_labs_states) + i64(hp.n_neuro_states) +
                        i64(hp.n_meds_states));
  d += 4 * i64(hp.n_top);  // age mean and variance, sex, death
  d += i64(hp.n_beds_states) *
       (1 + i64(sizes.beds) + i64(sizes.beds) * i64(sizes.beds));

  auto hmm_shared = [&](int k, int s, int c) {
    return i64(k) * (1 + i64(s) + i64(s) * i64(s)) + i64(s) * (1 + i64(c));
  };
  auto hmm_paper = [&](int k, int s, int c) {
    return i64(k) * (1 + i64(s) + i64(s) * i64(s) + i64(s) * i64(c));
  };

  if (convention == CountConvention::Shared) {
    d += i64(hp.n_dx_states) * (1 + i64(sizes.dx));  // pool counted once
    d += hmm_shared(hp.n_labs_states, hp.n_labs_hmm, sizes.labs);
    d += hmm_shared(hp.n_neuro_states, hp.n_neuro_hmm, sizes.neuro);
    d += hmm_shared(hp.n_meds_states, hp.n_meds_hmm, sizes.meds);
  } else {
    d += 2 * i64(hp.n_dx_states) * (1 + i64(sizes.dx));  // per stream
    d += hmm_paper(hp.n_labs_states, hp.n_labs_hmm, sizes.labs);
    d += hmm_paper(hp.n_neuro_states, hp.n_neuro_hmm, sizes.neuro);
    d += hmm_paper(hp.n_meds_states, hp.n_meds_hmm, sizes.meds);
  }
  return d;
}

double bic_value(std::int64_t d, std::size_t n, double log_lik) {
  return static_cast<double>(d) * std::log(static_cast<double>(n)) -
         2.0 * log_lik;
}

double bic(const EpisodeModel& model, const std::vector<Episode>& data,
           CountConvention convention, int threads) {
  if (data.empty()) throw EmptyDatasetError("bic needs a non-empty dataset");
  VocabSizes sizes{model.vocab.beds().size(), model.vocab.diagnoses().size(),
                   model.vocab.labs().size(), model.vocab.neuro().size(),
                   model.vocab.meds().size()};
  std::int64_t d = param_count(model.hyperparams(), sizes, convention);
  return bic_value(d, data.size(), total_log_lik(model, data, threads));
}

}  // namespace episeq
