#include "episeq/model.hpp"
#include "episeq/parallel.hpp"

namespace episeq {

namespace {

constexpr std::uint64_t kSeedSample = 0xB2;

std::vector<int> sample_collection(const CollectionState& state, Rng& rng) {
  std::int64_t n = state.length.sample(rng);
  std::vector<int> items;
  items.reserve(static_cast<std::size_t>(n));
  for (std::int64_t j = 0; j < n; ++j) items.push_back(state.items.sample(rng));
  return items;
}

}  // namespace

std::pair<Episode, LatentTrace> sample_episode(const EpisodeModel& model, Rng& rng) {
  Episode ep;
  LatentTrace trace;

  int z = model.top_weights.sample(rng);
  trace.top = z;
  std::size_t zi = static_cast<std::size_t>(z);
  ep.age = model.age[zi].sample(rng);
  ep.sex = model.sex[zi].sample(rng);
  ep.death = model.death[zi].sample(rng);

  for (Stream s : kAllStreams) {
    std::size_t x = static_cast<std::size_t>(static_cast<int>(s));
    int k = model.mixing_for(s)[zi].sample(rng);
    trace.sub[x] = k;
    std::size_t ki = static_cast<std::size_t>(k);
    switch (s) {
      case Stream::Beds: {
        const MarkovSeqState& st = model.beds.states[ki];
        std::int64_t n = st.length.sample(rng);
        ep.beds = st.chain.sample_path(static_cast<int>(n), rng);
        break;
      }
      case Stream::AdmissionDx:
        ep.admission_dx = sample_collection(model.dx_pool.states[ki], rng);
        break;
      case Stream::DischargeDx:
        ep.discharge_dx = sample_collection(model.dx_pool.states[ki], rng);
        break;
      default: {
        std::size_t h = static_cast<std::size_t>(hmm_stream_index(s));
        const HmmSeqModel& m = model.hmm[h];
        const HmmSeqState& st = m.states[ki];
        std::int64_t n = st.length.sample(rng);
        std::vector<int> path = st.state_chain.sample_path(static_cast<int>(n), rng);
        auto& seq = ep.timed(s);
        seq.reserve(path.size());
        for (int hs : path) {
          std::size_t hi = static_cast<std::size_t>(hs);
          std::int64_t cnt = m.emission.count[hi].sample(rng);
          std::vector<int> point;
          point.reserve(static_cast<std::size_t>(cnt));
          for (std::int64_t j = 0; j < cnt; ++j)
            point.push_back(m.emission.items[hi].sample(rng));
          seq.push_back(std::move(point));
        }
        trace.hmm_path[h] = std::move(path);
        break;
      }
    }
  }
  return {std::move(ep), std::move(trace)};
}

std::pair<std::vector<Episode>, std::vector<LatentTrace>> sample_corpus(
    const EpisodeModel& model, std::size_t n, std::uint64_t seed, int threads) {
  std::vector<Episode> episodes(n);
  std::vector<LatentTrace> traces(n);
  parallel_blocks(n, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(derive_seed(seed, kSeedSample, i));
      auto [ep, tr] = sample_episode(model, rng);
      episodes[i] = std::move(ep);
      traces[i] = std::move(tr);
    }
  });
  return {std::move(episodes), std::move(traces)};
}

}  // namespace episeq
