#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "episeq/errors.hpp"
#include "episeq/selection.hpp"
#include "helpers.hpp"

using namespace episeq;
using namespace testutil;

namespace {

std::vector<std::vector<int>> sample_mseq_data(const MarkovSeqState& state,
                                               int n, Rng& rng) {
  std::vector<std::vector<int>> out;
  for (int i = 0; i < n; ++i) {
    int len = int(state.length.sample(rng));
    out.push_back(len == 0 ? std::vector<int>{}
                           : state.chain.sample_path(len, rng));
  }
  return out;
}

std::vector<std::vector<int>> sample_collection_data(const CollectionState& state,
                                                     int n, Rng& rng) {
  std::vector<std::vector<int>> out;
  for (int i = 0; i < n; ++i) {
    int len = int(state.length.sample(rng));
    std::vector<int> items;
    for (int j = 0; j < len; ++j) items.push_back(state.items.sample(rng));
    out.push_back(std::move(items));
  }
  return out;
}

std::vector<std::vector<std::vector<int>>> sample_hmm_data(
    const HmmSeqState& state, const HmmEmission& emission, int n, Rng& rng) {
  std::vector<std::vector<std::vector<int>>> out;
  for (int i = 0; i < n; ++i) {
    int t_count = int(state.length.sample(rng));
    std::vector<std::vector<int>> seq;
    int hidden = 0;
    for (int t = 0; t < t_count; ++t) {
      hidden = t == 0 ? state.state_chain.initial().sample(rng)
                      : state.state_chain.row(hidden).sample(rng);
      std::vector<int> point;
      int m = int(emission.count[std::size_t(hidden)].sample(rng));
      for (int j = 0; j < m; ++j)
        point.push_back(emission.items[std::size_t(hidden)].sample(rng));
      seq.push_back(std::move(point));
    }
    out.push_back(std::move(seq));
  }
  return out;
}

FitConfig quick_cfg(std::uint64_t seed) {
  FitConfig cfg;
  cfg.seed = seed;
  cfg.max_iters = 40;
  cfg.rel_tol = 1e-5;
  return cfg;
}

}  // namespace

TEST_CASE("mixture parameter counts follow their closed forms") {
  CHECK(collection_mixture_params(3, 5) == 3 + 3 * (1 + 5));
  CHECK(markov_mixture_params(2, 4) == 2 + 2 * (1 + 4 + 16));
  CHECK(hmm_mixture_params(2, 3, 5) == 2 + 2 * (1 + 3 + 9) + 3 * (1 + 5));
}

TEST_CASE("grids are deduplicated, sorted and validated") {
  Rng rng(501);
  auto data = sample_collection_data(random_collection_state(3, rng), 40, rng);
  StageCurve curve =
      select_collection_mixture(data, 3, {2, 1, 2, 1}, quick_cfg(1));
  REQUIRE(curve.sizes == std::vector<int>{1, 2});
  REQUIRE(curve.bics.size() == 2);

  CHECK_THROWS_AS(select_collection_mixture(data, 3, {}, quick_cfg(1)),
                  SchemaViolationError);
  CHECK_THROWS_AS(select_collection_mixture(data, 3, {0, 2}, quick_cfg(1)),
                  SchemaViolationError);
}

TEST_CASE("the chosen size is the first bic minimum") {
  Rng rng(503);
  auto data = sample_mseq_data(random_mseq_state(3, rng), 60, rng);
  StageCurve curve = select_markov_mixture(data, 3, {1, 2, 3}, quick_cfg(2));
  double best = curve.bics[0];
  int best_size = curve.sizes[0];
  for (std::size_t i = 1; i < curve.bics.size(); ++i)
    if (curve.bics[i] < best) {
      best = curve.bics[i];
      best_size = curve.sizes[i];
    }
  CHECK(curve.chosen == best_size);
  CHECK(curve.fits == 3);
}

TEST_CASE("hidden-state search settles on one state for memoryless data") {
  Rng rng(509);
  HmmSeqState state{PoissonDist(3.0), MarkovChainDist::uniform(1)};
  HmmEmission emission;
  emission.count.push_back(PoissonDist(1.5));
  emission.items.push_back(CategoricalDist::from_normalized({0.6, 0.3, 0.1}));
  auto data = sample_hmm_data(state, emission, 150, rng);

  StageCurve curve = select_hmm_states(data, 3, {1, 2, 3}, quick_cfg(3));
  CHECK(curve.chosen == 1);
}

TEST_CASE("mixture search recovers two well-separated markov components") {
  Rng rng(521);
  MarkovSeqState short_stays{
      PoissonDist(1.0),
      MarkovChainDist(CategoricalDist::from_normalized({0.9, 0.05, 0.05}),
                      {CategoricalDist::from_normalized({0.9, 0.05, 0.05}),
                       CategoricalDist::from_normalized({0.9, 0.05, 0.05}),
                       CategoricalDist::from_normalized({0.9, 0.05, 0.05})})};
  MarkovSeqState long_stays{
      PoissonDist(7.0),
      MarkovChainDist(CategoricalDist::from_normalized({0.05, 0.05, 0.9}),
                      {CategoricalDist::from_normalized({0.05, 0.05, 0.9}),
                       CategoricalDist::from_normalized({0.05, 0.05, 0.9}),
                       CategoricalDist::from_normalized({0.05, 0.05, 0.9})})};
  auto data = sample_mseq_data(short_stays, 200, rng);
  auto more = sample_mseq_data(long_stays, 200, rng);
  data.insert(data.end(), more.begin(), more.end());

  FitConfig cfg = quick_cfg(4);
  cfg.restarts = 2;
  StageCurve curve = select_markov_mixture(data, 3, {1, 2, 4}, cfg);
  CHECK(curve.chosen == 2);
}

TEST_CASE("mixture search recovers two collection profiles") {
  Rng rng(523);
  CollectionState common{PoissonDist(2.0),
                         CategoricalDist::from_normalized({0.9, 0.05, 0.05})};
  CollectionState rare{PoissonDist(6.0),
                       CategoricalDist::from_normalized({0.05, 0.05, 0.9})};
  auto data = sample_collection_data(common, 250, rng);
  auto more = sample_collection_data(rare, 250, rng);
  data.insert(data.end(), more.begin(), more.end());

  FitConfig cfg = quick_cfg(5);
  cfg.restarts = 2;
  StageCurve curve = select_collection_mixture(data, 3, {1, 2, 4}, cfg);
  CHECK(curve.chosen == 2);
}

TEST_CASE("stream mixture fits reject empty data") {
  CHECK_THROWS_AS(fit_collection_mixture({}, 1, 3, quick_cfg(6)),
                  EmptyDatasetError);
  CHECK_THROWS_AS(fit_markov_mixture({}, 1, 3, quick_cfg(6)), EmptyDatasetError);
  CHECK_THROWS_AS(fit_hmm_mixture({}, 1, 1, 3, quick_cfg(6)), EmptyDatasetError);
}

TEST_CASE("staged selection with singleton grids is fully pinned") {
  Rng rng(541);
  Hyperparams hp;
  hp.n_top = 2;
  hp.n_dx_states = 2;
  hp.n_beds_states = 2;
  hp.n_labs_states = 2;
  hp.n_neuro_states = 2;
  hp.n_meds_states = 2;
  hp.n_labs_hmm = 2;
  hp.n_neuro_hmm = 2;
  hp.n_meds_hmm = 2;
  EpisodeModel gen = random_model(hp, tiny_vocab(), rng);
  auto data = sample_corpus(gen, 80, 211).first;

  SelectionGrids grids;
  grids.labs_hmm = {2};
  grids.neuro_hmm = {1};
  grids.meds_hmm = {2};
  grids.labs = {2};
  grids.neuro = {2};
  grids.meds = {1};
  grids.beds = {2};
  grids.dx = {3};
  grids.fixed_top = 2;

  FitConfig cfg = quick_cfg(7);
  cfg.max_iters = 10;
  SelectionResult res = staged_select(data, gen.vocab, grids, cfg);

  CHECK(res.chosen.n_labs_hmm == 2);
  CHECK(res.chosen.n_neuro_hmm == 1);
  CHECK(res.chosen.n_meds_hmm == 2);
  CHECK(res.chosen.n_labs_states == 2);
  CHECK(res.chosen.n_neuro_states == 2);
  CHECK(res.chosen.n_meds_states == 1);
  CHECK(res.chosen.n_beds_states == 2);
  CHECK(res.chosen.n_dx_states == 3);
  CHECK(res.chosen.n_top == 2);
  CHECK(res.model.hyperparams() == res.chosen);
  // Eight singleton stages plus the final retrain.
  CHECK(res.total_fits == 9);
  REQUIRE(res.stages.size() == 8);
  CHECK(res.stages[0].name == "labs_hmm_states");
  CHECK(res.stages[7].name == "dx_pool_mixture");
}

TEST_CASE("staged selection searches the top layer when asked") {
  Rng rng(547);
  Hyperparams hp;
  hp.n_top = 2;
  EpisodeModel gen = random_model(hp, tiny_vocab(), rng);
  auto data = sample_corpus(gen, 60, 223).first;

  SelectionGrids grids;
  grids.labs_hmm = {1};
  grids.neuro_hmm = {1};
  grids.meds_hmm = {1};
  grids.labs = {1};
  grids.neuro = {1};
  grids.meds = {1};
  grids.beds = {1, 2};
  grids.dx = {1};
  grids.top = {1, 2};

  FitConfig cfg = quick_cfg(8);
  cfg.max_iters = 8;
  SelectionResult res = staged_select(data, gen.vocab, grids, cfg);

  // Nine singleton fits plus one extra beds fit, two top fits, one retrain.
  CHECK(res.total_fits == 9 + 2 + 1);
  REQUIRE(res.stages.size() == 9);
  CHECK(res.stages[8].name == "top_states");
  CHECK((res.chosen.n_top == 1 || res.chosen.n_top == 2));
}

TEST_CASE("staged selection is deterministic") {
  Rng rng(557);
  Hyperparams hp;
  hp.n_top = 2;
  EpisodeModel gen = random_model(hp, tiny_vocab(), rng);
  auto data = sample_corpus(gen, 50, 227).first;

  SelectionGrids grids;
  grids.labs_hmm = {1, 2};
  grids.neuro_hmm = {1};
  grids.meds_hmm = {1};
  grids.labs = {1};
  grids.neuro = {1};
  grids.meds = {1};
  grids.beds = {1, 2};
  grids.dx = {1};
  grids.fixed_top = 1;

  FitConfig cfg = quick_cfg(9);
  cfg.max_iters = 6;

  auto report = [&]() {
    SelectionResult res = staged_select(data, gen.vocab, grids, cfg);
    std::ostringstream out;
    write_selection_report(res, out);
    return out.str();
  };
  std::string first = report();
  std::string second = report();
  CHECK(first == second);
  CHECK(first.find("total_fits") != std::string::npos);
  CHECK(first.find("beds_mixture") != std::string::npos);
}
