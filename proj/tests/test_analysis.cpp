#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "episeq/analysis.hpp"
#include "episeq/errors.hpp"
#include "helpers.hpp"

using namespace episeq;
using namespace testutil;

namespace {

Hyperparams small_hp() {
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
  return hp;
}

// All complete sequences of the tree, flattened with their termination
// probabilities, keyed by token path.
void flatten_tree(const SequenceTreeNode& node, std::vector<int>& path,
                  std::vector<std::pair<std::vector<int>, double>>& out) {
  out.emplace_back(path, node.termination_prob);
  for (const SequenceTreeNode& child : node.children) {
    path.push_back(child.item);
    flatten_tree(child, path, out);
    path.pop_back();
  }
}

double seq_prob(const MarkovSeqState& state, const std::vector<int>& seq) {
  double p = std::exp(state.length.log_pmf(std::int64_t(seq.size())));
  if (!seq.empty()) p *= oracle_chain_prob(state.chain, seq);
  return p;
}

}  // namespace

TEST_CASE("enrichment over a single top state is the scalar itself") {
  Hyperparams hp;
  hp.n_beds_states = 3;
  Rng rng(601);
  EpisodeModel model = random_model(hp, tiny_vocab(), rng);
  EnrichmentTable table =
      target_enrichment(model, Stream::Beds, TargetScalar::Death);
  REQUIRE(table.rows.size() == 3);
  // With one top state every sub-model state sees the same death rate.
  for (const EnrichmentRow& row : table.rows)
    CHECK(row.probability == doctest::Approx(model.death[0].p()).epsilon(1e-12));
}

TEST_CASE("enrichment rows are convex mixes sorted ascending") {
  Rng rng(607);
  EpisodeModel model = random_model(small_hp(), tiny_vocab(), rng);
  for (TargetScalar target :
       {TargetScalar::Death, TargetScalar::Sex, TargetScalar::Age}) {
    EnrichmentTable table = target_enrichment(model, Stream::Labs, target);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].probability <= table.rows[1].probability);

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int z = 0; z < 2; ++z) {
      double v = 0.0;
      if (target == TargetScalar::Death) v = model.death[std::size_t(z)].p();
      if (target == TargetScalar::Sex) v = model.sex[std::size_t(z)].p();
      if (target == TargetScalar::Age) {
        const QuantizedGaussianDist& d = model.age[std::size_t(z)];
        for (int a = d.support_min(); a <= d.support_max(); ++a)
          v += a * std::exp(d.log_pmf(a));
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    for (const EnrichmentRow& row : table.rows) {
      CHECK(row.probability >= lo - 1e-12);
      CHECK(row.probability <= hi + 1e-12);
    }
  }
}

TEST_CASE("enrichment matches a monte carlo estimate") {
  Rng rng(613);
  EpisodeModel model = random_model(small_hp(), tiny_vocab(), rng);
  auto [data, latents] = sample_corpus(model, 200000, 331);

  EnrichmentTable table =
      target_enrichment(model, Stream::Beds, TargetScalar::Death);
  int beds_slot = int(Stream::Beds);
  for (const EnrichmentRow& row : table.rows) {
    double deaths = 0.0;
    double visits = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (latents[i].sub[std::size_t(beds_slot)] != row.state) continue;
      visits += 1.0;
      deaths += double(*data[i].death);
    }
    REQUIRE(visits > 0);
    double p = row.probability;
    double sigma = std::sqrt(p * (1.0 - p) / visits);
    CHECK(std::abs(deaths / visits - p) < 3.0 * sigma);
  }
}

TEST_CASE("state distribution is a normalized joint with consistent margins") {
  Rng rng(617);
  EpisodeModel model = random_model(small_hp(), tiny_vocab(), rng);
  StateDistribution dist = state_distribution(model, Stream::Neuro);
  REQUIRE(dist.n_top == 2);
  REQUIRE(dist.n_states == 2);

  double total = 0.0;
  for (double v : dist.joint) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  for (int z = 0; z < 2; ++z) {
    double row = 0.0;
    for (int k = 0; k < 2; ++k) row += dist.joint[std::size_t(z * 2 + k)];
    CHECK(row == doctest::Approx(model.top_weights.prob(z)).epsilon(1e-12));
  }

  std::vector<double> prev = state_prevalence(model, Stream::Neuro);
  REQUIRE(prev.size() == 2);
  for (int k = 0; k < 2; ++k) {
    double col = dist.joint[std::size_t(k)] + dist.joint[std::size_t(2 + k)];
    CHECK(prev[std::size_t(k)] == doctest::Approx(col).epsilon(1e-12));
  }
}

TEST_CASE("state prevalence matches sampled latent frequencies") {
  Rng rng(619);
  EpisodeModel model = random_model(small_hp(), tiny_vocab(), rng);
  auto latents = sample_corpus(model, 100000, 337).second;
  std::vector<double> prev = state_prevalence(model, Stream::Meds);
  int slot = int(Stream::Meds);
  std::vector<double> freq(2, 0.0);
  for (const LatentTrace& t : latents)
    freq[std::size_t(t.sub[std::size_t(slot)])] += 1.0;
  for (int k = 0; k < 2; ++k) {
    double p = prev[std::size_t(k)];
    double sigma = std::sqrt(p * (1.0 - p) / double(latents.size()));
    CHECK(std::abs(freq[std::size_t(k)] / double(latents.size()) - p) <
          3.0 * sigma);
  }
}

TEST_CASE("a sharp chain yields the single-node tree") {
  // Rate 1 and a 0.3 threshold keep only the empty sequence and one
  // first-step continuation; the tail mass past depth one is already below
  // the threshold.
  MarkovSeqState state{
      PoissonDist(1.0),
      MarkovChainDist(CategoricalDist::from_normalized({1.0 - 2e-10, 1e-10, 1e-10}),
                      {CategoricalDist::from_normalized({1.0 - 2e-10, 1e-10, 1e-10}),
                       CategoricalDist::uniform(3), CategoricalDist::uniform(3)})};
  SequenceTree tree = sequence_tree(state, 0, 0.3);
  CHECK(tree.root.item == -1);
  CHECK(tree.root.termination_prob == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  REQUIRE(tree.root.children.size() == 1);
  CHECK(tree.root.children[0].item == 0);
  CHECK(tree.root.children[0].termination_prob ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
  CHECK(tree.root.children[0].children.empty());
}

TEST_CASE("a zero threshold enumerates the capped space exactly") {
  Rng rng(631);
  MarkovSeqState state = random_mseq_state(3, rng);
  SequenceTree tree = sequence_tree(state, 0, 0.0, 4);

  std::vector<std::pair<std::vector<int>, double>> flat;
  std::vector<int> path;
  flatten_tree(tree.root, path, flat);
  // Every sequence of length <= 4 appears exactly once with its probability.
  CHECK(flat.size() == std::size_t(1 + 3 + 9 + 27 + 81));
  double total = 0.0;
  for (const auto& [seq, prob] : flat) {
    CHECK(prob == doctest::Approx(seq_prob(state, seq)).epsilon(1e-12));
    total += prob;
  }
  CHECK(total == doctest::Approx(poisson_cdf(state.length.rate(), 4)).epsilon(1e-9));
}

TEST_CASE("tree pruning keeps exactly the reachable mass") {
  Rng rng(641);
  for (int trial = 0; trial < 20; ++trial) {
    MarkovSeqState state = random_mseq_state(4, rng);
    double threshold = 0.01;
    SequenceTree tree = sequence_tree(state, 0, threshold, 5);

    std::vector<std::pair<std::vector<int>, double>> flat;
    std::vector<int> path;
    flatten_tree(tree.root, path, flat);

    // Soundness: stored probabilities are exact.
    for (const auto& [seq, prob] : flat)
      CHECK(prob == doctest::Approx(seq_prob(state, seq)).epsilon(1e-10));

    // Completeness: every sequence at or above the threshold is present, and
    // every kept leaf is on a path to one.
    std::vector<std::vector<int>> kept;
    for (const auto& [seq, prob] : flat) kept.push_back(seq);
    for (const auto& seq : all_sequences_up_to(4, 5)) {
      if (seq_prob(state, seq) >= threshold)
        CHECK(std::find(kept.begin(), kept.end(), seq) != kept.end());
    }
    std::size_t above = 0;
    for (const auto& [seq, prob] : flat)
      if (prob >= threshold || seq.empty()) ++above;
    // Below-threshold nodes must have a kept descendant; verify leaves.
    std::function<bool(const SequenceTreeNode&)> leaves_ok =
        [&](const SequenceTreeNode& node) -> bool {
      if (node.children.empty())
        return node.termination_prob >= threshold || node.item == -1;
      for (const SequenceTreeNode& child : node.children)
        if (!leaves_ok(child)) return false;
      return true;
    };
    CHECK(leaves_ok(tree.root));
  }
}

TEST_CASE("tree rendering emits one labeled node per sequence") {
  MarkovSeqState state{PoissonDist(1.0), MarkovChainDist::uniform(2)};
  SequenceTree tree = sequence_tree(state, 3, 0.05, 3);
  Vocabulary vocab = numbered_vocab("BED", 2);
  std::ostringstream out;
  write_tree_dot(tree, vocab, out);
  std::string dot = out.str();
  CHECK(dot.find("digraph seq_tree_3") != std::string::npos);
  CHECK(dot.find("BED0") != std::string::npos);
  CHECK(dot.rfind("}") != std::string::npos);
}

TEST_CASE("trees validate their depth cap") {
  MarkovSeqState state{PoissonDist(1.0), MarkovChainDist::uniform(2)};
  CHECK_THROWS_AS(sequence_tree(state, 0, 0.5, -1), SchemaViolationError);
  CHECK_THROWS_AS(sequence_tree(state, 0, 0.5, 65), SchemaViolationError);
}

TEST_CASE("greedy trajectory follows argmax transitions to absorption") {
  HmmSeqModel model;
  model.states.push_back(
      {PoissonDist(3.0),
       MarkovChainDist(CategoricalDist::from_normalized({0.6, 0.3, 0.1}),
                       {CategoricalDist::from_normalized({0.1, 0.8, 0.1}),
                        CategoricalDist::from_normalized({0.1, 0.2, 0.7}),
                        CategoricalDist::from_normalized({0.1, 0.1, 0.8})})});
  Rng rng(643);
  model.emission = random_emission(3, 4, rng);

  Trajectory traj = greedy_trajectory(model, 0, 50, 2);
  REQUIRE(traj.steps.size() == 3);
  CHECK(traj.steps[0].state == 0);
  CHECK(traj.steps[1].state == 1);
  CHECK(traj.steps[2].state == 2);
  CHECK(traj.absorbed);
  CHECK(traj.steps[0].top_items.size() == 2);
}

TEST_CASE("greedy trajectory truncates on cycles") {
  HmmSeqModel model;
  model.states.push_back(
      {PoissonDist(3.0),
       MarkovChainDist(CategoricalDist::from_normalized({0.9, 0.1}),
                       {CategoricalDist::from_normalized({0.1, 0.9}),
                        CategoricalDist::from_normalized({0.9, 0.1})})});
  Rng rng(647);
  model.emission = random_emission(2, 3, rng);

  Trajectory traj = greedy_trajectory(model, 0, 6);
  CHECK_FALSE(traj.absorbed);
  CHECK(traj.steps.size() == 6);
  CHECK(traj.steps[0].state == 0);
  CHECK(traj.steps[1].state == 1);
  CHECK(traj.steps[2].state == 0);
}

TEST_CASE("greedy trajectory breaks ties toward the lowest state") {
  HmmSeqModel model;
  model.states.push_back(
      {PoissonDist(1.0),
       MarkovChainDist(CategoricalDist::from_normalized({0.5, 0.5}),
                       {CategoricalDist::from_normalized({0.5, 0.5}),
                        CategoricalDist::from_normalized({0.5, 0.5})})});
  Rng rng(653);
  model.emission = random_emission(2, 3, rng);
  Trajectory traj = greedy_trajectory(model, 0, 10);
  REQUIRE(traj.steps.size() == 1);
  CHECK(traj.steps[0].state == 0);
  CHECK(traj.absorbed);
}

TEST_CASE("greedy trajectory validates its arguments") {
  HmmSeqModel model;
  model.states.push_back({PoissonDist(1.0), MarkovChainDist::uniform(2)});
  Rng rng(659);
  model.emission = random_emission(2, 3, rng);
  CHECK_THROWS_AS(greedy_trajectory(model, 1), SchemaViolationError);
  CHECK_THROWS_AS(greedy_trajectory(model, -1), SchemaViolationError);
  CHECK_THROWS_AS(greedy_trajectory(model, 0, 0), SchemaViolationError);
}

TEST_CASE("viterbi path matches exhaustive search") {
  Rng rng(661);
  for (int trial = 0; trial < 10; ++trial) {
    MarkovChainDist chain = random_chain(3, rng);
    for (int len = 1; len <= 5; ++len) {
      std::vector<int> best_path;
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& path : all_sequences(3, len)) {
        double lp = std::log(oracle_chain_prob(chain, path));
        if (lp > best) {
          best = lp;
          best_path = path;
        }
      }
      CHECK(most_likely_state_path(chain, len) == best_path);
    }
  }
}

TEST_CASE("viterbi of length one is the argmax initial state") {
  MarkovChainDist chain(CategoricalDist::from_normalized({0.2, 0.5, 0.3}),
                        {CategoricalDist::uniform(3), CategoricalDist::uniform(3),
                         CategoricalDist::uniform(3)});
  CHECK(most_likely_state_path(chain, 1) == std::vector<int>{1});
  CHECK(most_likely_state_path(chain, 0).empty());
}

TEST_CASE("likelihood ratios cover the closed-form cases") {
  CategoricalDist items =
      CategoricalDist::from_normalized({0.2, 0.2, 0.005, 0.005, 0.59});
  std::vector<int> a = {0};
  std::vector<int> b = {1};
  LikelihoodRatio even = item_likelihood_ratio(items, a, b);
  CHECK(even.administered);
  CHECK(even.value == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<int> tiny_a = {2};
  std::vector<int> tiny_b = {3};
  LikelihoodRatio off = item_likelihood_ratio(items, tiny_a, tiny_b);
  CHECK(off.administered);  // 0.005 + 0.005 reaches the 1% threshold
  std::vector<int> below_a = {2};
  std::vector<int> below_b;
  LikelihoodRatio below = item_likelihood_ratio(items, below_a, below_b);
  CHECK_FALSE(below.administered);

  std::vector<int> a4 = {4};
  std::vector<int> b_zero;
  LikelihoodRatio inf_ratio = item_likelihood_ratio(items, a4, b_zero);
  CHECK(std::isinf(inf_ratio.value));
  CHECK(inf_ratio.value > 0);

  std::vector<int> grouped_a = {0, 4};
  std::vector<int> grouped_b = {1, 2};
  LikelihoodRatio grouped = item_likelihood_ratio(items, grouped_a, grouped_b);
  CHECK(grouped.value == doctest::Approx((0.2 + 0.59) / (0.2 + 0.005)).epsilon(1e-12));

  std::vector<int> bad = {5};
  CHECK_THROWS_AS(item_likelihood_ratio(items, bad, b), UnknownTokenError);
}

TEST_CASE("top items sort by probability with lowest-id ties") {
  CategoricalDist items =
      CategoricalDist::from_normalized({0.2, 0.3, 0.2, 0.3});
  auto top = top_items(items, 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0].first == 1);
  CHECK(top[1].first == 3);
  CHECK(top[2].first == 0);
  CHECK(top[0].second == doctest::Approx(0.3).epsilon(1e-12));

  auto all = top_items(items, 10);
  CHECK(all.size() == 4);
  CHECK_THROWS_AS(top_items(items, 0), SchemaViolationError);
}

TEST_CASE("scalar inference with one top state returns the prior") {
  Hyperparams hp;
  Rng rng(673);
  EpisodeModel model = random_model(hp, tiny_vocab(), rng);
  Episode ep = sample_episode(model, rng).first;
  ScalarPosterior post = infer_scalar(model, ep, TargetScalar::Death);
  REQUIRE(post.probs.size() == 2);
  CHECK(post.probs[1] == doctest::Approx(model.death[0].p()).epsilon(1e-12));
  CHECK(post.mean() == doctest::Approx(model.death[0].p()).epsilon(1e-12));
}

TEST_CASE("scalar inference ignores the target's own observed value") {
  Rng rng(677);
  EpisodeModel model = random_model(small_hp(), tiny_vocab(), rng);
  Episode ep = sample_episode(model, rng).first;
  Episode flipped = ep;
  flipped.death = ep.death ? 1 - *ep.death : 1;
  ScalarPosterior a = infer_scalar(model, ep, TargetScalar::Death);
  ScalarPosterior b = infer_scalar(model, flipped, TargetScalar::Death);
  REQUIRE(a.probs.size() == b.probs.size());
  for (std::size_t i = 0; i < a.probs.size(); ++i)
    CHECK(a.probs[i] == doctest::Approx(b.probs[i]).epsilon(1e-12));
}

TEST_CASE("scalar inference mixes by the masked top posterior") {
  Rng rng(683);
  EpisodeModel model = random_model(small_hp(), tiny_vocab(), rng);
  Episode ep = sample_episode(model, rng).first;

  FactorMask mask;
  mask.death = false;
  std::vector<double> gamma = model.top_posterior(ep, mask);
  double expect = 0.0;
  for (int z = 0; z < 2; ++z)
    expect += gamma[std::size_t(z)] * model.death[std::size_t(z)].p();
  ScalarPosterior post = infer_scalar(model, ep, TargetScalar::Death);
  CHECK(post.probs[1] == doctest::Approx(expect).epsilon(1e-12));

  // Age posteriors integrate to one and average the component means.
  ScalarPosterior age_post = infer_scalar(model, ep, TargetScalar::Age);
  double total = 0.0;
  for (double p : age_post.probs) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(age_post.age_min == 0);
}

TEST_CASE("scalar inference separates clearly labeled groups") {
  // Two top states separated by the death flag and the bed length; inferring
  // death from the streams alone should track the generating state.
  Hyperparams hp;
  hp.n_top = 2;
  VocabularySet vocab = tiny_vocab(2, 2, 2, 2, 2);
  EpisodeModel model = uniform_model(hp, vocab, 0, 120);
  model.top_weights = CategoricalDist::from_normalized({0.5, 0.5});
  model.death = {BernoulliDist(0.02), BernoulliDist(0.98)};
  model.beds.states.clear();
  model.beds.states.push_back({PoissonDist(1.0), MarkovChainDist::uniform(2)});
  model.beds.states.push_back({PoissonDist(8.0), MarkovChainDist::uniform(2)});
  model.mixing[std::size_t(int(Stream::Beds))] = {
      CategoricalDist::from_normalized({0.98, 0.02}),
      CategoricalDist::from_normalized({0.02, 0.98})};
  model.validate();

  Rng rng(691);
  auto [data, latents] = sample_corpus(model, 400, 409);
  int correct = 0;
  int labeled = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Episode ep = data[i];
    ep.death.reset();
    ScalarPosterior post = infer_scalar(model, ep, TargetScalar::Death);
    int truth = latents[i].top == 1 ? 1 : 0;
    int guess = post.probs[1] > 0.5 ? 1 : 0;
    ++labeled;
    if (guess == truth) ++correct;
  }
  CHECK(double(correct) / double(labeled) > 0.9);
}
