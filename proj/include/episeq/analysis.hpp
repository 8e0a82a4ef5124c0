#pragma once

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "episeq/model.hpp"

namespace episeq {

enum class TargetScalar { Age, Sex, Death };

// ---------------------------------------------------------------------------
// Per-state target rates.

struct EnrichmentRow {
  int state = 0;
  double probability = 0.0;
};

struct EnrichmentTable {
  Stream stream = Stream::Beds;
  std::vector<EnrichmentRow> rows;  // ascending by probability
};

// Marginal probability of the (binary) target conditioned on each sub-model
// state of one stream, mixed over top states. Rows come back sorted
// ascending, keeping the original state ids.
EnrichmentTable target_enrichment(const EpisodeModel& model, Stream stream,
                                  TargetScalar target = TargetScalar::Death);

// Joint distribution over (top state, sub-model state) for one stream:
// joint[z * n_states + k] = p(z) * p(k | z). Sums to 1.
struct StateDistribution {
  Stream stream = Stream::Beds;
  int n_top = 0;
  int n_states = 0;
  std::vector<double> joint;
};

StateDistribution state_distribution(const EpisodeModel& model, Stream stream);

// Column sums of the joint: the marginal usage of each sub-model state.
std::vector<double> state_prevalence(const EpisodeModel& model, Stream stream);

// ---------------------------------------------------------------------------
// Bed-sequence trees.

inline constexpr int kDefaultTreeDepthCap = 64;

struct SequenceTreeNode {
  int item = -1;  // -1 for the root
  double termination_prob = 0.0;
  std::vector<SequenceTreeNode> children;
};

struct SequenceTree {
  int state = 0;
  double threshold = 0.0;
  SequenceTreeNode root;
};

// Enumerates complete sequences whose probability (Poisson length times chain
// path) reaches the threshold, arranged as a prefix tree. Branches are cut
// once the remaining Poisson tail mass times the path probability falls below
// the threshold, so everything at or above it is present. Nodes below the
// threshold survive only as ancestors of kept nodes. A node's label is the
// probability that the sequence ends exactly there.
SequenceTree sequence_tree(const MarkovSeqState& state_model, int state,
                           double threshold, int max_depth = kDefaultTreeDepthCap);

// Graphviz rendering; edge labels are tokens, node labels termination
// probabilities.
void write_tree_dot(const SequenceTree& tree, const Vocabulary& vocab,
                    std::ostream& out);

// ---------------------------------------------------------------------------
// Hidden-state trajectories.

struct TrajectoryStep {
  int state = 0;
  std::vector<std::pair<int, double>> top_items;  // (item id, probability)
};

struct Trajectory {
  int stream_state = 0;
  std::vector<TrajectoryStep> steps;
  bool absorbed = false;  // false when max_steps ran out before self-absorption
};

// Follows argmax transitions from the argmax initial state until a state maps
// to itself. Ties pick the lowest state id. Each step carries the emission's
// top_k most likely items.
Trajectory greedy_trajectory(const HmmSeqModel& model, int stream_state,
                             int max_steps = 50, int top_k = 3);

// Exact most-likely state path of the given length under the chain alone;
// reference implementation for checking the greedy walk.
std::vector<int> most_likely_state_path(const MarkovChainDist& chain, int length);

// ---------------------------------------------------------------------------
// Item mass ratios between two disjoint item groups (e.g. abnormal vs normal
// variants of a test) under one emission state.

struct LikelihoodRatio {
  double value = 0.0;      // mass(a) / mass(b); +inf when b has no mass
  bool administered = true;  // false when mass(a) + mass(b) < 1%
};

inline constexpr double kAdministeredThreshold = 0.01;

LikelihoodRatio item_likelihood_ratio(const CategoricalDist& items,
                                      std::span<const int> group_a,
                                      std::span<const int> group_b);

// ---------------------------------------------------------------------------
// Most likely items of a categorical; ties pick the lowest id.
std::vector<std::pair<int, double>> top_items(const CategoricalDist& items, int k);

// ---------------------------------------------------------------------------
// Posterior over one scalar given a partial episode. The mask says which
// factors are observed; the target's own factor is always excluded.

struct ScalarPosterior {
  TargetScalar target = TargetScalar::Death;
  std::vector<double> probs;  // sex/death: {P(0), P(1)}; age: by support index
  int age_min = 0;
  double mean() const;
};

ScalarPosterior infer_scalar(const EpisodeModel& model, const Episode& ep,
                             TargetScalar target,
                             const FactorMask& observed = FactorMask::all());

}  // namespace episeq
