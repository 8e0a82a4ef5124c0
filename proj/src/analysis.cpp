#include "episeq/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "episeq/errors.hpp"

namespace episeq {

namespace {

// Expected value of the target scalar under top state z. Binary targets give
// P(1); age gives the mean of the quantized distribution.
double target_value(const EpisodeModel& model, TargetScalar target, int z) {
  switch (target) {
    case TargetScalar::Sex:
      return model.sex[static_cast<std::size_t>(z)].p();
    case TargetScalar::Death:
      return model.death[static_cast<std::size_t>(z)].p();
    case TargetScalar::Age: {
      const QuantizedGaussianDist& d = model.age[static_cast<std::size_t>(z)];
      double mean = 0.0;
      for (int a = d.support_min(); a <= d.support_max(); ++a)
        mean += static_cast<double>(a) * std::exp(d.log_pmf(a));
      return mean;
    }
  }
  return 0.0;
}

int argmax_lowest(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// Enrichment and state distributions

EnrichmentTable target_enrichment(const EpisodeModel& model, Stream stream,
                                  TargetScalar target) {
  EnrichmentTable table;
  table.stream = stream;
  const std::vector<CategoricalDist>& mixing = model.mixing_for(stream);
  int n_states = model.n_states(stream);
  table.rows.reserve(static_cast<std::size_t>(n_states));
  for (int k = 0; k < n_states; ++k) {
    double num = 0.0;
    double den = 0.0;
    for (int z = 0; z < model.n_top(); ++z) {
      double w = model.top_weights.prob(z) *
                 mixing[static_cast<std::size_t>(z)].prob(k);
      num += w * target_value(model, target, z);
      den += w;
    }
    table.rows.push_back({k, num / den});
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const EnrichmentRow& a, const EnrichmentRow& b) {
                     return a.probability < b.probability;
                   });
  return table;
}

StateDistribution state_distribution(const EpisodeModel& model, Stream stream) {
  StateDistribution dist;
  dist.stream = stream;
  dist.n_top = model.n_top();
  dist.n_states = model.n_states(stream);
  dist.joint.resize(static_cast<std::size_t>(dist.n_top * dist.n_states));
  const std::vector<CategoricalDist>& mixing = model.mixing_for(stream);
  for (int z = 0; z < dist.n_top; ++z)
    for (int k = 0; k < dist.n_states; ++k)
      dist.joint[static_cast<std::size_t>(z * dist.n_states + k)] =
          model.top_weights.prob(z) * mixing[static_cast<std::size_t>(z)].prob(k);
  return dist;
}

std::vector<double> state_prevalence(const EpisodeModel& model, Stream stream) {
  StateDistribution dist = state_distribution(model, stream);
  std::vector<double> prev(static_cast<std::size_t>(dist.n_states), 0.0);
  for (int z = 0; z < dist.n_top; ++z)
    for (int k = 0; k < dist.n_states; ++k)
      prev[static_cast<std::size_t>(k)] +=
          dist.joint[static_cast<std::size_t>(z * dist.n_states + k)];
  return prev;
}

// ---------------------------------------------------------------------------
// Sequence trees

namespace {

struct TreeBuilder {
  const MarkovSeqState& model;
  double threshold;
  int max_depth;
  std::vector<double> tail;  // tail[d] = P(length >= d)

  // Returns whether the node stays: its own termination probability reaches
  // the threshold or some descendant's does.
  bool build(SequenceTreeNode& node, int depth, double log_path) {
    node.termination_prob = std::exp(model.length.log_pmf(depth) + log_path);
    bool keep = node.termination_prob >= threshold;
    // Any completed descendant has probability at most
    // path * P(length >= depth+1), so nothing below can reach the threshold
    // once that bound falls under it.
    if (depth < max_depth &&
        std::exp(log_path) * tail[static_cast<std::size_t>(depth + 1)] >= threshold) {
      const MarkovChainDist& chain = model.chain;
      for (int item = 0; item < chain.n_items(); ++item) {
        double step = depth == 0 ? chain.log_initial(item)
                                 : chain.log_transition(node.item, item);
        SequenceTreeNode child;
        child.item = item;
        if (build(child, depth + 1, log_path + step)) {
          node.children.push_back(std::move(child));
          keep = true;
        }
      }
    }
    return keep;
  }
};

}  // namespace

SequenceTree sequence_tree(const MarkovSeqState& state_model, int state,
                           double threshold, int max_depth) {
  if (max_depth < 0 || max_depth > kDefaultTreeDepthCap)
    throw SchemaViolationError("tree depth must be in [0, 64]");
  SequenceTree tree;
  tree.state = state;
  tree.threshold = threshold;

  TreeBuilder builder{state_model, threshold, max_depth, {}};
  builder.tail.resize(static_cast<std::size_t>(max_depth) + 2);
  double cum = 0.0;
  for (int d = 0; d <= max_depth + 1; ++d) {
    builder.tail[static_cast<std::size_t>(d)] = std::max(0.0, 1.0 - cum);
    cum += std::exp(state_model.length.log_pmf(d));
  }
  // The root is the empty sequence and is kept unconditionally as the anchor.
  builder.build(tree.root, 0, 0.0);
  return tree;
}

void write_tree_dot(const SequenceTree& tree, const Vocabulary& vocab,
                    std::ostream& out) {
  out << "digraph seq_tree_" << tree.state << " {\n";
  out << "  node [shape=box];\n";
  char buf[64];
  int next_id = 0;
  // Iterative DFS carrying (node, assigned id); children are emitted in item
  // order so output is deterministic.
  struct Entry {
    const SequenceTreeNode* node;
    int id;
  };
  std::vector<Entry> stack;
  std::snprintf(buf, sizeof buf, "%.6g", tree.root.termination_prob);
  out << "  n0 [label=\"" << buf << "\"];\n";
  stack.push_back({&tree.root, next_id++});
  while (!stack.empty()) {
    Entry e = stack.back();
    stack.pop_back();
    for (const SequenceTreeNode& child : e.node->children) {
      int id = next_id++;
      std::snprintf(buf, sizeof buf, "%.6g", child.termination_prob);
      out << "  n" << id << " [label=\"" << buf << "\"];\n";
      out << "  n" << e.id << " -> n" << id << " [label=\""
          << vocab.token(child.item) << "\"];\n";
      stack.push_back({&child, id});
    }
  }
  out << "}\n";
}

// ---------------------------------------------------------------------------
// Trajectories

Trajectory greedy_trajectory(const HmmSeqModel& model, int stream_state,
                             int max_steps, int top_k) {
  if (stream_state < 0 || stream_state >= model.n_states())
    throw SchemaViolationError("stream state index out of range");
  if (max_steps < 1) throw SchemaViolationError("max_steps must be >= 1");

  const MarkovChainDist& chain =
      model.states[static_cast<std::size_t>(stream_state)].state_chain;
  Trajectory traj;
  traj.stream_state = stream_state;

  int s = argmax_lowest(chain.initial().probs());
  while (true) {
    traj.steps.push_back(
        {s, top_items(model.emission.items[static_cast<std::size_t>(s)], top_k)});
    int next = argmax_lowest(chain.row(s).probs());
    if (next == s) {
      traj.absorbed = true;
      break;
    }
    if (static_cast<int>(traj.steps.size()) >= max_steps) break;
    s = next;
  }
  return traj;
}

std::vector<int> most_likely_state_path(const MarkovChainDist& chain, int length) {
  if (length <= 0) return {};
  int n = chain.n_items();
  std::vector<std::vector<double>> score(static_cast<std::size_t>(length),
                                         std::vector<double>(static_cast<std::size_t>(n)));
  std::vector<std::vector<int>> from(static_cast<std::size_t>(length),
                                     std::vector<int>(static_cast<std::size_t>(n), 0));
  for (int s = 0; s < n; ++s) score[0][static_cast<std::size_t>(s)] = chain.log_initial(s);
  for (int t = 1; t < length; ++t)
    for (int s2 = 0; s2 < n; ++s2) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int s = 0; s < n; ++s) {
        double c = score[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(s)] +
                   chain.log_transition(s, s2);
        if (c > best) {
          best = c;
          arg = s;
        }
      }
      score[static_cast<std::size_t>(t)][static_cast<std::size_t>(s2)] = best;
      from[static_cast<std::size_t>(t)][static_cast<std::size_t>(s2)] = arg;
    }
  std::vector<int> path(static_cast<std::size_t>(length));
  path.back() = argmax_lowest(score.back());
  for (int t = length - 1; t > 0; --t)
    path[static_cast<std::size_t>(t - 1)] =
        from[static_cast<std::size_t>(t)][static_cast<std::size_t>(path[static_cast<std::size_t>(t)])];
  return path;
}

// ---------------------------------------------------------------------------
// Item mass ratios and rankings

LikelihoodRatio item_likelihood_ratio(const CategoricalDist& items,
                                      std::span<const int> group_a,
                                      std::span<const int> group_b) {
  auto mass = [&](std::span<const int> group) {
    double m = 0.0;
    for (int id : group) {
      if (id < 0 || id >= items.size())
        throw UnknownTokenError("item id " + std::to_string(id) +
                                " outside the vocabulary");
      m += items.prob(id);
    }
    return m;
  };
  double a = mass(group_a);
  double b = mass(group_b);
  LikelihoodRatio r;
  r.administered = a + b >= kAdministeredThreshold;
  // IEEE division gives the +inf sentinel when b carries no mass.
  r.value = a / b;
  return r;
}

std::vector<std::pair<int, double>> top_items(const CategoricalDist& items, int k) {
  if (k < 1) throw SchemaViolationError("top_items needs k >= 1");
  std::vector<int> ids(static_cast<std::size_t>(items.size()));
  for (int i = 0; i < items.size(); ++i) ids[static_cast<std::size_t>(i)] = i;
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
    return items.prob(a) > items.prob(b);
  });
  std::size_t take = std::min(ids.size(), static_cast<std::size_t>(k));
  std::vector<std::pair<int, double>> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i)
    out.emplace_back(ids[i], items.prob(ids[i]));
  return out;
}

// ---------------------------------------------------------------------------
// Conditional scalar inference

double ScalarPosterior::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i)
    m += static_cast<double>(age_min + static_cast<int>(i)) * probs[i];
  return m;
}

ScalarPosterior infer_scalar(const EpisodeModel& model, const Episode& ep,
                             TargetScalar target, const FactorMask& observed) {
  FactorMask mask = observed;
  switch (target) {
    case TargetScalar::Age: mask.age = false; break;
    case TargetScalar::Sex: mask.sex = false; break;
    case TargetScalar::Death: mask.death = false; break;
  }
  std::vector<double> gamma = model.top_posterior(ep, mask);

  ScalarPosterior post;
  post.target = target;
  if (target == TargetScalar::Age) {
    const QuantizedGaussianDist& first = model.age[0];
    post.age_min = first.support_min();
    int support = first.support_max() - first.support_min() + 1;
    post.probs.assign(static_cast<std::size_t>(support), 0.0);
    for (int z = 0; z < model.n_top(); ++z) {
      const QuantizedGaussianDist& d = model.age[static_cast<std::size_t>(z)];
      for (int a = d.support_min(); a <= d.support_max(); ++a)
        post.probs[static_cast<std::size_t>(a - post.age_min)] +=
            gamma[static_cast<std::size_t>(z)] * std::exp(d.log_pmf(a));
    }
  } else {
    post.probs.assign(2, 0.0);
    for (int z = 0; z < model.n_top(); ++z) {
      double p = target == TargetScalar::Sex
                     ? model.sex[static_cast<std::size_t>(z)].p()
                     : model.death[static_cast<std::size_t>(z)].p();
      post.probs[0] += gamma[static_cast<std::size_t>(z)] * (1.0 - p);
      post.probs[1] += gamma[static_cast<std::size_t>(z)] * p;
    }
  }
  return post;
}

}  // namespace episeq
