// Command-line front end: train, select, sample, score, summarize, analyze.
// Every command validates and loads all inputs before it creates any output
// file, and all randomness flows from the --seed flag, so reruns with the
// same inputs are byte-identical regardless of --threads.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "episeq/analysis.hpp"
#include "episeq/errors.hpp"
#include "episeq/io.hpp"
#include "episeq/model.hpp"
#include "episeq/parallel.hpp"
#include "episeq/selection.hpp"
#include "episeq/serialize.hpp"

namespace {

using namespace episeq;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitMaxIters = 3;

std::string fmt(double v, const char* spec = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

// Empty path means stdout.
void emit(const std::string& path, const std::string& text) {
  if (path.empty())
    std::cout << text;
  else
    write_text(path, text);
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

std::vector<int> parse_grid(const std::string& text, const std::string& flag) {
  std::vector<int> grid;
  for (const std::string& part : split_csv(text)) {
    try {
      std::size_t used = 0;
      int v = std::stoi(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      grid.push_back(v);
    } catch (const std::exception&) {
      throw SchemaViolationError(flag + ": '" + part + "' is not an integer");
    }
  }
  return grid;
}

Stream parse_stream(const std::string& name) {
  std::optional<Stream> s = stream_from_name(name);
  if (!s) throw SchemaViolationError("unknown stream '" + name + "'");
  return *s;
}

TargetScalar parse_target(const std::string& name) {
  if (name == "age") return TargetScalar::Age;
  if (name == "sex") return TargetScalar::Sex;
  if (name == "death") return TargetScalar::Death;
  throw SchemaViolationError("unknown target scalar '" + name + "'");
}

const char* target_name(TargetScalar t) {
  switch (t) {
    case TargetScalar::Age: return "age";
    case TargetScalar::Sex: return "sex";
    case TargetScalar::Death: return "death";
  }
  return "?";
}

// Options shared by every command that runs EM.
struct FitOpts {
  std::uint64_t seed = 0;
  int max_iters = 200;
  double rel_tol = 1e-6;
  int restarts = 1;
  int threads = 1;
  int age_min = 0;
  int age_max = 120;
  std::string exclude_scalars;

  FitConfig to_config() const {
    FitConfig cfg;
    cfg.seed = seed;
    cfg.max_iters = max_iters;
    cfg.rel_tol = rel_tol;
    cfg.restarts = restarts;
    cfg.threads = threads;
    cfg.age_min = age_min;
    cfg.age_max = age_max;
    if (!exclude_scalars.empty()) {
      for (const std::string& name : split_csv(exclude_scalars)) {
        if (name == "age")
          cfg.use_age = false;
        else if (name == "sex")
          cfg.use_sex = false;
        else if (name == "death")
          cfg.use_death = false;
        else
          throw SchemaViolationError("unknown scalar '" + name + "'");
      }
    }
    return cfg;
  }
};

void add_fit_opts(CLI::App* cmd, FitOpts& o) {
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--max-iters", o.max_iters, "EM iteration cap")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--rel-tol", o.rel_tol,
                  "relative log-likelihood change that stops EM")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--restarts", o.restarts, "random restarts, best kept")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--threads", o.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--age-min", o.age_min, "lower bound of the age support");
  cmd->add_option("--age-max", o.age_max, "upper bound of the age support");
  cmd->add_option("--exclude-scalars", o.exclude_scalars,
                  "comma list of scalars (age,sex,death) left out of the "
                  "training likelihood");
}

std::string fit_report_text(const FitReport& report) {
  std::ostringstream out;
  out << "# fit report\n";
  out << "seed\t" << report.seed << '\n';
  out << "iterations\t" << report.iterations << '\n';
  out << "converged\t" << (report.converged ? 1 : 0) << '\n';
  out << "final_log_lik\t" << fmt(report.log_lik_trace.back()) << '\n';
  out << "# iteration\tlog_lik\n";
  for (std::size_t i = 0; i < report.log_lik_trace.size(); ++i)
    out << i << '\t' << fmt(report.log_lik_trace[i]) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string corpus, vocab, out, report;
  Hyperparams hp;
  FitOpts fit;
};

int run_train(const TrainOpts& o) {
  VocabularySet vocab = load_vocabulary(o.vocab);
  LoadResult lr = load_corpus(o.corpus, vocab, LoadMode::Strict, o.fit.threads);
  o.hp.validate();
  FitConfig cfg = o.fit.to_config();

  auto [model, report] = fit(lr.episodes, o.hp, vocab, cfg);

  save_model(model, o.out);
  if (!o.report.empty()) write_text(o.report, fit_report_text(report));
  std::cout << "episodes " << lr.episodes.size() << "\nlog_lik "
            << fmt(report.log_lik_trace.back()) << "\niterations "
            << report.iterations << "\nconverged "
            << (report.converged ? "yes" : "no") << '\n';
  return report.converged ? kExitOk : kExitMaxIters;
}

// ---------------------------------------------------------------------------
// select

struct SelectOpts {
  std::string corpus, vocab, out, report;
  std::string labs_hmm, neuro_hmm, meds_hmm;
  std::string labs, neuro, meds, beds, dx;
  std::string top;
  int fixed_top = 10;
  std::string convention = "shared";
  FitOpts fit;
};

int run_select(const SelectOpts& o) {
  VocabularySet vocab = load_vocabulary(o.vocab);
  LoadResult lr = load_corpus(o.corpus, vocab, LoadMode::Strict, o.fit.threads);
  FitConfig cfg = o.fit.to_config();

  SelectionGrids grids;
  grids.labs_hmm = parse_grid(o.labs_hmm, "--grid-labs-hmm");
  grids.neuro_hmm = parse_grid(o.neuro_hmm, "--grid-neuro-hmm");
  grids.meds_hmm = parse_grid(o.meds_hmm, "--grid-meds-hmm");
  grids.labs = parse_grid(o.labs, "--grid-labs");
  grids.neuro = parse_grid(o.neuro, "--grid-neuro");
  grids.meds = parse_grid(o.meds, "--grid-meds");
  grids.beds = parse_grid(o.beds, "--grid-beds");
  grids.dx = parse_grid(o.dx, "--grid-dx");
  if (!o.top.empty()) grids.top = parse_grid(o.top, "--grid-top");
  grids.fixed_top = o.fixed_top;

  CountConvention convention;
  if (o.convention == "shared")
    convention = CountConvention::Shared;
  else if (o.convention == "paper-table")
    convention = CountConvention::PaperTable;
  else
    throw SchemaViolationError("unknown convention '" + o.convention + "'");

  SelectionResult res = staged_select(lr.episodes, vocab, grids, cfg, convention);

  save_model(res.model, o.out);
  std::ostringstream report;
  write_selection_report(res, report);
  emit(o.report, report.str());
  return res.fit_report.converged ? kExitOk : kExitMaxIters;
}

// ---------------------------------------------------------------------------
// sample

struct SampleOpts {
  std::string model, out, latents, vocab_out;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  int threads = 1;
};

int run_sample(const SampleOpts& o) {
  EpisodeModel model = load_model(o.model);
  auto [episodes, traces] = sample_corpus(model, o.n, o.seed, o.threads);
  save_corpus(episodes, model.vocab, o.out);
  if (!o.latents.empty()) save_latents(traces, o.latents);
  if (!o.vocab_out.empty()) save_vocabulary(model.vocab, o.vocab_out);
  std::cout << "sampled " << episodes.size() << " episodes\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// score

struct ScoreOpts {
  std::string model, corpus, out;
  int threads = 1;
};

int run_score(const ScoreOpts& o) {
  EpisodeModel model = load_model(o.model);
  LoadResult lr = load_corpus(o.corpus, model.vocab, LoadMode::Strict, o.threads);

  std::vector<double> lls(lr.episodes.size());
  parallel_blocks(lr.episodes.size(), o.threads,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    for (std::size_t i = begin; i < end; ++i)
                      lls[i] = model.episode_log_lik(lr.episodes[i]);
                  });
  double total = total_log_lik(model, lr.episodes, o.threads);

  std::ostringstream out;
  out << "# index\tlog_lik\n";
  for (std::size_t i = 0; i < lls.size(); ++i)
    out << i << '\t' << fmt(lls[i]) << '\n';
  out << "total\t" << fmt(total) << '\n';
  emit(o.out, out.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// summarize

struct SummarizeOpts {
  std::string corpus, vocab, out;
  int threads = 1;
};

int run_summarize(const SummarizeOpts& o) {
  VocabularySet vocab = load_vocabulary(o.vocab);
  LoadResult lr = load_corpus(o.corpus, vocab, LoadMode::Strict, o.threads);
  CorpusSummary summary = summarize(lr.episodes);
  std::ostringstream out;
  write_summary(summary, out);
  emit(o.out, out.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze enrichment

struct EnrichmentOpts {
  std::string model, stream = "beds", target = "death", out;
};

int run_enrichment(const EnrichmentOpts& o) {
  EpisodeModel model = load_model(o.model);
  Stream stream = parse_stream(o.stream);
  TargetScalar target = parse_target(o.target);
  EnrichmentTable table = target_enrichment(model, stream, target);

  std::ostringstream out;
  out << "# stream\t" << stream_name(stream) << '\n';
  out << "# target\t" << target_name(target) << '\n';
  out << "# state\tvalue\n";
  for (const EnrichmentRow& row : table.rows)
    out << row.state << '\t' << fmt(row.probability, "%.10g") << '\n';
  emit(o.out, out.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze state-dist

struct StateDistOpts {
  std::string model, stream = "beds", out;
};

int run_state_dist(const StateDistOpts& o) {
  EpisodeModel model = load_model(o.model);
  Stream stream = parse_stream(o.stream);
  StateDistribution dist = state_distribution(model, stream);

  std::ostringstream out;
  out << "# stream\t" << stream_name(stream) << '\n';
  out << "# joint p(top, state); rows top states, columns stream states\n";
  out << "top";
  for (int k = 0; k < dist.n_states; ++k) out << '\t' << k;
  out << '\n';
  for (int z = 0; z < dist.n_top; ++z) {
    out << z;
    for (int k = 0; k < dist.n_states; ++k)
      out << '\t'
          << fmt(dist.joint[static_cast<std::size_t>(z * dist.n_states + k)],
                 "%.10g");
    out << '\n';
  }
  std::vector<double> prev = state_prevalence(model, stream);
  out << "prevalence";
  for (double p : prev) out << '\t' << fmt(p, "%.10g");
  out << '\n';
  emit(o.out, out.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze bed-trees

struct BedTreesOpts {
  std::string model, out;
  double threshold = 0.01;
  int max_depth = kDefaultTreeDepthCap;
};

int run_bed_trees(const BedTreesOpts& o) {
  EpisodeModel model = load_model(o.model);
  std::ostringstream out;
  for (int k = 0; k < model.beds.n_states(); ++k) {
    SequenceTree tree = sequence_tree(model.beds.states[static_cast<std::size_t>(k)],
                                      k, o.threshold, o.max_depth);
    write_tree_dot(tree, model.vocab.beds(), out);
  }
  emit(o.out, out.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze trajectories

struct TrajectoriesOpts {
  std::string model, stream = "labs", partition, out;
  int max_steps = 50;
  int top_k = 3;
};

struct PartitionEntry {
  std::string label;
  std::vector<int> group_a, group_b;
};

std::vector<PartitionEntry> load_partition(const std::string& path,
                                           const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<PartitionEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
      if (c == '|') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    fields.push_back(cur);
    if (fields.size() != 3 || fields[0].empty())
      throw ParseError("expected label|a1,a2,...|b1,b2,...", line_no);
    PartitionEntry entry;
    entry.label = fields[0];
    auto to_ids = [&](const std::string& csv) {
      std::vector<int> ids;
      for (const std::string& token : split_csv(csv)) {
        std::optional<int> id = vocab.id(token);
        if (!id) throw ParseError("unknown token '" + token + "'", line_no);
        ids.push_back(*id);
      }
      return ids;
    };
    entry.group_a = to_ids(fields[1]);
    entry.group_b = to_ids(fields[2]);
    entries.push_back(std::move(entry));
  }
  return entries;
}

int run_trajectories(const TrajectoriesOpts& o) {
  EpisodeModel model = load_model(o.model);
  Stream stream = parse_stream(o.stream);
  if (!is_hmm_stream(stream))
    throw SchemaViolationError("trajectories apply to timed streams only");
  const HmmSeqModel& hm =
      model.hmm[static_cast<std::size_t>(hmm_stream_index(stream))];
  const Vocabulary& vocab = model.vocab.for_stream(stream);

  std::vector<PartitionEntry> partition;
  if (!o.partition.empty()) partition = load_partition(o.partition, vocab);

  std::ostringstream out;
  out << "# stream\t" << stream_name(stream) << '\n';
  out << "# state\tstep\thmm_state\tterminal\titems";
  for (const PartitionEntry& e : partition) out << '\t' << e.label;
  out << '\n';
  for (int k = 0; k < hm.n_states(); ++k) {
    Trajectory traj = greedy_trajectory(hm, k, o.max_steps, o.top_k);
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const TrajectoryStep& step = traj.steps[t];
      bool last = t + 1 == traj.steps.size();
      out << k << '\t' << t << '\t' << step.state << '\t'
          << (last ? (traj.absorbed ? "absorbed" : "truncated") : "-");
      out << '\t';
      for (std::size_t i = 0; i < step.top_items.size(); ++i) {
        if (i) out << ',';
        out << vocab.token(step.top_items[i].first) << ':'
            << fmt(step.top_items[i].second, "%.6g");
      }
      const CategoricalDist& items =
          hm.emission.items[static_cast<std::size_t>(step.state)];
      for (const PartitionEntry& e : partition) {
        LikelihoodRatio r = item_likelihood_ratio(items, e.group_a, e.group_b);
        out << '\t';
        if (!r.administered)
          out << '-';
        else if (std::isinf(r.value))
          out << "inf";
        else
          out << fmt(r.value, "%.6g");
      }
      out << '\n';
    }
  }
  emit(o.out, out.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze top-items

struct TopItemsOpts {
  std::string model, stream = "discharge_dx", out;
  int k = 5;
};

int run_top_items(const TopItemsOpts& o) {
  EpisodeModel model = load_model(o.model);
  Stream stream = parse_stream(o.stream);
  if (!is_collection_stream(stream))
    throw SchemaViolationError("top-items applies to the diagnosis streams");
  std::vector<double> prev = state_prevalence(model, stream);

  std::ostringstream out;
  out << "# stream\t" << stream_name(stream) << '\n';
  out << "# state\tprevalence\trank\ttoken\tprob\n";
  for (int s = 0; s < model.dx_pool.n_states(); ++s) {
    auto ranked = top_items(model.dx_pool.states[static_cast<std::size_t>(s)].items, o.k);
    for (std::size_t r = 0; r < ranked.size(); ++r)
      out << s << '\t' << fmt(prev[static_cast<std::size_t>(s)], "%.10g") << '\t'
          << r + 1 << '\t' << model.vocab.diagnoses().token(ranked[r].first)
          << '\t' << fmt(ranked[r].second, "%.10g") << '\n';
  }
  emit(o.out, out.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze infer

struct InferOpts {
  std::string model, corpus, target = "death", streams, exclude_scalars, out;
  int threads = 1;
};

int run_infer(const InferOpts& o) {
  EpisodeModel model = load_model(o.model);
  LoadResult lr = load_corpus(o.corpus, model.vocab, LoadMode::Strict, o.threads);
  TargetScalar target = parse_target(o.target);

  FactorMask mask = FactorMask::all();
  if (!o.streams.empty()) {
    mask.streams.fill(false);
    for (const std::string& name : split_csv(o.streams))
      mask.streams[static_cast<std::size_t>(static_cast<int>(parse_stream(name)))] =
          true;
  }
  if (!o.exclude_scalars.empty()) {
    for (const std::string& name : split_csv(o.exclude_scalars)) {
      if (name == "age")
        mask.age = false;
      else if (name == "sex")
        mask.sex = false;
      else if (name == "death")
        mask.death = false;
      else
        throw SchemaViolationError("unknown scalar '" + name + "'");
    }
  }

  std::vector<ScalarPosterior> posts(lr.episodes.size());
  parallel_blocks(lr.episodes.size(), o.threads,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    for (std::size_t i = begin; i < end; ++i)
                      posts[i] = infer_scalar(model, lr.episodes[i], target, mask);
                  });

  std::ostringstream out;
  out << "# target\t" << target_name(target) << '\n';
  if (target == TargetScalar::Age) {
    out << "# index\tmean\tstd\n";
    for (std::size_t i = 0; i < posts.size(); ++i) {
      double mean = posts[i].mean();
      double var = 0.0;
      for (std::size_t a = 0; a < posts[i].probs.size(); ++a) {
        double v = static_cast<double>(posts[i].age_min + static_cast<int>(a)) - mean;
        var += v * v * posts[i].probs[a];
      }
      out << i << '\t' << fmt(mean, "%.10g") << '\t' << fmt(std::sqrt(var), "%.10g")
          << '\n';
    }
  } else {
    out << "# index\tp1\n";
    for (std::size_t i = 0; i < posts.size(); ++i)
      out << i << '\t' << fmt(posts[i].probs[1], "%.10g") << '\n';
  }
  emit(o.out, out.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layered mixture model for episodic event sequences"};
  app.require_subcommand(1);
  int rc = kExitOk;

  TrainOpts train_opts;
  CLI::App* train_cmd = app.add_subcommand("train", "fit a model with EM");
  train_cmd->add_option("--corpus", train_opts.corpus, "corpus file")->required();
  train_cmd->add_option("--vocab", train_opts.vocab, "vocabulary file")->required();
  train_cmd->add_option("--out", train_opts.out, "model output path")->required();
  train_cmd->add_option("--report", train_opts.report, "fit report output path");
  train_cmd->add_option("--top", train_opts.hp.n_top, "top-layer states");
  train_cmd->add_option("--dx", train_opts.hp.n_dx_states, "diagnosis pool states");
  train_cmd->add_option("--beds", train_opts.hp.n_beds_states, "bed sequence states");
  train_cmd->add_option("--labs", train_opts.hp.n_labs_states, "lab mixture states");
  train_cmd->add_option("--neuro", train_opts.hp.n_neuro_states,
                        "neuro mixture states");
  train_cmd->add_option("--meds", train_opts.hp.n_meds_states, "med mixture states");
  train_cmd->add_option("--labs-hmm", train_opts.hp.n_labs_hmm, "lab hidden states");
  train_cmd->add_option("--neuro-hmm", train_opts.hp.n_neuro_hmm,
                        "neuro hidden states");
  train_cmd->add_option("--meds-hmm", train_opts.hp.n_meds_hmm, "med hidden states");
  add_fit_opts(train_cmd, train_opts.fit);
  train_cmd->callback([&] { rc = run_train(train_opts); });

  SelectOpts select_opts;
  const std::string default_grid = "10,20,30,40,50,60,70,80,90,100";
  select_opts.labs_hmm = select_opts.neuro_hmm = select_opts.meds_hmm = default_grid;
  select_opts.labs = select_opts.neuro = select_opts.meds = default_grid;
  select_opts.beds = select_opts.dx = default_grid;
  CLI::App* select_cmd =
      app.add_subcommand("select", "staged BIC search over layer sizes");
  select_cmd->add_option("--corpus", select_opts.corpus, "corpus file")->required();
  select_cmd->add_option("--vocab", select_opts.vocab, "vocabulary file")->required();
  select_cmd->add_option("--out", select_opts.out, "model output path")->required();
  select_cmd->add_option("--report", select_opts.report,
                         "selection report path (stdout when omitted)");
  select_cmd->add_option("--grid-labs-hmm", select_opts.labs_hmm,
                         "comma list of lab hidden-state counts");
  select_cmd->add_option("--grid-neuro-hmm", select_opts.neuro_hmm,
                         "comma list of neuro hidden-state counts");
  select_cmd->add_option("--grid-meds-hmm", select_opts.meds_hmm,
                         "comma list of med hidden-state counts");
  select_cmd->add_option("--grid-labs", select_opts.labs,
                         "comma list of lab mixture sizes");
  select_cmd->add_option("--grid-neuro", select_opts.neuro,
                         "comma list of neuro mixture sizes");
  select_cmd->add_option("--grid-meds", select_opts.meds,
                         "comma list of med mixture sizes");
  select_cmd->add_option("--grid-beds", select_opts.beds,
                         "comma list of bed mixture sizes");
  select_cmd->add_option("--grid-dx", select_opts.dx,
                         "comma list of diagnosis pool sizes");
  select_cmd->add_option("--grid-top", select_opts.top,
                         "comma list of top-layer sizes (fixed --top when omitted)");
  select_cmd->add_option("--top", select_opts.fixed_top,
                         "top-layer states when --grid-top is omitted");
  select_cmd->add_option("--convention", select_opts.convention,
                         "parameter count convention: shared or paper-table");
  add_fit_opts(select_cmd, select_opts.fit);
  select_cmd->callback([&] { rc = run_select(select_opts); });

  SampleOpts sample_opts;
  CLI::App* sample_cmd = app.add_subcommand("sample", "draw a synthetic corpus");
  sample_cmd->add_option("--model", sample_opts.model, "model file")->required();
  sample_cmd->add_option("--out", sample_opts.out, "corpus output path")->required();
  sample_cmd->add_option("--latents", sample_opts.latents,
                         "latent sidecar output path");
  sample_cmd->add_option("--vocab-out", sample_opts.vocab_out,
                         "write the model's vocabulary here");
  sample_cmd->add_option("-n,--episodes", sample_opts.n, "episode count")->required();
  sample_cmd->add_option("--seed", sample_opts.seed, "random seed");
  sample_cmd->add_option("--threads", sample_opts.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  sample_cmd->callback([&] { rc = run_sample(sample_opts); });

  ScoreOpts score_opts;
  CLI::App* score_cmd =
      app.add_subcommand("score", "per-episode and total log-likelihood");
  score_cmd->add_option("--model", score_opts.model, "model file")->required();
  score_cmd->add_option("--corpus", score_opts.corpus, "corpus file")->required();
  score_cmd->add_option("--out", score_opts.out, "output path (stdout when omitted)");
  score_cmd->add_option("--threads", score_opts.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  score_cmd->callback([&] { rc = run_score(score_opts); });

  SummarizeOpts summarize_opts;
  CLI::App* summarize_cmd =
      app.add_subcommand("summarize", "per-stream corpus statistics");
  summarize_cmd->add_option("--corpus", summarize_opts.corpus, "corpus file")
      ->required();
  summarize_cmd->add_option("--vocab", summarize_opts.vocab, "vocabulary file")
      ->required();
  summarize_cmd->add_option("--out", summarize_opts.out,
                            "output path (stdout when omitted)");
  summarize_cmd->add_option("--threads", summarize_opts.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  summarize_cmd->callback([&] { rc = run_summarize(summarize_opts); });

  CLI::App* analyze_cmd =
      app.add_subcommand("analyze", "interrogate a trained model");
  analyze_cmd->require_subcommand(1);

  EnrichmentOpts enrichment_opts;
  CLI::App* enrichment_cmd = analyze_cmd->add_subcommand(
      "enrichment", "per-state target probability, sorted ascending");
  enrichment_cmd->add_option("--model", enrichment_opts.model, "model file")
      ->required();
  enrichment_cmd->add_option("--stream", enrichment_opts.stream, "stream name");
  enrichment_cmd->add_option("--target", enrichment_opts.target,
                             "age, sex, or death");
  enrichment_cmd->add_option("--out", enrichment_opts.out,
                             "output path (stdout when omitted)");
  enrichment_cmd->callback([&] { rc = run_enrichment(enrichment_opts); });

  StateDistOpts state_dist_opts;
  CLI::App* state_dist_cmd = analyze_cmd->add_subcommand(
      "state-dist", "joint distribution over top and stream states");
  state_dist_cmd->add_option("--model", state_dist_opts.model, "model file")
      ->required();
  state_dist_cmd->add_option("--stream", state_dist_opts.stream, "stream name");
  state_dist_cmd->add_option("--out", state_dist_opts.out,
                             "output path (stdout when omitted)");
  state_dist_cmd->callback([&] { rc = run_state_dist(state_dist_opts); });

  BedTreesOpts bed_trees_opts;
  CLI::App* bed_trees_cmd = analyze_cmd->add_subcommand(
      "bed-trees", "likely bed sequences per state as DOT digraphs");
  bed_trees_cmd->add_option("--model", bed_trees_opts.model, "model file")
      ->required();
  bed_trees_cmd->add_option("--threshold", bed_trees_opts.threshold,
                            "minimum termination probability");
  bed_trees_cmd->add_option("--max-depth", bed_trees_opts.max_depth,
                            "enumeration depth cap");
  bed_trees_cmd->add_option("--out", bed_trees_opts.out,
                            "output path (stdout when omitted)");
  bed_trees_cmd->callback([&] { rc = run_bed_trees(bed_trees_opts); });

  TrajectoriesOpts trajectories_opts;
  CLI::App* trajectories_cmd = analyze_cmd->add_subcommand(
      "trajectories", "greedy hidden-state walks with top items per step");
  trajectories_cmd->add_option("--model", trajectories_opts.model, "model file")
      ->required();
  trajectories_cmd->add_option("--stream", trajectories_opts.stream,
                               "labs, neuro, or meds");
  trajectories_cmd->add_option("--max-steps", trajectories_opts.max_steps,
                               "walk length cap")
      ->check(CLI::PositiveNumber);
  trajectories_cmd->add_option("--top-k", trajectories_opts.top_k,
                               "items reported per step")
      ->check(CLI::PositiveNumber);
  trajectories_cmd->add_option("--partition", trajectories_opts.partition,
                               "file of label|a,..|b,.. item groups; adds one "
                               "mass-ratio column per line");
  trajectories_cmd->add_option("--out", trajectories_opts.out,
                               "output path (stdout when omitted)");
  trajectories_cmd->callback([&] { rc = run_trajectories(trajectories_opts); });

  TopItemsOpts top_items_opts;
  CLI::App* top_items_cmd = analyze_cmd->add_subcommand(
      "top-items", "highest-probability diagnosis codes per pool state");
  top_items_cmd->add_option("--model", top_items_opts.model, "model file")
      ->required();
  top_items_cmd->add_option("--stream", top_items_opts.stream,
                            "admission_dx or discharge_dx (sets the prevalence "
                            "column)");
  top_items_cmd->add_option("-k,--top-k", top_items_opts.k, "items per state")
      ->check(CLI::PositiveNumber);
  top_items_cmd->add_option("--out", top_items_opts.out,
                            "output path (stdout when omitted)");
  top_items_cmd->callback([&] { rc = run_top_items(top_items_opts); });

  InferOpts infer_opts;
  CLI::App* infer_cmd = analyze_cmd->add_subcommand(
      "infer", "posterior of one scalar given partial episodes");
  infer_cmd->add_option("--model", infer_opts.model, "model file")->required();
  infer_cmd->add_option("--corpus", infer_opts.corpus, "partial episode corpus")
      ->required();
  infer_cmd->add_option("--target", infer_opts.target, "age, sex, or death");
  infer_cmd->add_option("--streams", infer_opts.streams,
                        "comma list of streams to condition on (default all)");
  infer_cmd->add_option("--exclude-scalars", infer_opts.exclude_scalars,
                        "comma list of scalars dropped from conditioning");
  infer_cmd->add_option("--threads", infer_opts.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  infer_cmd->add_option("--out", infer_opts.out,
                        "output path (stdout when omitted)");
  infer_cmd->callback([&] { rc = run_infer(infer_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return rc;
}
