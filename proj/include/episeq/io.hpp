#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "episeq/episode.hpp"
#include "episeq/model.hpp"

namespace episeq {

// Corpus files are line-delimited. Each record has nine pipe-separated
// fields: age|sex|death|beds|admission|discharge|labs|neuro|meds. Scalars use
// '-' when absent. Beds and diagnoses are comma-separated token lists; timed
// streams separate timepoints with ';' and items with ',', with '~' standing
// for a timepoint that has no items. An empty field is an empty stream.
inline constexpr const char* kCorpusHeader = "#episeq-corpus v1";
inline constexpr const char* kVocabHeader = "#episeq-vocab v1";
inline constexpr const char* kLatentsHeader = "#episeq-latents v1";

enum class LoadMode { Strict, SkipBad };

struct LoadDiagnostic {
  std::size_t line = 0;
  std::string message;
};

struct LoadResult {
  std::vector<Episode> episodes;
  std::vector<LoadDiagnostic> skipped;  // populated in SkipBad mode
};

// Vocabulary files hold one section per token list: [beds], [diagnoses],
// [labs], [neuro], [meds]; one token per line. Admission and discharge
// diagnoses read from the shared [diagnoses] section.
VocabularySet load_vocabulary(const std::string& path);
void save_vocabulary(const VocabularySet& vocab, const std::string& path);

LoadResult load_corpus(const std::string& path, const VocabularySet& vocab,
                       LoadMode mode = LoadMode::Strict, int threads = 1);
void save_corpus(const std::vector<Episode>& episodes, const VocabularySet& vocab,
                 const std::string& path);
std::string format_episode(const Episode& ep, const VocabularySet& vocab);
Episode parse_episode(const std::string& line, const VocabularySet& vocab);

// Latent sidecar written next to generated corpora: per episode the top
// state, the six stream states, and the hidden-state paths of the timed
// streams.
void save_latents(const std::vector<LatentTrace>& traces, const std::string& path);
std::vector<LatentTrace> load_latents(const std::string& path);

// Per-stream descriptive statistics. Lengths count items for collections and
// beds, timepoints for timed streams. Std is the population form.
struct StreamSummary {
  std::uint64_t episodes = 0;
  std::uint64_t min_len = 0;
  std::uint64_t max_len = 0;
  double mean_len = 0.0;
  double std_len = 0.0;
  // Timed streams only: item counts pooled over all timepoints.
  std::optional<std::uint64_t> min_items = std::nullopt;
  std::optional<std::uint64_t> max_items = std::nullopt;
  std::optional<double> mean_items = std::nullopt;
  std::optional<double> std_items = std::nullopt;
};

struct CorpusSummary {
  std::uint64_t episodes = 0;
  std::array<StreamSummary, kNumStreams> streams;
};

CorpusSummary summarize(const std::vector<Episode>& episodes);
void write_summary(const CorpusSummary& summary, std::ostream& out);

}  // namespace episeq
