#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace episeq {

// The six per-episode event streams. Admission and discharge diagnoses are
// unordered collections drawing on one shared pool of states; beds is a plain
// Markov sequence; labs, neuro and meds are timestamped sequences of item
// multisets modeled by hidden-state chains.
enum class Stream : int {
  Beds = 0,
  AdmissionDx = 1,
  DischargeDx = 2,
  Labs = 3,
  Neuro = 4,
  Meds = 5,
};

inline constexpr int kNumStreams = 6;
inline constexpr int kNumHmmStreams = 3;
inline constexpr std::array<Stream, kNumStreams> kAllStreams = {
    Stream::Beds,  Stream::AdmissionDx, Stream::DischargeDx,
    Stream::Labs,  Stream::Neuro,       Stream::Meds};

const char* stream_name(Stream s);
std::optional<Stream> stream_from_name(std::string_view name);

inline bool is_collection_stream(Stream s) {
  return s == Stream::AdmissionDx || s == Stream::DischargeDx;
}
inline bool is_hmm_stream(Stream s) {
  return s == Stream::Labs || s == Stream::Neuro || s == Stream::Meds;
}
// Labs -> 0, Neuro -> 1, Meds -> 2.
inline int hmm_stream_index(Stream s) { return static_cast<int>(s) - 3; }
inline Stream hmm_stream_at(int i) { return static_cast<Stream>(i + 3); }

// One hospitalization. Scalars are optional; an absent scalar simply
// contributes no likelihood factor. Streams are always present, possibly
// empty. Items are vocabulary ids.
struct Episode {
  std::optional<int> age;
  std::optional<int> sex;    // 0 or 1
  std::optional<int> death;  // 0 or 1

  std::vector<int> beds;
  std::vector<int> admission_dx;
  std::vector<int> discharge_dx;
  std::vector<std::vector<int>> labs;
  std::vector<std::vector<int>> neuro;
  std::vector<std::vector<int>> meds;

  const std::vector<int>& collection(Stream s) const;
  const std::vector<std::vector<int>>& timed(Stream s) const;
  std::vector<std::vector<int>>& timed(Stream s);
};

// Ordered token list with a token -> id lookup. Ids are dense from 0.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const { return tokens_[static_cast<std::size_t>(id)]; }
  std::optional<int> id(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool operator==(const Vocabulary&) const = default;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Token lists for all streams. Admission and discharge diagnoses share one
// vocabulary because they share the state pool.
class VocabularySet {
 public:
  VocabularySet() = default;
  VocabularySet(Vocabulary beds, Vocabulary diagnoses, Vocabulary labs,
                Vocabulary neuro, Vocabulary meds);

  const Vocabulary& beds() const { return beds_; }
  const Vocabulary& diagnoses() const { return diagnoses_; }
  const Vocabulary& labs() const { return labs_; }
  const Vocabulary& neuro() const { return neuro_; }
  const Vocabulary& meds() const { return meds_; }
  const Vocabulary& for_stream(Stream s) const;

  bool operator==(const VocabularySet&) const = default;

 private:
  Vocabulary beds_, diagnoses_, labs_, neuro_, meds_;
};

// Layer sizes. The admission/discharge pool is one set of states, so it has a
// single count.
struct Hyperparams {
  int n_top = 1;
  int n_dx_states = 1;
  int n_beds_states = 1;
  int n_labs_states = 1;
  int n_neuro_states = 1;
  int n_meds_states = 1;
  int n_labs_hmm = 1;
  int n_neuro_hmm = 1;
  int n_meds_hmm = 1;

  int n_states(Stream s) const;
  int n_hmm(Stream s) const;  // HMM streams only
  void validate() const;      // every count >= 1
  bool operator==(const Hyperparams&) const = default;
};

}  // namespace episeq
