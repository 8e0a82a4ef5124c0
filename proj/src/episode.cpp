#include "episeq/episode.hpp"

#include <cctype>
#include <string>

#include "episeq/errors.hpp"

namespace episeq {

const char* stream_name(Stream s) {
  switch (s) {
    case Stream::Beds: return "beds";
    case Stream::AdmissionDx: return "admission_dx";
    case Stream::DischargeDx: return "discharge_dx";
    case Stream::Labs: return "labs";
    case Stream::Neuro: return "neuro";
    case Stream::Meds: return "meds";
  }
  return "?";
}

std::optional<Stream> stream_from_name(std::string_view name) {
  if (name == "beds") return Stream::Beds;
  if (name == "admission_dx" || name == "admission") return Stream::AdmissionDx;
  if (name == "discharge_dx" || name == "discharge") return Stream::DischargeDx;
  if (name == "labs") return Stream::Labs;
  if (name == "neuro") return Stream::Neuro;
  if (name == "meds") return Stream::Meds;
  return std::nullopt;
}

const std::vector<int>& Episode::collection(Stream s) const {
  if (s == Stream::AdmissionDx) return admission_dx;
  if (s == Stream::DischargeDx) return discharge_dx;
  throw SchemaViolationError("stream is not a collection stream");
}

const std::vector<std::vector<int>>& Episode::timed(Stream s) const {
  switch (s) {
    case Stream::Labs: return labs;
    case Stream::Neuro: return neuro;
    case Stream::Meds: return meds;
    default: throw SchemaViolationError("stream has no timepoints");
  }
}

std::vector<std::vector<int>>& Episode::timed(Stream s) {
  switch (s) {
    case Stream::Labs: return labs;
    case Stream::Neuro: return neuro;
    case Stream::Meds: return meds;
    default: throw SchemaViolationError("stream has no timepoints");
  }
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const std::string& tok = tokens_[i];
    if (tok.empty()) throw SchemaViolationError("vocabulary tokens must be non-empty");
    for (char c : tok) {
      // The corpus format reserves its delimiters; tokens must stay clear of
      // them so records stay parseable.
      if (c == '|' || c == ',' || c == ';' || c == '~' || c == '#' ||
          std::isspace(static_cast<unsigned char>(c)))
        throw SchemaViolationError("token '" + tok + "' contains a reserved character");
    }
    auto [it, inserted] = index_.emplace(tok, static_cast<int>(i));
    (void)it;
    if (!inserted) throw SchemaViolationError("duplicate token '" + tok + "'");
  }
}

std::optional<int> Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

VocabularySet::VocabularySet(Vocabulary beds, Vocabulary diagnoses, Vocabulary labs,
                             Vocabulary neuro, Vocabulary meds)
    : beds_(std::move(beds)),
      diagnoses_(std::move(diagnoses)),
      labs_(std::move(labs)),
      neuro_(std::move(neuro)),
      meds_(std::move(meds)) {}

const Vocabulary& VocabularySet::for_stream(Stream s) const {
  switch (s) {
    case Stream::Beds: return beds_;
    case Stream::AdmissionDx:
    case Stream::DischargeDx: return diagnoses_;
    case Stream::Labs: return labs_;
    case Stream::Neuro: return neuro_;
    case Stream::Meds: return meds_;
  }
  return beds_;
}

int Hyperparams::n_states(Stream s) const {
  switch (s) {
    case Stream::Beds: return n_beds_states;
    case Stream::AdmissionDx:
    case Stream::DischargeDx: return n_dx_states;
    case Stream::Labs: return n_labs_states;
    case Stream::Neuro: return n_neuro_states;
    case Stream::Meds: return n_meds_states;
  }
  return 0;
}

int Hyperparams::n_hmm(Stream s) const {
  switch (s) {
    case Stream::Labs: return n_labs_hmm;
    case Stream::Neuro: return n_neuro_hmm;
    case Stream::Meds: return n_meds_hmm;
    default: throw SchemaViolationError("stream has no hidden states");
  }
}

void Hyperparams::validate() const {
  auto check = [](int v, const char* what) {
    if (v < 1)
      throw SchemaViolationError(std::string(what) + " must be >= 1, got " +
                                 std::to_string(v));
  };
  check(n_top, "n_top");
  check(n_dx_states, "n_dx_states");
  check(n_beds_states, "n_beds_states");
  check(n_labs_states, "n_labs_states");
  check(n_neuro_states, "n_neuro_states");
  check(n_meds_states, "n_meds_states");
  check(n_labs_hmm, "n_labs_hmm");
  check(n_neuro_hmm, "n_neuro_hmm");
  check(n_meds_hmm, "n_meds_hmm");
}

}  // namespace episeq
