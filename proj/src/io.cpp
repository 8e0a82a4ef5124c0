#include "episeq/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "episeq/errors.hpp"
#include "episeq/parallel.hpp"

namespace episeq {

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

int parse_int(std::string_view text, const char* what) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError(std::string(what) + " is not an integer: '" +
                     std::string(text) + "'");
  return value;
}

std::optional<int> parse_scalar(std::string_view text, const char* what) {
  if (text == "-") return std::nullopt;
  return parse_int(text, what);
}

int parse_int_at(std::string_view text, const char* what, std::size_t line_no) {
  try {
    return parse_int(text, what);
  } catch (const ParseError& e) {
    throw ParseError(e.what(), line_no);
  }
}

int token_to_id(std::string_view tok, const Vocabulary& vocab, Stream s) {
  std::optional<int> id = vocab.id(tok);
  if (!id)
    throw UnknownTokenError(std::string("unknown ") + stream_name(s) +
                            " token '" + std::string(tok) + "'");
  return *id;
}

std::vector<int> parse_token_list(std::string_view field, const Vocabulary& vocab,
                                  Stream s) {
  std::vector<int> ids;
  if (field.empty()) return ids;
  for (std::string_view tok : split(field, ',')) {
    if (tok.empty())
      throw ParseError(std::string("empty token in ") + stream_name(s) + " field");
    ids.push_back(token_to_id(tok, vocab, s));
  }
  return ids;
}

std::vector<std::vector<int>> parse_timed(std::string_view field,
                                          const Vocabulary& vocab, Stream s) {
  std::vector<std::vector<int>> seq;
  if (field.empty()) return seq;
  for (std::string_view point : split(field, ';')) {
    if (point.empty())
      throw ParseError(std::string("empty timepoint in ") + stream_name(s) +
                       " field; use '~' for a timepoint without items");
    if (point == "~") {
      seq.emplace_back();
      continue;
    }
    seq.push_back(parse_token_list(point, vocab, s));
  }
  return seq;
}

void append_token_list(std::string& out, const std::vector<int>& ids,
                       const Vocabulary& vocab) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ',';
    out += vocab.token(ids[i]);
  }
}

void append_timed(std::string& out, const std::vector<std::vector<int>>& seq,
                  const Vocabulary& vocab) {
  for (std::size_t t = 0; t < seq.size(); ++t) {
    if (t) out += ';';
    if (seq[t].empty()) {
      out += '~';
    } else {
      append_token_list(out, seq[t], vocab);
    }
  }
}

}  // namespace

Episode parse_episode(const std::string& line, const VocabularySet& vocab) {
  std::vector<std::string_view> fields = split(line, '|');
  if (fields.size() != 9)
    throw ParseError("expected 9 fields, got " + std::to_string(fields.size()));
  Episode ep;
  ep.age = parse_scalar(fields[0], "age");
  if (ep.age && (*ep.age < 0 || *ep.age > 1000))
    throw SchemaViolationError("age out of range: " + std::to_string(*ep.age));
  ep.sex = parse_scalar(fields[1], "sex");
  if (ep.sex && *ep.sex != 0 && *ep.sex != 1)
    throw SchemaViolationError("sex must be 0 or 1");
  ep.death = parse_scalar(fields[2], "death");
  if (ep.death && *ep.death != 0 && *ep.death != 1)
    throw SchemaViolationError("death must be 0 or 1");
  ep.beds = parse_token_list(fields[3], vocab.beds(), Stream::Beds);
  ep.admission_dx =
      parse_token_list(fields[4], vocab.diagnoses(), Stream::AdmissionDx);
  ep.discharge_dx =
      parse_token_list(fields[5], vocab.diagnoses(), Stream::DischargeDx);
  ep.labs = parse_timed(fields[6], vocab.labs(), Stream::Labs);
  ep.neuro = parse_timed(fields[7], vocab.neuro(), Stream::Neuro);
  ep.meds = parse_timed(fields[8], vocab.meds(), Stream::Meds);
  return ep;
}

std::string format_episode(const Episode& ep, const VocabularySet& vocab) {
  std::string out;
  auto scalar = [&](const std::optional<int>& v) {
    if (v) {
      out += std::to_string(*v);
    } else {
      out += '-';
    }
  };
  scalar(ep.age);
  out += '|';
  scalar(ep.sex);
  out += '|';
  scalar(ep.death);
  out += '|';
  append_token_list(out, ep.beds, vocab.beds());
  out += '|';
  append_token_list(out, ep.admission_dx, vocab.diagnoses());
  out += '|';
  append_token_list(out, ep.discharge_dx, vocab.diagnoses());
  out += '|';
  append_timed(out, ep.labs, vocab.labs());
  out += '|';
  append_timed(out, ep.neuro, vocab.neuro());
  out += '|';
  append_timed(out, ep.meds, vocab.meds());
  return out;
}

LoadResult load_corpus(const std::string& path, const VocabularySet& vocab,
                       LoadMode mode, int threads) {
  std::vector<std::string> lines = read_lines(path);

  // Record lines with their 1-based numbers; header and comment lines skipped.
  std::vector<std::pair<std::size_t, const std::string*>> records;
  bool saw_header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line == kCorpusHeader) saw_header = true;
      continue;
    }
    records.emplace_back(i + 1, &line);
  }
  if (!records.empty() && !saw_header)
    throw ParseError("missing corpus header '" + std::string(kCorpusHeader) +
                     "' in '" + path + "'");

  // Lines parse independently; slots keep the original order.
  std::vector<std::optional<Episode>> parsed(records.size());
  std::vector<std::optional<LoadDiagnostic>> errors(records.size());
  parallel_blocks(records.size(), threads,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        parsed[i] = parse_episode(*records[i].second, vocab);
      } catch (const Error& e) {
        errors[i] = LoadDiagnostic{records[i].first, e.what()};
      }
    }
  });

  LoadResult result;
  result.episodes.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (errors[i]) {
      if (mode == LoadMode::Strict)
        throw ParseError(errors[i]->message, errors[i]->line);
      result.skipped.push_back(*errors[i]);
      continue;
    }
    result.episodes.push_back(std::move(*parsed[i]));
  }
  return result;
}

void save_corpus(const std::vector<Episode>& episodes, const VocabularySet& vocab,
                 const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << kCorpusHeader << '\n';
  for (const Episode& ep : episodes) out << format_episode(ep, vocab) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Vocabulary files

VocabularySet load_vocabulary(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  std::array<std::vector<std::string>, 5> sections;
  const std::array<std::string, 5> names = {"beds", "diagnoses", "labs", "neuro",
                                            "meds"};
  int current = -1;
  bool saw_header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line == kVocabHeader) saw_header = true;
      continue;
    }
    if (line.front() == '[' && line.back() == ']') {
      std::string name = line.substr(1, line.size() - 2);
      auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end())
        throw ParseError("unknown vocabulary section '" + name + "'", i + 1);
      current = static_cast<int>(it - names.begin());
      continue;
    }
    if (current < 0)
      throw ParseError("token before any [section] header", i + 1);
    sections[static_cast<std::size_t>(current)].push_back(line);
  }
  if (!saw_header)
    throw ParseError("missing vocabulary header '" + std::string(kVocabHeader) +
                     "' in '" + path + "'");
  for (std::size_t k = 0; k < names.size(); ++k)
    if (sections[k].empty())
      throw SchemaViolationError("vocabulary section [" + names[k] +
                                 "] is missing or empty in '" + path + "'");
  try {
    return VocabularySet(Vocabulary(sections[0]), Vocabulary(sections[1]),
                         Vocabulary(sections[2]), Vocabulary(sections[3]),
                         Vocabulary(sections[4]));
  } catch (const SchemaViolationError& e) {
    throw SchemaViolationError(std::string(e.what()) + " in '" + path + "'");
  }
}

void save_vocabulary(const VocabularySet& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << kVocabHeader << '\n';
  auto section = [&](const char* name, const Vocabulary& v) {
    out << '[' << name << "]\n";
    for (const std::string& tok : v.tokens()) out << tok << '\n';
  };
  section("beds", vocab.beds());
  section("diagnoses", vocab.diagnoses());
  section("labs", vocab.labs());
  section("neuro", vocab.neuro());
  section("meds", vocab.meds());
  if (!out) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Latent sidecar

void save_latents(const std::vector<LatentTrace>& traces, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << kLatentsHeader << '\n';
  auto path_field = [&](const std::vector<int>& p) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (i) out << ',';
      out << p[i];
    }
  };
  for (const LatentTrace& tr : traces) {
    out << tr.top << '|';
    for (std::size_t x = 0; x < kNumStreams; ++x) {
      if (x) out << ',';
      out << tr.sub[x];
    }
    out << '|';
    path_field(tr.hmm_path[0]);
    out << '|';
    path_field(tr.hmm_path[1]);
    out << '|';
    path_field(tr.hmm_path[2]);
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<LatentTrace> load_latents(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  std::vector<LatentTrace> traces;
  bool saw_header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line == kLatentsHeader) saw_header = true;
      continue;
    }
    std::vector<std::string_view> fields = split(line, '|');
    if (fields.size() != 5)
      throw ParseError("expected 5 fields, got " + std::to_string(fields.size()),
                       i + 1);
    LatentTrace tr;
    tr.top = parse_int_at(fields[0], "top state", i + 1);
    std::vector<std::string_view> subs = split(fields[1], ',');
    if (subs.size() != kNumStreams)
      throw ParseError("expected 6 stream states", i + 1);
    for (std::size_t x = 0; x < kNumStreams; ++x)
      tr.sub[x] = parse_int_at(subs[x], "stream state", i + 1);
    for (int h = 0; h < kNumHmmStreams; ++h) {
      std::string_view f = fields[static_cast<std::size_t>(2 + h)];
      if (f.empty()) continue;
      for (std::string_view tok : split(f, ','))
        tr.hmm_path[static_cast<std::size_t>(h)].push_back(
            parse_int_at(tok, "hidden state", i + 1));
    }
    traces.push_back(std::move(tr));
  }
  if (!traces.empty() && !saw_header)
    throw ParseError("missing latents header '" + std::string(kLatentsHeader) +
                     "' in '" + path + "'");
  return traces;
}

// ---------------------------------------------------------------------------
// Summaries

CorpusSummary summarize(const std::vector<Episode>& episodes) {
  if (episodes.empty())
    throw EmptyDatasetError("summarize needs a non-empty corpus");
  CorpusSummary summary;
  summary.episodes = episodes.size();
  for (Stream s : kAllStreams) {
    StreamSummary& st = summary.streams[static_cast<std::size_t>(static_cast<int>(s))];
    st.episodes = episodes.size();
    double sum = 0.0, sum_sq = 0.0;
    std::uint64_t mn = ~0ULL, mx = 0;
    double item_sum = 0.0, item_sq = 0.0;
    std::uint64_t points = 0, item_mn = ~0ULL, item_mx = 0;
    for (const Episode& ep : episodes) {
      std::uint64_t len = 0;
      if (s == Stream::Beds) {
        len = ep.beds.size();
      } else if (is_collection_stream(s)) {
        len = ep.collection(s).size();
      } else {
        const auto& seq = ep.timed(s);
        len = seq.size();
        for (const auto& point : seq) {
          std::uint64_t c = point.size();
          item_sum += static_cast<double>(c);
          item_sq += static_cast<double>(c) * static_cast<double>(c);
          item_mn = std::min(item_mn, c);
          item_mx = std::max(item_mx, c);
          ++points;
        }
      }
      sum += static_cast<double>(len);
      sum_sq += static_cast<double>(len) * static_cast<double>(len);
      mn = std::min(mn, len);
      mx = std::max(mx, len);
    }
    double n = static_cast<double>(episodes.size());
    st.min_len = mn;
    st.max_len = mx;
    st.mean_len = sum / n;
    st.std_len = std::sqrt(std::max(0.0, sum_sq / n - st.mean_len * st.mean_len));
    if (is_hmm_stream(s) && points > 0) {
      double pn = static_cast<double>(points);
      double mean = item_sum / pn;
      st.min_items = item_mn;
      st.max_items = item_mx;
      st.mean_items = mean;
      st.std_items = std::sqrt(std::max(0.0, item_sq / pn - mean * mean));
    }
  }
  return summary;
}

void write_summary(const CorpusSummary& summary, std::ostream& out) {
  out << "# episodes\t" << summary.episodes << '\n';
  out << "stream\tmin_len\tmean_len\tstd_len\tmax_len\tmin_items\tmean_items"
         "\tstd_items\tmax_items\n";
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  for (Stream s : kAllStreams) {
    const StreamSummary& st =
        summary.streams[static_cast<std::size_t>(static_cast<int>(s))];
    out << stream_name(s) << '\t' << st.min_len << '\t' << fmt(st.mean_len) << '\t'
        << fmt(st.std_len) << '\t' << st.max_len << '\t'
        << (st.min_items ? std::to_string(*st.min_items) : "-") << '\t'
        << (st.mean_items ? fmt(*st.mean_items) : "-") << '\t'
        << (st.std_items ? fmt(*st.std_items) : "-") << '\t'
        << (st.max_items ? std::to_string(*st.max_items) : "-") << '\n';
  }
}

}  // namespace episeq
