#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "episeq/errors.hpp"
#include "episeq/io.hpp"
#include "episeq/model.hpp"
#include "helpers.hpp"

using namespace episeq;
using namespace testutil;

namespace {

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("episeq_test_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

bool episodes_equal(const Episode& a, const Episode& b) {
  return a.age == b.age && a.sex == b.sex && a.death == b.death &&
         a.beds == b.beds && a.admission_dx == b.admission_dx &&
         a.discharge_dx == b.discharge_dx && a.labs == b.labs &&
         a.neuro == b.neuro && a.meds == b.meds;
}

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

}  // namespace

TEST_CASE("corpus save and load round trips byte for byte") {
  TempDir tmp;
  Rng rng(301);
  EpisodeModel model = random_model(small_hp(), tiny_vocab(), rng);
  auto [data, latents] = sample_corpus(model, 1000, 71);

  std::string first = tmp.file("corpus_a.txt");
  std::string second = tmp.file("corpus_b.txt");
  save_corpus(data, model.vocab, first);
  LoadResult loaded = load_corpus(first, model.vocab);
  REQUIRE(loaded.episodes.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    CHECK(episodes_equal(loaded.episodes[i], data[i]));
  save_corpus(loaded.episodes, model.vocab, second);
  CHECK(slurp(first) == slurp(second));
}

TEST_CASE("an empty corpus file holds zero episodes") {
  TempDir tmp;
  std::string path = tmp.file("empty.txt");
  spit(path, std::string(kCorpusHeader) + "\n");
  LoadResult loaded = load_corpus(path, tiny_vocab());
  CHECK(loaded.episodes.empty());
  CHECK(loaded.skipped.empty());
}

TEST_CASE("strict loading names the offending line and token") {
  TempDir tmp;
  std::string path = tmp.file("bad.txt");
  spit(path, std::string(kCorpusHeader) +
                 "\n50|0|0|B0|D0|D1|||\n50|0|0|B9|D0|D1|||\n");
  try {
    load_corpus(path, tiny_vocab());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("B9") != std::string::npos);
  }
}

TEST_CASE("skip-bad loading keeps good records and reports the rest") {
  TempDir tmp;
  std::string path = tmp.file("mixed.txt");
  spit(path, std::string(kCorpusHeader) +
                 "\n50|0|0|B0|D0|D1|||\n50|0|0|B9|D0|D1|||\n-|1|1|B1,B2|D2||L0;~|N1|M0,M1\n");
  LoadResult loaded = load_corpus(path, tiny_vocab(), LoadMode::SkipBad);
  REQUIRE(loaded.episodes.size() == 2);
  REQUIRE(loaded.skipped.size() == 1);
  CHECK(loaded.skipped[0].line == 3);
  CHECK(loaded.skipped[0].message.find("B9") != std::string::npos);
  CHECK(loaded.episodes[1].beds == std::vector<int>{1, 2});
  CHECK(loaded.episodes[1].labs.size() == 2);
  CHECK(loaded.episodes[1].labs[1].empty());
  CHECK_FALSE(loaded.episodes[1].age.has_value());
}

TEST_CASE("a missing corpus file raises IoError") {
  CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.txt", tiny_vocab()), IoError);
  CHECK_THROWS_AS(load_vocabulary("/nonexistent/vocab.txt"), IoError);
}

TEST_CASE("episode text format round trips every field shape") {
  VocabularySet vocab = tiny_vocab();
  Episode ep;
  ep.age = 77;
  ep.death = 1;  // sex left absent
  ep.beds = {2, 0, 2};
  ep.admission_dx = {1, 1};
  ep.labs = {{0, 1}, {}, {1}};
  ep.meds = {{}};
  std::string line = format_episode(ep, vocab);
  Episode back = parse_episode(line, vocab);
  CHECK(episodes_equal(ep, back));
  CHECK(line.find('~') != std::string::npos);
  CHECK(line.find('-') != std::string::npos);
}

TEST_CASE("vocabulary files round trip") {
  TempDir tmp;
  VocabularySet vocab = tiny_vocab(4, 3, 2, 5, 2);
  std::string path = tmp.file("vocab.txt");
  save_vocabulary(vocab, path);
  VocabularySet back = load_vocabulary(path);
  CHECK(back == vocab);
}

TEST_CASE("latent traces round trip") {
  TempDir tmp;
  Rng rng(307);
  EpisodeModel model = random_model(small_hp(), tiny_vocab(), rng);
  auto [data, latents] = sample_corpus(model, 50, 73);
  std::string path = tmp.file("latents.txt");
  save_latents(latents, path);
  std::vector<LatentTrace> back = load_latents(path);
  REQUIRE(back.size() == latents.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].top == latents[i].top);
    CHECK(back[i].sub == latents[i].sub);
    CHECK(back[i].hmm_path == latents[i].hmm_path);
  }
}

TEST_CASE("summaries report exact small-sample statistics") {
  Episode a;
  a.beds = {0};
  a.labs = {{0}};
  Episode b;
  b.beds = {0, 1, 0};
  b.labs = {{0, 1, 1}};
  CorpusSummary s = summarize({a, b});
  const StreamSummary& beds = s.streams[std::size_t(int(Stream::Beds))];
  CHECK(beds.min_len == 1);
  CHECK(beds.max_len == 3);
  CHECK(beds.mean_len == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(beds.std_len == doctest::Approx(1.0).epsilon(1e-12));

  const StreamSummary& labs = s.streams[std::size_t(int(Stream::Labs))];
  CHECK(labs.mean_len == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(labs.min_items.has_value());
  CHECK(*labs.min_items == 1);
  CHECK(*labs.max_items == 3);
  CHECK(*labs.mean_items == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(*labs.std_items == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("summary statistics have zero spread for constant data") {
  Episode a;
  a.beds = {1, 1};
  CorpusSummary s = summarize({a, a, a});
  const StreamSummary& beds = s.streams[std::size_t(int(Stream::Beds))];
  CHECK(beds.std_len == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(beds.mean_len == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("summaries are invariant to episode order") {
  Rng rng(311);
  EpisodeModel model = random_model(small_hp(), tiny_vocab(), rng);
  auto data = sample_corpus(model, 200, 79).first;
  std::vector<Episode> shuffled = data;
  std::mt19937 mt(4);
  std::shuffle(shuffled.begin(), shuffled.end(), mt);

  CorpusSummary s1 = summarize(data);
  CorpusSummary s2 = summarize(shuffled);
  for (int i = 0; i < kNumStreams; ++i) {
    CHECK(s1.streams[std::size_t(i)].mean_len ==
          doctest::Approx(s2.streams[std::size_t(i)].mean_len).epsilon(1e-9));
    CHECK(s1.streams[std::size_t(i)].std_len ==
          doctest::Approx(s2.streams[std::size_t(i)].std_len).epsilon(1e-9));
    CHECK(s1.streams[std::size_t(i)].min_len == s2.streams[std::size_t(i)].min_len);
    CHECK(s1.streams[std::size_t(i)].max_len == s2.streams[std::size_t(i)].max_len);
  }
}

TEST_CASE("summarize rejects an empty corpus") {
  CHECK_THROWS_AS(summarize({}), EmptyDatasetError);
}

TEST_CASE("sampled summaries track tiny length rates") {
  // With every length rate at the floor, generated streams are almost surely
  // empty.
  Hyperparams hp;
  VocabularySet vocab = tiny_vocab();
  EpisodeModel model = uniform_model(hp, vocab, 0, 120);
  PoissonDist floor_rate(PoissonDist::kRateFloor);
  model.beds.states[0].length = floor_rate;
  model.dx_pool.states[0].length = floor_rate;
  for (int j = 0; j < kNumHmmStreams; ++j)
    model.hmm[std::size_t(j)].states[0].length = floor_rate;
  model.validate();

  auto data = sample_corpus(model, 300, 83).first;
  for (const Episode& ep : data) {
    CHECK(ep.beds.empty());
    CHECK(ep.admission_dx.empty());
    CHECK(ep.labs.empty());
  }
}

TEST_CASE("strict and skip-bad agree on a clean corpus") {
  TempDir tmp;
  Rng rng(313);
  EpisodeModel model = random_model(small_hp(), tiny_vocab(), rng);
  auto data = sample_corpus(model, 100, 89).first;
  std::string path = tmp.file("clean.txt");
  save_corpus(data, model.vocab, path);

  LoadResult strict = load_corpus(path, model.vocab, LoadMode::Strict);
  LoadResult skip = load_corpus(path, model.vocab, LoadMode::SkipBad);
  REQUIRE(strict.episodes.size() == skip.episodes.size());
  CHECK(skip.skipped.empty());
  for (std::size_t i = 0; i < strict.episodes.size(); ++i)
    CHECK(episodes_equal(strict.episodes[i], skip.episodes[i]));
}
