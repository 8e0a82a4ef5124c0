#include "episeq/serialize.hpp"

#include <fstream>

#include <json.hpp>

#include "episeq/errors.hpp"

namespace episeq {

using nlohmann::json;

namespace {


CategoricalDist categorical_from_json(const json& j) {
  return CategoricalDist::from_normalized(j.get<std::vector<double>>());
}

json chain_to_json(const MarkovChainDist& c) {
  json rows = json::array();
  for (int i = 0; i < c.n_items(); ++i) rows.push_back(c.row(i).probs());
  return json{{"initial", c.initial().probs()}, {"transition", rows}};
}

MarkovChainDist chain_from_json(const json& j) {
  CategoricalDist init = categorical_from_json(j.at("initial"));
  std::vector<CategoricalDist> rows;
  for (const auto& r : j.at("transition")) rows.push_back(categorical_from_json(r));
  return MarkovChainDist(std::move(init), std::move(rows));
}

json collection_to_json(const CollectionModel& m) {
  json states = json::array();
  for (const auto& st : m.states)
    states.push_back(json{{"length_rate", st.length.rate()},
                          {"items", st.items.probs()}});
  return states;
}

CollectionModel collection_from_json(const json& j) {
  CollectionModel m;
  for (const auto& st : j)
    m.states.push_back({PoissonDist(st.at("length_rate").get<double>()),
                        categorical_from_json(st.at("items"))});
  return m;
}

json mseq_to_json(const MarkovSeqModel& m) {
  json states = json::array();
  for (const auto& st : m.states)
    states.push_back(json{{"length_rate", st.length.rate()},
                          {"chain", chain_to_json(st.chain)}});
  return states;
}

MarkovSeqModel mseq_from_json(const json& j) {
  MarkovSeqModel m;
  for (const auto& st : j)
    m.states.push_back({PoissonDist(st.at("length_rate").get<double>()),
                        chain_from_json(st.at("chain"))});
  return m;
}

json hmm_to_json(const HmmSeqModel& m) {
  json states = json::array();
  for (const auto& st : m.states)
    states.push_back(json{{"length_rate", st.length.rate()},
                          {"state_chain", chain_to_json(st.state_chain)}});
  json count = json::array();
  json items = json::array();
  for (int s = 0; s < m.n_hmm(); ++s) {
    count.push_back(m.emission.count[static_cast<std::size_t>(s)].rate());
    items.push_back(m.emission.items[static_cast<std::size_t>(s)].probs());
  }
  return json{{"states", states},
              {"emission", json{{"count_rates", count}, {"items", items}}}};
}

HmmSeqModel hmm_from_json(const json& j) {
  HmmSeqModel m;
  for (const auto& st : j.at("states"))
    m.states.push_back({PoissonDist(st.at("length_rate").get<double>()),
                        chain_from_json(st.at("state_chain"))});
  const json& em = j.at("emission");
  for (const auto& r : em.at("count_rates"))
    m.emission.count.push_back(PoissonDist(r.get<double>()));
  for (const auto& r : em.at("items"))
    m.emission.items.push_back(categorical_from_json(r));
  return m;
}

}  // namespace

std::string model_to_json(const EpisodeModel& model) {
  model.validate();
  json j;
  j["format"] = "episeq-model";
  j["version"] = kModelFormatVersion;
  j["age_support"] = {model.age[0].support_min(), model.age[0].support_max()};
  j["vocab"] = json{{"beds", model.vocab.beds().tokens()},
                    {"diagnoses", model.vocab.diagnoses().tokens()},
                    {"labs", model.vocab.labs().tokens()},
                    {"neuro", model.vocab.neuro().tokens()},
                    {"meds", model.vocab.meds().tokens()}};
  j["top_weights"] = model.top_weights.probs();

  json age = json::array();
  json sex = json::array();
  json death = json::array();
  for (int z = 0; z < model.n_top(); ++z) {
    std::size_t zi = static_cast<std::size_t>(z);
    age.push_back(json{{"mean", model.age[zi].mean()},
                       {"variance", model.age[zi].variance()}});
    sex.push_back(model.sex[zi].p());
    death.push_back(model.death[zi].p());
  }
  j["age"] = age;
  j["sex"] = sex;
  j["death"] = death;

  json mixing;
  for (Stream s : kAllStreams) {
    json rows = json::array();
    for (const auto& row : model.mixing_for(s)) rows.push_back(row.probs());
    mixing[stream_name(s)] = rows;
  }
  j["mixing"] = mixing;

  j["dx_pool"] = collection_to_json(model.dx_pool);
  j["beds"] = mseq_to_json(model.beds);
  j["labs"] = hmm_to_json(model.hmm[0]);
  j["neuro"] = hmm_to_json(model.hmm[1]);
  j["meds"] = hmm_to_json(model.hmm[2]);
  return j.dump(2) + "\n";
}

EpisodeModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "episeq-model")
      throw SchemaViolationError("not an episeq model file");
    if (j.at("version").get<int>() != kModelFormatVersion)
      throw SchemaViolationError("unsupported model format version " +
                                 j.at("version").dump());

    EpisodeModel m;
    m.vocab = VocabularySet(
        Vocabulary(j.at("vocab").at("beds").get<std::vector<std::string>>()),
        Vocabulary(j.at("vocab").at("diagnoses").get<std::vector<std::string>>()),
        Vocabulary(j.at("vocab").at("labs").get<std::vector<std::string>>()),
        Vocabulary(j.at("vocab").at("neuro").get<std::vector<std::string>>()),
        Vocabulary(j.at("vocab").at("meds").get<std::vector<std::string>>()));
    m.top_weights = categorical_from_json(j.at("top_weights"));

    int age_min = j.at("age_support").at(0).get<int>();
    int age_max = j.at("age_support").at(1).get<int>();
    for (const auto& a : j.at("age"))
      m.age.emplace_back(a.at("mean").get<double>(), a.at("variance").get<double>(),
                         age_min, age_max);
    for (const auto& p : j.at("sex")) m.sex.emplace_back(p.get<double>());
    for (const auto& p : j.at("death")) m.death.emplace_back(p.get<double>());

    for (Stream s : kAllStreams) {
      auto& mix = m.mixing[static_cast<std::size_t>(static_cast<int>(s))];
      for (const auto& row : j.at("mixing").at(stream_name(s)))
        mix.push_back(categorical_from_json(row));
    }

    m.dx_pool = collection_from_json(j.at("dx_pool"));
    m.beds = mseq_from_json(j.at("beds"));
    m.hmm[0] = hmm_from_json(j.at("labs"));
    m.hmm[1] = hmm_from_json(j.at("neuro"));
    m.hmm[2] = hmm_from_json(j.at("meds"));
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw SchemaViolationError(std::string("model file schema error: ") + e.what());
  }
}

void save_model(const EpisodeModel& model, const std::string& path) {
  std::string text = model_to_json(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

EpisodeModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return model_from_json(text);
}

}  // namespace episeq
