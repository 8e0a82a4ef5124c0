#pragma once

#include <string>

#include "episeq/model.hpp"

namespace episeq {

// Model files are a single self-describing JSON document. Probabilities and
// rates are stored in linear space at full round-trip precision, so
// save -> load reproduces every log-likelihood bit-for-bit.
inline constexpr int kModelFormatVersion = 1;

std::string model_to_json(const EpisodeModel& model);
EpisodeModel model_from_json(const std::string& text);

void save_model(const EpisodeModel& model, const std::string& path);
EpisodeModel load_model(const std::string& path);

}  // namespace episeq
