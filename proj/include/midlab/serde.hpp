#pragma once

// JSON (de)serialization for the domain types that appear in manifests and
// experiment configs. Parsing is strict: every object is checked against its
// allowed key set and unknown keys are rejected with the offending name, so a
// typo in a config fails loudly instead of silently taking a default.

#include <string>
#include <vector>

#include "json.hpp"

#include "midlab/encoder.hpp"
#include "midlab/errors.hpp"
#include "midlab/latent_space.hpp"

namespace midl {

using Json = nlohmann::json;

// Throws ConfigError when obj holds a key outside `allowed`; `where` names the
// enclosing object in the message.
void require_keys(const Json& obj, const std::vector<std::string>& allowed,
                  const std::string& where);

double get_number(const Json& j, const std::string& key, const std::string& where);
std::string get_string(const Json& j, const std::string& key, const std::string& where);

Json to_json(const ConditionalFamily& f);
ConditionalFamily conditional_from_json(const Json& j, const std::string& where);

Json to_json(const Box& b);
Box box_from_json(const Json& j, const std::string& where);

Json to_json(const LatentSpaceSpec& s);
LatentSpaceSpec latent_space_from_json(const Json& j, const std::string& where);

Json to_json(const OutputSpace& s);
OutputSpace output_space_from_json(const Json& j, const std::string& where);

Json to_json(const SimilarityKernel& k);
SimilarityKernel kernel_from_json(const Json& j, const std::string& where);

} // namespace midl
