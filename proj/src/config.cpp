#include "rarehmm/config.hpp"

#include "rarehmm/errors.hpp"
#include "rarehmm/rng.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace rarehmm {

using nlohmann::json;

std::uint64_t hash_bytes(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t k = 0; k < size; ++k) {
    h = mix64(h ^ bytes[k]);
  }
  return h;
}

namespace {

Matrix parse_matrix(const json& node, const std::string& name) {
  if (!node.is_array() || node.empty() || !node.front().is_array()) {
    fail(errc::config_parse, "\"" + name + "\" must be an array of rows");
  }
  const std::size_t rows = node.size();
  const std::size_t cols = node.front().size();
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const json& row = node[i];
    if (!row.is_array() || row.size() != cols) {
      std::ostringstream msg;
      msg << "\"" << name << "\" row " << i << " has inconsistent length";
      fail(errc::config_parse, msg.str());
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (!row[j].is_number()) {
        std::ostringstream msg;
        msg << "\"" << name << "\" entry (" << i << "," << j
            << ") is not a number";
        fail(errc::config_parse, msg.str());
      }
      m(static_cast<Index>(i), static_cast<Index>(j)) = row[j].get<double>();
    }
  }
  return m;
}

std::vector<std::string> parse_labels(const json& node,
                                      const std::string& name) {
  std::vector<std::string> labels;
  if (!node.is_array()) {
    fail(errc::config_parse, "\"" + name + "\" must be an array of strings");
  }
  for (const json& item : node) {
    if (!item.is_string()) {
      fail(errc::config_parse, "\"" + name + "\" must contain strings");
    }
    labels.push_back(item.get<std::string>());
  }
  return labels;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(errc::config_parse, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(errc::config_parse, "config must be an object");

  RunConfig config;
  config.config_hash = hash_bytes(json_text.data(), json_text.size());

  if (!doc.contains("generator")) {
    fail(errc::config_parse, "missing \"generator\"");
  }
  config.generator = parse_matrix(doc["generator"], "generator");
  if (!doc.contains("channel")) fail(errc::config_parse, "missing \"channel\"");
  config.channel = parse_matrix(doc["channel"], "channel");

  if (doc.contains("states")) {
    config.states = parse_labels(doc["states"], "states");
    if (static_cast<Index>(config.states.size()) != config.generator.rows()) {
      fail(errc::config_parse,
           "\"states\" length does not match the generator size");
    }
  }
  if (doc.contains("outputs")) {
    config.outputs = parse_labels(doc["outputs"], "outputs");
    if (static_cast<Index>(config.outputs.size()) != config.channel.cols()) {
      fail(errc::config_parse,
           "\"outputs\" length does not match the channel width");
    }
  }

  if (doc.contains("p")) {
    if (!doc["p"].is_number()) fail(errc::config_parse, "\"p\" must be a number");
    config.p = doc["p"].get<double>();
  }
  if (doc.contains("p_list")) {
    if (!doc["p_list"].is_array() || doc["p_list"].empty()) {
      fail(errc::config_parse, "\"p_list\" must be a non-empty array");
    }
    for (const json& item : doc["p_list"]) {
      if (!item.is_number()) {
        fail(errc::config_parse, "\"p_list\" must contain numbers");
      }
      config.p_list.push_back(item.get<double>());
    }
  }
  if (!config.p && config.p_list.empty()) {
    fail(errc::config_parse, "config needs \"p\" or \"p_list\"");
  }

  if (doc.contains("n")) config.n = doc["n"].get<std::int64_t>();
  if (doc.contains("reps")) config.reps = doc["reps"].get<int>();
  if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();

  if (doc.contains("overrides")) {
    const json& overrides = doc["overrides"];
    if (!overrides.is_object()) {
      fail(errc::config_parse, "\"overrides\" must be an object");
    }
    if (overrides.contains("L")) {
      config.block_len_override = overrides["L"].get<std::int64_t>();
    }
    if (overrides.contains("K")) {
      config.margin_override = overrides["K"].get<std::int64_t>();
    }
  }

  if (doc.contains("budgets")) {
    const json& budgets = doc["budgets"];
    if (!budgets.is_object()) {
      fail(errc::config_parse, "\"budgets\" must be an object");
    }
    if (budgets.contains("decode_n")) {
      config.decode_n = budgets["decode_n"].get<std::int64_t>();
    }
    if (budgets.contains("blocks")) {
      config.blocks = budgets["blocks"].get<std::int64_t>();
    }
    if (budgets.contains("bracket_terms")) {
      config.bracket_terms = budgets["bracket_terms"].get<std::int64_t>();
    }
    if (budgets.contains("rejection_attempts")) {
      config.rejection_attempts =
          budgets["rejection_attempts"].get<std::int64_t>();
    }
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::config_parse, "cannot open config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

double RunConfig::single_p() const {
  if (p) return *p;
  if (p_list.size() == 1) return p_list.front();
  fail(errc::config_parse,
       "this command needs a single \"p\" (config has only a multi-value "
       "\"p_list\")");
}

std::vector<double> RunConfig::sweep_p_values() const {
  if (!p_list.empty()) return p_list;
  return {*p};
}

}  // namespace rarehmm
