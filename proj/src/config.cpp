#include "wordprob/config.hpp"

#include <fstream>

#include <json.hpp>

#include "wordprob/errors.hpp"
#include "wordprob/remote_lm.hpp"

namespace wordprob {

TokeniserSpec RunConfig::load_spec() const {
  if (!std::filesystem::exists(vocab_path))
    throw Error(ErrorCode::ConfigError, "vocabulary file not found: " + vocab_path.string());
  if (!std::filesystem::exists(tokeniser_path))
    throw Error(ErrorCode::ConfigError, "tokeniser file not found: " + tokeniser_path.string());
  MarkedVocabulary vocab = load_vocabulary(vocab_path, scheme, eos_id, punct_ids);
  ValidationReport vreport = validate_vocabulary(vocab);
  if (!vreport.ok())
    throw Error(ErrorCode::ConfigError, "invalid vocabulary:\n" + vreport.to_string());
  TokeniserSpec spec =
      load_tokeniser(tokeniser_path, std::move(vocab), mark_first_word, mark_final_word);
  ValidationReport treport = validate_tokeniser(spec);
  if (!treport.ok())
    throw Error(ErrorCode::ConfigError, "invalid tokeniser:\n" + treport.to_string());
  return spec;
}

std::unique_ptr<ConditionalLM> RunConfig::load_lm(const TokeniserSpec& spec) const {
  if (lm_tabular) {
    if (!std::filesystem::exists(*lm_tabular))
      throw Error(ErrorCode::ConfigError, "LM file not found: " + lm_tabular->string());
    return std::make_unique<TabularLM>(load_tabular(*lm_tabular, spec.vocab(), lm_exact,
                                                    lm_exact ? &spec : nullptr, 1e-8,
                                                    lm_order));
  }
  if (lm_tcp) {
    auto colon = lm_tcp->rfind(':');
    if (colon == std::string::npos)
      throw Error(ErrorCode::ConfigError, "lm.tcp must be host:port");
    const std::string host = lm_tcp->substr(0, colon);
    const int port = std::stoi(lm_tcp->substr(colon + 1));
    return std::make_unique<RemoteLM>(connect_tcp(host, port), spec.vocab());
  }
  if (lm_command)
    return std::make_unique<RemoteLM>(spawn_subprocess(*lm_command), spec.vocab());
  throw Error(ErrorCode::ConfigError, "config declares no LM source");
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw Error(ErrorCode::ConfigError, "config is not valid JSON: " + path.string());

  const std::filesystem::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  RunConfig cfg;
  try {
    const std::string scheme = j.at("scheme").get<std::string>();
    if (scheme == "bow") cfg.scheme = MarkingScheme::bow;
    else if (scheme == "eow") cfg.scheme = MarkingScheme::eow;
    else throw Error(ErrorCode::ConfigError, "scheme must be 'bow' or 'eow'");

    cfg.vocab_path = resolve(j.at("vocab").get<std::string>());
    cfg.tokeniser_path = resolve(j.at("tokeniser").get<std::string>());
    cfg.eos_id = j.at("eos_id").get<std::int32_t>();
    if (j.contains("punct_ids"))
      cfg.punct_ids = j["punct_ids"].get<std::vector<std::int32_t>>();
    cfg.mark_first_word = j.value("mark_first_word", true);
    cfg.mark_final_word = j.value("mark_final_word", true);

    const auto& lm = j.at("lm");
    if (lm.contains("tabular")) cfg.lm_tabular = resolve(lm["tabular"].get<std::string>());
    if (lm.contains("tcp")) cfg.lm_tcp = lm["tcp"].get<std::string>();
    if (lm.contains("command")) cfg.lm_command = lm["command"].get<std::string>();
    cfg.lm_exact = lm.value("exact", true);
    cfg.lm_order = lm.value("order", 0);
    const int sources = (cfg.lm_tabular ? 1 : 0) + (cfg.lm_tcp ? 1 : 0) +
                        (cfg.lm_command ? 1 : 0);
    if (sources != 1)
      throw Error(ErrorCode::ConfigError, "lm must name exactly one source");

    cfg.seed = j.value("seed", 0ULL);
    cfg.tolerance = j.value("tolerance", 1e-9);
    cfg.out_dir = j.contains("out_dir") ? resolve(j["out_dir"].get<std::string>())
                                        : std::filesystem::path(".");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config field error: ") + e.what());
  }
  return cfg;
}

}  // namespace wordprob
