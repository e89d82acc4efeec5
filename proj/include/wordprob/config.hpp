#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wordprob/lm.hpp"
#include "wordprob/tabular_lm.hpp"
#include "wordprob/tokeniser.hpp"

namespace wordprob {

// Declarative run configuration; every path is resolved relative to the
// config file's directory. CLI flags can override seed/tolerance/out_dir.
struct RunConfig {
  MarkingScheme scheme = MarkingScheme::bow;
  std::filesystem::path vocab_path;
  std::filesystem::path tokeniser_path;
  std::int32_t eos_id = 0;
  std::vector<std::int32_t> punct_ids;
  bool mark_first_word = true;
  bool mark_final_word = true;

  // LM source: exactly one is set.
  std::optional<std::filesystem::path> lm_tabular;
  std::optional<std::string> lm_tcp;      // host:port
  std::optional<std::string> lm_command;  // subprocess speaking the protocol
  bool lm_exact = true;
  int lm_order = 0;  // 0: infer from the file

  std::uint64_t seed = 0;
  double tolerance = 1e-9;
  std::filesystem::path out_dir = ".";

  TokeniserSpec load_spec() const;
  // Tabular LMs are validated (and exactness-checked) against the spec.
  std::unique_ptr<ConditionalLM> load_lm(const TokeniserSpec& spec) const;
};

RunConfig load_config(const std::filesystem::path& path);

}  // namespace wordprob
