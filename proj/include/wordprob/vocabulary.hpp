#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace wordprob {

enum class SubwordRole { bow, eow, mid };
enum class MarkingScheme { eow, bow };

const char* role_name(SubwordRole role);
const char* scheme_name(MarkingScheme scheme);

struct Subword {
  std::int32_t id = 0;      // external id, unique within the vocabulary
  std::string surface;      // characters the subword maps back to; '_' marks whitespace
  SubwordRole role = SubwordRole::mid;
};

// Subword inventory partitioned into marked (bow or eow) and mid roles, plus a
// reserved eos id outside the inventory and an optional punctuation class.
// Internally every subword is addressed by its slot (position in `subwords`);
// distributions over the vocabulary have size() + 1 entries, the last being eos.
class MarkedVocabulary {
 public:
  MarkedVocabulary() = default;
  MarkedVocabulary(std::vector<Subword> subwords, MarkingScheme scheme,
                   std::int32_t eos_id, std::vector<std::int32_t> punct_ids = {});

  int size() const { return static_cast<int>(subwords_.size()); }
  int eos_slot() const { return size(); }

  const std::vector<Subword>& subwords() const { return subwords_; }
  const Subword& subword(int slot) const { return subwords_[slot]; }
  MarkingScheme scheme() const { return scheme_; }
  std::int32_t eos_id() const { return eos_id_; }
  const std::vector<std::int32_t>& punct_ids() const { return punct_ids_; }

  // -1 when the external id is unknown.
  int slot_of(std::int32_t id) const;
  bool is_marked(int slot) const;
  bool is_mid(int slot) const { return !is_marked(slot); }
  SubwordRole marked_role() const {
    return scheme_ == MarkingScheme::bow ? SubwordRole::bow : SubwordRole::eow;
  }

  std::vector<int> marked_slots() const;
  std::vector<int> mid_slots() const;
  // Punctuation class as slots (does not include eos; callers add it when
  // they need the closure with eos).
  std::vector<int> punct_slots() const;

 private:
  std::vector<Subword> subwords_;
  MarkingScheme scheme_ = MarkingScheme::bow;
  std::int32_t eos_id_ = 0;
  std::vector<std::int32_t> punct_ids_;
  std::unordered_map<std::int32_t, int> slot_by_id_;
};

struct ValidationIssue {
  enum class Severity { error, warning };
  Severity severity;
  std::string code;    // e.g. "DuplicateId"
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const;
  void add_error(const std::string& code, const std::string& detail);
  void add_warning(const std::string& code, const std::string& detail);
  std::string to_string() const;
};

// Confirms the role partition and reports surfaces duplicated across roles,
// which would make the word-level code not uniquely decodable.
ValidationReport validate_vocabulary(const MarkedVocabulary& vocab);

// UTF-8 TSV with header `id<TAB>surface<TAB>role`; eos and punctuation ids
// come from the sidecar config.
MarkedVocabulary load_vocabulary(const std::filesystem::path& path,
                                 MarkingScheme scheme, std::int32_t eos_id,
                                 std::vector<std::int32_t> punct_ids = {});

}  // namespace wordprob
