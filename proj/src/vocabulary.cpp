#include "wordprob/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "wordprob/errors.hpp"

namespace wordprob {

const char* role_name(SubwordRole role) {
  switch (role) {
    case SubwordRole::bow: return "bow";
    case SubwordRole::eow: return "eow";
    case SubwordRole::mid: return "mid";
  }
  return "?";
}

const char* scheme_name(MarkingScheme scheme) {
  return scheme == MarkingScheme::bow ? "bow" : "eow";
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptySurface: return "EmptySurface";
    case ErrorCode::EmptyMarkedSet: return "EmptyMarkedSet";
    case ErrorCode::UnknownWord: return "UnknownWord";
    case ErrorCode::UnmappedSequence: return "UnmappedSequence";
    case ErrorCode::NotUniquelyDecodable: return "NotUniquelyDecodable";
    case ErrorCode::MissingMidMap: return "MissingMidMap";
    case ErrorCode::SchemeMismatch: return "SchemeMismatch";
    case ErrorCode::FirstWordNeedsFix3: return "FirstWordNeedsFix3";
    case ErrorCode::NonEmptyContext: return "NonEmptyContext";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NotNormalised: return "NotNormalised";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::MissingContext: return "MissingContext";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::BudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::ZeroContextMass: return "ZeroContextMass";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::MisalignedFrames: return "MisalignedFrames";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Error";
}

MarkedVocabulary::MarkedVocabulary(std::vector<Subword> subwords,
                                   MarkingScheme scheme, std::int32_t eos_id,
                                   std::vector<std::int32_t> punct_ids)
    : subwords_(std::move(subwords)),
      scheme_(scheme),
      eos_id_(eos_id),
      punct_ids_(std::move(punct_ids)) {
  for (int slot = 0; slot < size(); ++slot) {
    slot_by_id_.emplace(subwords_[slot].id, slot);
  }
}

int MarkedVocabulary::slot_of(std::int32_t id) const {
  auto it = slot_by_id_.find(id);
  return it == slot_by_id_.end() ? -1 : it->second;
}

bool MarkedVocabulary::is_marked(int slot) const {
  return subwords_[slot].role == marked_role();
}

std::vector<int> MarkedVocabulary::marked_slots() const {
  std::vector<int> out;
  for (int slot = 0; slot < size(); ++slot)
    if (is_marked(slot)) out.push_back(slot);
  return out;
}

std::vector<int> MarkedVocabulary::mid_slots() const {
  std::vector<int> out;
  for (int slot = 0; slot < size(); ++slot)
    if (!is_marked(slot)) out.push_back(slot);
  return out;
}

std::vector<int> MarkedVocabulary::punct_slots() const {
  std::vector<int> out;
  for (std::int32_t id : punct_ids_) {
    int slot = slot_of(id);
    if (slot >= 0) out.push_back(slot);
  }
  return out;
}

bool ValidationReport::ok() const {
  return std::none_of(issues.begin(), issues.end(), [](const ValidationIssue& i) {
    return i.severity == ValidationIssue::Severity::error;
  });
}

void ValidationReport::add_error(const std::string& code, const std::string& detail) {
  issues.push_back({ValidationIssue::Severity::error, code, detail});
}

void ValidationReport::add_warning(const std::string& code, const std::string& detail) {
  issues.push_back({ValidationIssue::Severity::warning, code, detail});
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& issue : issues) {
    os << (issue.severity == ValidationIssue::Severity::error ? "error" : "warning")
       << '\t' << issue.code << '\t' << issue.detail << '\n';
  }
  return os.str();
}

ValidationReport validate_vocabulary(const MarkedVocabulary& vocab) {
  ValidationReport report;

  std::set<std::int32_t> seen_ids;
  std::map<std::string, std::vector<int>> by_surface;
  int marked = 0;
  for (int slot = 0; slot < vocab.size(); ++slot) {
    const Subword& sw = vocab.subword(slot);
    if (!seen_ids.insert(sw.id).second)
      report.add_error("DuplicateId", "id " + std::to_string(sw.id) + " appears twice");
    if (sw.surface.empty())
      report.add_error("EmptySurface", "id " + std::to_string(sw.id) + " has empty surface");
    by_surface[sw.surface].push_back(slot);
    if (vocab.is_marked(slot)) ++marked;
    // The partition has only two cells: the scheme's marked role and mid.
    SubwordRole other = vocab.scheme() == MarkingScheme::bow ? SubwordRole::eow : SubwordRole::bow;
    if (sw.role == other)
      report.add_error("SchemeMismatch",
                       "id " + std::to_string(sw.id) + " has role " + role_name(sw.role) +
                           " under scheme " + scheme_name(vocab.scheme()));
  }
  if (marked == 0)
    report.add_error("EmptyMarkedSet",
                     std::string("no subword carries the ") +
                         role_name(vocab.marked_role()) + " role");

  if (vocab.slot_of(vocab.eos_id()) >= 0)
    report.add_error("DuplicateId",
                     "eos id " + std::to_string(vocab.eos_id()) + " collides with a subword");
  for (std::int32_t id : vocab.punct_ids()) {
    if (vocab.slot_of(id) < 0 && id != vocab.eos_id())
      report.add_warning("UnknownPunctId", "punctuation id " + std::to_string(id) +
                                               " is not in the vocabulary");
  }

  // Duplicate surfaces across roles break unique decodability at the
  // character level: the same written form would come from two subwords.
  for (const auto& [surface, slots] : by_surface) {
    if (slots.size() > 1) {
      std::string detail = "surface '" + surface + "' shared by ids";
      for (int slot : slots) detail += " " + std::to_string(vocab.subword(slot).id);
      report.add_warning("DuplicateSurface", detail);
    }
  }
  return report;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

MarkedVocabulary load_vocabulary(const std::filesystem::path& path,
                                 MarkingScheme scheme, std::int32_t eos_id,
                                 std::vector<std::int32_t> punct_ids) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::ParseError, "cannot open vocabulary file " + path.string());

  std::vector<Subword> subwords;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("id\t", 0) == 0) continue;  // header
    auto fields = split_tabs(line);
    if (fields.size() != 3)
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
    Subword sw;
    try {
      sw.id = static_cast<std::int32_t>(std::stol(fields[0]));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(lineno) + ": bad id '" + fields[0] + "'");
    }
    sw.surface = fields[1];
    if (fields[2] == "bow") sw.role = SubwordRole::bow;
    else if (fields[2] == "eow") sw.role = SubwordRole::eow;
    else if (fields[2] == "mid") sw.role = SubwordRole::mid;
    else
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(lineno) + ": bad role '" + fields[2] + "'");
    subwords.push_back(std::move(sw));
  }
  return MarkedVocabulary(std::move(subwords), scheme, eos_id, std::move(punct_ids));
}

}  // namespace wordprob
