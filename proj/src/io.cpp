#include "wordprob/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "wordprob/errors.hpp"

namespace wordprob {

std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

const char* const kScoredHeader =
    "sentence_idx\tword_idx\tword\tlogp_buggy\tlog_correction\tlogp_fixed"
    "\tsurprisal_buggy\tsurprisal_fixed\tapplied_fix";

void write_scored_tsv(std::ostream& os, std::span<const CorpusScore::Row> rows, bool bits) {
  const double unit = bits ? std::log(2.0) : 1.0;
  os << kScoredHeader << '\n';
  for (const auto& row : rows) {
    const ScoredWord& sw = row.scored;
    os << row.sentence_idx << '\t' << row.word_idx << '\t' << sw.word << '\t'
       << format_real(sw.p_buggy.value / unit) << '\t'
       << format_real(sw.correction.value / unit) << '\t'
       << format_real(sw.p_fixed.value / unit) << '\t'
       << format_real(sw.surprisal_buggy / unit) << '\t'
       << format_real(sw.surprisal_fixed / unit) << '\t' << fix_name(sw.applied_fix)
       << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_real(const std::string& s, const std::string& where) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, where + ": bad number '" + s + "'");
  }
}

}  // namespace

std::vector<CorpusScore::Row> read_scored_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::vector<CorpusScore::Row> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("sentence_idx\t", 0) == 0) continue;
    auto f = split(line, '\t');
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (f.size() != 9) throw Error(ErrorCode::ParseError, where + ": expected 9 fields");
    CorpusScore::Row row;
    row.sentence_idx = static_cast<int>(parse_real(f[0], where));
    row.word_idx = static_cast<int>(parse_real(f[1], where));
    row.scored.word = f[2];
    row.scored.p_buggy = LogProb{parse_real(f[3], where)};
    row.scored.correction = LogProb{parse_real(f[4], where)};
    row.scored.p_fixed = LogProb{parse_real(f[5], where)};
    row.scored.surprisal_buggy = parse_real(f[6], where);
    row.scored.surprisal_fixed = parse_real(f[7], where);
    if (f[8] == "none") row.scored.applied_fix = AppliedFix::none;
    else if (f[8] == "fix1") row.scored.applied_fix = AppliedFix::fix1;
    else if (f[8] == "fix2") row.scored.applied_fix = AppliedFix::fix2;
    else if (f[8] == "fix3") row.scored.applied_fix = AppliedFix::fix3;
    else throw Error(ErrorCode::ParseError, where + ": bad fix '" + f[8] + "'");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<analysis::RtRow> read_rt_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::vector<analysis::RtRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("word,", 0) == 0) continue;
    auto f = split(line, ',');
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (f.size() != 4) throw Error(ErrorCode::ParseError, where + ": expected 4 fields");
    analysis::RtRow row;
    row.word = f[0];
    row.avg_rt = parse_real(f[1], where);
    row.sentence_idx = static_cast<int>(parse_real(f[2], where));
    row.word_idx = static_cast<int>(parse_real(f[3], where));
    if (row.avg_rt <= 0.0)
      throw Error(ErrorCode::ParseError, where + ": reading time must be positive");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::map<std::string, long> read_counts_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::map<std::string, long> counts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("word\t", 0) == 0) continue;
    auto f = split(line, '\t');
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (f.size() != 2) throw Error(ErrorCode::ParseError, where + ": expected 2 fields");
    counts[f[0]] += static_cast<long>(parse_real(f[1], where));
  }
  return counts;
}

std::vector<WordSequence> read_corpus(const std::filesystem::path& path,
                                      const SegmentationRules& rules) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::vector<WordSequence> sentences;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    WordSequence words = pretokenise(line, rules);
    if (!words.empty()) sentences.push_back(std::move(words));
  }
  return sentences;
}

}  // namespace wordprob
