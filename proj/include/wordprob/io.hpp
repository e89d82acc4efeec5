#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "wordprob/analysis.hpp"
#include "wordprob/scoring.hpp"

namespace wordprob {

// Fixed-precision decimal rendering used by every writer, so identical runs
// produce byte-identical files.
std::string format_real(double x);

extern const char* const kScoredHeader;

void write_scored_tsv(std::ostream& os, std::span<const CorpusScore::Row> rows,
                      bool bits = false);
std::vector<CorpusScore::Row> read_scored_tsv(const std::filesystem::path& path);

std::vector<analysis::RtRow> read_rt_csv(const std::filesystem::path& path);
std::map<std::string, long> read_counts_tsv(const std::filesystem::path& path);

// One sentence per line, segmented with the given rules.
std::vector<WordSequence> read_corpus(const std::filesystem::path& path,
                                      const SegmentationRules& rules = {});

}  // namespace wordprob
