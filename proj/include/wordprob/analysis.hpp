#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wordprob/logprob.hpp"
#include "wordprob/scoring.hpp"

namespace wordprob::analysis {

// Surprisal in nats: the negative log-probability (+inf for probability zero).
inline double surprisal(LogProb p) { return -p.value; }

int utf8_length(const std::string& s);

// Per-word-type statistics for the word-length analyses: unigram surprisal
// (Zipf), expected surprisal E[h], and the second-moment ratio E[h²]/E[h].
struct LexiconEntry {
  std::string word;
  int length = 0;
  long token_count = 0;
  double unigram_surprisal = 0.0;
  double mean_surprisal_fixed = 0.0;
  double ratio_fixed = 0.0;
  double mean_surprisal_buggy = 0.0;
  double ratio_buggy = 0.0;
};

// Words absent from `counts` are dropped (no unigram frequency, no Zipf value).
std::vector<LexiconEntry> lexicon_stats(std::span<const CorpusScore::Row> scored,
                                        const std::map<std::string, long>& counts);

// Ranks with ties averaged.
Eigen::VectorXd average_ranks(const Eigen::VectorXd& x);
double spearman(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys);

struct LinearFit {
  Eigen::VectorXd coef;  // intercept first
  double sigma2 = 0.0;   // maximum-likelihood variance, floored at 1e-12
};

// Ordinary least squares with intercept. SingularDesign on rank deficiency.
LinearFit fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);
double gaussian_log_likelihood(const LinearFit& fit, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y);

// Aligned per-word observations: named predictor columns plus the response.
struct AnalysisFrame {
  std::vector<std::string> names;
  Eigen::MatrixXd predictors;  // n × names.size()
  Eigen::VectorXd response;

  int rows() const { return static_cast<int>(response.size()); }
  int col(const std::string& name) const;
  Eigen::MatrixXd select(std::span<const std::string> wanted) const;
};

struct DeltaLlh {
  Eigen::VectorXd per_fold;
  double mean = 0.0;
};

// Held-out log-likelihood gain of adding `target` columns to `baseline`,
// under 10-fold (by default) cross-validation with seeded fold assignment.
DeltaLlh delta_llh(const AnalysisFrame& frame, std::span<const std::string> baseline,
                   std::span<const std::string> target, int folds, std::uint64_t seed);

// Two-sided sign-flip test on paired samples.
double paired_permutation_test(std::span<const double> a, std::span<const double> b,
                               int n_perm, std::uint64_t seed);

struct BuggyVsFixedReport {
  DeltaLlh fixed;
  DeltaLlh buggy;
  double improvement = 0.0;  // fixed.mean - buggy.mean
  double p_value = 1.0;      // paired permutation over folds
};

// Δ_llh for the fixed- and buggy-surprisal frames, which must be row-aligned.
BuggyVsFixedReport compare_buggy_vs_fixed(const AnalysisFrame& frame_fixed,
                                          const AnalysisFrame& frame_buggy,
                                          std::span<const std::string> baseline,
                                          std::span<const std::string> target, int folds,
                                          std::uint64_t seed, int n_perm,
                                          std::uint64_t perm_seed);

// Kolmogorov–Smirnov distance of a sample from Uniform(0,1).
double ks_uniform_statistic(std::vector<double> ps);

// Deterministic Fisher–Yates shuffle (mt19937_64 driven).
std::vector<int> shuffled_indices(int n, std::uint64_t seed);

struct RtRow {
  std::string word;
  double avg_rt = 0.0;
  int sentence_idx = 0;
  int word_idx = 0;
};

// Joins reading times with scored words by (sentence_idx, word_idx) and
// builds columns {length, unigram_surprisal, surprisal, surprisal_prev1..3}.
// `use_fixed` selects which surprisal column family fills the frame. Unigram
// surprisals come from `counts`; if empty, corpus-internal frequencies of the
// scored rows are used.
AnalysisFrame build_rt_frame(std::span<const RtRow> rt,
                             std::span<const CorpusScore::Row> scored,
                             const std::map<std::string, long>& counts, bool use_fixed);

}  // namespace wordprob::analysis
