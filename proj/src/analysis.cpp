#include "wordprob/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "wordprob/errors.hpp"

namespace wordprob::analysis {

int utf8_length(const std::string& s) {
  int n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;  // count non-continuation bytes
  return n;
}

std::vector<LexiconEntry> lexicon_stats(std::span<const CorpusScore::Row> scored,
                                        const std::map<std::string, long>& counts) {
  if (scored.empty()) throw Error(ErrorCode::EmptyCorpus, "no scored words");

  struct Acc {
    long n = 0;
    double sum_f = 0, sum_f2 = 0, sum_b = 0, sum_b2 = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& row : scored) {
    Acc& a = acc[row.scored.word];
    const double hf = row.scored.surprisal_fixed;
    const double hb = row.scored.surprisal_buggy;
    ++a.n;
    a.sum_f += hf;
    a.sum_f2 += hf * hf;
    a.sum_b += hb;
    a.sum_b2 += hb * hb;
  }

  double total = 0.0;
  for (const auto& [w, c] : counts) total += static_cast<double>(c);

  std::vector<LexiconEntry> out;
  for (const auto& [word, a] : acc) {
    auto it = counts.find(word);
    if (it == counts.end() || it->second <= 0) continue;
    LexiconEntry e;
    e.word = word;
    e.length = utf8_length(word);
    e.token_count = a.n;
    e.unigram_surprisal = -std::log(static_cast<double>(it->second) / total);
    e.mean_surprisal_fixed = a.sum_f / a.n;
    e.ratio_fixed = e.mean_surprisal_fixed > 0 ? (a.sum_f2 / a.n) / e.mean_surprisal_fixed
                                               : e.mean_surprisal_fixed;
    e.mean_surprisal_buggy = a.sum_b / a.n;
    e.ratio_buggy = e.mean_surprisal_buggy > 0 ? (a.sum_b2 / a.n) / e.mean_surprisal_buggy
                                               : e.mean_surprisal_buggy;
    out.push_back(std::move(e));
  }
  return out;
}

Eigen::VectorXd average_ranks(const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return x(a) < x(b); });
  Eigen::VectorXd ranks(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && x(order[j + 1]) == x(order[i])) ++j;
    const double rank = 0.5 * (i + j) + 1.0;  // 1-based, ties averaged
    for (int k = i; k <= j; ++k) ranks(order[k]) = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) {
  if (xs.size() != ys.size())
    throw Error(ErrorCode::LengthMismatch, "rank correlation needs paired samples");
  if (xs.size() < 3)
    throw Error(ErrorCode::DegenerateInput, "rank correlation needs at least 3 points");
  Eigen::VectorXd rx = average_ranks(xs);
  Eigen::VectorXd ry = average_ranks(ys);
  rx.array() -= rx.mean();
  ry.array() -= ry.mean();
  const double sx = rx.norm();
  const double sy = ry.norm();
  if (sx == 0.0 || sy == 0.0)
    throw Error(ErrorCode::DegenerateInput, "constant input has no rank ordering");
  return rx.dot(ry) / (sx * sy);
}

LinearFit fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols()) + 1;
  Eigen::MatrixXd design(n, p);
  design.col(0).setOnes();
  design.rightCols(p - 1) = X;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < p)
    throw Error(ErrorCode::SingularDesign,
                "design rank " + std::to_string(qr.rank()) + " < " + std::to_string(p));
  LinearFit fit;
  fit.coef = qr.solve(y);
  const double mse = (y - design * fit.coef).squaredNorm() / n;
  fit.sigma2 = std::max(mse, 1e-12);
  return fit;
}

double gaussian_log_likelihood(const LinearFit& fit, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y) {
  const int n = static_cast<int>(X.rows());
  Eigen::VectorXd pred =
      Eigen::VectorXd::Constant(n, fit.coef(0)) + X * fit.coef.tail(fit.coef.size() - 1);
  const double ssr = (y - pred).squaredNorm();
  return -0.5 * (ssr / fit.sigma2 +
                 n * std::log(2.0 * M_PI * fit.sigma2));
}

int AnalysisFrame::col(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

Eigen::MatrixXd AnalysisFrame::select(std::span<const std::string> wanted) const {
  Eigen::MatrixXd out(predictors.rows(), wanted.size());
  for (size_t i = 0; i < wanted.size(); ++i) {
    const int c = col(wanted[i]);
    if (c < 0)
      throw Error(ErrorCode::MisalignedFrames, "missing predictor '" + wanted[i] + "'");
    out.col(i) = predictors.col(c);
  }
  return out;
}

std::vector<int> shuffled_indices(int n, std::uint64_t seed) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

DeltaLlh delta_llh(const AnalysisFrame& frame, std::span<const std::string> baseline,
                   std::span<const std::string> target, int folds, std::uint64_t seed) {
  const int n = frame.rows();
  if (folds < 2 || n < folds)
    throw Error(ErrorCode::LengthMismatch,
                "need at least one observation per fold (" + std::to_string(n) + " rows, " +
                    std::to_string(folds) + " folds)");

  std::vector<std::string> full(baseline.begin(), baseline.end());
  full.insert(full.end(), target.begin(), target.end());
  const Eigen::MatrixXd Xbase = frame.select(baseline);
  const Eigen::MatrixXd Xfull = frame.select(full);

  std::vector<int> order = shuffled_indices(n, seed);
  std::vector<int> fold_of(n);
  for (int i = 0; i < n; ++i) fold_of[order[i]] = i % folds;

  DeltaLlh result;
  result.per_fold.resize(folds);
  for (int f = 0; f < folds; ++f) {
    std::vector<int> train, test;
    for (int i = 0; i < n; ++i) (fold_of[i] == f ? test : train).push_back(i);

    auto rows = [&](const Eigen::MatrixXd& X, const std::vector<int>& which) {
      Eigen::MatrixXd out(which.size(), X.cols());
      for (size_t r = 0; r < which.size(); ++r) out.row(r) = X.row(which[r]);
      return out;
    };
    auto yrows = [&](const std::vector<int>& which) {
      Eigen::VectorXd out(which.size());
      for (size_t r = 0; r < which.size(); ++r) out(r) = frame.response(which[r]);
      return out;
    };

    const Eigen::VectorXd y_train = yrows(train);
    const Eigen::VectorXd y_test = yrows(test);
    LinearFit base = fit_linear(rows(Xbase, train), y_train);
    LinearFit with = fit_linear(rows(Xfull, train), y_train);
    result.per_fold(f) = gaussian_log_likelihood(with, rows(Xfull, test), y_test) -
                         gaussian_log_likelihood(base, rows(Xbase, test), y_test);
  }
  result.mean = result.per_fold.mean();
  return result;
}

double paired_permutation_test(std::span<const double> a, std::span<const double> b,
                               int n_perm, std::uint64_t seed) {
  if (a.size() != b.size())
    throw Error(ErrorCode::LengthMismatch, "paired test needs equal-length samples");
  const int n = static_cast<int>(a.size());
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d(i) = a[i] - b[i];
  const double observed = std::abs(d.mean());

  std::mt19937_64 rng(seed);
  int at_least = 0;
  for (int p = 0; p < n_perm; ++p) {
    double sum = 0.0;
    std::uint64_t bits = 0;
    int avail = 0;
    for (int i = 0; i < n; ++i) {
      if (avail == 0) {
        bits = rng();
        avail = 64;
      }
      sum += (bits & 1) ? d(i) : -d(i);
      bits >>= 1;
      --avail;
    }
    if (std::abs(sum / n) >= observed - 1e-12) ++at_least;
  }
  return (1.0 + at_least) / (1.0 + n_perm);
}

BuggyVsFixedReport compare_buggy_vs_fixed(const AnalysisFrame& frame_fixed,
                                          const AnalysisFrame& frame_buggy,
                                          std::span<const std::string> baseline,
                                          std::span<const std::string> target, int folds,
                                          std::uint64_t seed, int n_perm,
                                          std::uint64_t perm_seed) {
  if (frame_fixed.rows() != frame_buggy.rows() ||
      frame_fixed.response != frame_buggy.response)
    throw Error(ErrorCode::MisalignedFrames,
                "fixed and buggy frames disagree on observations");
  BuggyVsFixedReport report;
  report.fixed = delta_llh(frame_fixed, baseline, target, folds, seed);
  report.buggy = delta_llh(frame_buggy, baseline, target, folds, seed);
  report.improvement = report.fixed.mean - report.buggy.mean;
  std::vector<double> a(report.fixed.per_fold.begin(), report.fixed.per_fold.end());
  std::vector<double> b(report.buggy.per_fold.begin(), report.buggy.per_fold.end());
  report.p_value = paired_permutation_test(a, b, n_perm, perm_seed);
  return report;
}

double ks_uniform_statistic(std::vector<double> ps) {
  std::sort(ps.begin(), ps.end());
  const int n = static_cast<int>(ps.size());
  double stat = 0.0;
  for (int i = 0; i < n; ++i) {
    stat = std::max(stat, std::abs((i + 1.0) / n - ps[i]));
    stat = std::max(stat, std::abs(ps[i] - static_cast<double>(i) / n));
  }
  return stat;
}

AnalysisFrame build_rt_frame(std::span<const RtRow> rt,
                             std::span<const CorpusScore::Row> scored,
                             const std::map<std::string, long>& counts, bool use_fixed) {
  std::map<std::pair<int, int>, const CorpusScore::Row*> index;
  std::map<std::string, long> freq = counts;
  double total = 0.0;
  for (const auto& row : scored) {
    index[{row.sentence_idx, row.word_idx}] = &row;
    if (counts.empty()) ++freq[row.scored.word];
  }
  for (const auto& [w, c] : freq) total += static_cast<double>(c);
  if (total <= 0.0) throw Error(ErrorCode::EmptyCorpus, "no frequency mass");

  auto surprisal_of = [&](const CorpusScore::Row& r) {
    return use_fixed ? r.scored.surprisal_fixed : r.scored.surprisal_buggy;
  };

  AnalysisFrame frame;
  frame.names = {"length", "unigram_surprisal", "surprisal",
                 "surprisal_prev1", "surprisal_prev2", "surprisal_prev3"};
  frame.predictors.resize(rt.size(), frame.names.size());
  frame.response.resize(rt.size());

  for (size_t i = 0; i < rt.size(); ++i) {
    const RtRow& obs = rt[i];
    auto it = index.find({obs.sentence_idx, obs.word_idx});
    if (it == index.end())
      throw Error(ErrorCode::MisalignedFrames,
                  "no scored word at sentence " + std::to_string(obs.sentence_idx) +
                      " position " + std::to_string(obs.word_idx));
    const CorpusScore::Row& row = *it->second;
    if (!obs.word.empty() && row.scored.word != obs.word)
      throw Error(ErrorCode::MisalignedFrames,
                  "word mismatch at sentence " + std::to_string(obs.sentence_idx) +
                      " position " + std::to_string(obs.word_idx) + ": '" + obs.word +
                      "' vs '" + row.scored.word + "'");
    auto fit = freq.find(row.scored.word);
    const double unigram =
        fit == freq.end() || fit->second <= 0
            ? -std::log(0.5 / total)  // unseen words get half a count
            : -std::log(static_cast<double>(fit->second) / total);

    frame.response(i) = obs.avg_rt;
    frame.predictors(i, 0) = utf8_length(row.scored.word);
    frame.predictors(i, 1) = unigram;
    frame.predictors(i, 2) = surprisal_of(row);
    for (int back = 1; back <= 3; ++back) {
      auto prev = index.find({obs.sentence_idx, obs.word_idx - back});
      frame.predictors(i, 2 + back) = prev == index.end() ? 0.0 : surprisal_of(*prev->second);
    }
  }
  return frame;
}

}  // namespace wordprob::analysis
