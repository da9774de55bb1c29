#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace grownup::eval {

/// NFC-normalizes and splits on runs of Unicode white space. Case and
/// punctuation are kept. Invalid UTF-8 is replaced before normalizing.
std::vector<std::string> tokenize(std::string_view text);

/// Longest common subsequence length with two rolling DP rows.
std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// P = |LCS| / |extracted|, R = |LCS| / |gold| over word tokens. Both empty
/// scores (1, 1); exactly one empty scores (0, 0).
PrecisionRecall lcs_precision_recall(std::string_view extracted, std::string_view gold);
PrecisionRecall lcs_precision_recall(const std::vector<std::string>& extracted, const std::vector<std::string>& gold);

struct EvalReport {
  std::vector<PrecisionRecall> per_page;
  double corpus_precision = 0.0;
  double corpus_recall = 0.0;
  double corpus_f1 = 0.0;
  std::size_t n_pages = 0;
};

/// Page-averaged precision and recall, then their harmonic mean. Throws
/// EmptyCorpus on an empty list.
EvalReport corpus_f1(const std::vector<PrecisionRecall>& per_page);

}  // namespace grownup::eval
