#include "grownup/eval/metrics.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>

#include "grownup/errors.hpp"

namespace grownup::eval {

std::vector<std::string> tokenize(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error(std::string("ICU NFC unavailable: ") + u_errorName(status));
  const auto src = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  const icu::UnicodeString norm = nfc->normalize(src, status);
  if (U_FAILURE(status)) throw Error(std::string("NFC failed: ") + u_errorName(status));

  std::vector<std::string> tokens;
  int32_t start = -1;
  auto flush = [&](int32_t end) {
    if (start < 0) return;
    std::string out;
    norm.tempSubStringBetween(start, end).toUTF8String(out);
    tokens.push_back(std::move(out));
    start = -1;
  };
  for (int32_t i = 0; i < norm.length();) {
    const UChar32 c = norm.char32At(i);
    const int32_t next = norm.moveIndex32(i, 1);
    if (u_isUWhiteSpace(c)) {
      flush(i);
    } else if (start < 0) {
      start = i;
    }
    i = next;
  }
  flush(norm.length());
  return tokens;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const auto& longer = a.size() >= b.size() ? a : b;
  const auto& shorter = a.size() >= b.size() ? b : a;
  std::vector<std::size_t> prev(shorter.size() + 1, 0), cur(shorter.size() + 1, 0);
  for (const auto& x : longer) {
    for (std::size_t j = 1; j <= shorter.size(); ++j) {
      cur[j] = x == shorter[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[shorter.size()];
}

PrecisionRecall lcs_precision_recall(const std::vector<std::string>& extracted, const std::vector<std::string>& gold) {
  if (extracted.empty() && gold.empty()) return {1.0, 1.0};
  if (extracted.empty() || gold.empty()) return {0.0, 0.0};
  const auto l = static_cast<double>(lcs_length(extracted, gold));
  return {l / static_cast<double>(extracted.size()), l / static_cast<double>(gold.size())};
}

PrecisionRecall lcs_precision_recall(std::string_view extracted, std::string_view gold) {
  return lcs_precision_recall(tokenize(extracted), tokenize(gold));
}

EvalReport corpus_f1(const std::vector<PrecisionRecall>& per_page) {
  if (per_page.empty()) throw EmptyCorpus("corpus_f1: no pages");
  EvalReport r;
  r.per_page = per_page;
  r.n_pages = per_page.size();
  for (const auto& pr : per_page) {
    r.corpus_precision += pr.precision;
    r.corpus_recall += pr.recall;
  }
  r.corpus_precision /= static_cast<double>(r.n_pages);
  r.corpus_recall /= static_cast<double>(r.n_pages);
  const double sum = r.corpus_precision + r.corpus_recall;
  r.corpus_f1 = sum > 0 ? 2 * r.corpus_precision * r.corpus_recall / sum : 0.0;
  return r;
}

}  // namespace grownup::eval
