#include "btfilter/textnorm.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <mutex>

namespace btf {

namespace {

const icu::Normalizer2* nfc() {
  static const icu::Normalizer2* instance = [] {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    return U_SUCCESS(status) ? n : nullptr;
  }();
  return instance;
}

bool is_dropped(UChar32 c) {
  // zero-width space/non-joiner/joiner, word joiner, BOM
  return c == 0x200B || c == 0x200C || c == 0x200D || c == 0x2060 || c == 0xFEFF;
}

bool is_space(UChar32 c) { return u_isUWhiteSpace(c) != 0; }

}  // namespace

std::string normalize(std::string_view line) {
  icu::UnicodeString us = icu::UnicodeString::fromUTF8(
      icu::StringPiece(line.data(), static_cast<int32_t>(line.size())));
  if (const icu::Normalizer2* n = nfc()) {
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString composed = n->normalize(us, status);
    if (U_SUCCESS(status)) us = std::move(composed);
  }

  icu::UnicodeString out;
  bool pending_space = false;
  bool seen_non_space = false;
  for (int32_t i = 0; i < us.length();) {
    UChar32 c = us.char32At(i);
    i += U16_LENGTH(c);
    if (is_dropped(c)) continue;
    if (is_space(c)) {
      pending_space = seen_non_space;  // leading whitespace dropped
      continue;
    }
    if (pending_space) {
      out.append(static_cast<UChar32>(' '));
      pending_space = false;
    }
    out.append(c);
    seen_non_space = true;
  }

  std::string result;
  out.toUTF8String(result);
  return result;
}

TokenSeq tokenize(std::string_view line) {
  TokenSeq seq;
  seq.surface.assign(line);
  while (!seq.surface.empty() &&
         (seq.surface.back() == '\n' || seq.surface.back() == '\r')) {
    seq.surface.pop_back();
  }
  std::string norm = normalize(seq.surface);
  std::size_t start = 0;
  while (start < norm.size()) {
    std::size_t end = norm.find(' ', start);
    if (end == std::string::npos) end = norm.size();
    seq.tokens.emplace_back(norm, start, end - start);
    start = end + 1;
  }
  return seq;
}

TokenSeq from_tokens(std::vector<std::string> tokens) {
  TokenSeq seq;
  seq.tokens = std::move(tokens);
  seq.surface = seq.joined();
  return seq;
}

std::string TokenSeq::joined() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace btf
