// Copyright 2026 The Habitat Forge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "habitat/core/error.hpp"
#include "habitat/core/strings.hpp"
#include "habitat/textcluster/stopwords.hpp"

namespace habitat::textcluster {

/// Lowercases, splits on ASCII non-alphanumerics (bytes >= 0x80 count as
/// word characters so UTF-8 words stay whole) and drops tokens shorter
/// than two bytes and stop words.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 2 && !is_stop_word(cur)) out.push_back(cur);
    cur.clear();
  };
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x80 || std::isalnum(u)) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

/// Dense N x V matrix of TF-IDF rows.
struct DocumentVectors {
  std::vector<std::string> vocabulary;  // sorted, unique
  std::vector<std::string> doc_ids;
  std::vector<double> data;             // row-major N x V
  std::vector<std::size_t> zero_rows;   // documents that were all stop words

  std::size_t rows() const { return doc_ids.size(); }
  std::size_t dims() const { return vocabulary.size(); }
  const double* row(std::size_t i) const { return data.data() + i * dims(); }
  double* row(std::size_t i) { return data.data() + i * dims(); }
  double at(std::size_t i, std::size_t j) const { return data[i * dims() + j]; }
};

/// Smoothed inverse document frequency: ln((1 + N) / (1 + df)) + 1.
inline double smoothed_idf(std::size_t n_docs, std::size_t df) {
  return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(df))) + 1.0;
}

/// Raw-count term frequency times smoothed idf, then each row scaled to unit
/// L2 norm. A row whose document had no surviving tokens stays zero and is
/// listed in `zero_rows`.
inline DocumentVectors vectorize(const std::vector<std::pair<std::string, std::string>>& texts) {
  if (texts.size() < 2) throw Error(ErrorCode::TooFewDocuments, "need at least 2 documents, got " + std::to_string(texts.size()));
  std::vector<std::map<std::string, std::size_t>> counts(texts.size());
  std::map<std::string, std::size_t> df;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (trim(texts[i].second).empty()) throw Error(ErrorCode::EmptyDescriptor, "empty document", texts[i].first);
    for (auto& tok : tokenize(texts[i].second)) ++counts[i][tok];
    for (const auto& [term, _] : counts[i]) ++df[term];
  }

  DocumentVectors dv;
  std::map<std::string, std::size_t> column;
  for (const auto& [term, _] : df) {
    column.emplace(term, dv.vocabulary.size());
    dv.vocabulary.push_back(term);
  }
  const std::size_t n = texts.size();
  const std::size_t v = dv.vocabulary.size();
  dv.data.assign(n * v, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    dv.doc_ids.push_back(texts[i].first);
    double* r = dv.row(i);
    double norm2 = 0.0;
    for (const auto& [term, tf] : counts[i]) {
      const double w = static_cast<double>(tf) * smoothed_idf(n, df[term]);
      r[column[term]] = w;
      norm2 += w * w;
    }
    if (norm2 == 0.0) {
      dv.zero_rows.push_back(i);
      continue;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t j = 0; j < v; ++j) r[j] *= inv;
  }
  return dv;
}

}  // namespace habitat::textcluster
