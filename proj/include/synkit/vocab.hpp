//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace synkit::vocab {

// Byte-level vocabulary shared by cell descriptions, SMILES text and the
// language model: 256 raw bytes plus two sentinels.
inline constexpr std::int64_t kEos = 256;
inline constexpr std::int64_t kPadDesc = 257;  // stands in for an empty description
inline constexpr std::int64_t kSize = 258;

inline std::vector<std::int64_t> tokenize(std::string_view text) {
  std::vector<std::int64_t> ids;
  ids.reserve(text.size());
  for (unsigned char c : text) ids.push_back(static_cast<std::int64_t>(c));
  return ids;
}

inline std::string detokenize(const std::vector<std::int64_t>& ids) {
  std::string out;
  out.reserve(ids.size());
  for (auto id : ids) {
    if (id >= 0 && id < 256) out.push_back(static_cast<char>(id));
  }
  return out;
}

}  // namespace synkit::vocab
