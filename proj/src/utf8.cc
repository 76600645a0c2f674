// Copyright 2026 The regrank Authors.
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

#include "regrank/utf8.h"

#include "regrank/errors.h"

namespace regrank::utf8 {
namespace {

// Width of the sequence starting with lead byte c, or 0 if c cannot start one.
int SequenceWidth(unsigned char c) {
  if (c < 0x80) return 1;
  if ((c & 0xE0) == 0xC0) return 2;
  if ((c & 0xF0) == 0xE0) return 3;
  if ((c & 0xF8) == 0xF0) return 4;
  return 0;
}

std::size_t Advance(std::string_view text, std::size_t pos) {
  const int width = SequenceWidth(static_cast<unsigned char>(text[pos]));
  if (width == 0 || pos + width > text.size()) {
    throw DataError("malformed UTF-8 at byte " + std::to_string(pos));
  }
  for (int i = 1; i < width; ++i) {
    if ((static_cast<unsigned char>(text[pos + i]) & 0xC0) != 0x80) {
      throw DataError("malformed UTF-8 at byte " + std::to_string(pos + i));
    }
  }
  return pos + width;
}

}  // namespace

std::size_t Length(std::string_view text) {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < text.size(); pos = Advance(text, pos)) ++n;
  return n;
}

std::size_t ByteOffset(std::string_view text, std::size_t cp) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < cp; ++i) {
    if (pos >= text.size()) {
      throw DataError("code point offset " + std::to_string(cp) +
                      " past end of text");
    }
    pos = Advance(text, pos);
  }
  return pos;
}

std::string Slice(std::string_view text, std::size_t cp_begin,
                  std::size_t cp_end) {
  const std::size_t b = ByteOffset(text, cp_begin);
  const std::size_t e = ByteOffset(text, cp_end);
  return std::string(text.substr(b, e - b));
}

}  // namespace regrank::utf8
