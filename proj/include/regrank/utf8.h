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

#ifndef REGRANK_UTF8_H_
#define REGRANK_UTF8_H_

#include <cstddef>
#include <string>
#include <string_view>

namespace regrank::utf8 {

// Number of Unicode scalar values in a UTF-8 string. Throws DataError on
// malformed input.
std::size_t Length(std::string_view text);

// Byte offset of the code point at index `cp` (cp == Length(text) gives
// text.size()).
std::size_t ByteOffset(std::string_view text, std::size_t cp);

// Slice [cp_begin, cp_end) in code point units.
std::string Slice(std::string_view text, std::size_t cp_begin,
                  std::size_t cp_end);

}  // namespace regrank::utf8

#endif  // REGRANK_UTF8_H_
