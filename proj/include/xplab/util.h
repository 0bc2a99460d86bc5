// Copyright 2026 The xplab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef XPLAB_UTIL_H_
#define XPLAB_UTIL_H_

#include <cstdint>
#include <string>
#include <string_view>

namespace xplab {

inline constexpr char kToolVersion[] = "0.1.0";

// 64-bit FNV-1a.
constexpr std::uint64_t Fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// 16 lowercase hex digits of Fnv1a64.
std::string HexDigest(std::string_view data);

}  // namespace xplab

#endif  // XPLAB_UTIL_H_
