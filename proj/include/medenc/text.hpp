// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace medenc {

// Drops control characters (other than whitespace), optionally lowercases,
// applies NFC, then collapses whitespace runs to one space and trims.
// Invalid UTF-8 becomes U+FFFD. Idempotent.
std::string clean_text(std::string_view text, bool lowercase = false);

// Splits cleaned text on single spaces.
std::vector<std::string> split_words(std::string_view cleaned);

// Code points of valid UTF-8 text, each as its own string.
std::vector<std::string> utf8_chars(std::string_view text);

}  // namespace medenc
