// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "entcal/distribution.hpp"
#include "entcal/error.hpp"
#include "entcal/ngram_model.hpp"
#include "entcal/provider.hpp"
#include "entcal/util.hpp"
#include "entcal/vocabulary.hpp"
#include "oracles.hpp"

// Expects `stmt` to throw entcal::Error with the given code.
#define EXPECT_ENTCAL_ERROR(stmt, expected_code)                                   \
  do {                                                                             \
    try {                                                                          \
      stmt;                                                                        \
      ADD_FAILURE() << "no entcal::Error thrown by " #stmt;                        \
    } catch (const ::entcal::Error& e) {                                           \
      EXPECT_EQ(::entcal::error_code_name(e.code()),                               \
                ::entcal::error_code_name(::entcal::ErrorCode::expected_code))     \
          << e.what();                                                             \
    }                                                                              \
  } while (0)

namespace entcal::testing {

using namespace entcal::oracles;

inline std::shared_ptr<const NGramModel> toy_model(const std::vector<std::string>& lines,
                                                   int order, int min_count = 1) {
  auto vocab = build_vocabulary(lines, min_count);
  return std::make_shared<const NGramModel>(train_ngram(lines, vocab, order));
}

inline std::string source_path(const std::string& rel) {
  return std::string(ENTCAL_SOURCE_DIR) + "/" + rel;
}

}  // namespace entcal::testing
