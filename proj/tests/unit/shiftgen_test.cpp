// Copyright 2026 The CTA Authors. All Rights Reserved.
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

#include <algorithm>
#include <numeric>
#include <set>

#include "cta/error.hpp"
#include "cta/shiftgen.hpp"
#include "gtest/gtest.h"

namespace cta {
namespace {

double mean_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / a.size();
}

TEST(ShiftgenTest, DefaultDomainsAreWellFormed) {
  const auto ctx = default_contextual_domains();
  const auto sem = default_semantic_domains();
  ASSERT_EQ(ctx.size(), 11u);
  ASSERT_EQ(sem.size(), 4u);
  EXPECT_EQ(ctx.front().kind, ShiftKind::kIdentity);
  std::set<int> ids;
  for (const auto& d : ctx) ids.insert(d.id);
  for (const auto& d : sem) {
    ids.insert(d.id);
    EXPECT_EQ(d.kind, ShiftKind::kSemantic);
  }
  EXPECT_EQ(ids.size(), 15u);
  for (const auto& d : ctx) EXPECT_NO_THROW(d.validate());
}

TEST(ShiftgenTest, ValidationRejectsOutOfRangeParameters) {
  DomainSpec d = default_contextual_domains()[1];
  d.contextual.occluder_fraction = 0.5;
  EXPECT_THROW(d.validate(), Error);
  d = default_contextual_domains()[1];
  d.contextual.gain[2] = -1.0;
  EXPECT_THROW(generate_domain(d, 1), Error);
}

TEST(ShiftgenTest, GenerationIsDeterministicAndBalanced) {
  const DomainSpec d = default_contextual_domains()[5];
  const Dataset a = generate_domain(d, 3);
  const Dataset b = generate_domain(d, 3);
  EXPECT_TRUE(bit_identical(a.images, b.images));
  ASSERT_EQ(a.size(), 30u);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a.labels[k], static_cast<int>(k % 10));
  const auto [lo, hi] = std::minmax_element(a.images.values().begin(), a.images.values().end());
  EXPECT_GE(*lo, 0.0f);
  EXPECT_LE(*hi, 1.0f);
  EXPECT_EQ(render_sample(d, 7), std::vector<float>(a.images.raw() + 7 * 3072, a.images.raw() + 8 * 3072));
}

TEST(ShiftgenTest, ShiftsKeepGeometryButChangeAppearance) {
  const auto ctx = default_contextual_domains();
  DomainSpec clean = ctx.front();
  const auto base = render_sample(clean, 4);
  for (std::size_t i = 1; i < ctx.size(); ++i) {
    DomainSpec shifted = ctx[i];
    shifted.seed = clean.seed;
    EXPECT_GT(mean_abs_diff(render_sample(shifted, 4), base), 0.01) << ctx[i].name;
  }
  for (DomainSpec s : default_semantic_domains()) {
    s.seed = clean.seed;
    if (s.style == Style::kSolid) {
      EXPECT_EQ(render_sample(s, 4), base);
    } else {
      EXPECT_GT(mean_abs_diff(render_sample(s, 4), base), 0.01) << s.name;
    }
  }
}

TEST(ShiftgenTest, ShapeMasksDifferByClass) {
  for (std::size_t c = 0; c < 10; ++c) {
    const auto m = render_shape_mask(1, c);
    ASSERT_EQ(m.size(), kImageSize * kImageSize);
    const double area = std::accumulate(m.begin(), m.end(), 0.0);
    EXPECT_GT(area, 20.0) << to_string(static_cast<ShapeClass>(c));
    EXPECT_LT(area, 700.0) << to_string(static_cast<ShapeClass>(c));
  }
}

TEST(ShiftgenTest, SplitIsStratifiedAndDisjoint) {
  const Dataset full = generate_domain(default_contextual_domains().front(), 10);
  const auto [train, val] = split_train_val(full, 0.8, 4);
  EXPECT_EQ(train.size(), 80u);
  EXPECT_EQ(val.size(), 20u);
  std::vector<int> counts(10, 0);
  for (int l : val.labels) ++counts[l];
  for (int c : counts) EXPECT_EQ(c, 2);
  const auto again = split_train_val(full, 0.8, 4);
  EXPECT_TRUE(bit_identical(again.second.images, val.images));
  EXPECT_THROW(split_train_val(generate_domain(default_contextual_domains().front(), 1), 0.5, 0),
               Error);
}

TEST(ShiftgenTest, StreamVisitsEverySampleOnceInDomainOrder) {
  const auto ctx = default_contextual_domains();
  const std::vector<Dataset> domains{generate_domain(ctx[3], 2), generate_domain(ctx[1], 3)};
  const Stream s = stream_batches(domains, 8, 77);
  std::size_t seen = 0;
  int last_domain = domains.front().domain_id;
  bool switched = false;
  for (const auto& b : s.batches) {
    if (b.domain_id != last_domain) {
      EXPECT_FALSE(switched) << "domains must not interleave";
      switched = true;
      last_domain = b.domain_id;
    }
    EXPECT_GE(b.size(), 2u);
    EXPECT_LE(b.size(), 8u);
    seen += b.size();
  }
  EXPECT_EQ(seen + s.dropped_samples, 50u);
  // 20 = 8 + 8 + 4 and 30 = 8 + 8 + 8 + 6: nothing dropped.
  EXPECT_EQ(s.dropped_samples, 0u);
  const Stream again = stream_batches(domains, 8, 77);
  const Stream other = stream_batches(domains, 8, 78);
  EXPECT_EQ(again.batches.front().labels, s.batches.front().labels);
  EXPECT_NE(other.batches.front().labels, s.batches.front().labels);
}

TEST(ShiftgenTest, SingleTrailingSampleIsDropped) {
  const std::vector<Dataset> domains{generate_domain(default_contextual_domains()[2], 1)};
  const Stream s = stream_batches(domains, 3, 1);  // 10 = 3 + 3 + 3 + 1
  EXPECT_EQ(s.dropped_samples, 1u);
  EXPECT_EQ(s.batches.size(), 3u);
}

}  // namespace
}  // namespace cta
