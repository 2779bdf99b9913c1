// Copyright 2026 The Crydet Authors
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "crydet/detect.hpp"
#include "crydet/harness.hpp"
#include "crydet/rng.hpp"
#include "oracles.hpp"

using namespace crydet;
using detect::Interval;
using detect::LabelTrack;
using detect::SecondTimeline;

namespace {

SecondTimeline timeline_of(std::vector<bool> bits) {
  SecondTimeline t;
  t.crying = std::move(bits);
  return t;
}

std::vector<bool> runs(std::initializer_list<std::pair<bool, int>> parts) {
  std::vector<bool> v;
  for (auto [value, len] : parts) v.insert(v.end(), len, value);
  return v;
}

}  // namespace

TEST_CASE("canonicalize merges, drops, validates") {
  // crying [0,2] and [4,8] (gap 2 <= 5) -> merged [0,8]
  auto t1 = LabelTrack::canonicalize({{0, 2}, {4, 8}}, 30);
  REQUIRE(t1.crying_intervals().size() == 1);
  CHECK(t1.crying_intervals()[0].start_s == 0.0);
  CHECK(t1.crying_intervals()[0].end_s == 8.0);

  // isolated [10,12] (duration 2 < 3) -> dropped
  auto t2 = LabelTrack::canonicalize({{10, 12}}, 30);
  CHECK(t2.crying_intervals().empty());

  // empty input -> single not_crying interval covering the recording
  auto t3 = LabelTrack::canonicalize({}, 30);
  CHECK(t3.crying_intervals().empty());
  const auto full = t3.full_intervals();
  REQUIRE(full.size() == 1);
  CHECK(full[0].start_s == 0.0);
  CHECK(full[0].end_s == 30.0);
  CHECK_FALSE(full[0].crying);

  CHECK_THROWS_AS(LabelTrack::canonicalize({{3, 2}}, 30), std::invalid_argument);
  CHECK_THROWS_AS(LabelTrack::canonicalize({{0, 40}}, 30), std::invalid_argument);
  CHECK_THROWS_AS(LabelTrack::canonicalize({{-1, 4}}, 30), std::invalid_argument);
}

TEST_CASE("canonicalize is idempotent and matches the reference") {
  Rng rng(13);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(8);
    std::vector<Interval> raw;
    std::vector<oracles::RefInterval> ref_raw;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = rng.uniform(0.0, 90.0);
      const double b = a + rng.uniform(0.1, 12.0);
      raw.push_back({a, b});
      ref_raw.push_back({a, b});
    }
    const auto track = LabelTrack::canonicalize(raw, 200.0);
    const auto ref = oracles::reference_canonicalize(ref_raw);
    REQUIRE(track.crying_intervals().size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(track.crying_intervals()[i].start_s ==
            doctest::Approx(ref[i].start).epsilon(1e-12));
      CHECK(track.crying_intervals()[i].end_s ==
            doctest::Approx(ref[i].end).epsilon(1e-12));
    }
    // idempotence: re-canonicalizing the canonical output changes nothing
    const auto again =
        LabelTrack::canonicalize(track.crying_intervals(), 200.0);
    REQUIRE(again.crying_intervals().size() == track.crying_intervals().size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(again.crying_intervals()[i].start_s ==
            track.crying_intervals()[i].start_s);
      CHECK(again.crying_intervals()[i].end_s ==
            track.crying_intervals()[i].end_s);
    }
  }
}

TEST_CASE("second labels use majority coverage") {
  const auto t = LabelTrack::canonicalize({{2.4, 7.1}}, 10);
  const auto labels = t.second_labels(10);
  CHECK_FALSE(labels[1]);
  CHECK(labels[2]);   // covered 0.6
  CHECK(labels[6]);   // fully covered
  CHECK_FALSE(labels[7]);  // covered 0.1
}

TEST_CASE("windows_to_seconds coverage and mask") {
  // one crying window at start 3 -> seconds 3..7
  auto t1 = detect::windows_to_seconds({3}, 10);
  CHECK(t1.crying == runs({{false, 3}, {true, 5}, {false, 2}}));

  // crying windows at 0 and 2 -> seconds 0..6
  auto t2 = detect::windows_to_seconds({0, 2}, 10);
  CHECK(t2.crying == runs({{true, 7}, {false, 3}}));

  // no crying windows -> all false
  auto t3 = detect::windows_to_seconds({}, 5);
  CHECK(t3.crying == std::vector<bool>(5, false));

  // seconds outside the active mask stay not_crying
  std::vector<bool> mask(10, true);
  mask[4] = false;
  auto t4 = detect::windows_to_seconds({3}, 10, &mask);
  CHECK_FALSE(t4.crying[4]);
  CHECK(t4.crying[3]);
  CHECK(t4.crying[5]);

  CHECK_THROWS_AS(detect::windows_to_seconds({6}, 10), std::invalid_argument);
  CHECK_THROWS_AS(detect::windows_to_seconds({-1}, 10), std::invalid_argument);
}

TEST_CASE("windows_to_seconds is monotone in the window set") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 20 + rng.uniform_index(40);
    std::vector<int> starts;
    for (std::size_t i = 0; i + 5 <= n; ++i) {
      if (rng.uniform() < 0.2) starts.push_back(static_cast<int>(i));
    }
    const auto base = detect::windows_to_seconds(starts, n);
    auto more = starts;
    more.push_back(static_cast<int>(rng.uniform_index(n - 4)));
    const auto grown = detect::windows_to_seconds(more, n);
    for (std::size_t s = 0; s < n; ++s) {
      if (base.crying[s]) CHECK(grown.crying[s]);
    }
  }
}

TEST_CASE("smooth_timeline: worked examples") {
  // C6 N3 C6 -> C15
  auto a = detect::smooth_timeline(
      timeline_of(runs({{true, 6}, {false, 3}, {true, 6}})));
  CHECK(a.crying == std::vector<bool>(15, true));

  // isolated C4 in long N -> all N
  auto b = detect::smooth_timeline(
      timeline_of(runs({{false, 10}, {true, 4}, {false, 10}})));
  CHECK(b.crying == std::vector<bool>(24, false));

  // C6 N3 C4 -> pass 1 bridges to C13, pass 2 keeps it
  auto c = detect::smooth_timeline(
      timeline_of(runs({{true, 6}, {false, 3}, {true, 4}})));
  CHECK(c.crying == std::vector<bool>(13, true));
}

TEST_CASE("smooth_timeline matches the reference on random sequences") {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(200);
    std::vector<bool> bits(n);
    for (std::size_t i = 0; i < n; ++i) bits[i] = rng.uniform() < 0.5;
    const auto got = detect::smooth_timeline(timeline_of(bits));
    CHECK(got.crying == oracles::reference_smooth(bits));

    // no crying run of length <= 5 survives
    std::size_t run = 0;
    for (std::size_t i = 0; i <= got.crying.size(); ++i) {
      if (i < got.crying.size() && got.crying[i]) {
        ++run;
      } else {
        CHECK((run == 0 || run > 5));
        run = 0;
      }
    }
  }
}

TEST_CASE("score: identities and the worked confusion example") {
  auto ones = timeline_of(runs({{true, 4}, {false, 4}}));
  const auto s1 = detect::score(ones, ones);
  CHECK(s1.precision == 1.0);
  CHECK(s1.recall == 1.0);
  CHECK(s1.f1 == 1.0);

  auto none = timeline_of(std::vector<bool>(8, false));
  const auto s2 = detect::score(none, ones);
  CHECK(s2.recall == 0.0);
  CHECK(s2.f1 == 0.0);

  // TP=5, FP=5, FN=3 -> P=0.5, R=0.625, F1~0.5556
  const auto s3 = detect::score_from_counts(5, 5, 3, 10);
  CHECK(s3.precision == doctest::Approx(0.5));
  CHECK(s3.recall == doctest::Approx(0.625));
  CHECK(s3.f1 == doctest::Approx(0.555555).epsilon(1e-4));

  auto shorter = timeline_of(std::vector<bool>(5, false));
  CHECK_THROWS_AS(detect::score(shorter, ones), std::invalid_argument);
}

TEST_CASE("score matches brute-force confusion counts on random pairs") {
  Rng rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(100);
    std::vector<bool> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.uniform() < 0.4;
      t[i] = rng.uniform() < 0.4;
    }
    const auto s = detect::score(timeline_of(p), timeline_of(t));
    const auto c = oracles::count_confusion(p, t);
    CHECK(s.tp == c.tp);
    CHECK(s.fp == c.fp);
    CHECK(s.fn == c.fn);
    CHECK(s.tn == c.tn);
  }
}

TEST_CASE("macro mean and population std") {
  const auto s = detect::summarize_values({1.0, 0.5});
  CHECK(s.mean == doctest::Approx(0.75));
  CHECK(s.stddev == doctest::Approx(0.25));
}

TEST_CASE("metrics writers are stable") {
  detect::EvalReport r;
  detect::ParticipantScore p;
  p.participant_id = "P1";
  p.score = detect::score_from_counts(5, 5, 3, 10);
  r.per_participant.push_back(p);
  r.f1 = detect::summarize_values({p.score.f1});

  std::ostringstream csv;
  detect::write_metrics_csv(r, csv);
  CHECK(csv.str() ==
        "participant,tp,fp,fn,tn,precision,recall,f1\n"
        "P1,5,5,3,10,0.500000,0.625000,0.555556\n");

  std::ostringstream json;
  detect::write_summary_json(r, "af", json);
  CHECK(json.str().find("\"model\": \"af\"") != std::string::npos);

  std::ostringstream tl;
  detect::write_timeline_csv(timeline_of({true, false}), tl);
  CHECK(tl.str() == "second,label\n0,crying\n1,not_crying\n");
}
