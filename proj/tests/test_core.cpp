// Copyright (C) 2026 the tadet authors
// SPDX-License-Identifier: Apache-2.0
//
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "tadet/core.hpp"

using namespace tadet;

TEST_CASE("segment_iou frozen examples") {
    CHECK(segment_iou({0.0, 10.0}, {0.0, 10.0}) == 1.0);
    CHECK(segment_iou({0.0, 10.0}, {20.0, 30.0}) == 0.0);
    CHECK_THAT(segment_iou({0.0, 10.0}, {5.0, 15.0}),
               Catch::Matchers::WithinAbs(5.0 / 15.0, 1e-12));
    CHECK_THAT(segment_iou({0.0, 10.0}, {5.0, 15.0}),
               Catch::Matchers::WithinAbs(0.33333, 1e-5));
    // touching segments do not overlap
    CHECK(segment_iou({0.0, 10.0}, {10.0, 20.0}) == 0.0);
}

TEST_CASE("segment_iou properties") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> pos(0.0, 100.0);
    std::uniform_real_distribution<double> dur(0.01, 30.0);
    for (int i = 0; i < 500; ++i) {
        const Segment a(pos(rng), pos(rng) + 100.0 + dur(rng));
        const Segment b(pos(rng), pos(rng) + 100.0 + dur(rng));
        const double ab = segment_iou(a, b);
        CHECK(ab == segment_iou(b, a));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        CHECK(segment_iou(a, a) == 1.0);
        const double shift = pos(rng);
        const Segment as(a.start_s + shift, a.end_s + shift);
        const Segment bs(b.start_s + shift, b.end_s + shift);
        CHECK_THAT(segment_iou(as, bs), Catch::Matchers::WithinAbs(ab, 1e-12));
    }
}

TEST_CASE("segment construction rejects bad intervals") {
    CHECK_THROWS_AS(Segment(5.0, 5.0), std::invalid_argument);
    CHECK_THROWS_AS(Segment(5.0, 4.0), std::invalid_argument);
    CHECK_THROWS_AS(Segment(-1.0, 4.0), std::invalid_argument);
}

TEST_CASE("clip_to_seconds follows the 60 fps / 16 frame default") {
    const TimeBase tb;
    CHECK(clip_to_seconds(0, tb) == 0.0);
    CHECK_THAT(clip_to_seconds(1, tb), Catch::Matchers::WithinAbs(0.26667, 1e-5));
    CHECK_THAT(clip_to_seconds(100, tb), Catch::Matchers::WithinAbs(26.667, 1e-3));
    CHECK_THAT(clip_to_seconds(100, tb),
               Catch::Matchers::WithinAbs(100.0 * 16.0 / 60.0, 1e-12));
    CHECK_THROWS_AS(clip_to_seconds(-1, tb), std::invalid_argument);

    for (int i = 0; i < 1000; ++i) {
        CHECK(clip_to_seconds(i + 1, tb) > clip_to_seconds(i, tb));
    }
}

TEST_CASE("timebase validation and floor rule for partial clips") {
    TimeBase tb;
    tb.fps = 0.0;
    CHECK_THROWS_AS(tb.validate(), std::invalid_argument);
    tb = TimeBase{60.0, 0};
    CHECK_THROWS_AS(tb.validate(), std::invalid_argument);

    const TimeBase def;
    CHECK(num_clips_for_frames(0, def) == 0);
    CHECK(num_clips_for_frames(15, def) == 0);
    CHECK(num_clips_for_frames(16, def) == 1);
    CHECK(num_clips_for_frames(31, def) == 1);  // trailing partial clip dropped
    CHECK(num_clips_for_frames(3200, def) == 200);
}

TEST_CASE("score row validation renormalizes within tolerance and rejects beyond") {
    MatF ok(2, 4);
    ok(0, 0) = 0.25f; ok(0, 1) = 0.25f; ok(0, 2) = 0.25f; ok(0, 3) = 0.250004f;
    ok(1, 0) = 1.0f;  ok(1, 1) = 0.0f;  ok(1, 2) = 0.0f;  ok(1, 3) = 0.0f;
    normalize_score_rows(ok);
    double sum = 0.0;
    for (int c = 0; c < 4; ++c) {
        sum += ok(0, c);
    }
    CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-7));

    MatF negative(1, 2);
    negative(0, 0) = -0.1f;
    negative(0, 1) = 1.1f;
    CHECK_THROWS_AS(normalize_score_rows(negative), std::invalid_argument);

    MatF off(1, 2);
    off(0, 0) = 0.6f;
    off(0, 1) = 0.6f;
    CHECK_THROWS_AS(normalize_score_rows(off), std::invalid_argument);
}
