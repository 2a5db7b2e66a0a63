// Copyright (C) 2026 the tadet authors
// SPDX-License-Identifier: Apache-2.0
//
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "tadet/windowing.hpp"

using namespace tadet;

namespace {

ClipFeatureSequence make_sequence(int num_clips, int c = 3, int v = 2, int nn = 2) {
    ClipFeatureSequence seq;
    seq.video_id = "t";
    seq.features = MatF(num_clips, c);
    seq.verb_scores = MatF(num_clips, v, 1.0f / v);
    seq.noun_scores = MatF(num_clips, nn, 1.0f / nn);
    for (int r = 0; r < num_clips; ++r) {
        for (int k = 0; k < c; ++k) {
            seq.features(r, k) = static_cast<float>(r * 10 + k);
        }
    }
    return seq;
}

}  // namespace

TEST_CASE("plan_windows enumerates the stride grid with tail padding") {
    const WindowConfig cfg;

    const auto w400 = plan_windows(400, cfg);
    REQUIRE(w400.size() == 4);
    CHECK(w400[0].start_clip == 0);
    CHECK(w400[1].start_clip == 100);
    CHECK(w400[2].start_clip == 200);
    CHECK(w400[3].start_clip == 300);
    for (int i = 0; i < 3; ++i) {
        CHECK(w400[i].pad_clips == 0);
    }
    CHECK(w400[3].pad_clips == 100);

    const auto w150 = plan_windows(150, cfg);
    REQUIRE(w150.size() == 2);
    CHECK(w150[0].start_clip == 0);
    CHECK(w150[0].pad_clips == 50);
    CHECK(w150[1].start_clip == 100);
    CHECK(w150[1].pad_clips == 150);

    const auto w1 = plan_windows(1, cfg);
    REQUIRE(w1.size() == 1);
    CHECK(w1[0].start_clip == 0);
    CHECK(w1[0].pad_clips == 199);

    CHECK_THROWS_AS(plan_windows(0, cfg), std::invalid_argument);
}

TEST_CASE("window config validation") {
    WindowConfig bad{200, 100, 150};  // max duration > stride
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {200, 250, 100};  // stride > window
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {200, 150, 100};  // stride + duration > window breaks coverage
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    WindowConfig ok{40, 20, 20};
    CHECK_NOTHROW(ok.validate());
}

TEST_CASE("every admissible segment lands fully inside some window") {
    const WindowConfig cfg;
    const TimeBase tb;
    const double spc = tb.seconds_per_clip();
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> clips(120, 4000);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const int num_clips = clips(rng);
        const double video_dur = num_clips * spc;
        const double max_dur = std::min(cfg.max_duration_clips * spc, video_dur);
        const double dur = 0.05 + unit(rng) * (max_dur - 0.05);
        const double start = unit(rng) * (video_dur - dur);
        const Segment seg(start, start + dur);
        bool covered = false;
        for (const Window& w : plan_windows(num_clips, cfg)) {
            const double ws = clip_to_seconds(w.start_clip, tb);
            const double we = ws + w.len_clips * spc;
            if (ws <= seg.start_s && seg.end_s <= we) {
                covered = true;
                break;
            }
        }
        REQUIRE(covered);
    }
}

TEST_CASE("consecutive windows overlap by window length minus stride") {
    const WindowConfig cfg;
    const auto windows = plan_windows(950, cfg);
    for (std::size_t i = 1; i < windows.size(); ++i) {
        const int overlap =
            windows[i - 1].start_clip + windows[i - 1].len_clips - windows[i].start_clip;
        CHECK(overlap == cfg.window_len_clips - cfg.stride_clips);
    }
}

TEST_CASE("unpadded rows cover each clip between once and ceil(L/stride) times") {
    const WindowConfig cfg;
    const int num_clips = 1234;
    std::vector<int> counts(num_clips, 0);
    for (const Window& w : plan_windows(num_clips, cfg)) {
        for (int r = 0; r < w.len_clips - w.pad_clips; ++r) {
            ++counts[w.start_clip + r];
        }
    }
    const int bound = (cfg.window_len_clips + cfg.stride_clips - 1) / cfg.stride_clips;
    for (int t = 0; t < num_clips; ++t) {
        CHECK(counts[t] >= 1);
        CHECK(counts[t] <= bound);
    }
}

TEST_CASE("slice_window copies rows and pads feature zeros / uniform scores") {
    const WindowConfig cfg;

    SECTION("pad-free window is a pure copy") {
        const auto seq = make_sequence(400);
        const auto windows = plan_windows(400, cfg);
        const WindowSlice s = slice_window(seq, windows[1]);
        for (int r = 0; r < 200; ++r) {
            for (int c = 0; c < 3; ++c) {
                CHECK(s.features(r, c) == seq.features(100 + r, c));
            }
        }
    }

    SECTION("short video pads the tail") {
        const auto seq = make_sequence(150);
        const auto windows = plan_windows(150, cfg);
        const WindowSlice s = slice_window(seq, windows[0]);
        for (int r = 0; r < 150; ++r) {
            CHECK(s.features(r, 0) == seq.features(r, 0));
        }
        for (int r = 150; r < 200; ++r) {
            for (int c = 0; c < 3; ++c) {
                CHECK(s.features(r, c) == 0.0f);
            }
            CHECK(s.verb_scores(r, 0) == 0.5f);
            CHECK(s.noun_scores(r, 1) == 0.5f);
        }
    }

    SECTION("constant video stays constant over unpadded rows") {
        ClipFeatureSequence seq = make_sequence(250);
        for (int r = 0; r < 250; ++r) {
            for (int c = 0; c < 3; ++c) {
                seq.features(r, c) = 1.5f;
            }
        }
        for (const Window& w : plan_windows(250, cfg)) {
            const WindowSlice s = slice_window(seq, w);
            for (int r = 0; r < w.len_clips - w.pad_clips; ++r) {
                CHECK(s.features(r, 0) == 1.5f);
            }
        }
    }

    SECTION("window inconsistent with the sequence is rejected") {
        const auto seq = make_sequence(150);
        Window w{0, 200, 0};  // claims no padding over a 150-clip video
        CHECK_THROWS_AS(slice_window(seq, w), std::invalid_argument);
        w = Window{300, 200, 50};  // starts past the end
        CHECK_THROWS_AS(slice_window(seq, w), std::invalid_argument);
    }
}

TEST_CASE("localize maps window-local candidates to video seconds") {
    const TimeBase tb;
    const Window w0{0, 200, 0};
    const Segment a = localize(w0, 0, 100, tb);
    CHECK(a.start_s == 0.0);
    CHECK_THAT(a.end_s, Catch::Matchers::WithinAbs(26.667, 1e-3));

    const Window w100{100, 200, 0};
    const Segment b = localize(w100, 0, 1, tb);
    CHECK_THAT(b.start_s, Catch::Matchers::WithinAbs(26.667, 1e-3));
    CHECK_THAT(b.end_s, Catch::Matchers::WithinAbs(26.933, 1e-3));

    const Segment full = localize(w0, 0, 200, tb);
    CHECK_THAT(full.end_s, Catch::Matchers::WithinAbs(53.333, 1e-3));

    CHECK_THROWS_AS(localize(w0, 150, 100, tb), std::invalid_argument);
    CHECK_THROWS_AS(localize(w0, 0, 0, tb), std::invalid_argument);
}

TEST_CASE("localize inverts the global-to-local coordinate change") {
    const TimeBase tb;
    const double spc = tb.seconds_per_clip();
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> start_dist(0, 150);
    std::uniform_int_distribution<int> dur_dist(1, 50);
    const Window w{300, 200, 0};
    for (int i = 0; i < 200; ++i) {
        const int s = start_dist(rng);
        const int d = dur_dist(rng);
        const Segment seg = localize(w, s, d, tb);
        // recover local coordinates from the global segment
        const int s_back = static_cast<int>(std::llround(seg.start_s / spc)) - w.start_clip;
        const int d_back = static_cast<int>(std::llround(seg.duration() / spc));
        CHECK(s_back == s);
        CHECK(d_back == d);
        const Segment again = localize(w, s_back, d_back, tb);
        CHECK_THAT(again.start_s, Catch::Matchers::WithinAbs(seg.start_s, 1e-12));
        CHECK_THAT(again.end_s, Catch::Matchers::WithinAbs(seg.end_s, 1e-12));
    }
}
