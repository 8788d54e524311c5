#include <doctest.h>

#include "memegp/errors.hpp"
#include "memegp/image_ops.hpp"
#include "support.hpp"

using namespace memegp;
using namespace testsupport;

TEST_CASE("convolve: all-ones image and filter gives 9")
{
    Filter ones;
    ones.coefficients.fill(1.0);
    auto const out = convolve(filled(3, 3, 1.0), ones);
    REQUIRE(out.height() == 1);
    REQUIRE(out.width() == 1);
    CHECK(out(0, 0) == 9.0);
}

TEST_CASE("convolve: negative response is clipped by ReLU")
{
    Filter neg;
    neg.coefficients.fill(-1.0);
    CHECK(convolve(filled(3, 3, 1.0), neg)(0, 0) == 0.0);
}

TEST_CASE("convolve: matches sliding-window oracle on random pairs")
{
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        auto const h = 3 + uniform_index(rng, 10);
        auto const w = 3 + uniform_index(rng, 10);
        auto const img = random_image(rng, h, w);
        auto const f = random_filter(rng);
        auto const got = convolve(img, f);
        auto const want = oracle_correlate(img, f, true);
        REQUIRE(got.height() == h - 2);
        REQUIRE(got.width() == w - 2);
        for (std::size_t k = 0; k < got.size(); ++k) {
            CHECK(std::abs(got.pixels()[k] - want.pixels()[k]) <= 1e-12);
            CHECK(got.pixels()[k] >= 0.0);
        }
    }
}

TEST_CASE("convolve: too small image throws")
{
    CHECK_THROWS_AS(convolve(filled(2, 5, 0.0), Filter {}), ImageTooSmall);
    CHECK_THROWS_AS(convolve(filled(5, 2, 0.0), Filter {}), ImageTooSmall);
}

TEST_CASE("pool: 2x2 block maximum")
{
    Image img(2, 2, std::vector<double> { 1, 2, 3, 4 });
    auto const out = pool(img);
    REQUIRE(out.size() == 1);
    CHECK(out(0, 0) == 4.0);
}

TEST_CASE("pool: distinct 4x4 matches oracle")
{
    std::vector<double> px(16);
    for (int i = 0; i < 16; ++i) {
        px[static_cast<std::size_t>(i)] = static_cast<double>((i * 7) % 16);
    }
    Image img(4, 4, px);
    CHECK(pool(img) == oracle_pool(img));
}

TEST_CASE("pool: odd trailing row and column are dropped")
{
    Rng rng(3);
    auto const img = random_image(rng, 5, 5);
    auto const out = pool(img);
    CHECK(out.height() == 2);
    CHECK(out.width() == 2);
    CHECK(out == oracle_pool(img));
}

TEST_CASE("pool: shape law when applied twice")
{
    Rng rng(4);
    for (std::size_t h = 4; h < 20; h += 3) {
        for (std::size_t w = 4; w < 20; w += 5) {
            auto const twice = pool(pool(random_image(rng, h, w)));
            CHECK(twice.height() == (h / 2) / 2);
            CHECK(twice.width() == (w / 2) / 2);
        }
    }
}

TEST_CASE("pool: too small image throws")
{
    CHECK_THROWS_AS(pool(filled(1, 4, 0.0)), ImageTooSmall);
}

TEST_CASE("realize_window: full window covers every pixel")
{
    CHECK(realize_window(full_window(), 4, 4).size() == 16);
}

TEST_CASE("realize_window: tiny window clamps to one pixel")
{
    WindowSpec const w { WindowShape::Rectangle, 0.0, 0.0, 0.01, 0.01 };
    auto const px = realize_window(w, 4, 4);
    REQUIRE(px.size() == 1);
    CHECK(px[0] == Pixel { 0, 0 });
}

TEST_CASE("realize_window: row and column shapes are one pixel thick")
{
    WindowSpec row { WindowShape::Row, 0.25, 0.5, 0.5, 0.9 };
    auto const r = realize_window(row, 8, 8);
    CHECK(r.size() == 4);
    for (auto const& p : r) {
        CHECK(p.row == 4);
    }
    WindowSpec col { WindowShape::Column, 0.5, 0.0, 0.9, 0.5 };
    auto const c = realize_window(col, 8, 8);
    CHECK(c.size() == 4);
    for (auto const& p : c) {
        CHECK(p.col == 4);
    }
}

TEST_CASE("realize_window: ellipse matches per-pixel inequality")
{
    WindowSpec const w { WindowShape::Ellipse, 0.5, 0.5, 0.5, 0.5 };
    // Rectangle rows/cols 8..15 on a 16x16 image; centre (12,12), radii 4.
    std::vector<Pixel> want;
    for (std::size_t r = 0; r < 16; ++r) {
        for (std::size_t c = 0; c < 16; ++c) {
            auto const dy = (static_cast<double>(r) + 0.5 - 12.0) / 4.0;
            auto const dx = (static_cast<double>(c) + 0.5 - 12.0) / 4.0;
            if (dy * dy + dx * dx <= 1.0) {
                want.push_back({ r, c });
            }
        }
    }
    CHECK(realize_window(w, 16, 16) == want);
    CHECK(want.size() < 64);
}

TEST_CASE("realize_window: pure function")
{
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        auto const w = random_window(rng);
        CHECK(realize_window(w, 13, 9) == realize_window(w, 13, 9));
        CHECK_FALSE(realize_window(w, 13, 9).empty());
    }
}

TEST_CASE("aggregate: constant images")
{
    Rng rng(6);
    for (int i = 0; i < 20; ++i) {
        auto const w = random_window(rng);
        CHECK(aggregate(filled(8, 8, 1.0), w, AggStat::Mean) == doctest::Approx(1.0));
        CHECK(aggregate(filled(8, 8, 0.3), w, AggStat::Std) == doctest::Approx(0.0));
    }
}

TEST_CASE("aggregate: quadrant statistics match direct enumeration")
{
    Rng rng(8);
    auto const img = random_image(rng, 8, 8);
    std::vector<double> vals;
    for (std::size_t r = 2; r < 6; ++r) {
        for (std::size_t c = 2; c < 6; ++c) {
            vals.push_back(img(r, c));
        }
    }
    auto const want = oracle_stats(vals);
    WindowSpec const w { WindowShape::Rectangle, 0.25, 0.25, 0.5, 0.5 };
    AggStat const stats[] = { AggStat::Min, AggStat::Max, AggStat::Mean, AggStat::Std };
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::abs(aggregate(img, w, stats[i]) - want[i]) <= 1e-12);
    }
}

TEST_CASE("aggregate: min <= mean <= max and std >= 0")
{
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        auto const img = random_image(rng, 3 + uniform_index(rng, 12), 3 + uniform_index(rng, 12), -2.0, 2.0);
        auto const w = random_window(rng);
        auto const mn = aggregate(img, w, AggStat::Min);
        auto const mean = aggregate(img, w, AggStat::Mean);
        auto const mx = aggregate(img, w, AggStat::Max);
        CHECK(mn <= mean + 1e-12);
        CHECK(mean <= mx + 1e-12);
        CHECK(aggregate(img, w, AggStat::Std) >= 0.0);
    }
}

TEST_CASE("aggregate: empty pixel set throws")
{
    std::vector<Pixel> none;
    CHECK_THROWS_AS(aggregate(filled(4, 4, 1.0), none, AggStat::Mean), EmptyWindow);
}
