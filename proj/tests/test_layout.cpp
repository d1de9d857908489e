#include "cream/layout.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <map>
#include <random>
#include <set>

using namespace cream;

namespace {

RegionConfig cfg(LayoutMode mode, uint64_t boundary, uint32_t rows = 16)
{
    RegionConfig c;
    c.mode = mode;
    c.geometry.rows_per_bank = rows;
    c.boundary_pages = boundary;
    return c;
}

std::vector<uint64_t> boundaries(const ModuleGeometry& g)
{
    return {0, g.baseline_pages() / 2, g.baseline_pages()};
}

} // namespace

TEST_CASE("capacity at full boundary")
{
    CHECK(capacity_pages(cfg(LayoutMode::InterWrap, 128)) == 144);
    CHECK(capacity_pages(cfg(LayoutMode::Packed, 128)) == 144);
    CHECK(capacity_pages(cfg(LayoutMode::PackedRS, 128)) == 144);
    CHECK(capacity_pages(cfg(LayoutMode::BaselineSecded, 128)) == 128);

    const auto parity = cfg(LayoutMode::Parity, 4160, 520);
    CHECK(extra_pages(parity) == 448);
    CHECK(capacity_pages(parity) == 4608);
    CHECK(double(extra_pages(parity)) / 4160.0 == doctest::Approx(0.1077).epsilon(0.001));
}

TEST_CASE("capacity with no CREAM region is the baseline")
{
    for (auto mode : kAllModes)
        CHECK(capacity_pages(cfg(mode, 0)) == 128);
}

TEST_CASE("extra pages match the reference for every row-group count")
{
    for (uint32_t rows : {1u, 2u, 7u, 9u, 16u, 64u, 65u, 130u, 520u, 1024u})
        for (auto mode : kAllModes)
            for (uint64_t groups = 0; groups <= rows; groups += std::max(1u, rows / 7)) {
                const auto c = cfg(mode, groups * 8, rows);
                INFO(to_string(mode), " G=", groups);
                CHECK(extra_pages(c) == test::ref_extra_pages(mode, groups));
                CHECK(capacity_pages(c) == 8ull * rows + test::ref_extra_pages(mode, groups));
            }
}

TEST_CASE("boundary validation")
{
    CHECK_FALSE(validate(cfg(LayoutMode::Packed, 4)).empty());
    CHECK_FALSE(validate(cfg(LayoutMode::Packed, 136)).empty());
    CHECK(validate(cfg(LayoutMode::Packed, 64)).empty());
}

TEST_CASE("baseline line 650")
{
    const auto fp = locate(cfg(LayoutMode::BaselineSecded, 0), 650);
    REQUIRE(fp.lanes.size() == 8);
    for (uint32_t j = 0; j < 8; ++j)
        CHECK(fp.lanes[j] == Lane{{j, 2}, 1});
    CHECK(fp.columns == ColumnRange{10, 1});
    REQUIRE(fp.side);
    CHECK(fp.side->kind == SideKind::Ecc);
    CHECK(fp.side->slice == SliceId{8, 2});
    CHECK(fp.side->row == 1);
    CHECK(fp.side->byte_offset == 80);
}

TEST_CASE("packed extra line 9 sits where baseline lines 72..79 keep their ECC")
{
    const auto c = cfg(LayoutMode::Packed, 128);
    const uint64_t x = c.geometry.baseline_lines() + 9;
    const auto fp = locate(c, x);
    REQUIRE(fp.lanes.size() == 1);
    CHECK(fp.lanes[0] == Lane{{8, 1}, 0});
    CHECK(fp.columns == ColumnRange{8, 8});

    const auto base = cfg(LayoutMode::BaselineSecded, 0);
    for (uint64_t l = 72; l < 80; ++l) {
        const auto side = locate(base, l).side;
        REQUIRE(side);
        CHECK(side->slice == fp.lanes[0].slice);
        CHECK(side->row == fp.lanes[0].row);
        CHECK(side->byte_offset / 8 == fp.columns.start + (l - 72));
    }
}

TEST_CASE("inter-wrap slot 1 borrows bank 0 chip 8")
{
    const auto fp = locate(cfg(LayoutMode::InterWrap, 128), 1 * 64);
    REQUIRE(fp.lanes.size() == 8);
    for (uint32_t j = 0; j < 7; ++j)
        CHECK(fp.lanes[j].slice == SliceId{j, 1});
    CHECK(fp.lanes[7].slice == SliceId{8, 0});
    CHECK_FALSE(fp.side);
}

TEST_CASE("inter-wrap extra page uses chips 1-8 of the last bank")
{
    const auto c = cfg(LayoutMode::InterWrap, 128);
    const auto fp = locate(c, c.geometry.baseline_lines() + 3 * 64 + 5);
    for (uint32_t j = 0; j < 8; ++j)
        CHECK(fp.lanes[j] == Lane{{j + 1, 7}, 3});
    CHECK(fp.columns.start == 5);
}

TEST_CASE("ignored chip")
{
    CHECK(ignored_chip(0) == 8);
    CHECK(ignored_chip(3) == 5);
    CHECK(ignored_chip(8) == 0);
    CHECK_THROWS_AS(ignored_chip(9), AddressError);

    const auto c = cfg(LayoutMode::InterWrap, 128);
    for (uint32_t k = 0; k <= 8; ++k) {
        const uint64_t line = k < 8 ? k * 64 : c.geometry.baseline_lines();
        std::set<uint32_t> chips;
        for (const auto& lane : locate(c, line).lanes)
            chips.insert(lane.slice.chip);
        CHECK(chips.size() == 8);
        CHECK(chips.count(ignored_chip(k)) == 0);
    }
}

TEST_CASE("extra-line translation")
{
    const auto c = cfg(LayoutMode::PackedRS, 128);
    const uint64_t first = c.geometry.baseline_lines();
    const auto a = translate_extra(c, first);
    for (uint64_t j = 0; j < 8; ++j)
        CHECK(a[j] == j);
    const auto b = translate_extra(c, first + 1);
    CHECK(b[0] == 8);
    CHECK(b[7] == 15);
    const auto last = translate_extra(c, first + 1023);
    CHECK(last[0] == 8184);
    CHECK(last[7] == 8191);
    CHECK_THROWS_AS(translate_extra(c, first - 1), AddressError);
    CHECK_THROWS_AS(translate_extra(cfg(LayoutMode::InterWrap, 128), first), ConfigError);
}

TEST_CASE("out-of-range lines are rejected")
{
    for (auto mode : kAllModes) {
        const auto c = cfg(mode, 128);
        CHECK_THROWS_AS(locate(c, capacity_lines(c)), AddressError);
        CHECK_THROWS_AS(plan_access(c, capacity_lines(c), Rw::Read), AddressError);
        CHECK_NOTHROW(locate(c, capacity_lines(c) - 1));
    }
}

TEST_CASE("plan examples")
{
    const auto rs = cfg(LayoutMode::PackedRS, 128);
    const auto p = plan_access(rs, rs.geometry.baseline_lines() + 17, Rw::Read);
    REQUIRE(p.ops.size() == 8);
    for (size_t i = 0; i < 8; ++i) {
        REQUIRE(p.ops[i].group.size() == 1);
        CHECK(p.ops[i].group[0].chip == 8);
        CHECK(p.ops[i].group[0].bank == p.ops[0].group[0].bank);
        CHECK(p.ops[i].row == p.ops[0].row);
        if (i)
            CHECK(p.ops[i].column == p.ops[i - 1].column + 1);
    }
    CHECK(p.staging == Staging::None);

    const auto par = cfg(LayoutMode::Parity, 128);
    CHECK(plan_access(par, 650, Rw::Read).ops.size() == 2);
    CHECK(plan_access(par, capacity_lines(par) - 1, Rw::Read).ops.size() == 9);

    const auto iw = cfg(LayoutMode::InterWrap, 128);
    for (uint64_t line : {uint64_t(0), uint64_t(650), capacity_lines(iw) - 1})
        for (Rw rw : {Rw::Read, Rw::Write})
            CHECK(plan_access(iw, line, rw).ops.size() == 1);
}

TEST_CASE("op counts follow the table for every line")
{
    for (uint32_t rows : {16u, 24u})
        for (auto mode : kAllModes) {
            ModuleGeometry g;
            g.rows_per_bank = rows;
            for (uint64_t boundary : boundaries(g)) {
                const auto c = cfg(mode, boundary, rows);
                for (uint64_t line = 0; line < capacity_lines(c); ++line)
                    for (Rw rw : {Rw::Read, Rw::Write}) {
                        const auto plan = plan_access(c, line, rw);
                        const uint32_t want = test::table_ops(mode, region_of(c, line), rw);
                        if (plan.ops.size() != want) {
                            FAIL_CHECK(to_string(mode) << " line " << line << " " << to_string(rw) << ": "
                                                       << plan.ops.size() << " ops, table says " << want);
                        }
                    }
            }
        }
}

TEST_CASE("read-modify-write legs alternate and point back at their read")
{
    for (auto mode : kAllModes) {
        const auto c = cfg(mode, 128);
        for (uint64_t line = 0; line < capacity_lines(c); line += 37) {
            const auto plan = plan_access(c, line, Rw::Write);
            for (size_t i = 0; i < plan.ops.size(); ++i) {
                const auto& op = plan.ops[i];
                if (op.after < 0)
                    continue;
                CHECK(plan.staging == Staging::Rmw);
                REQUIRE(op.after == int32_t(i) - 1);
                const auto& leg = plan.ops[op.after];
                CHECK(leg.rw == Rw::Read);
                CHECK(op.rw == Rw::Write);
                CHECK(leg.group == op.group);
                CHECK(leg.row == op.row);
                CHECK(leg.column == op.column);
            }
        }
    }
}

TEST_CASE("bridge applies to subset modes outside the SECDED region")
{
    const auto rs = cfg(LayoutMode::PackedRS, 64);
    CHECK(plan_access(rs, 0, Rw::Read).through_bridge);
    CHECK_FALSE(plan_access(rs, 64 * 64, Rw::Read).through_bridge);
    CHECK_FALSE(plan_access(cfg(LayoutMode::Packed, 128), 0, Rw::Read).through_bridge);
    CHECK(plan_access(cfg(LayoutMode::InterWrap, 128), 0, Rw::Read).through_bridge);
    CHECK(plan_access(cfg(LayoutMode::Parity, 128), 0, Rw::Read).through_bridge);
}

TEST_CASE("footprints tile exactly the storage each layout claims")
{
    for (uint32_t rows : {16u, 24u})
        for (auto mode : kAllModes) {
            ModuleGeometry g;
            g.rows_per_bank = rows;
            for (uint64_t boundary : boundaries(g)) {
                INFO(to_string(mode), " rows=", rows, " boundary=", boundary);
                CHECK(test::check_tiling(cfg(mode, boundary, rows)) == "");
            }
        }
}

TEST_CASE("baseline keeps data off chip 8")
{
    for (const auto& [line, fp] : enumerate_footprints(cfg(LayoutMode::BaselineSecded, 0)))
        for (const auto& lane : fp.lanes)
            REQUIRE(lane.slice.chip < 8);
}

TEST_CASE("lanes of one footprint are distinct slices")
{
    for (auto mode : kAllModes)
        for (const auto& [line, fp] : enumerate_footprints(cfg(mode, 128))) {
            std::set<SliceId> s;
            for (const auto& lane : fp.lanes)
                s.insert(lane.slice);
            REQUIRE(s.size() == fp.lanes.size());
            REQUIRE((fp.lanes.size() == 8 || (fp.lanes.size() == 1 && fp.columns.width == 8)));
        }
}

TEST_CASE("zero boundary degenerates to baseline")
{
    const auto base = cfg(LayoutMode::BaselineSecded, 0);
    for (auto mode : kAllModes) {
        const auto c = cfg(mode, 0);
        REQUIRE(capacity_lines(c) == capacity_lines(base));
        for (uint64_t line = 0; line < capacity_lines(c); ++line) {
            REQUIRE(locate(c, line) == locate(base, line));
            REQUIRE(plan_access(c, line, Rw::Read) == plan_access(base, line, Rw::Read));
            REQUIRE(plan_access(c, line, Rw::Write) == plan_access(base, line, Rw::Write));
        }
    }
}

TEST_CASE("inter-wrap slot groups partition the 72 slices")
{
    const auto c = cfg(LayoutMode::InterWrap, 128);
    std::map<SliceId, int> owner;
    for (uint32_t k = 0; k <= 8; ++k) {
        const uint64_t line = k < 8 ? k * 64 : c.geometry.baseline_lines();
        const auto plan = plan_access(c, line, Rw::Read);
        REQUIRE(plan.ops.size() == 1);
        CHECK(plan.ops[0].group.size() == 8);
        for (const auto& s : plan.ops[0].group) {
            CHECK(owner.count(s) == 0);
            owner[s] = int(k);
        }
    }
    CHECK(owner.size() == 72);
}

TEST_CASE("parity lives in the partner bank, eight pages per parity row")
{
    const auto c = cfg(LayoutMode::Parity, 128);
    std::map<std::pair<uint32_t, uint32_t>, std::set<uint64_t>> pages_per_row;
    for (uint64_t line = 0; line < 128 * 64; ++line) {
        const auto fp = locate(c, line);
        REQUIRE(fp.side);
        CHECK(fp.side->slice.chip == 8);
        CHECK(fp.side->slice.bank == (fp.lanes[0].slice.bank + 4) % 8);
        CHECK(fp.side->bytes == 1);
        pages_per_row[{fp.side->slice.bank, fp.side->row}].insert(line / 64);
    }
    for (const auto& [where, pages] : pages_per_row)
        CHECK(pages.size() == 8);
}

TEST_CASE("uniform expansion ratios by enumeration")
{
    auto mean_ops = [](const RegionConfig& c, double read_share) {
        double total = 0;
        for (uint64_t line = 0; line < capacity_lines(c); ++line)
            total += read_share * double(plan_access(c, line, Rw::Read).ops.size()) +
                     (1.0 - read_share) * double(plan_access(c, line, Rw::Write).ops.size());
        return total / double(capacity_lines(c));
    };
    CHECK(mean_ops(cfg(LayoutMode::InterWrap, 128), 0.5) == 1.0);
    CHECK(mean_ops(cfg(LayoutMode::PackedRS, 128), 1.0) == doctest::Approx(16.0 / 9.0));
    // Regular writes are 2 ops and extra writes 16: (8 x 1.5 + 12) / 9.
    CHECK(mean_ops(cfg(LayoutMode::Packed, 128), 0.5) == doctest::Approx((8 * 1.5 + 1 * 12.0) / 9.0));
}

TEST_CASE("enumeration guard")
{
    CHECK_THROWS_AS(enumerate_footprints(cfg(LayoutMode::BaselineSecded, 0, 8193)), ConfigError);
    CHECK(enumerate_footprints(cfg(LayoutMode::InterWrap, 128)).size() == 144 * 64);
}

TEST_CASE("mode names")
{
    for (auto mode : kAllModes)
        CHECK(parse_layout_mode(to_string(mode)) == mode);
    CHECK(parse_layout_mode("Packed+RS") == LayoutMode::PackedRS);
    CHECK_THROWS_AS(parse_layout_mode("Nope"), ConfigError);
}
