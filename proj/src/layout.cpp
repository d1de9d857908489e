#include "cream/layout.hpp"

#include <sstream>

namespace cream {

namespace {

uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

// Extra pages in Parity mode get one chip row of parity per 64 pages in each bank.
constexpr uint64_t kExtraPagesPerParityRow = 64;

struct LineCoord {
    uint64_t page;
    uint32_t cl;
};

LineCoord split(const ModuleGeometry& g, uint64_t line)
{
    return {line / g.lines_per_row, static_cast<uint32_t>(line % g.lines_per_row)};
}

std::vector<SliceId> bank_chips(const ModuleGeometry&, uint32_t bank, uint32_t first, uint32_t last)
{
    std::vector<SliceId> out;
    out.reserve(last - first + 1);
    for (uint32_t c = first; c <= last; ++c)
        out.push_back({c, bank});
    return out;
}

std::vector<SliceId> all_chips(const ModuleGeometry& g, uint32_t bank)
{
    return bank_chips(g, bank, 0, g.total_chips() - 1);
}

std::vector<SliceId> data_chips(const ModuleGeometry& g, uint32_t bank)
{
    return bank_chips(g, bank, 0, g.data_chips - 1);
}

std::vector<SliceId> ecc_chip(const ModuleGeometry& g, uint32_t bank) { return {{g.ecc_chip(), bank}}; }

uint32_t partner_bank(const ModuleGeometry& g, uint32_t bank) { return (bank + g.banks / 2) % g.banks; }

// Packed extra line: which bank and first chip column hold it.
struct PackedSpot {
    uint32_t bank;
    uint32_t first_column;
};

PackedSpot packed_spot(const ModuleGeometry& g, uint32_t cl)
{
    const uint32_t lines_per_bank = g.lines_per_row / g.banks;
    const uint32_t width = g.line_bytes / g.chip_bytes_per_line;
    return {cl / lines_per_bank, (cl % lines_per_bank) * width};
}

SideStorage regular_parity(const RegionConfig& cfg, uint64_t page, uint32_t cl)
{
    const auto& g = cfg.geometry;
    const uint32_t bank = static_cast<uint32_t>(page % g.banks);
    const uint64_t row = page / g.banks;
    const uint64_t pages_per_row = g.chip_row_bytes() / g.lines_per_row;
    return SideStorage{SideKind::Parity,
                       {g.ecc_chip(), partner_bank(g, bank)},
                       static_cast<uint32_t>(row / pages_per_row),
                       static_cast<uint32_t>((row % pages_per_row) * g.lines_per_row + cl),
                       1};
}

SideStorage extra_parity(const RegionConfig& cfg, uint64_t extra, uint32_t cl)
{
    const auto& g = cfg.geometry;
    const auto [regular_rows, extra_rows] = parity_rows(cfg);
    (void)extra_rows;
    const auto spot = packed_spot(g, cl);
    const uint32_t lines_per_bank = g.lines_per_row / g.banks;
    return SideStorage{SideKind::Parity,
                       {g.ecc_chip(), partner_bank(g, spot.bank)},
                       static_cast<uint32_t>(regular_rows + extra / kExtraPagesPerParityRow),
                       static_cast<uint32_t>((extra % kExtraPagesPerParityRow) * lines_per_bank +
                                             cl % lines_per_bank),
                       1};
}

uint32_t packed_extra_row(const RegionConfig& cfg, uint64_t extra)
{
    if (cfg.mode != LayoutMode::Parity)
        return static_cast<uint32_t>(extra);
    const auto [regular_rows, extra_rows] = parity_rows(cfg);
    return static_cast<uint32_t>(regular_rows + extra_rows + extra);
}

Footprint baseline_footprint(const RegionConfig& cfg, uint64_t page, uint32_t cl, bool with_ecc)
{
    const auto& g = cfg.geometry;
    const uint32_t bank = static_cast<uint32_t>(page % g.banks);
    const uint32_t row = static_cast<uint32_t>(page / g.banks);
    Footprint fp;
    fp.lanes.reserve(g.data_chips);
    for (uint32_t c = 0; c < g.data_chips; ++c)
        fp.lanes.push_back({{c, bank}, row});
    fp.columns = {cl, 1};
    if (with_ecc)
        fp.side = SideStorage{SideKind::Ecc, {g.ecc_chip(), bank}, row, cl * g.chip_bytes_per_line,
                              g.chip_bytes_per_line};
    return fp;
}

// Inter-wrap slot k of a row group: bank k chips [0, 8-k) then bank k-1 chips [9-k, 9).
std::vector<Lane> wrap_lanes(const ModuleGeometry& g, uint32_t slot, uint32_t row)
{
    std::vector<Lane> lanes;
    lanes.reserve(g.data_chips);
    for (uint32_t j = 0; j < g.data_chips; ++j) {
        if (j + slot < g.data_chips)
            lanes.push_back({{j, slot}, row});
        else
            lanes.push_back({{j + 1, slot - 1}, row});
    }
    return lanes;
}

void check_line(const RegionConfig& cfg, uint64_t line)
{
    if (line >= capacity_lines(cfg)) {
        std::ostringstream os;
        os << "line 0x" << std::hex << line << " beyond capacity of " << std::dec << capacity_lines(cfg)
           << " lines";
        throw AddressError(os.str());
    }
}

} // namespace

std::string_view to_string(LayoutMode mode)
{
    switch (mode) {
    case LayoutMode::BaselineSecded: return "BaselineSecded";
    case LayoutMode::Packed: return "Packed";
    case LayoutMode::PackedRS: return "PackedRS";
    case LayoutMode::InterWrap: return "InterWrap";
    case LayoutMode::Parity: return "Parity";
    }
    return "?";
}

std::string_view to_string(Rw rw) { return rw == Rw::Read ? "R" : "W"; }

std::string_view to_string(Region region)
{
    switch (region) {
    case Region::Cream: return "cream";
    case Region::Secded: return "secded";
    case Region::Extra: return "extra";
    }
    return "?";
}

std::string_view to_string(OpRole role)
{
    switch (role) {
    case OpRole::Data: return "data";
    case OpRole::EccSide: return "eccSide";
    case OpRole::ParityRead: return "parityRead";
    case OpRole::ParityWrite: return "parityWrite";
    }
    return "?";
}

LayoutMode parse_layout_mode(std::string_view name)
{
    for (auto mode : kAllModes)
        if (to_string(mode) == name)
            return mode;
    if (name == "Baseline" || name == "baseline")
        return LayoutMode::BaselineSecded;
    if (name == "Packed+RS")
        return LayoutMode::PackedRS;
    if (name == "Inter-Wrap")
        return LayoutMode::InterWrap;
    throw ConfigError("unknown layout mode '" + std::string(name) + "'");
}

std::vector<std::string> validate(const RegionConfig& cfg)
{
    auto errors = validate(cfg.geometry);
    const auto& g = cfg.geometry;
    if (!errors.empty())
        return errors;
    if (cfg.boundary_pages > g.baseline_pages())
        errors.push_back("boundary_pages " + std::to_string(cfg.boundary_pages) + " exceeds baseline pages " +
                         std::to_string(g.baseline_pages()));
    if (cfg.boundary_pages % g.banks != 0)
        errors.push_back("boundary_pages must be a multiple of banks (" + std::to_string(g.banks) + ")");
    if (cfg.mode != LayoutMode::BaselineSecded) {
        if (g.banks != g.data_chips)
            errors.push_back("CREAM layouts need banks == data_chips");
        if (g.lines_per_row % g.banks != 0)
            errors.push_back("CREAM layouts need lines_per_row divisible by banks");
    }
    return errors;
}

void require_valid(const RegionConfig& cfg)
{
    auto errors = validate(cfg);
    if (errors.empty())
        return;
    std::string msg = "invalid region config:";
    for (const auto& e : errors)
        msg += " " + e + ";";
    throw ConfigError(msg);
}

bool uses_bridge(LayoutMode mode)
{
    return mode == LayoutMode::PackedRS || mode == LayoutMode::InterWrap || mode == LayoutMode::Parity;
}

bool uses_rank_subsetting(LayoutMode mode) { return uses_bridge(mode); }

uint64_t row_groups(const RegionConfig& cfg) { return cfg.boundary_pages / cfg.geometry.banks; }

uint64_t parity_extra_pages(uint64_t groups)
{
    const uint64_t parity = ceil_div(groups, 8);
    if (parity >= groups)
        return 0;
    uint64_t e = groups - parity;
    while (e > 0 && e + parity + ceil_div(e, kExtraPagesPerParityRow) > groups)
        --e;
    return e;
}

uint64_t extra_pages(const RegionConfig& cfg)
{
    switch (cfg.mode) {
    case LayoutMode::BaselineSecded: return 0;
    case LayoutMode::Packed:
    case LayoutMode::PackedRS:
    case LayoutMode::InterWrap: return row_groups(cfg);
    case LayoutMode::Parity: return parity_extra_pages(row_groups(cfg));
    }
    return 0;
}

uint64_t capacity_pages(const RegionConfig& cfg) { return cfg.geometry.baseline_pages() + extra_pages(cfg); }

uint64_t capacity_lines(const RegionConfig& cfg) { return capacity_pages(cfg) * cfg.geometry.lines_per_row; }

std::pair<uint64_t, uint64_t> parity_rows(const RegionConfig& cfg)
{
    if (cfg.mode != LayoutMode::Parity)
        return {0, 0};
    const auto& g = cfg.geometry;
    const uint64_t pages_per_row = g.chip_row_bytes() / g.lines_per_row;
    return {ceil_div(row_groups(cfg), pages_per_row), ceil_div(extra_pages(cfg), kExtraPagesPerParityRow)};
}

Region region_of(const RegionConfig& cfg, uint64_t line)
{
    check_line(cfg, line);
    const uint64_t page = line / cfg.geometry.lines_per_row;
    if (page >= cfg.geometry.baseline_pages())
        return Region::Extra;
    if (cfg.mode != LayoutMode::BaselineSecded && page < cfg.boundary_pages)
        return Region::Cream;
    return Region::Secded;
}

Footprint locate(const RegionConfig& cfg, uint64_t line)
{
    const Region region = region_of(cfg, line);
    const auto& g = cfg.geometry;
    const auto [page, cl] = split(g, line);

    if (region == Region::Secded)
        return baseline_footprint(cfg, page, cl, true);

    switch (cfg.mode) {
    case LayoutMode::BaselineSecded: break;
    case LayoutMode::Packed:
    case LayoutMode::PackedRS:
    case LayoutMode::Parity:
        if (region == Region::Cream) {
            Footprint fp = baseline_footprint(cfg, page, cl, false);
            if (cfg.mode == LayoutMode::Parity)
                fp.side = regular_parity(cfg, page, cl);
            return fp;
        } else {
            const uint64_t extra = page - g.baseline_pages();
            const auto spot = packed_spot(g, cl);
            Footprint fp;
            fp.lanes.push_back({{g.ecc_chip(), spot.bank}, packed_extra_row(cfg, extra)});
            fp.columns = {spot.first_column, g.line_bytes / g.chip_bytes_per_line};
            if (cfg.mode == LayoutMode::Parity)
                fp.side = extra_parity(cfg, extra, cl);
            return fp;
        }
    case LayoutMode::InterWrap: {
        Footprint fp;
        if (region == Region::Cream)
            fp.lanes = wrap_lanes(g, static_cast<uint32_t>(page % g.banks), static_cast<uint32_t>(page / g.banks));
        else
            fp.lanes = wrap_lanes(g, g.banks, static_cast<uint32_t>(page - g.baseline_pages()));
        fp.columns = {cl, 1};
        return fp;
    }
    }
    return baseline_footprint(cfg, page, cl, true);
}

uint32_t ignored_chip(uint32_t slot)
{
    if (slot > 8)
        throw AddressError("inter-wrap slot must be in 0..8");
    return 8 - slot;
}

std::array<uint64_t, 8> translate_extra(const RegionConfig& cfg, uint64_t line)
{
    if (cfg.mode != LayoutMode::Packed && cfg.mode != LayoutMode::PackedRS)
        throw ConfigError("translate_extra applies to Packed and PackedRS layouts only");
    if (region_of(cfg, line) != Region::Extra)
        throw AddressError("line is below the extra-page region");
    const uint64_t base = (line - cfg.geometry.baseline_lines()) << 3;
    std::array<uint64_t, 8> out{};
    for (uint64_t j = 0; j < 8; ++j)
        out[j] = base + j;
    return out;
}

AccessPlan plan_access(const RegionConfig& cfg, uint64_t line, Rw rw)
{
    const auto& g = cfg.geometry;
    AccessPlan plan;
    plan.region = region_of(cfg, line);
    plan.through_bridge = uses_bridge(cfg.mode) && plan.region != Region::Secded;
    const auto [page, cl] = split(g, line);

    auto push = [&](Rw op_rw, std::vector<SliceId> group, uint32_t row, uint32_t column, OpRole role,
                    int32_t after = -1) {
        plan.ops.push_back(DeviceOp{op_rw, std::move(group), row, column, role, after});
    };
    // Read-modify-write of one lockstep column: preserve leg, then write leg.
    auto rmw = [&](const std::vector<SliceId>& group, uint32_t row, uint32_t column, OpRole read_role,
                   OpRole write_role) {
        push(Rw::Read, group, row, column, read_role);
        push(Rw::Write, group, row, column, write_role, static_cast<int32_t>(plan.ops.size() - 1));
        plan.staging = Staging::Rmw;
    };

    const uint32_t bank = static_cast<uint32_t>(page % g.banks);
    const uint32_t row = static_cast<uint32_t>(page / g.banks);

    if (plan.region == Region::Secded || cfg.mode == LayoutMode::BaselineSecded) {
        push(rw, all_chips(g, bank), row, cl, OpRole::Data);
        return plan;
    }

    const bool extra = plan.region == Region::Extra;
    const uint64_t extra_index = extra ? page - g.baseline_pages() : 0;
    const auto spot = packed_spot(g, cl);
    const uint32_t width = g.line_bytes / g.chip_bytes_per_line;

    switch (cfg.mode) {
    case LayoutMode::BaselineSecded: break;
    case LayoutMode::Packed: {
        if (!extra) {
            if (rw == Rw::Read)
                push(Rw::Read, all_chips(g, bank), row, cl, OpRole::Data);
            else
                rmw(all_chips(g, bank), row, cl, OpRole::EccSide, OpRole::Data);
        } else {
            const uint32_t xrow = packed_extra_row(cfg, extra_index);
            for (uint32_t j = 0; j < width; ++j) {
                if (rw == Rw::Read)
                    push(Rw::Read, all_chips(g, spot.bank), xrow, spot.first_column + j, OpRole::Data);
                else
                    rmw(all_chips(g, spot.bank), xrow, spot.first_column + j, OpRole::EccSide, OpRole::Data);
            }
        }
        break;
    }
    case LayoutMode::PackedRS: {
        if (!extra) {
            push(rw, data_chips(g, bank), row, cl, OpRole::Data);
        } else {
            const uint32_t xrow = packed_extra_row(cfg, extra_index);
            for (uint32_t j = 0; j < width; ++j)
                push(rw, ecc_chip(g, spot.bank), xrow, spot.first_column + j, OpRole::Data);
        }
        break;
    }
    case LayoutMode::InterWrap: {
        const auto lanes = extra ? wrap_lanes(g, g.banks, static_cast<uint32_t>(extra_index))
                                 : wrap_lanes(g, bank, row);
        std::vector<SliceId> group;
        group.reserve(lanes.size());
        for (const auto& lane : lanes)
            group.push_back(lane.slice);
        push(rw, std::move(group), lanes.front().row, cl, OpRole::Data);
        break;
    }
    case LayoutMode::Parity: {
        SideStorage parity;
        if (!extra) {
            push(rw, data_chips(g, bank), row, cl, OpRole::Data);
            parity = regular_parity(cfg, page, cl);
        } else {
            const uint32_t xrow = packed_extra_row(cfg, extra_index);
            for (uint32_t j = 0; j < width; ++j)
                push(rw, ecc_chip(g, spot.bank), xrow, spot.first_column + j, OpRole::Data);
            parity = extra_parity(cfg, extra_index, cl);
        }
        const uint32_t column = parity.byte_offset / g.chip_bytes_per_line;
        if (rw == Rw::Read)
            push(Rw::Read, {parity.slice}, parity.row, column, OpRole::ParityRead);
        else
            rmw({parity.slice}, parity.row, column, OpRole::ParityRead, OpRole::ParityWrite);
        break;
    }
    }
    return plan;
}

std::vector<std::pair<uint64_t, Footprint>> enumerate_footprints(const RegionConfig& cfg)
{
    require_valid(cfg);
    const uint64_t lines = capacity_lines(cfg);
    if (lines > kMaxEnumeratedLines)
        throw ConfigError("geometry too large to enumerate (" + std::to_string(lines) + " lines)");
    std::vector<std::pair<uint64_t, Footprint>> out;
    out.reserve(lines);
    for (uint64_t line = 0; line < lines; ++line)
        out.emplace_back(line, locate(cfg, line));
    return out;
}

} // namespace cream
