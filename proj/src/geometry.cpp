#include "cream/geometry.hpp"

#include <sstream>

namespace cream {

namespace {

std::string join(const std::vector<std::string>& items)
{
    std::string out;
    for (const auto& item : items) {
        if (!out.empty())
            out += "; ";
        out += item;
    }
    return out;
}

} // namespace

std::vector<std::string> validate(const ModuleGeometry& g)
{
    std::vector<std::string> errors;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok)
            errors.push_back(what);
    };

    expect(g.line_bytes == 64, "line_bytes must be 64");
    expect(g.chip_bytes_per_line == 8, "chip_bytes_per_line must be 8 (x8 chips)");
    expect(g.bursts_per_line == 8, "bursts_per_line must be 8");
    expect(g.data_chips * g.chip_bytes_per_line == g.line_bytes,
           "data_chips x chip_bytes_per_line (" + std::to_string(g.data_chips) + " x " +
               std::to_string(g.chip_bytes_per_line) + ") must equal line_bytes (" +
               std::to_string(g.line_bytes) + ")");
    expect(g.ecc_chips == 1, "ecc_chips must be 1 (the ninth chip is required)");
    expect(g.banks > 0, "banks must be positive");
    expect(g.rows_per_bank > 0, "rows_per_bank must be positive");
    expect(g.lines_per_row > 0, "lines_per_row must be positive");
    return errors;
}

std::vector<std::string> validate(const TimingParams& t, const ModuleGeometry& g)
{
    std::vector<std::string> errors;
    auto positive = [&](uint32_t v, const char* name) {
        if (v == 0)
            errors.push_back(std::string(name) + " must be positive");
    };
    if (!(t.tCK_ns > 0.0))
        errors.push_back("tCK must be positive");
    positive(t.tRCD, "tRCD");
    positive(t.tRP, "tRP");
    positive(t.tCL, "tCL");
    positive(t.tCWL, "tCWL");
    positive(t.tRAS, "tRAS");
    positive(t.tRC, "tRC");
    positive(t.tCCD, "tCCD");
    positive(t.tBURST, "tBURST");
    positive(t.tWR, "tWR");
    positive(t.tWTR, "tWTR");
    positive(t.tRTP, "tRTP");
    positive(t.tRRD, "tRRD");
    positive(t.tFAW, "tFAW");
    positive(t.tREFI, "tREFI");
    positive(t.tRFC, "tRFC");
    positive(t.bridge_delay, "bridge_delay");
    if (t.tRC < t.tRAS + t.tRP)
        errors.push_back("tRC must be >= tRAS + tRP");
    if (t.tBURST * 2 != g.bursts_per_line)
        errors.push_back("tBURST must equal bursts_per_line / 2 (double data rate)");
    return errors;
}

void require_valid(const ModuleGeometry& geometry)
{
    auto errors = validate(geometry);
    if (!errors.empty())
        throw ConfigError("invalid geometry: " + join(errors));
}

void require_valid(const TimingParams& timing, const ModuleGeometry& geometry)
{
    auto errors = validate(timing, geometry);
    if (!errors.empty())
        throw ConfigError("invalid timing: " + join(errors));
}

uint32_t slice_count(const ModuleGeometry& g) { return g.total_chips() * g.banks; }

uint32_t slice_index(const ModuleGeometry& g, SliceId s) { return s.bank * g.total_chips() + s.chip; }

SliceId slice_from_index(const ModuleGeometry& g, uint32_t index)
{
    return SliceId{index % g.total_chips(), index / g.total_chips()};
}

TimingParams ddr3_1333_defaults() { return TimingParams{}; }

std::string to_string(SliceId s)
{
    std::ostringstream os;
    os << s.chip << '.' << s.bank;
    return os.str();
}

} // namespace cream
