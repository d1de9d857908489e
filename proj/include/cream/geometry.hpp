#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cream {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Physical shape of one ECC DIMM rank: x8 data chips plus the ECC chip,
/// each split into banks of rows. A row holds `lines_per_row` cache-line
/// columns; every chip contributes `chip_bytes_per_line` bytes per column.
struct ModuleGeometry {
    uint32_t data_chips = 8;
    uint32_t ecc_chips = 1;
    uint32_t banks = 8;
    uint32_t rows_per_bank = 16;
    uint32_t lines_per_row = 64;
    uint32_t line_bytes = 64;
    uint32_t chip_bytes_per_line = 8;
    uint32_t bursts_per_line = 8;

    uint32_t total_chips() const { return data_chips + ecc_chips; }
    /// Index of the chip that holds SECDED codes in the baseline layout.
    uint32_t ecc_chip() const { return data_chips; }
    uint32_t chip_row_bytes() const { return lines_per_row * chip_bytes_per_line; }
    uint64_t baseline_pages() const { return uint64_t(banks) * rows_per_bank; }
    uint64_t baseline_lines() const { return baseline_pages() * lines_per_row; }
    uint64_t page_bytes() const { return uint64_t(lines_per_row) * line_bytes; }

    bool operator==(const ModuleGeometry&) const = default;
};

/// DDR timing constants, in memory-clock cycles unless noted.
struct TimingParams {
    double tCK_ns = 1.5;
    uint32_t tRCD = 9;
    uint32_t tRP = 9;
    uint32_t tCL = 9;
    uint32_t tCWL = 7;
    uint32_t tRAS = 24;
    uint32_t tRC = 33;
    uint32_t tCCD = 4;
    uint32_t tBURST = 4;
    uint32_t tWR = 10;
    uint32_t tWTR = 5;
    uint32_t tRTP = 5;
    uint32_t tRRD = 4;
    uint32_t tFAW = 20;
    uint32_t tREFI = 5200;
    uint32_t tRFC = 107;
    uint32_t bridge_delay = 1;
    bool refresh_enabled = false;

    bool operator==(const TimingParams&) const = default;
};

/// One (chip, bank) pair: the unit of independent row-buffer state.
struct SliceId {
    uint32_t chip = 0;
    uint32_t bank = 0;

    auto operator<=>(const SliceId&) const = default;
};

/// Empty result means the geometry is valid.
std::vector<std::string> validate(const ModuleGeometry& geometry);
std::vector<std::string> validate(const TimingParams& timing, const ModuleGeometry& geometry);

/// Throws ConfigError listing every violation.
void require_valid(const ModuleGeometry& geometry);
void require_valid(const TimingParams& timing, const ModuleGeometry& geometry);

uint32_t slice_count(const ModuleGeometry& geometry);
uint32_t slice_index(const ModuleGeometry& geometry, SliceId slice);
SliceId slice_from_index(const ModuleGeometry& geometry, uint32_t index);

TimingParams ddr3_1333_defaults();

std::string to_string(SliceId slice);

} // namespace cream
