#pragma once

#include "cream/geometry.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cream {

class AddressError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

enum class LayoutMode { BaselineSecded, Packed, PackedRS, InterWrap, Parity };
enum class Rw { Read, Write };

/// Which part of the physical address space a cache line falls in.
///   Cream  - regular pages below the boundary, stored with the CREAM layout
///   Secded - pages from the boundary up to the baseline capacity
///   Extra  - pages carved out of the freed ECC-chip storage
enum class Region { Cream, Secded, Extra };

std::string_view to_string(LayoutMode mode);
std::string_view to_string(Rw rw);
std::string_view to_string(Region region);
LayoutMode parse_layout_mode(std::string_view name);

inline constexpr LayoutMode kAllModes[] = {LayoutMode::BaselineSecded, LayoutMode::Packed,
                                           LayoutMode::PackedRS, LayoutMode::InterWrap,
                                           LayoutMode::Parity};

/// Layout of one module: `boundary_pages` regular pages use `mode`, the rest stay SECDED.
struct RegionConfig {
    LayoutMode mode = LayoutMode::BaselineSecded;
    uint64_t boundary_pages = 0;
    ModuleGeometry geometry{};

    bool operator==(const RegionConfig&) const = default;
};

std::vector<std::string> validate(const RegionConfig& config);
void require_valid(const RegionConfig& config);

/// Bridge-chip modes pay the translation delay on CREAM-region accesses.
bool uses_bridge(LayoutMode mode);
/// Rank subsetting lets a command enable only part of the nine chips.
bool uses_rank_subsetting(LayoutMode mode);

uint64_t row_groups(const RegionConfig& config);
uint64_t extra_pages(const RegionConfig& config);
uint64_t capacity_pages(const RegionConfig& config);
uint64_t capacity_lines(const RegionConfig& config);

/// Largest e with e + ceil(G/8) + ceil(e/64) <= G.
uint64_t parity_extra_pages(uint64_t row_groups);

/// Chip-8 rows reserved in each bank for parity in Parity mode: (regular, extra-page).
std::pair<uint64_t, uint64_t> parity_rows(const RegionConfig& config);

Region region_of(const RegionConfig& config, uint64_t line);

struct Lane {
    SliceId slice;
    uint32_t row = 0;

    bool operator==(const Lane&) const = default;
};

/// Contiguous chip columns (8 bytes each) shared by every lane.
struct ColumnRange {
    uint32_t start = 0;
    uint32_t width = 1;

    bool operator==(const ColumnRange&) const = default;
};

enum class SideKind { Ecc, Parity };

/// ECC or parity bytes stored apart from the data lanes.
struct SideStorage {
    SideKind kind = SideKind::Ecc;
    SliceId slice;
    uint32_t row = 0;
    uint32_t byte_offset = 0; ///< within the chip row
    uint32_t bytes = 0;

    bool operator==(const SideStorage&) const = default;
};

/// Storage one cache line occupies. Striped lines have eight lanes, one
/// column wide; packed lines in the ECC chip have a single lane eight
/// columns wide.
struct Footprint {
    std::vector<Lane> lanes;
    ColumnRange columns;
    std::optional<SideStorage> side;

    bool operator==(const Footprint&) const = default;
};

Footprint locate(const RegionConfig& config, uint64_t line);

/// Inter-wrap: the one chip a slot's group leaves out.
uint32_t ignored_chip(uint32_t slot);

/// Packed layouts: the eight baseline lines whose ECC-chip bytes compose an extra line.
std::array<uint64_t, 8> translate_extra(const RegionConfig& config, uint64_t line);

enum class OpRole { Data, EccSide, ParityRead, ParityWrite };
std::string_view to_string(OpRole role);

/// One lockstep column access issued to a set of slices at one row.
struct DeviceOp {
    Rw rw = Rw::Read;
    std::vector<SliceId> group;
    uint32_t row = 0;
    uint32_t column = 0;
    OpRole role = OpRole::Data;
    /// Write legs of read-modify-writes wait for this op's data (-1: none).
    int32_t after = -1;

    bool operator==(const DeviceOp&) const = default;
};

enum class Staging { None, Rmw };

struct AccessPlan {
    std::vector<DeviceOp> ops;
    Staging staging = Staging::None;
    Region region = Region::Cream;
    bool through_bridge = false;

    bool operator==(const AccessPlan&) const = default;
};

AccessPlan plan_access(const RegionConfig& config, uint64_t line, Rw rw);

/// Every line of the address space with its footprint. Desk-scale only.
std::vector<std::pair<uint64_t, Footprint>> enumerate_footprints(const RegionConfig& config);

inline constexpr uint64_t kMaxEnumeratedLines = uint64_t(1) << 22;

} // namespace cream
