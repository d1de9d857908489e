#pragma once

#include "cream/layout.hpp"

#include <cstdint>
#include <list>
#include <optional>
#include <unordered_map>

namespace cream {

/// A virtual page of one core's address space.
struct VPage {
    uint32_t core = 0;
    uint64_t page = 0;

    bool operator==(const VPage&) const = default;
};

struct VPageHash {
    size_t operator()(const VPage& v) const noexcept { return std::hash<uint64_t>{}(v.page * 131 + v.core); }
};

struct PageAccess {
    bool fault = false;
    uint64_t frame = 0;
    std::optional<VPage> victim;
};

struct PagingOptions {
    /// Demote from the active list while |active| > ratio x |inactive|.
    uint32_t active_ratio = 2;
};

/// Resident-set tracker with a two-list (active/inactive) replacement policy.
/// First touch inserts at the inactive head; a re-reference promotes to the
/// active head. Victims come from the inactive tail, or the active tail when
/// the inactive list is empty.
class FrameTable {
  public:
    explicit FrameTable(uint64_t frames, PagingOptions options = {});

    PageAccess access(VPage page, Rw rw = Rw::Read);

    uint64_t frames() const { return frames_; }
    uint64_t resident() const { return map_.size(); }
    uint64_t active_size() const { return active_.size(); }
    uint64_t inactive_size() const { return inactive_.size(); }
    uint64_t faults() const { return faults_; }
    uint64_t hits() const { return hits_; }
    std::optional<uint64_t> frame_of(VPage page) const;
    bool on_active(VPage page) const;

  private:
    struct Entry {
        uint64_t frame = 0;
        bool active = false;
        std::list<VPage>::iterator pos;
    };

    void balance();
    uint64_t take_free_frame();

    uint64_t frames_;
    PagingOptions options_;
    std::unordered_map<VPage, Entry, VPageHash> map_;
    std::list<VPage> active_;   ///< head = most recent
    std::list<VPage> inactive_;
    std::vector<bool> used_;
    uint64_t lowest_free_ = 0;
    uint64_t faults_ = 0;
    uint64_t hits_ = 0;
};

struct FaultModel {
    uint64_t penalty_ns = 500000;
    uint64_t ssd_ns = 300000;
    uint64_t software_ns = 200000;

    /// Stall in core cycles at `freq_mhz`.
    uint64_t penalty_cycles(uint64_t freq_mhz) const { return penalty_ns * freq_mhz / 1000; }
    /// Cycle at which a core faulting at `now` resumes.
    uint64_t charge_fault(uint64_t now, uint64_t freq_mhz) const { return now + penalty_cycles(freq_mhz); }
};

/// Throws ConfigError unless penalty = ssd + software.
void require_valid(const FaultModel& model);

uint64_t frames_for(const RegionConfig& config);

} // namespace cream
