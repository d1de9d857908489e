#pragma once

#include "cream/workload.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <unordered_map>
#include <vector>

namespace cream {

struct CoreModel {
    uint32_t retire_width = 4;
    uint32_t rob_entries = 128;
    uint32_t max_inflight_loads = 16;
    uint64_t freq_mhz = 2600;

    bool operator==(const CoreModel&) const = default;
};

void require_valid(const CoreModel& model);

/// Where a core sends its memory requests.
class MemoryPort {
  public:
    virtual ~MemoryPort() = default;
    virtual bool can_accept(Rw rw) const = 0;
    /// Returns the request id the completion will carry.
    virtual uint64_t submit(uint32_t core, Rw rw, uint64_t line) = 0;
};

struct Translation {
    uint64_t line = 0;
    bool fault = false;
};

/// Virtual line -> physical line, installing the page on a miss.
using Translator = std::function<Translation(uint32_t core, uint64_t vline)>;

struct CoreStats {
    uint64_t instructions = 0; ///< retired
    uint64_t cycles = 0;       ///< up to the budget (or the last retire when the trace ran out)
    uint64_t loads = 0;
    uint64_t stores = 0;
    uint64_t faults = 0;
    uint64_t stall_cycles = 0;
    uint32_t max_rob = 0;
    uint64_t budget_instructions = 0;
    uint64_t budget_cycle = 0; ///< cycle the budget was reached, 0 if not yet

    double ipc() const { return cycles ? double(budget_cycle ? budget_instructions : instructions) / double(cycles) : 0.0; }
};

/// Out-of-order core reduced to a ROB: each cycle dispatches up to
/// `retire_width` instructions and then retires up to `retire_width` from the
/// head. Loads stay in the ROB until their data returns; stores retire at dispatch.
class Core {
  public:
    Core(uint32_t id, CoreModel model, const std::vector<TraceEntry>* trace, bool wrap, uint64_t budget,
         uint64_t fault_penalty_cycles);

    /// Runs CPU cycle `cycle`.
    void step(uint64_t cycle, MemoryPort& port, const Translator& translate);
    void complete(uint64_t request);

    /// Nothing left to run: the trace ended without wrap and the ROB drained.
    bool finished() const { return finished_; }
    bool reached_budget() const { return stats_.budget_cycle != 0; }
    bool done() const { return finished_ || reached_budget(); }
    /// Stalled on a page fault with an empty ROB, so only time passing helps.
    bool parked(uint64_t cycle) const { return cycle < stall_until_ && rob_.empty(); }
    uint64_t stall_until() const { return stall_until_; }
    uint32_t rob_occupancy() const { return rob_count_; }
    uint32_t inflight_loads() const { return inflight_; }
    uint32_t id() const { return id_; }
    const CoreStats& stats() const { return stats_; }

    /// Skip cycles spent parked. Counts toward the stall total.
    void account_skipped(uint64_t cycles) { stats_.stall_cycles += cycles; }

  private:
    struct RobEntry {
        uint64_t count = 0;
        bool done = false;
        bool load = false;
    };

    bool load_entry();
    void dispatch(uint64_t cycle, MemoryPort& port, const Translator& translate);
    void retire(uint64_t cycle);

    uint32_t id_;
    CoreModel model_;
    const std::vector<TraceEntry>* trace_;
    bool wrap_;
    uint64_t budget_;
    uint64_t penalty_;

    size_t next_ = 0;          ///< next trace entry to load
    bool have_op_ = false;     ///< `op_` awaits dispatch
    TraceEntry op_{};
    uint64_t bubbles_left_ = 0;
    bool translated_ = false;
    uint64_t phys_line_ = 0;
    uint64_t stall_until_ = 0;
    bool trace_ended_ = false;
    bool finished_ = false;

    std::deque<RobEntry> rob_;
    uint32_t rob_count_ = 0;
    uint32_t inflight_ = 0;
    std::unordered_map<uint64_t, RobEntry*> waiting_;
    uint64_t last_retire_ = 0;
    CoreStats stats_;
};

} // namespace cream
