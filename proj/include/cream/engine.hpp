#pragma once

#include "cream/geometry.hpp"
#include "cream/layout.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace cream {

inline constexpr uint64_t kNever = std::numeric_limits<uint64_t>::max();

enum class CommandKind { ACT, PRE, RD, WR, REF };
std::string_view to_string(CommandKind kind);

/// One command on the shared command bus. `slices` is the set of chip
/// enables the bridge (or the full rank) applies it to.
struct CommandEvent {
    CommandKind kind = CommandKind::ACT;
    std::vector<SliceId> slices;
    uint32_t row = 0;
    uint32_t column = 0;
    uint64_t cycle = 0;
    uint64_t request = 0;
    int32_t op = -1;
    int32_t after = -1;
};

/// Stable, line-oriented command-log record:
///   <cycle> <KIND> row=<r> col=<c> req=<id> op=<i> after=<j|-> slices=<chip>.<bank>,...
std::string format_command(const CommandEvent& cmd);

struct SliceState {
    SliceId slice;
    std::optional<uint32_t> row_open;
    uint64_t busy_until = 0; ///< end of the last data burst on this slice
    uint64_t last_act = kNever;
    uint64_t last_read = kNever;
    uint64_t last_write = kNever;
    uint64_t last_pre = kNever;
    // Earliest legal issue cycle per command class.
    uint64_t next_act = 0;
    uint64_t next_pre = 0;
    uint64_t next_rd = 0;
    uint64_t next_wr = 0;
};

struct IssueCheck {
    bool ok = false;
    /// First cycle the timing constraints allow; kNever when the row state forbids the command.
    uint64_t blocked_until = kNever;
};

/// Row-buffer and timing state of every slice, data lane, and the rank.
class DeviceState {
  public:
    DeviceState(const ModuleGeometry& geometry, const TimingParams& timing);

    IssueCheck can_issue(const CommandEvent& cmd) const;
    /// Throws std::logic_error if the command is not legal at cmd.cycle.
    void apply(const CommandEvent& cmd);

    const SliceState& slice(SliceId id) const { return slices_[slice_index(geometry_, id)]; }
    std::optional<uint32_t> open_row(SliceId id) const { return slice(id).row_open; }
    std::optional<uint32_t> open_row_at(uint32_t index) const { return slices_[index].row_open; }
    bool all_closed() const;
    std::vector<SliceId> open_slices() const;

    /// Cycle at which a column command issued at `issue` finishes its data burst.
    uint64_t data_done(CommandKind kind, uint64_t issue) const;

    const ModuleGeometry& geometry() const { return geometry_; }
    const TimingParams& timing() const { return timing_; }

  private:
    struct ChipState {
        uint64_t next_rd = 0;
        uint64_t next_wr = 0;
        uint64_t lane_free_at = 0;
    };

    ModuleGeometry geometry_;
    TimingParams timing_;
    std::vector<SliceState> slices_;
    std::vector<ChipState> chips_;
    uint64_t rank_next_act_ = 0;
    std::vector<uint64_t> act_window_; ///< issue cycles of the most recent ACTs (<= 4)
};

struct OpState {
    DeviceOp op;
    uint64_t group_key = 0;
    std::vector<uint32_t> slice_indices; ///< op.group as slice_index values
    uint64_t ready_at = 0;
    uint64_t done_at = kNever;
    bool started = false;   ///< a command has been issued on its behalf
    bool issued = false;    ///< its column command has been issued
    bool done = false;
    bool activated = false; ///< an ACT was needed: counts as a row miss
};

struct PendingRequest {
    uint64_t id = 0;
    uint32_t core = 0;
    uint64_t arrival = 0;
    Rw rw = Rw::Read;
    uint64_t line = 0;
    AccessPlan plan;
    std::vector<OpState> ops;
    uint32_t ops_issued = 0;
    uint32_t ops_done = 0;
    uint64_t completion = kNever;
};

struct SchedulerOptions {
    /// The oldest request may precharge rows other requests still hit once it
    /// has waited this many cycles.
    uint64_t age_cap = 1000;
};

struct ScheduledCommand {
    CommandEvent cmd;
    size_t request_index = 0;
    size_t op_index = 0;
};

/// FR-FCFS over device ops: issuable column commands to open rows first
/// (oldest parent request first), then the oldest legal ACT/PRE. Rows are
/// left open after use. When nothing can issue, `retry_at` (if given) gets
/// the earliest cycle a candidate could become legal with unchanged state.
std::optional<ScheduledCommand> schedule(const std::vector<PendingRequest>& queue, const DeviceState& state,
                                         uint64_t now, const SchedulerOptions& options,
                                         uint64_t* retry_at = nullptr);

struct Completion {
    uint64_t request = 0;
    uint32_t core = 0;
    Rw rw = Rw::Read;
    uint64_t line = 0;
    uint64_t arrival = 0;
    uint64_t cycle = 0;
};

struct EngineStats {
    uint64_t requests_injected = 0;
    uint64_t logical_requests = 0; ///< completed
    uint64_t reads = 0;
    uint64_t writes = 0;
    uint64_t device_ops = 0;       ///< completed
    uint64_t planned_ops = 0;
    uint64_t extra_write_preserve_reads = 0; ///< RMW read legs of extra-page writes
    uint64_t row_hits = 0;
    uint64_t row_misses = 0;
    uint64_t read_latency_sum = 0;
    uint64_t concurrency_sum = 0;
    uint64_t concurrency_samples = 0;
    uint32_t max_concurrency = 0;
    uint64_t commands[5] = {0, 0, 0, 0, 0};
    uint64_t last_completion = 0;
    std::vector<uint64_t> served_per_core;
};

/// Derived figures of a finished run.
struct EngineMetrics {
    uint64_t logical_requests = 0;
    uint64_t device_ops = 0;
    double device_op_ratio = 0.0;
    /// Device ops if extra-page writes were plain writes instead of RMW pairs.
    uint64_t device_ops_plain_extra_writes = 0;
    uint64_t row_hits = 0;
    uint64_t row_misses = 0;
    double row_hit_rate = 0.0;
    double mean_concurrency = 0.0;
    uint32_t max_concurrency = 0;
    double mean_read_latency = 0.0;
    std::vector<uint64_t> served_per_core;
};

EngineMetrics metrics(const EngineStats& stats);

struct ControllerOptions {
    uint32_t write_queue_capacity = 64;
    SchedulerOptions scheduler{};
};

/// Memory controller plus DIMM for one channel and rank.
class Controller {
  public:
    Controller(const RegionConfig& region, const TimingParams& timing, ControllerOptions options = {});

    bool can_accept(Rw rw) const;
    /// Queues a request arriving at now(). Throws AddressError for out-of-range lines.
    uint64_t enqueue(uint32_t core, Rw rw, uint64_t line);

    /// Retire finished bursts, issue at most one command, sample concurrency, then advance the clock.
    void tick();
    uint64_t now() const { return now_; }
    bool idle() const { return queue_.empty(); }
    /// Fast-forward an idle controller.
    void skip_to(uint64_t cycle);

    std::vector<Completion> take_completions();
    const EngineStats& stats() const { return stats_; }
    const DeviceState& device() const { return device_; }
    const RegionConfig& region() const { return region_; }
    size_t pending() const { return queue_.size(); }
    uint32_t pending_writes() const { return pending_writes_; }
    uint64_t next_request_id() const { return next_id_; }
    uint32_t write_queue_capacity() const { return options_.write_queue_capacity; }

    void set_command_sink(std::function<void(const CommandEvent&)> sink) { sink_ = std::move(sink); }

  private:
    void retire();
    void issue(const ScheduledCommand& scheduled);
    bool refresh_step();
    void sample_concurrency();

    RegionConfig region_;
    TimingParams timing_;
    ControllerOptions options_;
    DeviceState device_;
    std::vector<PendingRequest> queue_;
    std::vector<Completion> completions_;
    EngineStats stats_;
    uint64_t now_ = 0;
    uint64_t next_id_ = 0;
    uint32_t pending_writes_ = 0;
    uint64_t refresh_due_ = 0;
    // Nothing retires before next_retire_, and the scheduler has nothing to
    // issue before retry_at_ unless the queue or device state changes.
    uint64_t next_retire_ = kNever;
    uint64_t retry_at_ = 0;
    bool changed_ = true;
    uint32_t concurrency_ = 0;
    std::function<void(const CommandEvent&)> sink_;
};

} // namespace cream
