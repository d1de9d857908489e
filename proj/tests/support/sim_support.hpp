#pragma once

#include "cream/harness.hpp"
#include "timing_checker.hpp"

#include <memory>
#include <string>
#include <vector>

namespace cream::test {

struct CheckedRun {
    SimReport report;
    std::vector<std::string> log;
    std::vector<std::string> violations;
    uint64_t rmw_writes = 0;
};

/// Every command any helper produces is replayed through a TimingChecker;
/// these totals cover the whole process.
struct CheckTally {
    uint64_t runs = 0;
    uint64_t commands = 0;
    uint64_t violations = 0;
    uint64_t rmw_writes = 0;
};
CheckTally& tally();

CheckedRun simulate_checked(const RunConfig& cfg, const TraceSet& traces);
CheckedRun run_checked(const RunConfig& cfg);

/// One core, no paging, traces run once.
RunConfig desk_config(LayoutMode mode, uint64_t boundary_pages, uint32_t cores = 1);

std::shared_ptr<const std::vector<TraceEntry>> share(std::vector<TraceEntry> trace);

struct Injection {
    uint64_t cycle = 0;
    Rw rw = Rw::Read;
    uint64_t line = 0;
    uint32_t core = 0;
};

struct Driven {
    std::vector<Completion> completions;
    std::vector<std::string> log;
    std::vector<std::string> violations;
    EngineStats stats;
};

/// Feeds requests to a bare controller no earlier than their cycles, holding
/// back while `max_pending` are queued, and runs it dry.
Driven drive(const RegionConfig& region, const TimingParams& timing, const std::vector<Injection>& requests,
             ControllerOptions options = {}, size_t max_pending = 64);

} // namespace cream::test
