#pragma once

#include "cream/core.hpp"
#include "cream/engine.hpp"
#include "cream/paging.hpp"
#include "cream/workload.hpp"

#include <json.hpp>

#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace cream {

using Json = nlohmann::ordered_json;

/// A core's instruction stream: a trace file or a generator spec.
struct WorkloadSource {
    enum class Kind { Trace, Gen };
    Kind kind = Kind::Gen;
    std::string path;
    GenSpec gen{};
    bool explicit_seed = false;

    /// "trace:<path>" or "gen:<spec>"; a bare spec containing "kind=" is a generator.
    static WorkloadSource parse(const std::string& text, const std::string& base_dir = "");
    std::string describe() const;
    /// Generator seed when the generator string does not pin one.
    WorkloadSource seeded(uint64_t seed) const;

    bool operator==(const WorkloadSource&) const = default;
};

enum class AloneReference { Baseline, None };

struct RunConfig {
    ModuleGeometry geometry{};
    TimingParams timing{};
    LayoutMode mode = LayoutMode::BaselineSecded;
    uint64_t boundary_pages = 0;

    CoreModel core{};
    uint32_t cores = 4;
    uint32_t write_queue = 64;
    uint64_t age_cap = 1000;

    /// Per core; filled from `all`/`coreN` keys or from the mix pools.
    std::vector<WorkloadSource> workloads;
    std::vector<WorkloadSource> intensive_pool;
    std::vector<WorkloadSource> light_pool;
    std::optional<double> intensive_fraction;
    std::optional<uint64_t> mix_seed;

    bool paging = false;
    uint64_t frame_limit = 0; ///< 0: every frame the layout provides
    uint32_t active_ratio = 2;
    FaultModel fault{};

    uint64_t seed = 1;
    uint64_t instructions = 2000000; ///< per-core budget
    bool wrap = true;
    AloneReference alone = AloneReference::Baseline;
    uint64_t interval = 10000;
    uint64_t max_memory_cycles = 0; ///< 0: unbounded

    RegionConfig region() const { return RegionConfig{mode, boundary_pages, geometry}; }
    bool operator==(const RunConfig&) const = default;
};

/// INI file with sections geometry, timing, layout, cpu, workload, paging, run.
RunConfig parse_config(std::istream& in, const std::string& base_dir = "");
RunConfig load_config(const std::string& path);
/// `boundary` accepts "full", "half", "none" or a page count.
uint64_t parse_boundary(const std::string& text, const ModuleGeometry& geometry);

std::vector<std::string> validate(const RunConfig& config);
void require_valid(const RunConfig& config);

/// Per-core workloads after mix selection and seed assignment.
std::vector<WorkloadSource> resolve_workloads(const RunConfig& config);

Json to_json(const RunConfig& config);

struct CapacityReport {
    RegionConfig region;
    uint64_t baseline_pages = 0;
    uint64_t extra_pages = 0;
    uint64_t capacity_pages = 0;
    double gain_percent = 0.0;
    uint64_t cream_lines_end = 0;  ///< CREAM region is [0, cream_lines_end)
    uint64_t secded_lines_end = 0; ///< SECDED region is [cream_lines_end, secded_lines_end)
    uint64_t capacity_lines = 0;   ///< extra region is [secded_lines_end, capacity_lines)
};

CapacityReport capacity_report(const RegionConfig& region);
Json to_json(const CapacityReport& report);

struct CoreReport {
    uint32_t id = 0;
    std::string workload;
    CoreStats stats;
    uint64_t served = 0;
    std::optional<double> alone_ipc;
};

struct SimReport {
    RunConfig config;
    CapacityReport capacity;
    uint64_t frames = 0;
    EngineStats engine;
    EngineMetrics metrics;
    uint64_t memory_cycles = 0;
    double throughput = 0.0; ///< completed requests per memory cycle
    uint64_t page_faults = 0;
    uint64_t resident_pages = 0;
    std::vector<CoreReport> cores;
    std::optional<double> weighted_speedup;
};

Json to_json(const SimReport& report);
/// Stable byte-for-byte rendering of to_json.
std::string report_text(const SimReport& report);

struct RunHooks {
    std::function<void(const CommandEvent&)> command_sink;
    std::ostream* interval_csv = nullptr;
};

using TraceSet = std::vector<std::shared_ptr<const std::vector<TraceEntry>>>;

TraceSet materialize(const std::vector<WorkloadSource>& workloads);

/// One simulation of the given traces, without alone-IPC reference runs.
SimReport simulate(const RunConfig& config, const TraceSet& traces, const RunHooks& hooks = {});

/// Full run: resolves workloads, simulates, and adds weighted speedup
/// against stand-alone runs on BaselineSecded with the same paging setup.
SimReport run(const RunConfig& config, const RunHooks& hooks = {});

enum class SweepAxis { Mode, SecdedFraction, IntensiveFraction, FramesHeadroom };
SweepAxis parse_sweep_axis(const std::string& name);
std::string_view to_string(SweepAxis axis);

/// boundary = round((1 - fraction) x baseline pages), snapped to whole row-groups.
uint64_t boundary_for_secded_fraction(const ModuleGeometry& geometry, double fraction);

/// Distinct (core, page) pairs the traces touch.
uint64_t working_set_pages(const TraceSet& traces);

RunConfig sweep_row_config(const RunConfig& base, SweepAxis axis, const std::string& value, size_t row);

struct SweepRow {
    std::string value;
    std::optional<SimReport> report;
    std::string error;
};

/// Rows come back in `values` order whatever the thread count (0: hardware concurrency).
std::vector<SweepRow> sweep(const RunConfig& base, SweepAxis axis, const std::vector<std::string>& values,
                            unsigned threads = 0);

Json to_json(SweepAxis axis, const std::vector<SweepRow>& rows);
std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows);

/// Line-oriented description of one line's footprint and access plans.
std::string translate_text(const RegionConfig& region, uint64_t line);
Json translate_json(const RegionConfig& region, uint64_t line);

} // namespace cream
