#include "cream/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

namespace cream {

namespace pt = boost::property_tree;

////////////////////////////////////////////////////////////////
// Workload sources

WorkloadSource WorkloadSource::parse(const std::string& raw, const std::string& base_dir)
{
    std::string text = raw;
    text.erase(0, text.find_first_not_of(" \t"));
    text.erase(text.find_last_not_of(" \t") + 1);
    WorkloadSource src;
    if (text.rfind("trace:", 0) == 0) {
        src.kind = Kind::Trace;
        std::filesystem::path p = text.substr(6);
        if (p.is_relative() && !base_dir.empty())
            p = std::filesystem::path(base_dir) / p;
        src.path = p.string();
        return src;
    }
    std::string spec = text.rfind("gen:", 0) == 0 ? text.substr(4) : text;
    if (spec.find("kind=") == std::string::npos)
        throw ConfigError("workload '" + raw + "' is neither trace:<path> nor gen:<spec>");
    src.kind = Kind::Gen;
    src.gen = parse_gen_spec(spec);
    src.explicit_seed = spec.find("seed=") != std::string::npos;
    return src;
}

std::string WorkloadSource::describe() const
{
    if (kind == Kind::Trace)
        return "trace:" + path;
    return "gen:" + to_string(gen);
}

WorkloadSource WorkloadSource::seeded(uint64_t seed) const
{
    WorkloadSource out = *this;
    if (kind == Kind::Gen && !explicit_seed)
        out.gen.seed = seed;
    return out;
}

////////////////////////////////////////////////////////////////
// Config

namespace {

/// Reads one INI section and remembers which keys were consumed.
class Section {
  public:
    Section(const pt::ptree& root, const std::string& name) : name_(name)
    {
        if (auto child = root.get_child_optional(pt::ptree::path_type(name, '\0')))
            tree_ = &*child;
    }

    std::optional<std::string> raw(const std::string& key)
    {
        used_.insert(key);
        if (!tree_)
            return std::nullopt;
        auto it = tree_->find(key);
        if (it == tree_->not_found())
            return std::nullopt;
        return it->second.data();
    }

    template <typename T>
    void read(const std::string& key, T& out)
    {
        auto v = raw(key);
        if (!v)
            return;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                std::string s = *v;
                std::transform(s.begin(), s.end(), s.begin(), ::tolower);
                if (s == "true" || s == "1" || s == "yes" || s == "on")
                    out = true;
                else if (s == "false" || s == "0" || s == "no" || s == "off")
                    out = false;
                else
                    throw std::invalid_argument(s);
            } else if constexpr (std::is_floating_point_v<T>) {
                size_t used = 0;
                out = static_cast<T>(std::stod(*v, &used));
                if (used != v->size())
                    throw std::invalid_argument(*v);
            } else {
                if (!v->empty() && (*v)[0] == '-')
                    throw std::invalid_argument(*v);
                size_t used = 0;
                const auto x = std::stoull(*v, &used);
                if (used != v->size() || x > std::numeric_limits<T>::max())
                    throw std::invalid_argument(*v);
                out = static_cast<T>(x);
            }
        } catch (const std::exception&) {
            throw ConfigError("[" + name_ + "] " + key + ": bad value '" + *v + "'");
        }
    }

    /// Keys present in the file (in file order).
    std::vector<std::string> keys() const
    {
        std::vector<std::string> out;
        if (tree_)
            for (const auto& kv : *tree_)
                out.push_back(kv.first);
        return out;
    }

    void use(const std::string& key) { used_.insert(key); }

    void reject_unknown() const
    {
        for (const auto& k : keys())
            if (!used_.count(k))
                throw ConfigError("[" + name_ + "] unknown key '" + k + "'");
    }

  private:
    std::string name_;
    const pt::ptree* tree_ = nullptr;
    std::set<std::string> used_;
};

std::vector<WorkloadSource> parse_pool(const std::string& text, const std::string& base_dir)
{
    std::vector<WorkloadSource> out;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, '|'))
        if (item.find_first_not_of(" \t") != std::string::npos)
            out.push_back(WorkloadSource::parse(item, base_dir));
    return out;
}

uint64_t splitmix64(uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::string join(const std::vector<std::string>& items)
{
    std::string out;
    for (const auto& s : items)
        out += (out.empty() ? "" : "; ") + s;
    return out;
}

} // namespace

uint64_t parse_boundary(const std::string& text, const ModuleGeometry& g)
{
    if (text == "full")
        return g.baseline_pages();
    if (text == "half")
        return g.baseline_pages() / g.banks / 2 * g.banks;
    if (text == "none")
        return 0;
    size_t used = 0;
    uint64_t v = 0;
    try {
        if (text.empty() || text[0] == '-')
            throw std::invalid_argument(text);
        v = std::stoull(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size())
        throw ConfigError("boundary must be full, half, none or a page count, got '" + text + "'");
    return v;
}

RunConfig parse_config(std::istream& in, const std::string& base_dir)
{
    pt::ptree root;
    try {
        pt::ini_parser::read_ini(in, root);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    const std::set<std::string> known = {"geometry", "timing", "layout", "cpu", "workload", "paging", "run"};
    for (const auto& kv : root)
        if (!known.count(kv.first))
            throw ConfigError("unknown config section [" + kv.first + "]");

    RunConfig c;
    {
        Section s(root, "geometry");
        s.read("data_chips", c.geometry.data_chips);
        s.read("ecc_chips", c.geometry.ecc_chips);
        s.read("banks", c.geometry.banks);
        s.read("rows_per_bank", c.geometry.rows_per_bank);
        s.read("lines_per_row", c.geometry.lines_per_row);
        s.read("line_bytes", c.geometry.line_bytes);
        s.read("chip_bytes_per_line", c.geometry.chip_bytes_per_line);
        s.read("bursts_per_line", c.geometry.bursts_per_line);
        s.reject_unknown();
    }
    {
        Section s(root, "timing");
        auto& t = c.timing;
        s.read("tCK_ns", t.tCK_ns);
        s.read("tRCD", t.tRCD);
        s.read("tRP", t.tRP);
        s.read("tCL", t.tCL);
        s.read("tCWL", t.tCWL);
        s.read("tRAS", t.tRAS);
        s.read("tRC", t.tRC);
        s.read("tCCD", t.tCCD);
        s.read("tBURST", t.tBURST);
        s.read("tWR", t.tWR);
        s.read("tWTR", t.tWTR);
        s.read("tRTP", t.tRTP);
        s.read("tRRD", t.tRRD);
        s.read("tFAW", t.tFAW);
        s.read("tREFI", t.tREFI);
        s.read("tRFC", t.tRFC);
        s.read("bridge_delay", t.bridge_delay);
        s.read("refresh", t.refresh_enabled);
        s.reject_unknown();
    }
    {
        Section s(root, "layout");
        if (auto m = s.raw("mode"))
            c.mode = parse_layout_mode(*m);
        if (auto b = s.raw("boundary"))
            c.boundary_pages = parse_boundary(*b, c.geometry);
        s.reject_unknown();
    }
    {
        Section s(root, "cpu");
        s.read("cores", c.cores);
        s.read("retire_width", c.core.retire_width);
        s.read("rob_entries", c.core.rob_entries);
        s.read("max_inflight_loads", c.core.max_inflight_loads);
        s.read("freq_mhz", c.core.freq_mhz);
        s.read("write_queue", c.write_queue);
        s.read("age_cap", c.age_cap);
        s.reject_unknown();
    }
    {
        Section s(root, "workload");
        std::optional<WorkloadSource> all;
        if (auto v = s.raw("all"))
            all = WorkloadSource::parse(*v, base_dir);
        if (auto v = s.raw("intensive_pool"))
            c.intensive_pool = parse_pool(*v, base_dir);
        if (auto v = s.raw("light_pool"))
            c.light_pool = parse_pool(*v, base_dir);
        double frac = -1.0;
        s.read("intensive_fraction", frac);
        if (frac >= 0.0 || s.raw("intensive_fraction"))
            c.intensive_fraction = frac;
        uint64_t mix_seed = 0;
        if (s.raw("mix_seed")) {
            s.read("mix_seed", mix_seed);
            c.mix_seed = mix_seed;
        }
        std::map<uint32_t, WorkloadSource> per_core;
        for (const auto& key : s.keys()) {
            if (key.rfind("core", 0) != 0 || key.size() == 4)
                continue;
            uint32_t idx = 0;
            try {
                size_t used = 0;
                idx = static_cast<uint32_t>(std::stoul(key.substr(4), &used));
                if (used != key.size() - 4)
                    continue;
            } catch (const std::exception&) {
                continue;
            }
            s.use(key);
            per_core[idx] = WorkloadSource::parse(*s.raw(key), base_dir);
        }
        s.reject_unknown();
        if (!c.intensive_fraction) {
            for (uint32_t i = 0; i < c.cores; ++i) {
                if (auto it = per_core.find(i); it != per_core.end())
                    c.workloads.push_back(it->second);
                else if (all)
                    c.workloads.push_back(*all);
                else
                    throw ConfigError("[workload] no source for core " + std::to_string(i));
            }
            if (!per_core.empty() && per_core.rbegin()->first >= c.cores)
                throw ConfigError("[workload] core index " + std::to_string(per_core.rbegin()->first) +
                                  " exceeds cpu.cores");
        }
    }
    {
        Section s(root, "paging");
        s.read("enabled", c.paging);
        s.read("frame_limit", c.frame_limit);
        s.read("active_ratio", c.active_ratio);
        const bool split = s.raw("ssd_ns") || s.raw("software_ns");
        s.read("penalty_ns", c.fault.penalty_ns);
        s.read("ssd_ns", c.fault.ssd_ns);
        s.read("software_ns", c.fault.software_ns);
        if (split && !s.raw("penalty_ns"))
            c.fault.penalty_ns = c.fault.ssd_ns + c.fault.software_ns;
        else if (!split && s.raw("penalty_ns")) {
            c.fault.ssd_ns = std::min(c.fault.ssd_ns, c.fault.penalty_ns);
            c.fault.software_ns = c.fault.penalty_ns - c.fault.ssd_ns;
        }
        s.reject_unknown();
    }
    {
        Section s(root, "run");
        s.read("seed", c.seed);
        s.read("instructions", c.instructions);
        s.read("wrap", c.wrap);
        if (auto a = s.raw("alone")) {
            if (*a == "baseline")
                c.alone = AloneReference::Baseline;
            else if (*a == "none")
                c.alone = AloneReference::None;
            else
                throw ConfigError("[run] alone must be baseline or none");
        }
        s.read("interval", c.interval);
        s.read("max_memory_cycles", c.max_memory_cycles);
        s.reject_unknown();
    }
    require_valid(c);
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config '" + path + "'");
    return parse_config(in, std::filesystem::path(path).parent_path().string());
}

std::vector<std::string> validate(const RunConfig& c)
{
    std::vector<std::string> errors = validate(c.geometry);
    if (!errors.empty())
        return errors;
    for (auto& e : validate(c.timing, c.geometry))
        errors.push_back(e);
    for (auto& e : validate(c.region()))
        errors.push_back(e);
    if (c.cores == 0)
        errors.push_back("cpu.cores must be positive");
    if (c.core.retire_width == 0 || c.core.rob_entries == 0 || c.core.max_inflight_loads == 0 || c.core.freq_mhz == 0)
        errors.push_back("core widths, capacities and frequency must be positive");
    if (c.write_queue == 0)
        errors.push_back("cpu.write_queue must be positive");
    if (c.intensive_fraction) {
        if (!(*c.intensive_fraction >= 0.0 && *c.intensive_fraction <= 1.0))
            errors.push_back("workload.intensive_fraction must be in [0, 1]");
    } else if (c.workloads.size() != c.cores) {
        errors.push_back("workload count (" + std::to_string(c.workloads.size()) + ") must equal cpu.cores (" +
                         std::to_string(c.cores) + ")");
    }
    if (c.wrap && c.instructions == 0)
        errors.push_back("run.instructions must be positive when traces wrap");
    if (c.interval == 0)
        errors.push_back("run.interval must be positive");
    if (c.active_ratio == 0)
        errors.push_back("paging.active_ratio must be positive");
    if (c.fault.penalty_ns != c.fault.ssd_ns + c.fault.software_ns)
        errors.push_back("paging.penalty_ns must equal ssd_ns + software_ns");
    return errors;
}

void require_valid(const RunConfig& c)
{
    auto errors = validate(c);
    if (!errors.empty())
        throw ConfigError("invalid config: " + join(errors));
}

std::vector<WorkloadSource> resolve_workloads(const RunConfig& c)
{
    std::vector<WorkloadSource> base;
    if (c.intensive_fraction) {
        std::vector<size_t> hot, cold;
        for (size_t i = 0; i < c.intensive_pool.size(); ++i)
            hot.push_back(i);
        for (size_t i = 0; i < c.light_pool.size(); ++i)
            cold.push_back(c.intensive_pool.size() + i);
        const auto mix = build_mix(hot, cold, c.cores, *c.intensive_fraction, c.mix_seed.value_or(c.seed));
        for (size_t id : mix.slots)
            base.push_back(id < c.intensive_pool.size() ? c.intensive_pool[id]
                                                        : c.light_pool[id - c.intensive_pool.size()]);
    } else {
        base = c.workloads;
    }
    for (size_t i = 0; i < base.size(); ++i)
        base[i] = base[i].seeded(c.seed + i);
    return base;
}

Json to_json(const RunConfig& c)
{
    Json j;
    const auto& g = c.geometry;
    j["geometry"] = {{"data_chips", g.data_chips},     {"ecc_chips", g.ecc_chips},
                     {"banks", g.banks},               {"rows_per_bank", g.rows_per_bank},
                     {"lines_per_row", g.lines_per_row}, {"line_bytes", g.line_bytes}};
    const auto& t = c.timing;
    j["timing"] = {{"tCK_ns", t.tCK_ns}, {"tRCD", t.tRCD}, {"tRP", t.tRP},     {"tCL", t.tCL},
                   {"tCWL", t.tCWL},     {"tRAS", t.tRAS}, {"tRC", t.tRC},     {"tCCD", t.tCCD},
                   {"tBURST", t.tBURST}, {"tWR", t.tWR},   {"tWTR", t.tWTR},   {"tRTP", t.tRTP},
                   {"tRRD", t.tRRD},     {"tFAW", t.tFAW}, {"tREFI", t.tREFI}, {"tRFC", t.tRFC},
                   {"bridge_delay", t.bridge_delay},       {"refresh", t.refresh_enabled}};
    j["layout"] = {{"mode", std::string(to_string(c.mode))}, {"boundary_pages", c.boundary_pages}};
    j["cpu"] = {{"cores", c.cores},
                {"retire_width", c.core.retire_width},
                {"rob_entries", c.core.rob_entries},
                {"max_inflight_loads", c.core.max_inflight_loads},
                {"freq_mhz", c.core.freq_mhz},
                {"write_queue", c.write_queue},
                {"age_cap", c.age_cap}};
    Json w = Json::array();
    for (const auto& src : resolve_workloads(c))
        w.push_back(src.describe());
    j["workload"] = {{"cores", w}};
    if (c.intensive_fraction) {
        j["workload"]["intensive_fraction"] = *c.intensive_fraction;
        j["workload"]["mix_seed"] = c.mix_seed.value_or(c.seed);
    }
    j["paging"] = {{"enabled", c.paging},
                   {"frame_limit", c.frame_limit},
                   {"active_ratio", c.active_ratio},
                   {"penalty_ns", c.fault.penalty_ns}};
    j["run"] = {{"instructions", c.instructions},
                {"wrap", c.wrap},
                {"alone", c.alone == AloneReference::Baseline ? "baseline" : "none"},
                {"interval", c.interval}};
    return j;
}

////////////////////////////////////////////////////////////////
// Capacity

CapacityReport capacity_report(const RegionConfig& region)
{
    require_valid(region);
    CapacityReport r;
    r.region = region;
    const auto& g = region.geometry;
    r.baseline_pages = g.baseline_pages();
    r.extra_pages = extra_pages(region);
    r.capacity_pages = capacity_pages(region);
    r.gain_percent = 100.0 * double(r.extra_pages) / double(r.baseline_pages);
    r.cream_lines_end = region.mode == LayoutMode::BaselineSecded ? 0 : region.boundary_pages * g.lines_per_row;
    r.secded_lines_end = g.baseline_lines();
    r.capacity_lines = capacity_lines(region);
    return r;
}

Json to_json(const CapacityReport& r)
{
    Json j;
    j["mode"] = std::string(to_string(r.region.mode));
    j["boundary_pages"] = r.region.boundary_pages;
    j["baseline_pages"] = r.baseline_pages;
    j["extra_pages"] = r.extra_pages;
    j["capacity_pages"] = r.capacity_pages;
    j["gain_percent"] = r.gain_percent;
    j["regions"] = Json::array({
        {{"name", "cream"}, {"first_line", 0}, {"end_line", r.cream_lines_end}},
        {{"name", "secded"}, {"first_line", r.cream_lines_end}, {"end_line", r.secded_lines_end}},
        {{"name", "extra"}, {"first_line", r.secded_lines_end}, {"end_line", r.capacity_lines}},
    });
    return j;
}

////////////////////////////////////////////////////////////////
// Simulation

TraceSet materialize(const std::vector<WorkloadSource>& workloads)
{
    TraceSet out;
    std::map<std::string, std::shared_ptr<const std::vector<TraceEntry>>> cache;
    for (const auto& w : workloads) {
        const auto key = w.describe();
        auto& slot = cache[key];
        if (!slot)
            slot = std::make_shared<const std::vector<TraceEntry>>(w.kind == WorkloadSource::Kind::Trace
                                                                       ? load_trace(w.path)
                                                                       : gen_trace(w.gen));
        out.push_back(slot);
    }
    return out;
}

namespace {

struct Submission {
    uint32_t core;
    Rw rw;
    uint64_t line;
};

/// Requests made during a memory cycle reach the controller at its next tick.
class BufferedPort : public MemoryPort {
  public:
    explicit BufferedPort(Controller& c) : ctl_(c) {}

    bool can_accept(Rw rw) const override
    {
        return rw == Rw::Read || ctl_.pending_writes() + buffered_writes_ < ctl_.write_queue_capacity();
    }

    uint64_t submit(uint32_t core, Rw rw, uint64_t line) override
    {
        const uint64_t id = ctl_.next_request_id() + buffer_.size();
        buffer_.push_back(Submission{core, rw, line});
        if (rw == Rw::Write)
            ++buffered_writes_;
        return id;
    }

    void flush()
    {
        for (const auto& s : buffer_)
            ctl_.enqueue(s.core, s.rw, s.line);
        buffer_.clear();
        buffered_writes_ = 0;
    }

    bool empty() const { return buffer_.empty(); }

  private:
    Controller& ctl_;
    std::vector<Submission> buffer_;
    uint32_t buffered_writes_ = 0;
};

} // namespace

SimReport simulate(const RunConfig& config, const TraceSet& traces, const RunHooks& hooks)
{
    require_valid(config);
    if (traces.size() != config.cores)
        throw ConfigError("trace count must equal cpu.cores");

    const RegionConfig region = config.region();
    SimReport report;
    report.config = config;
    report.capacity = capacity_report(region);
    report.frames = report.capacity.capacity_pages;
    if (config.frame_limit)
        report.frames = std::min(report.frames, config.frame_limit);

    Controller ctl(region, config.timing, ControllerOptions{config.write_queue, SchedulerOptions{config.age_cap}});
    if (hooks.command_sink)
        ctl.set_command_sink(hooks.command_sink);
    BufferedPort port(ctl);

    std::optional<FrameTable> frames;
    if (config.paging)
        frames.emplace(report.frames, PagingOptions{config.active_ratio});
    const uint64_t lpr = config.geometry.lines_per_row;
    const uint64_t cap_lines = report.capacity.capacity_lines;
    Translator translate = [&](uint32_t core, uint64_t vline) -> Translation {
        if (!frames)
            return Translation{vline % cap_lines, false};
        const auto a = frames->access(VPage{core, vline / lpr});
        return Translation{a.frame * lpr + vline % lpr, a.fault};
    };

    const uint64_t penalty = config.paging ? config.fault.penalty_cycles(config.core.freq_mhz) : 0;
    std::vector<Core> cores;
    cores.reserve(config.cores);
    for (uint32_t i = 0; i < config.cores; ++i)
        cores.emplace_back(i, config.core, traces[i].get(), config.wrap, config.instructions, penalty);

    const uint64_t tck_ps = static_cast<uint64_t>(std::llround(config.timing.tCK_ns * 1000.0));
    const uint64_t freq = config.core.freq_mhz;
    auto cpu_of = [&](uint64_t m) { return m * tck_ps * freq / 1000000; };

    // A core stops at its budget; letting it run on would keep the controller
    // busy through other cores' fault stalls.
    auto runnable = [&](const Core& c) { return !c.done(); };
    auto all_done = [&] {
        if (config.wrap)
            return std::all_of(cores.begin(), cores.end(), [](const Core& c) { return c.reached_budget(); });
        return std::all_of(cores.begin(), cores.end(), [&](const Core& c) { return !runnable(c); }) &&
               ctl.idle() && port.empty();
    };

    auto interval_row = [&](uint64_t cycle) {
        if (!hooks.interval_csv)
            return;
        const auto& s = ctl.stats();
        uint64_t instr = 0;
        for (const auto& c : cores)
            instr += c.stats().instructions;
        *hooks.interval_csv << cycle << ',' << s.logical_requests << ',' << s.device_ops << ',' << s.row_hits << ','
                            << s.row_misses << ',' << (frames ? frames->faults() : 0) << ','
                            << (frames ? frames->resident() : 0) << ',' << instr << std::endl;
    };
    if (hooks.interval_csv)
        *hooks.interval_csv << "memory_cycle,logical_requests,device_ops,row_hits,row_misses,faults,resident_pages,"
                               "instructions\n";

    while (!all_done()) {
        port.flush();
        const uint64_t m = ctl.now();
        if (config.max_memory_cycles && m >= config.max_memory_cycles)
            throw std::runtime_error("run exceeded max_memory_cycles (" + std::to_string(config.max_memory_cycles) +
                                     ")");
        ctl.tick();
        for (const auto& done : ctl.take_completions())
            if (done.rw == Rw::Read)
                cores[done.core].complete(done.request);
        for (uint64_t cyc = cpu_of(m); cyc < cpu_of(m + 1); ++cyc)
            for (auto& c : cores)
                if (runnable(c))
                    c.step(cyc, port, translate);
        if ((m + 1) % config.interval == 0)
            interval_row(m + 1);

        if (ctl.idle() && port.empty()) {
            const uint64_t next_cpu = cpu_of(m + 1);
            uint64_t wake = kNever;
            bool any = false, all_parked = true;
            for (const auto& c : cores) {
                if (!runnable(c))
                    continue;
                any = true;
                if (!c.parked(next_cpu)) {
                    all_parked = false;
                    break;
                }
                wake = std::min(wake, c.stall_until());
            }
            if (any && all_parked) {
                const uint64_t target = wake * 1000000 / (tck_ps * freq);
                if (target > m + 1) {
                    const uint64_t skipped = cpu_of(target) - next_cpu;
                    for (auto& c : cores)
                        if (runnable(c))
                            c.account_skipped(skipped);
                    ctl.skip_to(target);
                }
            }
        }
    }

    report.engine = ctl.stats();
    report.metrics = metrics(report.engine);
    report.memory_cycles = ctl.now();
    report.throughput =
        report.memory_cycles ? double(report.engine.logical_requests) / double(report.memory_cycles) : 0.0;
    if (frames) {
        report.page_faults = frames->faults();
        report.resident_pages = frames->resident();
    }
    const auto sources = resolve_workloads(config);
    for (uint32_t i = 0; i < config.cores; ++i) {
        CoreReport cr;
        cr.id = i;
        cr.workload = i < sources.size() ? sources[i].describe() : "";
        cr.stats = cores[i].stats();
        cr.served = i < report.engine.served_per_core.size() ? report.engine.served_per_core[i] : 0;
        report.cores.push_back(std::move(cr));
    }
    return report;
}

SimReport run(const RunConfig& config, const RunHooks& hooks)
{
    require_valid(config);
    RunConfig resolved = config;
    resolved.workloads = resolve_workloads(config);
    resolved.intensive_fraction.reset();
    resolved.intensive_pool.clear();
    resolved.light_pool.clear();
    const TraceSet traces = materialize(resolved.workloads);
    SimReport report = simulate(resolved, traces, hooks);
    report.config = config;

    if (config.alone == AloneReference::Baseline) {
        std::map<std::string, double> alone;
        std::vector<double> shared_ipc, alone_ipc;
        for (uint32_t i = 0; i < config.cores; ++i) {
            const auto key = resolved.workloads[i].describe();
            auto it = alone.find(key);
            if (it == alone.end()) {
                RunConfig solo = resolved;
                solo.mode = LayoutMode::BaselineSecded;
                solo.boundary_pages = 0;
                solo.cores = 1;
                solo.workloads = {resolved.workloads[i]};
                solo.alone = AloneReference::None;
                solo.seed = resolved.seed + i;
                const auto r = simulate(solo, TraceSet{traces[i]});
                it = alone.emplace(key, r.cores[0].stats.ipc()).first;
            }
            report.cores[i].alone_ipc = it->second;
            shared_ipc.push_back(report.cores[i].stats.ipc());
            alone_ipc.push_back(it->second);
        }
        report.weighted_speedup = weighted_speedup(shared_ipc, alone_ipc);
    }
    return report;
}

Json to_json(const SimReport& r)
{
    Json j;
    j["config"] = to_json(r.config);
    j["seed"] = r.config.seed;
    j["capacity"] = to_json(r.capacity);
    j["frames"] = r.frames;
    const auto& m = r.metrics;
    const auto& s = r.engine;
    Json met;
    met["memory_cycles"] = r.memory_cycles;
    met["logical_requests"] = m.logical_requests;
    met["reads"] = s.reads;
    met["writes"] = s.writes;
    met["device_ops"] = m.device_ops;
    met["device_op_ratio"] = m.device_op_ratio;
    met["device_ops_plain_extra_writes"] = m.device_ops_plain_extra_writes;
    met["row_hits"] = m.row_hits;
    met["row_misses"] = m.row_misses;
    met["row_hit_rate"] = m.row_hit_rate;
    met["mean_concurrency"] = m.mean_concurrency;
    met["max_concurrency"] = m.max_concurrency;
    met["mean_read_latency"] = m.mean_read_latency;
    met["throughput"] = r.throughput;
    met["commands"] = {{"ACT", s.commands[0]},
                       {"PRE", s.commands[1]},
                       {"RD", s.commands[2]},
                       {"WR", s.commands[3]},
                       {"REF", s.commands[4]}};
    met["page_faults"] = r.page_faults;
    met["resident_pages"] = r.resident_pages;
    j["metrics"] = met;
    Json cores = Json::array();
    for (const auto& c : r.cores) {
        Json cj;
        cj["id"] = c.id;
        cj["workload"] = c.workload;
        cj["instructions"] = c.stats.budget_cycle ? c.stats.budget_instructions : c.stats.instructions;
        cj["cycles"] = c.stats.cycles;
        cj["ipc"] = c.stats.ipc();
        cj["loads"] = c.stats.loads;
        cj["stores"] = c.stats.stores;
        cj["faults"] = c.stats.faults;
        cj["stall_cycles"] = c.stats.stall_cycles;
        cj["served"] = c.served;
        cj["alone_ipc"] = c.alone_ipc ? Json(*c.alone_ipc) : Json(nullptr);
        cores.push_back(cj);
    }
    j["cores"] = cores;
    j["weighted_speedup"] = r.weighted_speedup ? Json(*r.weighted_speedup) : Json(nullptr);
    return j;
}

std::string report_text(const SimReport& report) { return to_json(report).dump(2) + "\n"; }

////////////////////////////////////////////////////////////////
// Sweeps

SweepAxis parse_sweep_axis(const std::string& name)
{
    if (name == "mode")
        return SweepAxis::Mode;
    if (name == "secdedFraction" || name == "secded_fraction")
        return SweepAxis::SecdedFraction;
    if (name == "intensiveFraction" || name == "intensive_fraction")
        return SweepAxis::IntensiveFraction;
    if (name == "framesHeadroom" || name == "frames_headroom")
        return SweepAxis::FramesHeadroom;
    throw ConfigError("unknown sweep axis '" + name + "'");
}

std::string_view to_string(SweepAxis axis)
{
    switch (axis) {
    case SweepAxis::Mode: return "mode";
    case SweepAxis::SecdedFraction: return "secdedFraction";
    case SweepAxis::IntensiveFraction: return "intensiveFraction";
    case SweepAxis::FramesHeadroom: return "framesHeadroom";
    }
    return "?";
}

uint64_t boundary_for_secded_fraction(const ModuleGeometry& g, double fraction)
{
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw ConfigError("SECDED fraction must be in [0, 1]");
    const double pages = (1.0 - fraction) * double(g.baseline_pages());
    const auto groups = static_cast<uint64_t>(std::llround(pages / double(g.banks)));
    return std::min<uint64_t>(groups * g.banks, g.baseline_pages());
}

uint64_t working_set_pages(const TraceSet& traces)
{
    std::unordered_set<VPage, VPageHash> pages;
    for (uint32_t i = 0; i < traces.size(); ++i)
        for (const auto& e : *traces[i])
            pages.insert(VPage{i, e.line() / 64});
    return pages.size();
}

namespace {

double parse_number(const std::string& v)
{
    try {
        size_t used = 0;
        double d = std::stod(v, &used);
        if (used == v.size())
            return d;
    } catch (const std::exception&) {
    }
    throw ConfigError("sweep value '" + v + "' is not a number");
}

} // namespace

RunConfig sweep_row_config(const RunConfig& base, SweepAxis axis, const std::string& value, size_t row)
{
    RunConfig c = base;
    switch (axis) {
    case SweepAxis::Mode:
        c.mode = parse_layout_mode(value);
        break;
    case SweepAxis::SecdedFraction:
        c.boundary_pages = boundary_for_secded_fraction(c.geometry, parse_number(value) / 100.0);
        break;
    case SweepAxis::IntensiveFraction:
        if (c.intensive_pool.empty() && c.light_pool.empty())
            throw ConfigError("intensiveFraction sweeps need workload.intensive_pool and workload.light_pool");
        c.intensive_fraction = parse_number(value) / 100.0;
        c.mix_seed = splitmix64(base.seed + row + 1);
        break;
    case SweepAxis::FramesHeadroom: {
        const double h = parse_number(value);
        if (!(h > 0.0))
            throw ConfigError("frames headroom must be positive");
        const uint64_t ws = working_set_pages(materialize(resolve_workloads(base)));
        c.paging = true;
        c.frame_limit = std::max<uint64_t>(1, static_cast<uint64_t>(std::ceil(h * double(ws))));
        break;
    }
    }
    return c;
}

std::vector<SweepRow> sweep(const RunConfig& base, SweepAxis axis, const std::vector<std::string>& values,
                            unsigned threads)
{
    std::vector<SweepRow> rows(values.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next++; i < values.size(); i = next++) {
            rows[i].value = values[i];
            try {
                rows[i].report = run(sweep_row_config(base, axis, values[i], i));
            } catch (const std::exception& e) {
                rows[i].error = e.what();
            }
        }
    };
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, std::max<size_t>(1, values.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    return rows;
}

Json to_json(SweepAxis axis, const std::vector<SweepRow>& rows)
{
    Json j;
    j["axis"] = std::string(to_string(axis));
    Json arr = Json::array();
    for (const auto& r : rows) {
        Json row;
        row["value"] = r.value;
        if (r.report)
            row["report"] = to_json(*r.report);
        else
            row["error"] = r.error;
        arr.push_back(row);
    }
    j["rows"] = arr;
    return j;
}

std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows)
{
    std::ostringstream os;
    os << to_string(axis)
       << ",mode,boundary_pages,capacity_pages,logical_requests,device_ops,device_op_ratio,row_hit_rate,"
          "mean_concurrency,mean_read_latency,throughput,page_faults,weighted_speedup,error\n";
    for (const auto& r : rows) {
        os << r.value << ',';
        if (!r.report) {
            std::string err = r.error;
            std::replace(err.begin(), err.end(), '"', '\'');
            os << ",,,,,,,,,,,,\"" << err << "\"\n";
            continue;
        }
        const auto j = to_json(*r.report);
        const auto& m = j["metrics"];
        os << to_string(r.report->config.mode) << ',' << r.report->config.boundary_pages << ','
           << r.report->capacity.capacity_pages << ',' << m["logical_requests"].dump() << ','
           << m["device_ops"].dump() << ',' << m["device_op_ratio"].dump() << ',' << m["row_hit_rate"].dump() << ','
           << m["mean_concurrency"].dump() << ',' << m["mean_read_latency"].dump() << ','
           << m["throughput"].dump() << ',' << m["page_faults"].dump() << ','
           << (r.report->weighted_speedup ? j["weighted_speedup"].dump() : "") << ",\n";
    }
    return os.str();
}

////////////////////////////////////////////////////////////////
// Translation dump

namespace {

std::string slices_text(const std::vector<SliceId>& slices)
{
    std::string out;
    for (const auto& s : slices)
        out += (out.empty() ? "" : ",") + to_string(s);
    return out;
}

Json plan_json(const AccessPlan& plan)
{
    Json ops = Json::array();
    for (const auto& op : plan.ops) {
        Json o;
        o["rw"] = std::string(to_string(op.rw));
        o["role"] = std::string(to_string(op.role));
        o["row"] = op.row;
        o["column"] = op.column;
        o["after"] = op.after;
        o["slices"] = slices_text(op.group);
        ops.push_back(o);
    }
    return {{"staging", plan.staging == Staging::Rmw ? "rmw" : "none"},
            {"bridge", plan.through_bridge},
            {"ops", ops}};
}

} // namespace

std::string translate_text(const RegionConfig& region, uint64_t line)
{
    const Footprint fp = locate(region, line);
    std::ostringstream os;
    os << "mode " << to_string(region.mode) << "\n";
    os << "boundary " << region.boundary_pages << "\n";
    os << "line 0x" << std::hex << line << std::dec << " (" << line << ")\n";
    os << "region " << to_string(region_of(region, line)) << "\n";
    for (size_t i = 0; i < fp.lanes.size(); ++i)
        os << "lane " << i << " slice " << to_string(fp.lanes[i].slice) << " row " << fp.lanes[i].row << "\n";
    os << "columns " << fp.columns.start << " width " << fp.columns.width << "\n";
    if (fp.side)
        os << "side " << (fp.side->kind == SideKind::Ecc ? "ecc" : "parity") << " slice " << to_string(fp.side->slice)
           << " row " << fp.side->row << " byte " << fp.side->byte_offset << " bytes " << fp.side->bytes << "\n";
    else
        os << "side none\n";
    for (Rw rw : {Rw::Read, Rw::Write}) {
        const auto plan = plan_access(region, line, rw);
        os << "plan " << to_string(rw) << " ops " << plan.ops.size() << " staging "
           << (plan.staging == Staging::Rmw ? "rmw" : "none") << " bridge " << (plan.through_bridge ? "yes" : "no")
           << "\n";
        for (size_t i = 0; i < plan.ops.size(); ++i) {
            const auto& op = plan.ops[i];
            os << "  op " << i << ' ' << to_string(op.rw) << " role " << to_string(op.role) << " row " << op.row
               << " col " << op.column << " after ";
            if (op.after < 0)
                os << '-';
            else
                os << op.after;
            os << " slices " << slices_text(op.group) << "\n";
        }
    }
    return os.str();
}

Json translate_json(const RegionConfig& region, uint64_t line)
{
    const Footprint fp = locate(region, line);
    Json j;
    j["mode"] = std::string(to_string(region.mode));
    j["boundary_pages"] = region.boundary_pages;
    j["line"] = line;
    j["region"] = std::string(to_string(region_of(region, line)));
    Json lanes = Json::array();
    for (const auto& l : fp.lanes)
        lanes.push_back({{"chip", l.slice.chip}, {"bank", l.slice.bank}, {"row", l.row}});
    j["lanes"] = lanes;
    j["columns"] = {{"start", fp.columns.start}, {"width", fp.columns.width}};
    if (fp.side)
        j["side"] = {{"kind", fp.side->kind == SideKind::Ecc ? "ecc" : "parity"},
                     {"chip", fp.side->slice.chip},
                     {"bank", fp.side->slice.bank},
                     {"row", fp.side->row},
                     {"byte_offset", fp.side->byte_offset},
                     {"bytes", fp.side->bytes}};
    else
        j["side"] = nullptr;
    j["read"] = plan_json(plan_access(region, line, Rw::Read));
    j["write"] = plan_json(plan_access(region, line, Rw::Write));
    return j;
}

} // namespace cream
