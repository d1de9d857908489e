#include "cream/engine.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace cream {

namespace {

uint64_t group_key(const ModuleGeometry& g, const std::vector<SliceId>& group)
{
    uint64_t h = 1469598103934665603ull;
    for (const auto& s : group) {
        h ^= slice_index(g, s) + 1;
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<uint32_t> distinct_chips(const std::vector<SliceId>& slices)
{
    std::vector<uint32_t> chips;
    chips.reserve(slices.size());
    for (const auto& s : slices)
        if (std::find(chips.begin(), chips.end(), s.chip) == chips.end())
            chips.push_back(s.chip);
    return chips;
}

} // namespace

std::string_view to_string(CommandKind kind)
{
    switch (kind) {
    case CommandKind::ACT: return "ACT";
    case CommandKind::PRE: return "PRE";
    case CommandKind::RD: return "RD";
    case CommandKind::WR: return "WR";
    case CommandKind::REF: return "REF";
    }
    return "?";
}

std::string format_command(const CommandEvent& cmd)
{
    std::ostringstream os;
    os << cmd.cycle << ' ' << to_string(cmd.kind) << " row=" << cmd.row << " col=" << cmd.column
       << " req=" << cmd.request << " op=" << cmd.op << " after=";
    if (cmd.after < 0)
        os << '-';
    else
        os << cmd.after;
    os << " slices=";
    for (size_t i = 0; i < cmd.slices.size(); ++i) {
        if (i)
            os << ',';
        os << cmd.slices[i].chip << '.' << cmd.slices[i].bank;
    }
    return os.str();
}

////////////////////////////////////////////////////////////////

DeviceState::DeviceState(const ModuleGeometry& geometry, const TimingParams& timing)
    : geometry_(geometry), timing_(timing), slices_(slice_count(geometry)), chips_(geometry.total_chips())
{
    for (uint32_t i = 0; i < slices_.size(); ++i)
        slices_[i].slice = slice_from_index(geometry_, i);
}

uint64_t DeviceState::data_done(CommandKind kind, uint64_t issue) const
{
    if (kind == CommandKind::RD)
        return issue + timing_.tCL + timing_.tBURST;
    return issue + timing_.tCWL + timing_.tBURST;
}

bool DeviceState::all_closed() const
{
    return std::none_of(slices_.begin(), slices_.end(), [](const SliceState& s) { return s.row_open.has_value(); });
}

std::vector<SliceId> DeviceState::open_slices() const
{
    std::vector<SliceId> out;
    for (const auto& s : slices_)
        if (s.row_open)
            out.push_back(s.slice);
    return out;
}

IssueCheck DeviceState::can_issue(const CommandEvent& cmd) const
{
    const IssueCheck illegal{false, kNever};
    uint64_t earliest = 0;
    const auto& t = timing_;

    switch (cmd.kind) {
    case CommandKind::ACT:
        for (const auto& id : cmd.slices) {
            const auto& s = slice(id);
            if (s.row_open)
                return illegal;
            earliest = std::max(earliest, s.next_act);
        }
        earliest = std::max(earliest, rank_next_act_);
        if (act_window_.size() == 4)
            earliest = std::max(earliest, act_window_.front() + t.tFAW);
        break;
    case CommandKind::PRE:
        for (const auto& id : cmd.slices) {
            const auto& s = slice(id);
            if (!s.row_open)
                return illegal;
            earliest = std::max(earliest, s.next_pre);
        }
        break;
    case CommandKind::RD:
    case CommandKind::WR: {
        const bool read = cmd.kind == CommandKind::RD;
        for (const auto& id : cmd.slices) {
            const auto& s = slice(id);
            if (s.row_open != cmd.row)
                return illegal;
            earliest = std::max(earliest, read ? s.next_rd : s.next_wr);
        }
        const uint64_t lead = read ? t.tCL : t.tCWL;
        for (uint32_t chip : distinct_chips(cmd.slices)) {
            const auto& c = chips_[chip];
            earliest = std::max(earliest, read ? c.next_rd : c.next_wr);
            if (c.lane_free_at > lead)
                earliest = std::max(earliest, c.lane_free_at - lead);
        }
        break;
    }
    case CommandKind::REF:
        for (const auto& s : slices_) {
            if (s.row_open)
                return illegal;
            earliest = std::max(earliest, s.next_act);
        }
        break;
    }
    return IssueCheck{earliest <= cmd.cycle, earliest};
}

void DeviceState::apply(const CommandEvent& cmd)
{
    if (!can_issue(cmd).ok)
        throw std::logic_error("illegal command: " + format_command(cmd));

    const auto& t = timing_;
    const uint64_t now = cmd.cycle;
    auto at = [&](SliceId id) -> SliceState& { return slices_[slice_index(geometry_, id)]; };

    switch (cmd.kind) {
    case CommandKind::ACT:
        for (const auto& id : cmd.slices) {
            auto& s = at(id);
            s.row_open = cmd.row;
            s.last_act = now;
            s.next_rd = s.next_wr = now + t.tRCD;
            s.next_pre = std::max(s.next_pre, now + t.tRAS);
            s.next_act = now + t.tRC;
        }
        rank_next_act_ = now + t.tRRD;
        act_window_.push_back(now);
        if (act_window_.size() > 4)
            act_window_.erase(act_window_.begin());
        break;
    case CommandKind::PRE:
        for (const auto& id : cmd.slices) {
            auto& s = at(id);
            s.row_open.reset();
            s.last_pre = now;
            s.next_act = std::max(s.next_act, now + t.tRP);
        }
        break;
    case CommandKind::RD:
        for (const auto& id : cmd.slices) {
            auto& s = at(id);
            s.last_read = now;
            s.next_pre = std::max(s.next_pre, now + t.tRTP);
            s.busy_until = now + t.tCL + t.tBURST;
        }
        for (uint32_t chip : distinct_chips(cmd.slices)) {
            auto& c = chips_[chip];
            c.next_rd = std::max(c.next_rd, now + t.tCCD);
            c.next_wr = std::max(c.next_wr, now + t.tCCD);
            c.lane_free_at = now + t.tCL + t.tBURST;
        }
        break;
    case CommandKind::WR:
        for (const auto& id : cmd.slices) {
            auto& s = at(id);
            s.last_write = now;
            s.next_pre = std::max(s.next_pre, now + t.tCWL + t.tBURST + t.tWR);
            s.busy_until = now + t.tCWL + t.tBURST;
        }
        for (uint32_t chip : distinct_chips(cmd.slices)) {
            auto& c = chips_[chip];
            c.next_rd = std::max(c.next_rd, now + t.tCWL + t.tBURST + t.tWTR);
            c.next_wr = std::max(c.next_wr, now + t.tCCD);
            c.lane_free_at = now + t.tCWL + t.tBURST;
        }
        break;
    case CommandKind::REF:
        for (auto& s : slices_)
            s.next_act = std::max(s.next_act, now + t.tRFC);
        break;
    }
}

////////////////////////////////////////////////////////////////

namespace {

bool op_ready(const PendingRequest& req, const OpState& op, uint64_t now)
{
    if (op.issued || now < op.ready_at)
        return false;
    return op.op.after < 0 || req.ops[op.op.after].done;
}

CommandEvent make_command(CommandKind kind, const PendingRequest& req, size_t op_index,
                          std::vector<SliceId> slices, uint64_t now)
{
    const auto& op = req.ops[op_index].op;
    CommandEvent cmd;
    cmd.kind = kind;
    cmd.slices = std::move(slices);
    cmd.row = op.row;
    cmd.column = (kind == CommandKind::RD || kind == CommandKind::WR) ? op.column : 0;
    cmd.cycle = now;
    cmd.request = req.id;
    cmd.op = static_cast<int32_t>(op_index);
    cmd.after = (kind == CommandKind::WR) ? op.after : -1;
    return cmd;
}

} // namespace

std::optional<ScheduledCommand> schedule(const std::vector<PendingRequest>& queue, const DeviceState& state,
                                         uint64_t now, const SchedulerOptions& options, uint64_t* retry_at)
{
    const auto& g = state.geometry();
    uint64_t retry = kNever;
    auto attempt = [&](const CommandEvent& cmd) {
        const auto c = state.can_issue(cmd);
        if (!c.ok)
            retry = std::min(retry, c.blocked_until);
        return c.ok;
    };
    for (const auto& req : queue)
        for (const auto& op : req.ops)
            if (!op.issued && now < op.ready_at)
                retry = std::min(retry, op.ready_at);

    size_t oldest = queue.size();
    for (size_t ri = 0; ri < queue.size(); ++ri)
        if (queue[ri].ops_issued < queue[ri].ops.size()) {
            oldest = ri;
            break;
        }
    const bool overdue = oldest < queue.size() && now >= queue[oldest].arrival + options.age_cap;
    if (oldest < queue.size() && !overdue)
        retry = std::min(retry, queue[oldest].arrival + options.age_cap);

    // Rows an overdue oldest request needs closed take no further hits.
    std::vector<char> closing(slice_count(g), 0);
    if (overdue) {
        const auto& req = queue[oldest];
        for (const auto& op : req.ops)
            if (op_ready(req, op, now))
                for (uint32_t i : op.slice_indices)
                    if (const auto row = state.open_row_at(i); row && *row != op.op.row)
                        closing[i] = 1;
    }

    // Row hits first, oldest parent request first.
    for (size_t ri = 0; ri < queue.size(); ++ri) {
        const auto& req = queue[ri];
        for (size_t oi = 0; oi < req.ops.size(); ++oi) {
            const auto& op = req.ops[oi];
            if (!op_ready(req, op, now))
                continue;
            const bool open = std::all_of(op.slice_indices.begin(), op.slice_indices.end(),
                                          [&](uint32_t i) { return state.open_row_at(i) == op.op.row; });
            if (!open)
                continue;
            if (overdue && ri != oldest &&
                std::any_of(op.slice_indices.begin(), op.slice_indices.end(),
                            [&](uint32_t i) { return closing[i] != 0; }))
                continue;
            auto cmd = make_command(op.op.rw == Rw::Read ? CommandKind::RD : CommandKind::WR, req, oi,
                                    op.op.group, now);
            if (attempt(cmd))
                return ScheduledCommand{std::move(cmd), ri, oi};
        }
    }

    // Slices whose open row some queued op still wants.
    std::vector<char> wanted(slice_count(g), 0);
    for (const auto& req : queue)
        for (const auto& op : req.ops)
            if (!op.issued)
                for (uint32_t i : op.slice_indices)
                    if (state.open_row_at(i) == op.op.row)
                        wanted[i] = 1;

    for (size_t ri = 0; ri < queue.size(); ++ri) {
        const auto& req = queue[ri];
        const bool may_override = overdue && ri == oldest;
        for (size_t oi = 0; oi < req.ops.size(); ++oi) {
            const auto& op = req.ops[oi];
            if (!op_ready(req, op, now))
                continue;
            bool any_conflict = false, any_closed = false, protects = false;
            for (uint32_t i : op.slice_indices) {
                const auto row = state.open_row_at(i);
                if (!row) {
                    any_closed = true;
                } else if (*row != op.op.row) {
                    any_conflict = true;
                    protects |= wanted[i] != 0;
                }
            }
            if (!any_conflict && !any_closed)
                continue;
            if (any_conflict && protects && !may_override)
                continue;
            std::vector<SliceId> targets;
            for (size_t k = 0; k < op.slice_indices.size(); ++k) {
                const auto row = state.open_row_at(op.slice_indices[k]);
                if (any_conflict ? (row && *row != op.op.row) : !row)
                    targets.push_back(op.op.group[k]);
            }
            auto cmd = make_command(any_conflict ? CommandKind::PRE : CommandKind::ACT, req, oi, std::move(targets), now);
            if (attempt(cmd))
                return ScheduledCommand{std::move(cmd), ri, oi};
        }
    }
    if (retry_at)
        *retry_at = retry;
    return std::nullopt;
}

////////////////////////////////////////////////////////////////

EngineMetrics metrics(const EngineStats& s)
{
    EngineMetrics m;
    m.logical_requests = s.logical_requests;
    m.device_ops = s.device_ops;
    m.device_op_ratio = s.logical_requests ? double(s.device_ops) / double(s.logical_requests) : 0.0;
    m.device_ops_plain_extra_writes = s.device_ops - s.extra_write_preserve_reads;
    m.row_hits = s.row_hits;
    m.row_misses = s.row_misses;
    const uint64_t accesses = s.row_hits + s.row_misses;
    m.row_hit_rate = accesses ? double(s.row_hits) / double(accesses) : 0.0;
    m.mean_concurrency = s.concurrency_samples ? double(s.concurrency_sum) / double(s.concurrency_samples) : 0.0;
    m.max_concurrency = s.max_concurrency;
    m.mean_read_latency = s.reads ? double(s.read_latency_sum) / double(s.reads) : 0.0;
    m.served_per_core = s.served_per_core;
    return m;
}

Controller::Controller(const RegionConfig& region, const TimingParams& timing, ControllerOptions options)
    : region_(region), timing_(timing), options_(options), device_(region.geometry, timing)
{
    require_valid(region_);
    require_valid(timing_, region_.geometry);
    refresh_due_ = timing_.tREFI;
}

bool Controller::can_accept(Rw rw) const
{
    return rw == Rw::Read || pending_writes_ < options_.write_queue_capacity;
}

uint64_t Controller::enqueue(uint32_t core, Rw rw, uint64_t line)
{
    if (!can_accept(rw))
        throw std::logic_error("write queue full");
    PendingRequest req;
    req.id = next_id_++;
    req.core = core;
    req.arrival = now_;
    req.rw = rw;
    req.line = line;
    req.plan = plan_access(region_, line, rw);
    req.ops.reserve(req.plan.ops.size());
    for (const auto& op : req.plan.ops) {
        OpState st;
        st.op = op;
        st.group_key = group_key(region_.geometry, op.group);
        for (const auto& sl : op.group)
            st.slice_indices.push_back(slice_index(region_.geometry, sl));
        st.ready_at = now_;
        req.ops.push_back(std::move(st));
        if (req.plan.region == Region::Extra && rw == Rw::Write && op.rw == Rw::Read &&
            op.role == OpRole::EccSide)
            ++stats_.extra_write_preserve_reads;
    }
    stats_.planned_ops += req.ops.size();
    ++stats_.requests_injected;
    if (rw == Rw::Write)
        ++pending_writes_;
    queue_.push_back(std::move(req));
    changed_ = true;
    return queue_.back().id;
}

void Controller::retire()
{
    if (now_ < next_retire_)
        return;
    next_retire_ = kNever;
    bool any_complete = false;
    for (auto& req : queue_) {
        if (req.ops_done < req.ops.size()) {
            for (size_t i = 0; i < req.ops.size(); ++i) {
                auto& op = req.ops[i];
                if (!op.issued || op.done || op.done_at > now_)
                    continue;
                op.done = true;
                changed_ = true;
                ++req.ops_done;
                ++stats_.device_ops;
                for (auto& dep : req.ops)
                    if (dep.op.after == static_cast<int32_t>(i))
                        dep.ready_at = op.done_at + timing_.bridge_delay;
            }
            if (req.ops_done == req.ops.size()) {
                uint64_t last = 0;
                for (const auto& op : req.ops)
                    last = std::max(last, op.done_at);
                req.completion = last + (req.plan.through_bridge ? timing_.bridge_delay : 0);
            }
            for (const auto& op : req.ops)
                if (op.issued && !op.done)
                    next_retire_ = std::min(next_retire_, op.done_at);
        }
        if (req.completion <= now_)
            any_complete = true;
        else
            next_retire_ = std::min(next_retire_, req.completion);
    }
    if (!any_complete)
        return;

    std::vector<PendingRequest> remaining;
    remaining.reserve(queue_.size());
    for (auto& req : queue_) {
        if (req.completion > now_) {
            remaining.push_back(std::move(req));
            continue;
        }
        Completion c{req.id, req.core, req.rw, req.line, req.arrival, req.completion};
        ++stats_.logical_requests;
        if (req.rw == Rw::Read) {
            ++stats_.reads;
            stats_.read_latency_sum += req.completion - req.arrival;
        } else {
            ++stats_.writes;
            --pending_writes_;
        }
        if (stats_.served_per_core.size() <= req.core)
            stats_.served_per_core.resize(req.core + 1, 0);
        ++stats_.served_per_core[req.core];
        stats_.last_completion = std::max(stats_.last_completion, req.completion);
        completions_.push_back(c);
    }
    queue_ = std::move(remaining);
}

void Controller::issue(const ScheduledCommand& scheduled)
{
    auto& req = queue_[scheduled.request_index];
    auto& op = req.ops[scheduled.op_index];
    const auto& cmd = scheduled.cmd;

    if (cmd.kind == CommandKind::WR && op.op.after >= 0) {
        const auto& leg = req.ops[op.op.after];
        if (!leg.done || cmd.cycle < leg.done_at + timing_.bridge_delay)
            throw std::logic_error("RMW write leg scheduled before its read leg: " + format_command(cmd));
    }
    device_.apply(cmd);
    ++stats_.commands[static_cast<int>(cmd.kind)];
    changed_ = true;
    op.started = true;
    if (cmd.kind == CommandKind::ACT)
        op.activated = true;
    if (cmd.kind == CommandKind::RD || cmd.kind == CommandKind::WR) {
        op.issued = true;
        ++req.ops_issued;
        op.done_at = device_.data_done(cmd.kind, cmd.cycle);
        next_retire_ = std::min(next_retire_, op.done_at);
        if (op.activated)
            ++stats_.row_misses;
        else
            ++stats_.row_hits;
    }
    if (sink_)
        sink_(cmd);
}

bool Controller::refresh_step()
{
    std::vector<SliceId> closable;
    for (const auto& id : device_.open_slices())
        if (device_.slice(id).next_pre <= now_)
            closable.push_back(id);
    CommandEvent cmd;
    cmd.cycle = now_;
    if (!closable.empty()) {
        cmd.kind = CommandKind::PRE;
        cmd.slices = std::move(closable);
    } else if (device_.all_closed()) {
        cmd.kind = CommandKind::REF;
        for (uint32_t i = 0; i < slice_count(region_.geometry); ++i)
            cmd.slices.push_back(slice_from_index(region_.geometry, i));
        if (!device_.can_issue(cmd).ok)
            return false;
    } else {
        return false;
    }
    device_.apply(cmd);
    ++stats_.commands[static_cast<int>(cmd.kind)];
    changed_ = true;
    if (cmd.kind == CommandKind::REF)
        refresh_due_ += timing_.tREFI;
    if (sink_)
        sink_(cmd);
    return true;
}

void Controller::sample_concurrency()
{
    if (changed_) {
        std::vector<uint64_t> groups;
        for (const auto& req : queue_)
            for (const auto& op : req.ops)
                if (op.started && !op.done)
                    groups.push_back(op.group_key);
        std::sort(groups.begin(), groups.end());
        concurrency_ = static_cast<uint32_t>(std::unique(groups.begin(), groups.end()) - groups.begin());
    }
    const uint32_t distinct = concurrency_;
    if (distinct == 0)
        return;
    stats_.concurrency_sum += distinct;
    ++stats_.concurrency_samples;
    stats_.max_concurrency = std::max(stats_.max_concurrency, distinct);
}

void Controller::tick()
{
    retire();
    if (timing_.refresh_enabled && now_ >= refresh_due_) {
        refresh_step();
    } else if (!queue_.empty() && (changed_ || now_ >= retry_at_)) {
        uint64_t retry = kNever;
        if (auto next = schedule(queue_, device_, now_, options_.scheduler, &retry)) {
            issue(*next);
            retry_at_ = 0;
        } else
            retry_at_ = retry;
    }
    sample_concurrency();
    changed_ = false;
    ++now_;
}

void Controller::skip_to(uint64_t cycle)
{
    if (!queue_.empty())
        throw std::logic_error("skip_to on a busy controller");
    if (cycle <= now_)
        return;
    now_ = cycle;
    if (timing_.refresh_enabled)
        while (refresh_due_ + timing_.tREFI <= now_)
            refresh_due_ += timing_.tREFI;
}

std::vector<Completion> Controller::take_completions()
{
    std::vector<Completion> out;
    out.swap(completions_);
    return out;
}

} // namespace cream
