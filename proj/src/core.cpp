#include "cream/core.hpp"

#include <algorithm>
#include <stdexcept>

namespace cream {

void require_valid(const CoreModel& m)
{
    if (m.retire_width == 0 || m.rob_entries == 0 || m.max_inflight_loads == 0 || m.freq_mhz == 0)
        throw ConfigError("core widths, capacities and frequency must be positive");
}

Core::Core(uint32_t id, CoreModel model, const std::vector<TraceEntry>* trace, bool wrap, uint64_t budget,
           uint64_t fault_penalty_cycles)
    : id_(id), model_(model), trace_(trace), wrap_(wrap), budget_(budget), penalty_(fault_penalty_cycles)
{
    require_valid(model_);
    if (!trace_)
        throw std::invalid_argument("core needs a trace");
    if (wrap_ && trace_->empty())
        throw ConfigError("cannot wrap an empty trace");
    stats_.budget_instructions = budget_;
}

bool Core::load_entry()
{
    if (next_ >= trace_->size()) {
        if (!wrap_)
            return false;
        next_ = 0;
    }
    op_ = (*trace_)[next_++];
    bubbles_left_ = op_.bubbles;
    have_op_ = true;
    translated_ = false;
    return true;
}

void Core::dispatch(uint64_t cycle, MemoryPort& port, const Translator& translate)
{
    if (cycle < stall_until_) {
        ++stats_.stall_cycles;
        return;
    }
    uint32_t slots = model_.retire_width;
    while (slots > 0 && rob_count_ < model_.rob_entries) {
        if (!have_op_ && !load_entry()) {
            trace_ended_ = true;
            return;
        }
        if (bubbles_left_ > 0) {
            const uint64_t n = std::min<uint64_t>({slots, bubbles_left_, model_.rob_entries - rob_count_});
            if (!rob_.empty() && !rob_.back().load)
                rob_.back().count += n;
            else
                rob_.push_back(RobEntry{n, true, false});
            rob_count_ += static_cast<uint32_t>(n);
            bubbles_left_ -= n;
            slots -= static_cast<uint32_t>(n);
            continue;
        }
        if (!translated_) {
            const auto t = translate(id_, op_.line());
            translated_ = true;
            phys_line_ = t.line;
            if (t.fault) {
                ++stats_.faults;
                stall_until_ = cycle + penalty_;
                if (penalty_ > 0) {
                    ++stats_.stall_cycles;
                    return;
                }
            }
        }
        if (op_.rw == Rw::Read) {
            if (inflight_ >= model_.max_inflight_loads || !port.can_accept(Rw::Read))
                return;
            const uint64_t req = port.submit(id_, Rw::Read, phys_line_);
            rob_.push_back(RobEntry{1, false, true});
            waiting_[req] = &rob_.back();
            ++inflight_;
            ++stats_.loads;
        } else {
            if (!port.can_accept(Rw::Write))
                return;
            port.submit(id_, Rw::Write, phys_line_);
            if (!rob_.empty() && !rob_.back().load)
                rob_.back().count += 1;
            else
                rob_.push_back(RobEntry{1, true, false});
            ++stats_.stores;
        }
        ++rob_count_;
        --slots;
        have_op_ = false;
    }
}

void Core::retire(uint64_t cycle)
{
    uint64_t slots = model_.retire_width;
    while (slots > 0 && !rob_.empty() && rob_.front().done) {
        auto& head = rob_.front();
        const uint64_t n = std::min(slots, head.count);
        head.count -= n;
        slots -= n;
        rob_count_ -= static_cast<uint32_t>(n);
        if (budget_ && stats_.instructions < budget_ && stats_.instructions + n >= budget_)
            stats_.budget_cycle = cycle + 1;
        stats_.instructions += n;
        last_retire_ = cycle + 1;
        if (head.count == 0)
            rob_.pop_front();
    }
}

void Core::step(uint64_t cycle, MemoryPort& port, const Translator& translate)
{
    if (finished_)
        return;
    dispatch(cycle, port, translate);
    stats_.max_rob = std::max(stats_.max_rob, rob_count_);
    retire(cycle);
    if (!reached_budget())
        stats_.cycles = cycle + 1;
    else
        stats_.cycles = stats_.budget_cycle;
    if (trace_ended_ && !have_op_ && rob_.empty()) {
        finished_ = true;
        if (!reached_budget())
            stats_.cycles = last_retire_;
    }
}

void Core::complete(uint64_t request)
{
    auto it = waiting_.find(request);
    if (it == waiting_.end())
        return;
    it->second->done = true;
    waiting_.erase(it);
    --inflight_;
}

} // namespace cream
