#include "cream/paging.hpp"

namespace cream {

FrameTable::FrameTable(uint64_t frames, PagingOptions options)
    : frames_(frames), options_(options), used_(frames, false)
{
    if (frames_ == 0)
        throw ConfigError("frame table needs at least one frame");
    if (options_.active_ratio == 0)
        throw ConfigError("active_ratio must be positive");
}

std::optional<uint64_t> FrameTable::frame_of(VPage page) const
{
    auto it = map_.find(page);
    if (it == map_.end())
        return std::nullopt;
    return it->second.frame;
}

bool FrameTable::on_active(VPage page) const
{
    auto it = map_.find(page);
    return it != map_.end() && it->second.active;
}

uint64_t FrameTable::take_free_frame()
{
    while (lowest_free_ < frames_ && used_[lowest_free_])
        ++lowest_free_;
    const uint64_t f = lowest_free_;
    used_[f] = true;
    return f;
}

void FrameTable::balance()
{
    while (active_.size() > uint64_t(options_.active_ratio) * inactive_.size()) {
        VPage demoted = active_.back();
        active_.pop_back();
        inactive_.push_front(demoted);
        auto& e = map_[demoted];
        e.active = false;
        e.pos = inactive_.begin();
    }
}

PageAccess FrameTable::access(VPage page, Rw)
{
    PageAccess out;
    if (auto it = map_.find(page); it != map_.end()) {
        ++hits_;
        auto& e = it->second;
        if (e.active)
            active_.erase(e.pos);
        else
            inactive_.erase(e.pos);
        active_.push_front(page);
        e.active = true;
        e.pos = active_.begin();
        out.frame = e.frame;
        balance();
        return out;
    }

    ++faults_;
    out.fault = true;
    if (map_.size() == frames_) {
        auto& from = inactive_.empty() ? active_ : inactive_;
        VPage victim = from.back();
        from.pop_back();
        const uint64_t freed = map_[victim].frame;
        map_.erase(victim);
        used_[freed] = false;
        if (freed < lowest_free_)
            lowest_free_ = freed;
        out.victim = victim;
    }
    out.frame = take_free_frame();
    inactive_.push_front(page);
    map_[page] = Entry{out.frame, false, inactive_.begin()};
    balance();
    return out;
}

void require_valid(const FaultModel& m)
{
    if (m.penalty_ns != m.ssd_ns + m.software_ns)
        throw ConfigError("fault penalty must equal ssd + software latency");
}

uint64_t frames_for(const RegionConfig& config) { return capacity_pages(config); }

} // namespace cream
