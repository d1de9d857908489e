#include "timing_checker.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace cream::test {

LoggedCommand parse_logged(const std::string& line)
{
    LoggedCommand c;
    std::istringstream is(line);
    std::string tok;
    is >> c.cycle >> c.kind;
    if (!is)
        throw std::runtime_error("bad log line: " + line);
    while (is >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("bad log field: " + tok);
        const std::string key = tok.substr(0, eq), v = tok.substr(eq + 1);
        if (key == "row")
            c.row = std::stoul(v);
        else if (key == "col")
            c.col = std::stoul(v);
        else if (key == "req")
            c.req = std::stoll(v);
        else if (key == "op")
            c.op = std::stoi(v);
        else if (key == "after")
            c.after = v == "-" ? -1 : std::stoi(v);
        else if (key == "slices") {
            std::istringstream ss(v);
            std::string s;
            while (std::getline(ss, s, ',')) {
                const auto dot = s.find('.');
                c.slices.emplace_back(std::stoul(s.substr(0, dot)), std::stoul(s.substr(dot + 1)));
            }
        }
    }
    return c;
}

TimingChecker::TimingChecker(const ModuleGeometry& g, const TimingParams& t)
    : g_(g), t_(t), banks_(size_t(g.total_chips()) * g.banks), chips_(g.total_chips())
{
}

void TimingChecker::fail(const LoggedCommand& c, const std::string& why)
{
    std::ostringstream os;
    os << "cycle " << c.cycle << ' ' << c.kind << " req " << c.req << ": " << why;
    violations_.push_back(os.str());
}

void TimingChecker::feed(const std::string& line) { feed(parse_logged(line)); }

void TimingChecker::feed(const LoggedCommand& c)
{
    ++commands_;
    const int64_t now = static_cast<int64_t>(c.cycle);
    if (now <= last_cycle_)
        fail(c, "more than one command in a cycle or time went backwards");
    last_cycle_ = now;

    auto bank = [&](std::pair<uint32_t, uint32_t> s) -> Bank& { return banks_[s.second * g_.total_chips() + s.first]; };
    auto need = [&](bool ok, const std::string& what) {
        if (!ok)
            fail(c, what);
    };

    std::vector<uint32_t> chips;
    for (auto s : c.slices)
        if (std::find(chips.begin(), chips.end(), s.first) == chips.end())
            chips.push_back(s.first);

    if (c.kind == "ACT") {
        for (auto s : c.slices) {
            Bank& b = bank(s);
            need(!b.open, "ACT to an open bank");
            need(now - b.pre >= t_.tRP, "tRP");
            need(now - b.act >= t_.tRC, "tRC");
            need(now - last_ref_ >= t_.tRFC, "tRFC");
        }
        if (!acts_.empty())
            need(now - acts_.back() >= t_.tRRD, "tRRD");
        if (acts_.size() >= 4)
            need(now - acts_[acts_.size() - 4] >= t_.tFAW, "tFAW");
        acts_.push_back(now);
        for (auto s : c.slices) {
            Bank& b = bank(s);
            b.open = true;
            b.row = c.row;
            b.act = now;
        }
    } else if (c.kind == "PRE") {
        for (auto s : c.slices) {
            Bank& b = bank(s);
            need(b.open, "PRE to a closed bank");
            need(now - b.act >= t_.tRAS, "tRAS");
            need(now - b.rd >= t_.tRTP, "tRTP");
            need(now - b.wr >= int64_t(t_.tCWL + t_.tBURST + t_.tWR), "tWR");
            b.open = false;
            b.pre = now;
        }
    } else if (c.kind == "RD" || c.kind == "WR") {
        const bool rd = c.kind == "RD";
        for (auto s : c.slices) {
            Bank& b = bank(s);
            need(b.open && b.row == c.row, "column command to a bank not open at its row");
            need(now - b.act >= t_.tRCD, "tRCD");
        }
        const int64_t start = now + (rd ? t_.tCL : t_.tCWL);
        for (uint32_t chip : chips) {
            Chip& ch = chips_[chip];
            need(now - ch.col >= t_.tCCD, "tCCD");
            if (rd)
                need(now - ch.wr >= int64_t(t_.tCWL + t_.tBURST + t_.tWTR), "tWTR");
            need(start >= ch.bus_end, "data burst overlaps on chip " + std::to_string(chip));
        }
        for (uint32_t chip : chips) {
            Chip& ch = chips_[chip];
            ch.col = now;
            if (!rd)
                ch.wr = now;
            ch.bus_end = start + t_.tBURST;
        }
        for (auto s : c.slices)
            (rd ? bank(s).rd : bank(s).wr) = now;
        if (rd)
            reads_[{c.req, c.op}] = now;
        if (!rd && c.after >= 0) {
            ++rmw_writes_;
            auto it = reads_.find({c.req, c.after});
            if (it == reads_.end())
                fail(c, "RMW write leg before its read leg");
            else
                need(now >= it->second + t_.tCL + t_.tBURST + t_.bridge_delay,
                     "RMW write leg before read data returned and staged");
        }
    } else if (c.kind == "REF") {
        for (const auto& b : banks_) {
            need(!b.open, "REF with an open bank");
            need(now - b.pre >= t_.tRP, "tRP before REF");
        }
        last_ref_ = now;
    } else {
        fail(c, "unknown command kind");
    }
}

} // namespace cream::test
