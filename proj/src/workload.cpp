#include "cream/workload.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cream {

TraceParseError::TraceParseError(uint64_t line, const std::string& what)
    : std::runtime_error("trace line " + std::to_string(line) + ": " + what), line_(line)
{
}

std::optional<TraceEntry> parse_trace_line(const std::string& text, uint64_t line_number)
{
    std::istringstream is(text);
    std::string bubbles, rw, addr, extra;
    if (!(is >> bubbles) || bubbles[0] == '#')
        return std::nullopt;
    if (!(is >> rw >> addr))
        throw TraceParseError(line_number, "expected '<bubbles> <R|W> <hex-vaddr>'");
    if (is >> extra && extra[0] != '#')
        throw TraceParseError(line_number, "unexpected trailing field '" + extra + "'");

    TraceEntry e;
    auto [bp, bec] = std::from_chars(bubbles.data(), bubbles.data() + bubbles.size(), e.bubbles);
    if (bec != std::errc() || bp != bubbles.data() + bubbles.size())
        throw TraceParseError(line_number, "bad bubble count '" + bubbles + "'");

    if (rw == "R" || rw == "r")
        e.rw = Rw::Read;
    else if (rw == "W" || rw == "w")
        e.rw = Rw::Write;
    else
        throw TraceParseError(line_number, "expected R or W, got '" + rw + "'");

    std::string_view hex = addr;
    if (hex.size() > 2 && hex[0] == '0' && (hex[1] == 'x' || hex[1] == 'X'))
        hex.remove_prefix(2);
    auto [ap, aec] = std::from_chars(hex.data(), hex.data() + hex.size(), e.vaddr, 16);
    if (hex.empty() || aec != std::errc() || ap != hex.data() + hex.size())
        throw TraceParseError(line_number, "bad hex address '" + addr + "'");
    e.vaddr &= ~uint64_t(63);
    return e;
}

std::optional<TraceEntry> TraceReader::next()
{
    std::string text;
    while (std::getline(in_, text)) {
        ++line_;
        if (auto e = parse_trace_line(text, line_))
            return e;
    }
    return std::nullopt;
}

std::vector<TraceEntry> parse_trace(std::istream& in)
{
    std::vector<TraceEntry> out;
    TraceReader reader(in);
    while (auto e = reader.next())
        out.push_back(*e);
    return out;
}

std::vector<TraceEntry> load_trace(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open trace '" + path + "'");
    return parse_trace(in);
}

void write_trace(std::ostream& out, const std::vector<TraceEntry>& trace)
{
    char buf[64];
    for (const auto& e : trace) {
        const int n = std::snprintf(buf, sizeof buf, "%llu %c 0x%llx\n", static_cast<unsigned long long>(e.bubbles),
                                    e.rw == Rw::Read ? 'R' : 'W', static_cast<unsigned long long>(e.vaddr));
        out.write(buf, n);
    }
}

////////////////////////////////////////////////////////////////

std::string_view to_string(GenKind kind)
{
    switch (kind) {
    case GenKind::Uniform: return "uniform";
    case GenKind::Zipf: return "zipf";
    case GenKind::Kv: return "kv";
    }
    return "?";
}

namespace {

uint64_t to_u64(const std::string& key, const std::string& v)
{
    uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("generator key '" + key + "' needs a non-negative integer, got '" + v + "'");
    return out;
}

double to_double(const std::string& key, const std::string& v)
{
    try {
        size_t used = 0;
        double d = std::stod(v, &used);
        if (used == v.size())
            return d;
    } catch (const std::exception&) {
    }
    throw ConfigError("generator key '" + key + "' needs a number, got '" + v + "'");
}

std::string fmt_double(double d)
{
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, d);
    return std::string(buf, ec == std::errc() ? end : buf);
}

} // namespace

GenSpec parse_gen_spec(const std::string& text)
{
    GenSpec spec;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (item.empty())
            continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw ConfigError("generator item '" + item + "' is not key=value");
        const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
        if (key == "kind") {
            if (value == "uniform")
                spec.kind = GenKind::Uniform;
            else if (value == "zipf")
                spec.kind = GenKind::Zipf;
            else if (value == "kv")
                spec.kind = GenKind::Kv;
            else
                throw ConfigError("unknown generator kind '" + value + "'");
        } else if (key == "pages") {
            spec.pages = to_u64(key, value);
        } else if (key == "ops") {
            spec.ops = to_u64(key, value);
        } else if (key == "exponent") {
            spec.exponent = to_double(key, value);
        } else if (key == "mpki") {
            spec.mpki = to_double(key, value);
        } else if (key == "read") {
            spec.read_fraction = to_double(key, value);
        } else if (key == "value_lines") {
            spec.value_lines = static_cast<uint32_t>(to_u64(key, value));
        } else if (key == "seed") {
            spec.seed = to_u64(key, value);
        } else if (key == "page_base") {
            spec.page_base = to_u64(key, value);
        } else {
            throw ConfigError("unknown generator key '" + key + "'");
        }
    }
    require_valid(spec);
    return spec;
}

std::string to_string(const GenSpec& s)
{
    std::ostringstream os;
    os << "kind=" << to_string(s.kind) << ",pages=" << s.pages << ",ops=" << s.ops;
    if (s.kind != GenKind::Uniform)
        os << ",exponent=" << fmt_double(s.exponent);
    os << ",mpki=" << fmt_double(s.mpki) << ",read=" << fmt_double(s.reads());
    if (s.kind == GenKind::Kv)
        os << ",value_lines=" << s.value_lines;
    os << ",seed=" << s.seed;
    if (s.page_base)
        os << ",page_base=" << s.page_base;
    return os.str();
}

void require_valid(const GenSpec& s)
{
    if (s.pages < 1)
        throw ConfigError("pages must be >= 1");
    if (s.kind != GenKind::Uniform && !(s.exponent > 0.0))
        throw ConfigError("zipf exponent must be > 0");
    if (!(s.mpki > 0.0 && s.mpki <= 1000.0))
        throw ConfigError("mpki must be in (0, 1000]");
    const double r = s.reads();
    if (!(r >= 0.0 && r <= 1.0))
        throw ConfigError("read fraction must be in [0, 1]");
    if (s.kind == GenKind::Kv && (s.value_lines < 1 || s.value_lines > 64))
        throw ConfigError("value_lines must be in [1, 64]");
}

uint64_t uniform_below(std::mt19937_64& rng, uint64_t n)
{
    const uint64_t threshold = (0 - n) % n;
    for (;;) {
        const uint64_t r = rng();
        if (r >= threshold)
            return r % n;
    }
}

ZipfSampler::ZipfSampler(uint64_t n, double s)
{
    if (n == 0 || !(s > 0.0))
        throw ConfigError("zipf needs n >= 1 and exponent > 0");
    std::vector<double> w(n);
    double total = 0.0;
    for (uint64_t k = 0; k < n; ++k) {
        w[k] = 1.0 / std::pow(double(k + 1), s);
        total += w[k];
    }
    const double scale = 9223372036854775808.0; // 2^63
    cdf_.resize(n);
    double run = 0.0;
    for (uint64_t k = 0; k < n; ++k) {
        run += w[k];
        cdf_[k] = static_cast<uint64_t>(std::min(run / total, 1.0) * scale);
    }
    cdf_.back() = uint64_t(1) << 63;
}

uint64_t ZipfSampler::operator()(std::mt19937_64& rng) const
{
    const uint64_t u = rng() >> 1;
    return static_cast<uint64_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
}

std::vector<TraceEntry> gen_trace(const GenSpec& spec)
{
    require_valid(spec);
    std::mt19937_64 rng(spec.seed);
    constexpr uint64_t kLinesPerPage = 64;

    // Hot ranks are scattered over the page span so they do not all share a bank.
    std::vector<uint64_t> page_of_rank(spec.pages);
    for (uint64_t i = 0; i < spec.pages; ++i)
        page_of_rank[i] = i;
    std::optional<ZipfSampler> zipf;
    if (spec.kind != GenKind::Uniform) {
        for (uint64_t i = spec.pages - 1; i > 0; --i)
            std::swap(page_of_rank[i], page_of_rank[uniform_below(rng, i + 1)]);
        zipf.emplace(spec.pages, spec.exponent);
    }

    const auto mpki_milli = static_cast<uint64_t>(std::llround(spec.mpki * 1000.0));
    const auto read_ppm = static_cast<uint64_t>(std::llround(spec.reads() * 1e6));
    uint64_t acc = 0;
    auto next_bubbles = [&] {
        acc += 1000000;
        const uint64_t instructions = acc / mpki_milli;
        acc %= mpki_milli;
        return instructions == 0 ? 0 : instructions - 1;
    };

    std::vector<TraceEntry> out;
    out.reserve(spec.ops);
    auto emit = [&](Rw rw, uint64_t page, uint64_t line) {
        out.push_back(TraceEntry{next_bubbles(), rw, ((spec.page_base + page) * kLinesPerPage + line) * 64});
    };

    while (out.size() < spec.ops) {
        const Rw rw = uniform_below(rng, 1000000) < read_ppm ? Rw::Read : Rw::Write;
        const uint64_t page = zipf ? page_of_rank[(*zipf)(rng)] : uniform_below(rng, spec.pages);
        if (spec.kind == GenKind::Kv) {
            const uint64_t slots = kLinesPerPage / spec.value_lines;
            const uint64_t first = uniform_below(rng, slots) * spec.value_lines;
            for (uint32_t i = 0; i < spec.value_lines && out.size() < spec.ops; ++i)
                emit(rw, page, first + i);
        } else {
            emit(rw, page, uniform_below(rng, kLinesPerPage));
        }
    }
    return out;
}

////////////////////////////////////////////////////////////////

MpkiClass classify_mpki(const std::vector<TraceEntry>& trace, uint64_t window)
{
    const uint64_t n = window == 0 ? trace.size() : std::min<uint64_t>(window, trace.size());
    uint64_t bubbles = 0;
    for (uint64_t i = 0; i < n; ++i)
        bubbles += trace[i].bubbles;
    return classify_counts(n, bubbles);
}

MpkiClass classify_counts(uint64_t mem_ops, uint64_t bubbles)
{
    MpkiClass c;
    if (mem_ops == 0)
        return c;
    c.mpki = 1000.0 * double(mem_ops) / double(mem_ops + bubbles);
    // Integer form of mpki > 10 avoids rounding at the threshold.
    c.intensive = 1000 * mem_ops > 10 * (mem_ops + bubbles);
    return c;
}

MixSpec build_mix(const std::vector<size_t>& intensive, const std::vector<size_t>& light, uint32_t cores,
                  double intensive_fraction, uint64_t seed)
{
    if (cores == 0)
        throw ConfigError("a mix needs at least one core");
    if (!(intensive_fraction >= 0.0 && intensive_fraction <= 1.0))
        throw ConfigError("intensive fraction must be in [0, 1]");
    MixSpec mix{cores, intensive_fraction, seed, {}};
    const auto n_int = static_cast<uint32_t>(std::llround(intensive_fraction * cores));
    if (n_int > 0 && intensive.empty())
        throw ConfigError("mix needs intensive workloads but none are available");
    if (n_int < cores && light.empty())
        throw ConfigError("mix needs non-intensive workloads but none are available");
    std::mt19937_64 rng(seed);
    for (uint32_t i = 0; i < cores; ++i) {
        const auto& pool = i < n_int ? intensive : light;
        mix.slots.push_back(pool[uniform_below(rng, pool.size())]);
    }
    return mix;
}

double weighted_speedup(const std::vector<double>& shared, const std::vector<double>& alone)
{
    if (shared.size() != alone.size())
        throw std::invalid_argument("weighted speedup needs one alone IPC per core");
    double ws = 0.0;
    for (size_t i = 0; i < shared.size(); ++i) {
        if (!(alone[i] > 0.0))
            throw std::invalid_argument("alone IPC must be positive");
        ws += shared[i] / alone[i];
    }
    return ws;
}

} // namespace cream
