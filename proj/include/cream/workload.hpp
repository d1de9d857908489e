#pragma once

#include "cream/layout.hpp"

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace cream {

/// One memory request of a post-cache trace, preceded by `bubbles`
/// non-memory instructions.
struct TraceEntry {
    uint64_t bubbles = 0;
    Rw rw = Rw::Read;
    uint64_t vaddr = 0;

    uint64_t line() const { return vaddr / 64; }
    bool operator==(const TraceEntry&) const = default;
};

class TraceParseError : public std::runtime_error {
  public:
    TraceParseError(uint64_t line, const std::string& what);
    uint64_t line() const { return line_; }

  private:
    uint64_t line_;
};

/// Text trace format, one request per line:
///   <bubbles> <R|W> <hex-vaddr>
/// Blank lines and lines starting with '#' are skipped.
std::optional<TraceEntry> parse_trace_line(const std::string& text, uint64_t line_number);

/// Pulls entries from a stream one at a time.
class TraceReader {
  public:
    explicit TraceReader(std::istream& in) : in_(in) {}
    std::optional<TraceEntry> next();
    uint64_t line_number() const { return line_; }

  private:
    std::istream& in_;
    uint64_t line_ = 0;
};

std::vector<TraceEntry> parse_trace(std::istream& in);
std::vector<TraceEntry> load_trace(const std::string& path);
void write_trace(std::ostream& out, const std::vector<TraceEntry>& trace);

enum class GenKind { Uniform, Zipf, Kv };

/// Synthetic trace parameters. String form (gen-trace and config):
///   kind=zipf,pages=144,ops=100000,exponent=0.99,mpki=40,read=0.95,value_lines=4,seed=1
struct GenSpec {
    GenKind kind = GenKind::Uniform;
    uint64_t pages = 128;
    uint64_t ops = 100000;
    double exponent = 0.99;
    double mpki = 40.0;
    /// Default 1.0 for uniform/zipf and 0.95 for kv when not given.
    std::optional<double> read_fraction;
    uint32_t value_lines = 4;
    uint64_t seed = 1;
    /// First virtual page the trace touches.
    uint64_t page_base = 0;

    double reads() const { return read_fraction.value_or(kind == GenKind::Kv ? 0.95 : 1.0); }
};

GenSpec parse_gen_spec(const std::string& text);
std::string to_string(const GenSpec& spec);
std::string_view to_string(GenKind kind);
void require_valid(const GenSpec& spec);

std::vector<TraceEntry> gen_trace(const GenSpec& spec);

/// Uniform integer in [0, n) from raw 64-bit draws; identical on every platform.
uint64_t uniform_below(std::mt19937_64& rng, uint64_t n);

/// Rank sampler for P(k) proportional to 1/(k+1)^s, k in [0, n).
class ZipfSampler {
  public:
    ZipfSampler(uint64_t n, double exponent);
    uint64_t operator()(std::mt19937_64& rng) const;
    uint64_t size() const { return cdf_.size(); }

  private:
    std::vector<uint64_t> cdf_; ///< cumulative weights scaled to 2^63
};

struct MpkiClass {
    double mpki = 0.0;
    bool intensive = false;
};

inline constexpr double kIntensiveMpki = 10.0;

/// MPKI over the first `window` entries (0: the whole trace). Intensive iff MPKI > 10.
MpkiClass classify_mpki(const std::vector<TraceEntry>& trace, uint64_t window = 0);
MpkiClass classify_counts(uint64_t mem_ops, uint64_t bubbles);

struct MixSpec {
    uint32_t cores = 4;
    double intensive_fraction = 0.0;
    uint64_t seed = 1;
    std::vector<size_t> slots; ///< workload id per core
};

/// Picks round(fraction x cores) workloads from `intensive` and the rest from
/// `light`, drawing with replacement.
MixSpec build_mix(const std::vector<size_t>& intensive, const std::vector<size_t>& light, uint32_t cores,
                  double intensive_fraction, uint64_t seed);

double weighted_speedup(const std::vector<double>& shared_ipc, const std::vector<double>& alone_ipc);

} // namespace cream
