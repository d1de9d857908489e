// Command-line front end: simulate, sweep, translate, capacity, gen-trace.

#include "cream/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace cream;

namespace {

int fail(const std::string& kind, const std::string& message)
{
    Json err = {{"error", kind}, {"message", message}};
    std::cerr << err.dump() << "\n";
    return 1;
}

uint64_t parse_addr(const std::string& text)
{
    size_t used = 0;
    const bool hex = text.rfind("0x", 0) == 0 || text.rfind("0X", 0) == 0;
    const uint64_t v = std::stoull(hex ? text.substr(2) : text, &used, hex ? 16 : 10);
    if (used != text.size() - (hex ? 2 : 0))
        throw ConfigError("bad address '" + text + "'");
    return v;
}

std::vector<std::string> split_values(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ','))
        if (!item.empty())
            out.push_back(item);
    return out;
}

void write_out(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ECC DIMM layout and timing simulator"};
    app.require_subcommand(1);

    std::string config_path, out_path, interval_path, command_log;
    auto* sim = app.add_subcommand("simulate", "run one configuration and print a JSON report");
    sim->add_option("config", config_path, "INI config file")->required();
    sim->add_option("-o,--output", out_path, "report file (default stdout)");
    sim->add_option("--interval-csv", interval_path, "per-interval statistics CSV");
    sim->add_option("--command-log", command_log, "write every DRAM command to this file");

    std::string axis, values, format = "json";
    unsigned threads = 0;
    auto* sw = app.add_subcommand("sweep", "run one configuration per axis value");
    sw->add_option("config", config_path, "INI config file")->required();
    sw->add_option("--axis", axis, "mode | secdedFraction | intensiveFraction | framesHeadroom")->required();
    sw->add_option("--values", values, "comma-separated axis values")->required();
    sw->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sw->add_option("--threads", threads, "worker threads (0: one per CPU)");
    sw->add_option("-o,--output", out_path, "output file (default stdout)");

    std::string mode = "BaselineSecded", boundary = "full", addr;
    uint32_t rows = 16;
    bool as_json = false;
    auto* tr = app.add_subcommand("translate", "show a cache line's footprint and access plans");
    tr->add_option("--mode", mode, "layout mode");
    tr->add_option("--boundary", boundary, "full | half | none | page count");
    tr->add_option("--addr", addr, "cache-line index (hex with 0x)")->required();
    tr->add_option("--rows", rows, "rows per bank");
    tr->add_flag("--json", as_json, "JSON output");

    auto* cap = app.add_subcommand("capacity", "report pages gained by a layout");
    cap->add_option("--mode", mode, "layout mode");
    cap->add_option("--boundary", boundary, "full | half | none | page count");
    cap->add_option("--rows", rows, "rows per bank");

    std::string spec;
    auto* gen = app.add_subcommand("gen-trace", "emit a synthetic trace");
    gen->add_option("spec", spec, "kind=uniform|zipf|kv,pages=N,ops=N,exponent=S,mpki=M,read=F,seed=N")->required();
    gen->add_option("-o,--output", out_path, "trace file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what());
    }

    try {
        if (*sim) {
            const RunConfig cfg = load_config(config_path);
            RunHooks hooks;
            std::ofstream interval, log;
            if (!interval_path.empty()) {
                interval.open(interval_path);
                if (!interval)
                    throw std::runtime_error("cannot write '" + interval_path + "'");
                hooks.interval_csv = &interval;
            }
            if (!command_log.empty()) {
                log.open(command_log);
                if (!log)
                    throw std::runtime_error("cannot write '" + command_log + "'");
                hooks.command_sink = [&log](const CommandEvent& c) { log << format_command(c) << '\n'; };
            }
            write_out(out_path, report_text(run(cfg, hooks)));
        } else if (*sw) {
            const RunConfig cfg = load_config(config_path);
            const SweepAxis a = parse_sweep_axis(axis);
            const auto rows_out = sweep(cfg, a, split_values(values), threads);
            write_out(out_path, format == "csv" ? sweep_csv(a, rows_out) : to_json(a, rows_out).dump(2) + "\n");
            for (const auto& r : rows_out)
                if (!r.error.empty())
                    std::cerr << Json{{"error", "row"}, {"value", r.value}, {"message", r.error}}.dump() << "\n";
        } else if (*tr || *cap) {
            ModuleGeometry g;
            g.rows_per_bank = rows;
            require_valid(g);
            const RegionConfig region{parse_layout_mode(mode), parse_boundary(boundary, g), g};
            if (*cap) {
                std::cout << to_json(capacity_report(region)).dump(2) << "\n";
            } else {
                const uint64_t line = parse_addr(addr);
                if (as_json)
                    std::cout << translate_json(region, line).dump(2) << "\n";
                else
                    std::cout << translate_text(region, line);
            }
        } else if (*gen) {
            std::ostringstream os;
            const GenSpec gs = parse_gen_spec(spec);
            os << "# " << to_string(gs) << "\n";
            write_trace(os, gen_trace(gs));
            write_out(out_path, os.str());
        }
    } catch (const ConfigError& e) {
        return fail("config", e.what());
    } catch (const AddressError& e) {
        return fail("address", e.what());
    } catch (const TraceParseError& e) {
        return fail("trace", e.what());
    } catch (const std::exception& e) {
        return fail("runtime", e.what());
    }
    return 0;
}
