// mrlsim command-line front end: sim, gen, verify and report.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mrlsim/mrlsim.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using mrlsim::detail::format_number;

namespace {

enum Exit : int { kOk = 0, kFail = 1, kInput = 2, kSolver = 3 };

struct RunConfig {
    double vdd = 1.0;
    double clock = 1e-9;
    double tstep = 1e-12;
    double tstop = 0;  // 0 = take it from the netlist or the stimulus
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "csv";
    bool json = false;
};

void add_common(CLI::App& cmd, RunConfig& cfg) {
    cmd.add_option("--vdd", cfg.vdd, "Supply voltage (V)")->envname("MRLSIM_VDD")->check(CLI::PositiveNumber);
    cmd.add_option("--clock", cfg.clock, "Clock period (s)")->envname("MRLSIM_CLOCK")->check(CLI::PositiveNumber);
    cmd.add_option("--tstep", cfg.tstep, "Time step (s)")->envname("MRLSIM_TSTEP")->check(CLI::PositiveNumber);
    cmd.add_option("--tstop", cfg.tstop, "Stop time (s)")->envname("MRLSIM_TSTOP")->check(CLI::NonNegativeNumber);
    cmd.add_option("--seed", cfg.seed, "Random seed")->envname("MRLSIM_SEED");
    cmd.add_option("--out", cfg.out, "Output directory")->envname("MRLSIM_OUT");
    cmd.add_option("--format", cfg.format, "Waveform output format")
        ->envname("MRLSIM_FORMAT")
        ->check(CLI::IsMember({"csv", "vcd", "both"}));
    cmd.add_flag("--json", cfg.json, "Machine-readable report on stdout")->envname("MRLSIM_JSON");
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
    return os;
}

mrlsim::HarnessOptions harness_options(const RunConfig& cfg) {
    mrlsim::HarnessOptions h;
    h.vdd = cfg.vdd;
    h.clock_period = cfg.clock;
    h.tstep = cfg.tstep;
    return h;
}

// ---------------------------------------------------------------------------
// sim

int cmd_sim(const std::string& input, const RunConfig& cfg) {
    mrlsim::FlatCircuit flat;
    try {
        flat = mrlsim::expand(mrlsim::parse(read_file(input)));
    } catch (const mrlsim::ParseError& e) {
        std::cerr << input << ": " << e.what() << '\n';
        return kInput;
    } catch (const mrlsim::NetlistError& e) {
        std::cerr << input << ": " << e.what() << '\n';
        return kInput;
    } catch (const std::runtime_error& e) {
        std::cerr << e.what() << '\n';
        return kInput;
    }

    const auto diags = mrlsim::validate(flat);
    for (const auto& d : diags)
        std::cerr << (d.severity == mrlsim::Severity::Error ? "error" : "warning") << " [" << d.code << "] " << d.message << '\n';
    if (mrlsim::has_errors(diags)) return kInput;

    mrlsim::SimOptions opt = flat.tran ? mrlsim::SimOptions::from(*flat.tran) : mrlsim::SimOptions{};
    if (!flat.tran || cfg.tstep != RunConfig{}.tstep) opt.tstep = cfg.tstep;
    if (cfg.tstop > 0) opt.tstop = cfg.tstop;
    if (!opt.valid()) {
        std::cerr << "invalid analysis: tstep " << format_number(opt.tstep) << ", tstop " << format_number(opt.tstop) << '\n';
        return kInput;
    }

    mrlsim::Waveform w;
    try {
        w = mrlsim::run_transient(flat, opt);
    } catch (const mrlsim::SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kSolver;
    }
    for (const auto& m : w.warnings) std::cerr << "warning: " << m << '\n';

    const fs::path dir = cfg.out.empty() ? fs::path(".") : fs::path(cfg.out);
    const std::string stem = fs::path(input).stem().string();
    std::vector<std::string> written;
    if (cfg.format == "csv" || cfg.format == "both") {
        const auto p = dir / (stem + ".csv");
        auto os = open_out(p);
        mrlsim::write_csv(os, w);
        written.push_back(p.string());
    }
    if (cfg.format == "vcd" || cfg.format == "both") {
        std::vector<std::string> nets(w.nets.begin() + 1, w.nets.end());
        const auto p = dir / (stem + ".vcd");
        auto os = open_out(p);
        mrlsim::write_vcd(os, mrlsim::digitize(w, nets, cfg.vdd));
        written.push_back(p.string());
    }

    if (cfg.json) {
        json j;
        j["samples"] = w.size();
        j["tstop"] = w.time.back();
        json finals = json::object();
        for (std::size_t n = 1; n < w.nets.size(); ++n) finals[w.nets[n]] = w.voltages[n].back();
        j["final_voltages"] = finals;
        j["warnings"] = w.warnings;
        j["files"] = written;
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << "samples: " << w.size() << ", t = " << format_number(w.time.back()) << " s\n";
        for (std::size_t n = 1; n < w.nets.size(); ++n)
            std::cout << "  v(" << w.nets[n] << ") = " << format_number(w.voltages[n].back()) << '\n';
        for (const auto& f : written) std::cout << "wrote " << f << '\n';
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// gen

int cmd_gen(const std::string& block, const RunConfig& cfg) {
    mrlsim::Block b;
    try {
        b = mrlsim::build_block(block);
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << '\n';
        return kInput;
    }
    const std::string text = mrlsim::serialize(b.netlist);
    const auto& c = b.census;
    std::ostringstream line;
    line << "memristors: " << c.memristors << ", transistors: " << c.transistors << ", inverter_cells: " << c.inverter_cells;

    if (!cfg.out.empty()) {
        const auto p = fs::path(cfg.out) / (block + ".cir");
        auto os = open_out(p);
        os << text;
    }
    if (cfg.json) {
        json j;
        j["block"] = block;
        j["subckt"] = b.subckt;
        j["ports"] = b.ports;
        j["census"] = {{"memristors", c.memristors}, {"transistors", c.transistors}, {"inverter_cells", c.inverter_cells}};
        j["netlist"] = text;
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << text << line.str() << '\n';
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// verify

json report_json(const mrlsim::EquivalenceReport& r) {
    json j;
    j["block"] = r.block;
    j["mode"] = std::string(mrlsim::mode_name(r.mode));
    j["pass"] = r.pass;
    j["vectors"] = r.vectors;
    j["runs"] = r.runs;
    j["vdd_v"] = r.vdd;
    j["clock_s"] = r.clock_period;
    j["samples_compared"] = r.compared;
    j["seed"] = r.seed ? json(*r.seed) : json(nullptr);
    if (const auto& d = r.first_divergence) {
        j["first_divergence"] = {{"run", d->run},
                                 {"cycle", d->cycle},
                                 {"time", d->time},
                                 {"signal", d->signal},
                                 {"expected", d->expected ? "1" : "0"},
                                 {"observed", std::string(1, mrlsim::level_char(d->observed))}};
    } else {
        j["first_divergence"] = nullptr;
    }
    j["warnings"] = r.warnings;
    return j;
}

int cmd_verify(const std::string& block, bool random, const RunConfig& cfg) {
    mrlsim::VerifyOptions opt;
    opt.harness = harness_options(cfg);
    opt.seed = cfg.seed;
    mrlsim::EquivalenceReport r;
    try {
        r = mrlsim::equivalence_check(block, random ? mrlsim::VerifyMode::Random : mrlsim::VerifyMode::Exhaustive, opt);
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << '\n';
        return kInput;
    } catch (const mrlsim::SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kSolver;
    }
    if (cfg.json) std::cout << report_json(r).dump(2) << '\n';
    else mrlsim::write_report(std::cout, r);
    return r.pass ? kOk : kFail;
}

// ---------------------------------------------------------------------------
// report

struct Column {
    std::string name;
    std::size_t cells;
    std::optional<std::size_t> memristors;
    double delay_ps;
    double power_uw;
};

// Published figures for two CMOS implementations of the module and for the
// MRL implementation, used as the comparison baseline.
const std::vector<Column>& reference_columns() {
    static const std::vector<Column> cols{{"cmos_xax_a", 27, std::nullopt, 57, 49.45},
                                          {"cmos_xax_b", 27, std::nullopt, 83, 41.00},
                                          {"mrl_xax_published", 23, 62, 54, 40.32}};
    return cols;
}

struct Measured {
    double delay = 0;      // mean clk -> x_out 50 % delay (s)
    std::size_t delay_samples = 0;
    double energy = 0;     // supply energy over the run (J)
    double power = 0;      // average supply power (W)
    double window = 0;     // s
};

Measured measure_xax(const RunConfig& cfg) {
    const auto h = mrlsim::xax_harness();
    const auto runs = mrlsim::random_stimulus("xax", cfg.seed, 1, 8);
    const auto o = harness_options(cfg);
    const auto tb = mrlsim::testbench(h, runs.front(), o);
    mrlsim::SimOptions so;
    so.tstep = o.tstep;
    so.tstop = cfg.tstop > 0 ? cfg.tstop : tb.analyses.front().tstop;
    const auto w = mrlsim::run_transient(mrlsim::expand(tb), so);

    Measured m;
    const auto d = mrlsim::propagation_delay(w, "clk", "x_out", cfg.vdd);
    std::vector<double> causal;
    for (const auto& x : d)
        if (x.causal) causal.push_back(x.delay);
    m.delay_samples = causal.size();
    if (!causal.empty()) m.delay = std::accumulate(causal.begin(), causal.end(), 0.0) / static_cast<double>(causal.size());
    m.window = w.time.back() - w.time.front();
    const auto e = mrlsim::supply_energy(w, "Vvdd", {w.time.front(), w.time.back()});
    m.energy = e.energy;
    m.power = e.average_power;
    return m;
}

int cmd_report(const RunConfig& cfg, double cell_area) {
    const auto xax = mrlsim::build_xax();
    const auto area = mrlsim::area_report(xax.census, reference_columns().front().cells, cell_area);
    Measured m;
    try {
        m = measure_xax(cfg);
    } catch (const mrlsim::SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kSolver;
    }
    const char* note =
        "measured delay and power come from switch-level transistors and the behavioral memristor model; "
        "they are not comparable with foundry-model figures";

    if (cfg.json) {
        json j;
        json cols = json::array();
        for (const auto& c : reference_columns())
            cols.push_back({{"design", c.name},
                            {"cmos_cells", c.cells},
                            {"memristors", c.memristors ? json(*c.memristors) : json(nullptr)},
                            {"delay_ps", c.delay_ps},
                            {"power_uw", c.power_uw}});
        j["reference"] = cols;
        j["census"] = {{"memristors", xax.census.memristors},
                       {"transistors", xax.census.transistors},
                       {"inverter_cells", xax.census.inverter_cells}};
        j["area"] = {{"cells", area.cells},
                     {"baseline_cells", area.baseline_cells},
                     {"cell_area_um2", area.cell_area},
                     {"area_um2", area.area},
                     {"baseline_area_um2", area.baseline_area},
                     {"saving", area.saving}};
        j["measured"] = {{"delay_s", m.delay},
                         {"delay_samples", m.delay_samples},
                         {"energy_j", m.energy},
                         {"average_power_w", m.power},
                         {"window_s", m.window},
                         {"seed", cfg.seed}};
        j["conditions"] = {{"vdd_v", cfg.vdd}, {"clock_s", cfg.clock}, {"tstep_s", cfg.tstep}, {"reset_cycles", 2}, {"random_cycles", 8}};
        j["note"] = note;
        std::cout << j.dump(2) << '\n';
        return kOk;
    }

    std::ostringstream os;
    char row[128];
    std::snprintf(row, sizeof row, "%-20s %10s %11s %9s %9s\n", "design", "cmos_cells", "memristors", "delay_ps", "power_uw");
    os << row;
    for (const auto& c : reference_columns()) {
        const std::string mem = c.memristors ? std::to_string(*c.memristors) : "-";
        std::snprintf(row, sizeof row, "%-20s %10zu %11s %9.0f %9.2f\n", c.name.c_str(), c.cells, mem.c_str(), c.delay_ps,
                      c.power_uw);
        os << row;
    }
    os << "\ngenerated XAX census: memristors " << xax.census.memristors << ", transistors " << xax.census.transistors
       << ", inverter cells " << xax.census.inverter_cells << '\n';
    char pct[32];
    std::snprintf(pct, sizeof pct, "%.1f", area.saving * 100.0);
    os << "area: " << area.cells << " cells vs " << area.baseline_cells << " cells, saving " << pct << " % ("
       << format_number(area.baseline_cells - area.cells) << "/" << area.baseline_cells << ")\n";
    os << "measured (seed " << cfg.seed << "): clk->x_out delay " << format_number(m.delay * 1e12) << " ps over "
       << m.delay_samples << " edges, supply energy " << format_number(m.energy) << " J, average power "
       << format_number(m.power * 1e6) << " uW over " << format_number(m.window) << " s\n";
    os << "conditions: vdd " << format_number(cfg.vdd) << " V, clock " << format_number(cfg.clock) << " s, step "
       << format_number(cfg.tstep) << " s; stimulus: two reset cycles, then 8 random cycles\n";
    os << "* " << note << '\n';
    std::cout << os.str();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transient simulator and verification harness for memristor ratioed logic"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto* sim = app.add_subcommand("sim", "Simulate a netlist and write waveforms");
    std::string input;
    sim->add_option("netlist", input, "Netlist file")->required()->check(CLI::ExistingFile);
    add_common(*sim, cfg);

    auto* gen = app.add_subcommand("gen", "Print a generated block netlist and its device census");
    std::string gen_block;
    gen->add_option("block", gen_block, "Block name")->required()->check(CLI::IsMember(mrlsim::block_names()));
    add_common(*gen, cfg);

    auto* verify = app.add_subcommand("verify", "Check a generated block against its behavioral model");
    std::string verify_block;
    bool exhaustive = false, random = false;
    verify->add_option("block", verify_block, "Block name")->required()->check(CLI::IsMember(mrlsim::block_names()));
    auto* ex = verify->add_flag("--exhaustive", exhaustive, "All input and state combinations");
    auto* rnd = verify->add_flag("--random", random, "Seeded random sequences");
    ex->excludes(rnd);
    add_common(*verify, cfg);

    auto* report = app.add_subcommand("report", "Device count, area and measured delay/power summary");
    double cell_area = 1.0;
    report->add_option("--cell-area", cell_area, "Inverter cell area (um^2)")->check(CLI::PositiveNumber);
    add_common(*report, cfg);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) return cmd_sim(input, cfg);
        if (*gen) return cmd_gen(gen_block, cfg);
        if (*verify) return cmd_verify(verify_block, random, cfg);
        if (*report) return cmd_report(cfg, cell_area);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInput;
    }
    return kInput;
}
