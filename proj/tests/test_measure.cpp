#include <gtest/gtest.h>

#include <sstream>

#include "mrlsim/measure.hpp"

using namespace mrlsim;

namespace {

/// Samples every 1 ps of piecewise-linear signals given as PWL points.
Waveform synthetic(const std::vector<std::pair<std::string, std::vector<PwlPoint>>>& sigs, double tstop) {
    Waveform w;
    w.nets.push_back("0");
    w.voltages.emplace_back();
    for (const auto& [name, _] : sigs) {
        w.nets.push_back(name);
        w.voltages.emplace_back();
    }
    const auto n = static_cast<std::size_t>(std::llround(tstop / 1e-12));
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) * 1e-12;
        w.time.push_back(t);
        w.voltages[0].push_back(0);
        for (std::size_t i = 0; i < sigs.size(); ++i) w.voltages[i + 1].push_back(SourceWave::pwl(sigs[i].second).at(t));
    }
    return w;
}

}  // namespace

TEST(Thresholds, ClassifyBands) {
    LogicThresholds th{1.0};
    EXPECT_EQ(th.classify(0.3), Level::Low);
    EXPECT_EQ(th.classify(0.5), Level::X);
    EXPECT_EQ(th.classify(0.7), Level::High);
}

TEST(Digitize, RampProducesTimedEvents) {
    auto w = synthetic({{"a", {{0, 0}, {100e-12, 0}, {200e-12, 1}}}}, 300e-12);
    auto tr = digitize(w, {"a"}, 1.0);
    const auto& ev = tr.of("a");
    ASSERT_EQ(ev.size(), 3u);
    EXPECT_EQ(ev[0].level, Level::Low);
    EXPECT_NEAR(ev[1].time, 130e-12, 1e-15);
    EXPECT_EQ(ev[1].level, Level::X);
    EXPECT_NEAR(ev[2].time, 170e-12, 1e-15);
    EXPECT_EQ(tr.level_at("a", 150e-12), Level::X);
    EXPECT_EQ(tr.level_at("a", 250e-12), Level::High);
}

TEST(Digitize, JumpAcrossBothThresholdsInOneSample) {
    auto w = synthetic({{"a", {{0, 1}, {10e-12, 1}, {11e-12, 0}}}}, 20e-12);
    const auto tr = digitize(w, {"a"}, 1.0);
    const auto& ev = tr.of("a");
    ASSERT_EQ(ev.size(), 3u);
    EXPECT_NEAR(ev[1].time, 10.3e-12, 1e-16);
    EXPECT_NEAR(ev[2].time, 10.7e-12, 1e-16);
}

TEST(Digitize, UnknownSignal) {
    auto w = synthetic({{"a", {{0, 0}}}}, 2e-12);
    EXPECT_THROW((void)digitize(w, {"b"}, 1.0), MeasurementError);
    EXPECT_THROW((void)digitize(w, {"a"}, 0.0), std::invalid_argument);
}

TEST(Slew, RiseAndFall) {
    auto w = synthetic({{"a", {{0, 0}, {100e-12, 0}, {200e-12, 1}, {400e-12, 1}, {450e-12, 0}}}}, 500e-12);
    EXPECT_NEAR(slew_time(w, "a", 0, 1.0), 40e-12, 1e-15);
    EXPECT_NEAR(slew_time(w, "a", 1, 1.0), 20e-12, 1e-15);
    EXPECT_THROW((void)slew_time(w, "a", 2, 1.0), MeasurementError);
}

TEST(Slew, PartialExcursionIsNotAnEdge) {
    auto w = synthetic({{"a", {{0, 0}, {100e-12, 0.6}, {200e-12, 0}}}}, 300e-12);
    EXPECT_TRUE(edges(w, "a", 1.0).empty());
}

TEST(Delay, PairsWithLatestInputCrossing) {
    auto w = synthetic({{"in", {{0, 0}, {100e-12, 0}, {110e-12, 1}, {300e-12, 1}, {310e-12, 0}}},
                        {"out", {{0, 1}, {140e-12, 1}, {150e-12, 0}, {350e-12, 0}, {360e-12, 1}}}},
                       500e-12);
    auto d = propagation_delay(w, "in", "out", 1.0);
    ASSERT_EQ(d.size(), 2u);
    EXPECT_NEAR(d[0].delay, 40e-12, 1e-15);
    EXPECT_NEAR(d[1].delay, 50e-12, 1e-15);
    EXPECT_TRUE(d[0].causal);
}

TEST(Delay, NonCausalFlagged) {
    auto w = synthetic({{"in", {{0, 0}, {200e-12, 0}, {210e-12, 1}}}, {"out", {{0, 0}, {50e-12, 0}, {60e-12, 1}}}},
                       300e-12);
    auto d = propagation_delay(w, "in", "out", 1.0);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_FALSE(d[0].causal);
}

TEST(Delay, NoInputTransition) {
    auto w = synthetic({{"in", {{0, 0}}}, {"out", {{0, 0}, {50e-12, 0}, {60e-12, 1}}}}, 100e-12);
    EXPECT_THROW((void)propagation_delay(w, "in", "out", 1.0), MeasurementError);
}

TEST(Energy, ConstantPowerIntegratesExactly) {
    Waveform w = synthetic({}, 10e-12);
    w.sources = {"V1"};
    w.source_voltages = {std::vector<double>(w.size(), 2.0)};
    w.source_currents = {std::vector<double>(w.size(), 1e-3)};
    auto e = supply_energy(w, "V1", {2.5e-12, 7.5e-12});
    EXPECT_NEAR(e.energy, 2e-3 * 5e-12, 1e-27);
    EXPECT_NEAR(e.average_power, 2e-3, 1e-15);
    EXPECT_THROW((void)supply_energy(w, "V1", {0, 20e-12}), MeasurementError);
    EXPECT_THROW((void)supply_energy(w, "V2", {0, 5e-12}), MeasurementError);
}

TEST(Energy, LinearPowerUsesTrapezoid) {
    Waveform w = synthetic({}, 10e-12);
    w.sources = {"V1"};
    w.source_voltages = {std::vector<double>(w.size(), 1.0)};
    w.source_currents.emplace_back();
    for (double t : w.time) w.source_currents[0].push_back(t * 1e9);  // ramps to 1e-2 A
    auto e = supply_energy(w, "V1", {0, 10e-12});
    EXPECT_NEAR(e.energy, 0.5 * 1e-2 * 10e-12, 1e-28);
}

TEST(Power, DynamicEstimate) {
    const auto p = dynamic_power(0.1, 1e-11, 1e9, 1.0);
    EXPECT_EQ(p.p_dyn, 0.001);
    EXPECT_THROW((void)dynamic_power(-1, 1, 1, 1), std::invalid_argument);
}

TEST(Export, CsvHasHeaderAndRows) {
    auto w = synthetic({{"a", {{0, 0}, {2e-12, 1}}}}, 2e-12);
    std::ostringstream os;
    write_csv(os, w);
    EXPECT_EQ(os.str(), "time,a\n0,0\n1e-12,0.5\n2e-12,1\n");
}

TEST(Export, DigitalCsv) {
    auto w = synthetic({{"a", {{0, 0}, {10e-12, 0}, {11e-12, 1}}}}, 20e-12);
    std::ostringstream os;
    write_csv(os, digitize(w, {"a"}, 1.0));
    const auto s = os.str();
    EXPECT_EQ(s.substr(0, 9), "time,a\n0,");
    EXPECT_NE(s.find(",x\n"), std::string::npos);
    EXPECT_EQ(s.substr(s.size() - 2), "1\n");
}

TEST(Export, VcdStructure) {
    auto w = synthetic({{"a", {{0, 0}, {10e-12, 0}, {11e-12, 1}}}, {"b", {{0, 1}}}}, 20e-12);
    std::ostringstream os;
    write_vcd(os, digitize(w, {"a", "b"}, 1.0), "dut");
    const auto s = os.str();
    EXPECT_NE(s.find("$timescale 1ps $end"), std::string::npos);
    EXPECT_NE(s.find("$scope module dut $end"), std::string::npos);
    EXPECT_NE(s.find("$var wire 1 ! a $end"), std::string::npos);
    EXPECT_NE(s.find("$var wire 1 \" b $end"), std::string::npos);
    EXPECT_NE(s.find("$dumpvars\n0!\n1\"\n$end\n"), std::string::npos);
    EXPECT_NE(s.find("#10\nx!\n#11\n1!\n"), std::string::npos);
}
