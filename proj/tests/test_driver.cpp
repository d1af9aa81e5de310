#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <sstream>

#include "cm0/driver.hpp"
#include "support.hpp"

using namespace cm0;

namespace {

RunRequest request(std::string_view kernel, HardwareConfig cfg = {})
{
    RunRequest r;
    r.bytes = test::kernel_bytes(kernel);
    r.image = describe_image(std::string(kernel) + ".bin", r.bytes);
    r.config = cfg;
    return r;
}

} // namespace

TEST_CASE("fnv-1a reference values")
{
    CHECK(fnv1a64({}) == 0xcbf29ce484222325ull);
    const std::uint8_t a[] = {'a'};
    CHECK(fnv1a64(a) == 0xaf63dc4c8601ec8cull);
    const std::uint8_t foobar[] = {'f', 'o', 'o', 'b', 'a', 'r'};
    CHECK(fnv1a64(foobar) == 0x85944171f73967e8ull);
}

TEST_CASE("fixed json layout")
{
    Json j;
    j["b"] = 1.5;
    j["a"] = 2;
    j["nan"] = std::numeric_limits<double>::quiet_NaN();
    j["list"] = Json::array({1.0, 0.1234567});
    j["s"] = "x";
    const auto text = dump_fixed(j);
    CHECK(text == "{\n"
                  "  \"b\": 1.500000,\n"
                  "  \"a\": 2,\n"
                  "  \"nan\": null,\n"
                  "  \"list\": [1.000000, 0.123457],\n"
                  "  \"s\": \"x\"\n"
                  "}\n");
}

TEST_CASE("run report")
{
    const auto report = simulate(request("debugout"));
    const auto j = to_json(report);
    CHECK(j["exit_reason"] == "halt");
    CHECK(j["cycles"] == 9);
    CHECK(j["output"] == "Hi");
    CHECK(j["result_r0"] == 105);
    CHECK(j["counters"]["c6"] == 1);
    CHECK(j["models"].size() == 10);
    CHECK(j["fault"].is_null());
    CHECK(report.energy_nj().value() == estimate(report.summary.counters, builtin_model(HardwareConfig{})));
    CHECK(report.wall_time_us() == doctest::Approx(9.0 / 20));
    for(const auto &m : j["models"]) {
        CHECK(m.contains("reported_mape"));
        CHECK(m.contains("reported_resd"));
        CHECK(m["provenance"] == "builtin");
    }
}

TEST_CASE("fault report")
{
    const auto j = to_json(simulate(request("wild")));
    CHECK(j["exit_reason"] == "fault");
    CHECK(j["fault"]["kind"] == "memory-fault");
}

TEST_CASE("bad images throw")
{
    auto r = request("loop");
    r.bytes.resize(4);
    CHECK_THROWS_AS(simulate(r), Error);
}

TEST_CASE("reports are byte-identical across runs")
{
    const auto a = dump_fixed(to_json(simulate(request("copy", HardwareConfig::make(48, true, 1)))));
    const auto b = dump_fixed(to_json(simulate(request("copy", HardwareConfig::make(48, true, 1)))));
    CHECK(a == b);
}

TEST_CASE("trace lines")
{
    auto r = request("call");
    std::ostringstream trace;
    r.trace = &trace;
    simulate(r);
    const auto text = trace.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 6);
    CHECK(text.find("0x0800000a  bl 0x8000012") != std::string::npos);
    CHECK(text.find("c3") != std::string::npos);
}

TEST_CASE("block attribution sums to the run")
{
    auto r = request("pushpop");
    r.attribute_blocks = true;
    const auto report = simulate(r);
    REQUIRE(report.blocks);
    CounterVector sum{};
    for(const auto &b : *report.blocks)
        sum = sum + b.counters.events;
    sum = sum + report.unattributed.events;
    CHECK(sum == report.summary.counters.events);
}

TEST_CASE("sweep json keeps config order")
{
    std::vector<RunReport> reports;
    for(const auto &c : all_configs())
        reports.push_back(simulate(request("loop", c)));
    const auto j = sweep_json(reports);
    REQUIRE(j["reports"].size() == 10);
    for(std::size_t i = 0; i < 10; ++i)
        CHECK(j["reports"][i]["config"]["label"] == all_configs()[i].label());
    CHECK(j["comparison"].size() == 10);
}

TEST_CASE("block report marks unknown counts")
{
    const auto bytes = test::kernel_bytes("copy");
    const auto img = MemoryImage::from_flat(bytes);
    const std::uint32_t entry = reset_entry(img);
    const auto cfg = extract_cfg(img, std::span(&entry, 1));
    const auto j = block_report(describe_image("copy.bin", bytes), cfg, builtin_models());
    CHECK(j["has_intervals"] == true);
    bool saw_unknown = false;
    for(const auto &b : j["blocks"])
        saw_unknown = saw_unknown || b["counts"]["c4"] == "unknown";
    CHECK(saw_unknown);
}
