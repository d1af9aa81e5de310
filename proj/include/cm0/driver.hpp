#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cm0/cpu.hpp"
#include "cm0/energy_model.hpp"
#include "cm0/regression.hpp"
#include "cm0/static_analysis.hpp"

namespace cm0 {

using Json = nlohmann::ordered_json;

struct ImageInfo {
    std::string name;
    std::size_t size = 0;
    std::uint64_t fnv1a64 = 0;
};

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
ImageInfo describe_image(std::string name, std::span<const std::uint8_t> bytes);

struct RunRequest {
    ImageInfo image;
    std::vector<std::uint8_t> bytes;
    HardwareConfig config;
    MemoryLayout layout;
    std::uint64_t max_cycles = kDefaultMaxCycles;
    TimingTable timing;
    std::vector<EnergyModel> models = builtin_models();
    std::string model_source = "builtin";
    bool attribute_blocks = false;
    // one line per executed instruction when set
    std::ostream *trace = nullptr;
};

// Dynamic events charged to the block that executed them.
struct BlockAttribution {
    std::uint32_t start = 0;
    std::uint32_t end = 0;
    std::uint64_t entries = 0;
    EventCounters counters;
};

struct RunReport {
    ImageInfo image;
    HardwareConfig config;
    MemoryLayout layout;
    std::uint64_t max_cycles = 0;
    RunSummary summary;
    std::uint32_t r0 = 0;
    std::string output;
    std::vector<EnergyModel> models;
    std::string model_source;
    std::optional<std::vector<BlockAttribution>> blocks;
    // steps outside every analysed block (e.g. reached only through BX)
    EventCounters unattributed;
    std::string attribution_error;

    double wall_time_us() const { return double(summary.cycle_count) / config.frequency_mhz; }
    // Energy under the model for this run's configuration, if one is loaded.
    std::optional<double> energy_nj() const;
};

/// Loads the flat image at the start of Flash, resets and runs it. Image
/// errors (too short, bad reset vector, too large) throw; faults during the
/// run are reported in the summary.
RunReport simulate(const RunRequest &request);

// One trace line: address, disassembly, cycles and the events raised.
std::string trace_line(const StepResult &step);

Json to_json(const RunReport &report);
std::string to_text(const RunReport &report);

Json sweep_json(const std::vector<RunReport> &reports);

Json block_report(const ImageInfo &image, const Cfg &cfg, const std::vector<EnergyModel> &models);
std::string block_report_text(const Cfg &cfg, const std::vector<EnergyModel> &models);

Json fit_report(const RegressionDataset &ds, const FitResult &fit, const CrossValidation &cv);

// Serializes with a fixed layout: two-space indent, insertion-ordered keys,
// every floating-point value printed with six decimals, NaN/inf as null.
std::string dump_fixed(const Json &j);

} // namespace cm0
