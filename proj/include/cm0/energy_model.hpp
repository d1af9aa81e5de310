#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cm0/counters.hpp"

namespace cm0 {

// [frequency MHz, PreFetch, WaitStates]. Only the ten combinations that have a
// published model are valid; 48 MHz needs one wait state.
struct HardwareConfig {
    int frequency_mhz = 20;
    bool prefetch = false;
    int wait_states = 0;

    // Throws Error(invalid_config) for anything outside the ten combinations.
    static HardwareConfig make(int frequency_mhz, bool prefetch, int wait_states);

    bool valid() const;
    // Position in the canonical (published) ordering, 0..9.
    int ordinal() const;
    // "[20, OFF, 0]"
    std::string label() const;

    friend bool operator==(const HardwareConfig &, const HardwareConfig &) = default;
};

// The ten valid configurations in canonical order.
const std::array<HardwareConfig, 10> &all_configs();

enum class Provenance { builtin, fitted };

const char *to_string(Provenance p);

using Coefficients = std::array<double, kCounterCount>;

struct EnergyModel {
    HardwareConfig config;
    // nJ per event, index-aligned with c1..c6
    Coefficients beta{};
    Provenance provenance = Provenance::builtin;
    std::optional<double> reported_mape;
    std::optional<double> reported_resd;
};

const std::vector<EnergyModel> &builtin_models();

// Throws Error(invalid_config) if the configuration has no published model.
const EnergyModel &builtin_model(const HardwareConfig &config);

// Sum of beta_i * c_i in nJ. No intercept.
double estimate(const CounterVector &counters, const EnergyModel &model);
double estimate(const EventCounters &counters, const EnergyModel &model);

// beta_i / sum(beta). Requires a positive coefficient sum.
Coefficients relative_weights(const EnergyModel &model);

struct ConfigRun {
    HardwareConfig config;
    CounterVector counters{};
    std::uint64_t cycles = 0;
};

struct ComparisonRow {
    HardwareConfig config;
    double energy_nj = 0;
    double time_us = 0;
};

/// Ranks configurations of the same program by estimated energy, then by
/// time, then by canonical config order. Each run is evaluated with the model
/// for its own configuration, looked up in `models`.
std::vector<ComparisonRow> compare_configs(const std::vector<ConfigRun> &runs,
                                           const std::vector<EnergyModel> &models = builtin_models());

// Model files: '#' comments, then one comma-separated record per line:
//   freq,prefetch,ws,beta1,...,beta6
// Coefficients are written in shortest round-trip form, so the builtin table
// comes back with its six printed decimals.
void write_models(std::ostream &out, const std::vector<EnergyModel> &models);
std::vector<EnergyModel> read_models(std::istream &in);

} // namespace cm0
