#pragma once

#include <array>
#include <cstdint>

#include "cm0/step.hpp"

namespace cm0 {

// Index of each model counter; the order is the coefficient order of every
// energy model.
enum class Counter : std::uint8_t {
    executed = 0,     // executed instructions other than MULS
    multiply = 1,     // MULS
    taken_branch = 2, // taken branches
    ram_read = 3,
    ram_write = 4,
    flash_read = 5,
};

inline constexpr std::size_t kCounterCount = 6;

using CounterVector = std::array<std::uint64_t, kCounterCount>;

constexpr std::size_t index(Counter c) { return static_cast<std::size_t>(c); }

// "c1".."c6"
const char *counter_name(std::size_t i);

struct EventCounters {
    CounterVector events{};

    std::uint64_t total_cycles = 0;
    std::uint64_t fetch_stall_cycles = 0;
    std::uint64_t data_stall_cycles = 0;
    std::array<std::uint64_t, kOpcodeCount> histogram{};

    std::uint64_t operator[](Counter c) const { return events[index(c)]; }
    std::uint64_t instructions() const { return events[0] + events[1]; }

    friend bool operator==(const EventCounters &, const EventCounters &) = default;
};

// Per-counter addition.
CounterVector operator+(const CounterVector &a, const CounterVector &b);

class CounterSet {
public:
    void record_step(const StepResult &step);

    EventCounters snapshot() const { return counters_; }
    void reset_counters() { counters_ = {}; }

private:
    EventCounters counters_;
};

} // namespace cm0
