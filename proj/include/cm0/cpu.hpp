#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "cm0/counters.hpp"
#include "cm0/error.hpp"
#include "cm0/memory.hpp"
#include "cm0/step.hpp"

namespace cm0 {

struct Flags {
    bool n = false;
    bool z = false;
    bool c = false;
    bool v = false;

    friend bool operator==(const Flags &, const Flags &) = default;
};

struct CpuState {
    std::array<std::uint32_t, 16> r{};
    Flags flags;
    bool halted = false;
    std::uint64_t cycle_count = 0;

    std::uint32_t &sp() { return r[reg::sp]; }
    std::uint32_t &lr() { return r[reg::lr]; }
    std::uint32_t &pc() { return r[reg::pc]; }
    std::uint32_t sp() const { return r[reg::sp]; }
    std::uint32_t lr() const { return r[reg::lr]; }
    std::uint32_t pc() const { return r[reg::pc]; }

    friend bool operator==(const CpuState &, const CpuState &) = default;
};

// Base cycles per instruction class, before memory stalls. Multi-register
// transfers add one cycle per register on top of their base.
struct TimingTable {
    unsigned data_processing = 1;
    unsigned load_store = 2;
    unsigned multiple = 1;
    unsigned pop_pc = 3;
    unsigned branch_taken = 3;
    unsigned branch_not_taken = 1;
    unsigned bl = 4;
    unsigned bx = 3;
    unsigned pc_write = 3;
    unsigned multiply = 1;
    unsigned bkpt = 1;

    // Sets a field by name ("multiply", "load_store", ...); returns false for
    // an unknown name.
    bool set(std::string_view key, unsigned value);
};

CpuState reset(const MemoryImage &image);

bool condition_passed(Cond cond, const Flags &flags);

/// Fetches, decodes and executes one instruction, charging the cycle cost to
/// `state` and the events to `counters`. Throws cm0::Error on undefined
/// instructions and memory faults; the counters are left untouched then.
StepResult execute_step(CpuState &state, MemorySystem &mem, CounterSet &counters, const TimingTable &timing = {});

enum class ExitReason { halt, cycle_budget, fault };

const char *to_string(ExitReason reason);

struct RunSummary {
    EventCounters counters;
    std::uint64_t cycle_count = 0;
    ExitReason exit_reason = ExitReason::halt;
    std::optional<ErrorKind> fault_kind;
    std::string fault_detail;
};

using StepObserver = std::function<void(const StepResult &)>;

inline constexpr std::uint64_t kDefaultMaxCycles = 1'000'000'000;

// Steps until BKPT, a fault, or until the cycle count reaches max_cycles.
// Never throws once started; faults are reported in the summary.
RunSummary run(CpuState &state, MemorySystem &mem, CounterSet &counters, std::uint64_t max_cycles,
               const TimingTable &timing = {}, const StepObserver &observer = {});

// One simulator instance: memory, counters and core state for a single run.
class Machine {
public:
    Machine(MemoryImage image, unsigned wait_states, bool prefetch, TimingTable timing = {});

    RunSummary run(std::uint64_t max_cycles = kDefaultMaxCycles, const StepObserver &observer = {});
    StepResult step();

    CpuState &state() { return state_; }
    const CpuState &state() const { return state_; }
    MemorySystem &memory() { return mem_; }
    const MemorySystem &memory() const { return mem_; }
    const CounterSet &counters() const { return counters_; }

private:
    MemorySystem mem_;
    CounterSet counters_;
    TimingTable timing_;
    CpuState state_;
};

} // namespace cm0
