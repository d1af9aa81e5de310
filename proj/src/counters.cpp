#include "cm0/counters.hpp"

namespace cm0 {

const char *counter_name(std::size_t i)
{
    static constexpr const char *names[kCounterCount] = {"c1", "c2", "c3", "c4", "c5", "c6"};
    return i < kCounterCount ? names[i] : "?";
}

CounterVector operator+(const CounterVector &a, const CounterVector &b)
{
    CounterVector out{};
    for(std::size_t i = 0; i < kCounterCount; ++i)
        out[i] = a[i] + b[i];
    return out;
}

void CounterSet::record_step(const StepResult &step)
{
    auto &ev = counters_.events;
    ++ev[index(step.instruction.is_multiply() ? Counter::multiply : Counter::executed)];
    if(step.branch_taken)
        ++ev[index(Counter::taken_branch)];

    for(const auto &access : step.data_accesses) {
        if(access.region == AccessRegion::ram)
            ++ev[index(access.kind == AccessKind::read ? Counter::ram_read : Counter::ram_write)];
        else if(access.region == AccessRegion::flash && access.kind == AccessKind::read)
            ++ev[index(Counter::flash_read)];
    }

    counters_.total_cycles += step.cycles;
    counters_.fetch_stall_cycles += step.fetch_stall;
    counters_.data_stall_cycles += step.data_stall;
    ++counters_.histogram[static_cast<std::size_t>(step.instruction.op)];
}

} // namespace cm0
