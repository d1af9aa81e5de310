#pragma once

#include <cstdint>
#include <vector>

#include "cm0/isa.hpp"
#include "cm0/memory.hpp"

namespace cm0 {

enum class AccessKind : std::uint8_t { read, write };

// One data-side bus transaction. Multi-register transfers produce one entry
// per 32-bit word.
struct DataAccess {
    std::uint32_t address;
    std::uint8_t size;
    AccessKind kind;
    AccessRegion region;

    friend bool operator==(const DataAccess &, const DataAccess &) = default;
};

struct StepResult {
    Instruction instruction;
    unsigned cycles = 0;
    unsigned fetch_stall = 0;
    unsigned data_stall = 0;
    bool branch_taken = false;
    std::vector<DataAccess> data_accesses;
    bool halted = false;
};

} // namespace cm0
