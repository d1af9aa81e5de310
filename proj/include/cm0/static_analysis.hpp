#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "cm0/counters.hpp"
#include "cm0/energy_model.hpp"
#include "cm0/isa.hpp"
#include "cm0/memory.hpp"
#include "cm0/step.hpp"

namespace cm0 {

enum class EdgeKind { fallthrough, taken, call, ret };

const char *to_string(EdgeKind kind);

struct Edge {
    // nullopt: indirect transfer (BX, BLX, POP {pc}, MOV/ADD pc)
    std::optional<std::uint32_t> target;
    EdgeKind kind = EdgeKind::fallthrough;

    // Traversing any non-fallthrough edge is one taken branch (c3).
    bool counts_taken_branch() const { return kind != EdgeKind::fallthrough; }
};

// Block counts with c3 left at zero; taken branches belong to edges.
// Accesses whose region cannot be resolved statically are kept apart: an
// unresolved read is either a RAM read (c4) or a Flash read (c6), an
// unresolved write either a RAM write (c5) or a debug-port write (no event).
struct StaticCounts {
    CounterVector exact{};
    std::uint64_t unresolved_reads = 0;
    std::uint64_t unresolved_writes = 0;

    bool known(Counter c) const;
    bool fully_resolved() const { return unresolved_reads == 0 && unresolved_writes == 0; }

    StaticCounts &operator+=(const StaticCounts &o);
};

struct BasicBlock {
    std::uint32_t start = 0;
    // one past the last instruction
    std::uint32_t end = 0;
    std::vector<Instruction> instructions;
    StaticCounts counts;
    std::vector<Edge> successors;

    const Instruction &terminator() const { return instructions.back(); }
};

struct Cfg {
    std::vector<std::uint32_t> entries;
    std::map<std::uint32_t, BasicBlock> blocks;

    const BasicBlock *at(std::uint32_t start) const;
    const BasicBlock *containing(std::uint32_t addr) const;
};

// Entry point named by the reset vector (bit 0 cleared).
std::uint32_t reset_entry(const MemoryImage &image);

/// Recursive-descent disassembly from `entries`. Only addresses reached by
/// control flow are decoded, so literal pools are never misread as code.
/// Throws Error(analysis_error) with the address of any reachable
/// undecodable or unmapped instruction.
Cfg extract_cfg(const MemoryImage &image, std::span<const std::uint32_t> entries);

StaticCounts static_block_counters(const BasicBlock &block, const MemoryImage &image);

struct EnergyInterval {
    double lo = 0;
    double hi = 0;

    bool is_point() const { return lo == hi; }
    double width() const { return hi - lo; }
};

// Energy of a block body (no taken-branch term).
EnergyInterval block_energy(const StaticCounts &counts, const EnergyModel &model);

/// Energy along a block sequence. `taken[i]` says whether the edge leaving
/// blocks[i] is a taken branch; it has one entry per transition, optionally
/// plus one for the edge leaving the last block. Consecutive blocks must be
/// joined by an edge of the matching kind (an indirect edge matches any
/// target), otherwise Error(path_error).
EnergyInterval path_energy(std::span<const BasicBlock *const> blocks, std::span<const bool> taken,
                           const EnergyModel &model);

struct BlockPath {
    std::vector<const BasicBlock *> blocks;
    std::vector<bool> taken;
};

// Maps an executed instruction stream onto the CFG: a new block is entered
// whenever a step starts at a block's first instruction. Throws
// Error(path_error) if a step lies outside every block.
BlockPath trace_to_path(const Cfg &cfg, std::span<const StepResult> trace);

// Static counts summed along a path, with one c3 per taken transition.
StaticCounts path_counts(const BlockPath &path);

} // namespace cm0
