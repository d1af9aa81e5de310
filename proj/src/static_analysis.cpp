#include "cm0/static_analysis.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "cm0/error.hpp"

namespace cm0 {

namespace {

bool is_terminator(const Instruction &i) { return i.is_control_transfer() || i.op == Opcode::bkpt; }

Instruction decode_at(const MemoryImage &image, std::uint32_t addr)
{
    try {
        const auto first = static_cast<std::uint16_t>(image.peek(addr, 2));
        std::uint16_t second = 0;
        if(is_wide_prefix(first))
            second = static_cast<std::uint16_t>(image.peek(addr + 2, 2));
        return decode(first, second, addr);
    } catch(const Error &e) {
        throw Error(ErrorKind::analysis_error, "cannot decode reachable code at " + hex32(addr) + ": " + e.what());
    }
}

std::vector<Edge> successors_of(const Instruction &i)
{
    const auto next = i.next_address();
    switch(i.op) {
    case Opcode::b_cond: return {{i.branch_target(), EdgeKind::taken}, {next, EdgeKind::fallthrough}};
    case Opcode::b: return {{i.branch_target(), EdgeKind::taken}};
    case Opcode::bl: return {{i.branch_target(), EdgeKind::call}, {next, EdgeKind::ret}};
    case Opcode::blx: return {{std::nullopt, EdgeKind::call}, {next, EdgeKind::ret}};
    case Opcode::bx: return {{std::nullopt, i.rm == reg::lr ? EdgeKind::ret : EdgeKind::taken}};
    case Opcode::pop: return {{std::nullopt, EdgeKind::ret}};
    case Opcode::add_hi:
    case Opcode::mov_hi: return {{std::nullopt, EdgeKind::taken}};
    case Opcode::bkpt: return {};
    default: return {{next, EdgeKind::fallthrough}};
    }
}

void add_scaled(double &lo, double &hi, double count, double a, double b)
{
    lo += count * std::min(a, b);
    hi += count * std::max(a, b);
}

} // namespace

const char *to_string(EdgeKind kind)
{
    switch(kind) {
    case EdgeKind::fallthrough: return "fallthrough";
    case EdgeKind::taken: return "taken";
    case EdgeKind::call: return "call";
    case EdgeKind::ret: return "return";
    }
    return "?";
}

bool StaticCounts::known(Counter c) const
{
    switch(c) {
    case Counter::ram_read:
    case Counter::flash_read: return unresolved_reads == 0;
    case Counter::ram_write: return unresolved_writes == 0;
    default: return true;
    }
}

StaticCounts &StaticCounts::operator+=(const StaticCounts &o)
{
    exact = exact + o.exact;
    unresolved_reads += o.unresolved_reads;
    unresolved_writes += o.unresolved_writes;
    return *this;
}

const BasicBlock *Cfg::at(std::uint32_t start) const
{
    const auto it = blocks.find(start);
    return it == blocks.end() ? nullptr : &it->second;
}

const BasicBlock *Cfg::containing(std::uint32_t addr) const
{
    auto it = blocks.upper_bound(addr);
    if(it == blocks.begin())
        return nullptr;
    --it;
    return addr < it->second.end ? &it->second : nullptr;
}

std::uint32_t reset_entry(const MemoryImage &image)
{
    if(image.loaded_size() < 8)
        throw Error(ErrorKind::malformed_image, "image too short for a vector table");
    return image.peek(kFlashBase + 4, 4) & ~1u;
}

Cfg extract_cfg(const MemoryImage &image, std::span<const std::uint32_t> entries)
{
    std::map<std::uint32_t, Instruction> code;
    std::set<std::uint32_t> leaders;
    std::deque<std::uint32_t> work;

    for(auto e : entries) {
        leaders.insert(e & ~1u);
        work.push_back(e & ~1u);
    }

    while(!work.empty()) {
        std::uint32_t addr = work.front();
        work.pop_front();
        while(!code.contains(addr)) {
            if(const auto prev = code.lower_bound(addr); prev != code.begin()) {
                const auto &before = std::prev(prev)->second;
                if(addr < before.next_address())
                    throw Error(ErrorKind::analysis_error, "branch into the middle of the instruction at " +
                                                               hex32(before.address));
            }
            const auto insn = decode_at(image, addr);
            if(insn.width == 32 && code.contains(addr + 2))
                throw Error(ErrorKind::analysis_error, "32-bit instruction at " + hex32(addr) +
                                                           " overlaps code reached at " + hex32(addr + 2));
            code.emplace(addr, insn);
            if(!is_terminator(insn)) {
                addr = insn.next_address();
                continue;
            }
            for(const auto &edge : successors_of(insn)) {
                if(!edge.target)
                    continue;
                leaders.insert(*edge.target);
                work.push_back(*edge.target);
            }
            break;
        }
    }

    Cfg cfg;
    for(auto e : entries)
        cfg.entries.push_back(e & ~1u);

    for(auto start : leaders) {
        BasicBlock block;
        block.start = start;
        std::uint32_t addr = start;
        while(true) {
            const auto &insn = code.at(addr);
            block.instructions.push_back(insn);
            addr = insn.next_address();
            if(is_terminator(insn)) {
                block.successors = successors_of(insn);
                break;
            }
            if(leaders.contains(addr) || !code.contains(addr)) {
                block.successors = {{addr, EdgeKind::fallthrough}};
                break;
            }
        }
        block.end = addr;
        block.counts = static_block_counters(block, image);
        cfg.blocks.emplace(start, std::move(block));
    }
    return cfg;
}

StaticCounts static_block_counters(const BasicBlock &block, const MemoryImage &image)
{
    StaticCounts sc;
    auto &c = sc.exact;
    for(const auto &i : block.instructions) {
        ++c[index(i.is_multiply() ? Counter::multiply : Counter::executed)];

        switch(i.op) {
        case Opcode::ldr_lit:
            switch(image.classify(i.literal_address(), 4)) {
            case Region::flash:
            case Region::alias: ++c[index(Counter::flash_read)]; break;
            case Region::ram: ++c[index(Counter::ram_read)]; break;
            default: ++sc.unresolved_reads; break;
            }
            break;
        // stack accesses are RAM by construction
        case Opcode::ldr_sp: ++c[index(Counter::ram_read)]; break;
        case Opcode::str_sp: ++c[index(Counter::ram_write)]; break;
        case Opcode::push: c[index(Counter::ram_write)] += std::uint64_t(i.reg_count()); break;
        case Opcode::pop: c[index(Counter::ram_read)] += std::uint64_t(i.reg_count()); break;
        case Opcode::ldm: sc.unresolved_reads += std::uint64_t(i.reg_count()); break;
        case Opcode::stm: sc.unresolved_writes += std::uint64_t(i.reg_count()); break;
        case Opcode::ldrsb_reg:
        case Opcode::ldr_reg:
        case Opcode::ldrh_reg:
        case Opcode::ldrb_reg:
        case Opcode::ldrsh_reg:
        case Opcode::ldr_imm:
        case Opcode::ldrb_imm:
        case Opcode::ldrh_imm: ++sc.unresolved_reads; break;
        case Opcode::str_reg:
        case Opcode::strh_reg:
        case Opcode::strb_reg:
        case Opcode::str_imm:
        case Opcode::strb_imm:
        case Opcode::strh_imm: ++sc.unresolved_writes; break;
        default: break;
        }
    }
    return sc;
}

EnergyInterval block_energy(const StaticCounts &counts, const EnergyModel &model)
{
    const double point = estimate(counts.exact, model);
    EnergyInterval e{point, point};
    const auto &b = model.beta;
    add_scaled(e.lo, e.hi, double(counts.unresolved_reads), b[index(Counter::ram_read)],
               b[index(Counter::flash_read)]);
    // a debug-port write raises no event
    add_scaled(e.lo, e.hi, double(counts.unresolved_writes), 0.0, b[index(Counter::ram_write)]);
    return e;
}

EnergyInterval path_energy(std::span<const BasicBlock *const> blocks, std::span<const bool> taken,
                           const EnergyModel &model)
{
    if(blocks.empty())
        throw Error(ErrorKind::path_error, "empty path");
    if(taken.size() + 1 != blocks.size() && taken.size() != blocks.size())
        throw Error(ErrorKind::path_error, "path of " + std::to_string(blocks.size()) + " blocks needs " +
                                               std::to_string(blocks.size() - 1) + " or " +
                                               std::to_string(blocks.size()) + " edge flags");

    for(std::size_t i = 0; i + 1 < blocks.size(); ++i) {
        const auto next = blocks[i + 1]->start;
        const bool ok = std::any_of(blocks[i]->successors.begin(), blocks[i]->successors.end(), [&](const Edge &e) {
            return (!e.target || *e.target == next) && e.counts_taken_branch() == taken[i];
        });
        if(!ok)
            throw Error(ErrorKind::path_error, "no " + std::string(taken[i] ? "taken" : "fallthrough") + " edge from " +
                                                   hex32(blocks[i]->start) + " to " + hex32(next));
    }

    StaticCounts total;
    for(const auto *b : blocks)
        total += b->counts;
    total.exact[index(Counter::taken_branch)] += std::uint64_t(std::count(taken.begin(), taken.end(), true));
    return block_energy(total, model);
}

BlockPath trace_to_path(const Cfg &cfg, std::span<const StepResult> trace)
{
    BlockPath path;
    bool prev_taken = false;
    for(const auto &step : trace) {
        const auto addr = step.instruction.address;
        if(const auto *b = cfg.at(addr)) {
            if(!path.blocks.empty())
                path.taken.push_back(prev_taken);
            path.blocks.push_back(b);
        } else if(path.blocks.empty() || !cfg.containing(addr)) {
            throw Error(ErrorKind::path_error, "executed address " + hex32(addr) + " is not in the CFG");
        }
        prev_taken = step.branch_taken;
    }
    if(!path.blocks.empty() && prev_taken)
        path.taken.push_back(true);
    return path;
}

StaticCounts path_counts(const BlockPath &path)
{
    StaticCounts total;
    for(const auto *b : path.blocks)
        total += b->counts;
    total.exact[index(Counter::taken_branch)] +=
        std::uint64_t(std::count(path.taken.begin(), path.taken.end(), true));
    return total;
}

} // namespace cm0
