#include "cm0/cpu.hpp"

#include <bit>
#include <stdexcept>

namespace cm0 {

namespace {

struct AluResult {
    std::uint32_t value;
    bool carry;
    bool overflow;
};

AluResult add_with_carry(std::uint32_t x, std::uint32_t y, bool carry_in)
{
    const std::uint64_t unsigned_sum = std::uint64_t(x) + y + carry_in;
    const std::int64_t signed_sum = std::int64_t(std::int32_t(x)) + std::int32_t(y) + carry_in;
    const auto value = static_cast<std::uint32_t>(unsigned_sum);
    return {value, (unsigned_sum >> 32) != 0, std::int64_t(std::int32_t(value)) != signed_sum};
}

enum class Shift { lsl, lsr, asr, ror };

struct ShiftResult {
    std::uint32_t value;
    bool carry;
};

// Register-specified shift semantics (amount taken from the bottom byte).
// Immediate shifts reuse this with amounts 1..32.
ShiftResult shift_c(Shift kind, std::uint32_t value, unsigned amount, bool carry_in)
{
    if(amount == 0)
        return {value, carry_in};

    switch(kind) {
    case Shift::lsl:
        if(amount < 32)
            return {value << amount, ((value >> (32 - amount)) & 1) != 0};
        if(amount == 32)
            return {0, (value & 1) != 0};
        return {0, false};
    case Shift::lsr:
        if(amount < 32)
            return {value >> amount, ((value >> (amount - 1)) & 1) != 0};
        if(amount == 32)
            return {0, (value >> 31) != 0};
        return {0, false};
    case Shift::asr: {
        if(amount >= 32) {
            const bool sign = value >> 31;
            return {sign ? 0xFFFF'FFFFu : 0u, sign};
        }
        // arithmetic: the sign bit is replicated into the vacated positions
        const auto shifted = static_cast<std::uint32_t>(std::int32_t(value) >> amount);
        return {shifted, ((value >> (amount - 1)) & 1) != 0};
    }
    case Shift::ror: {
        const unsigned r = amount & 31;
        const std::uint32_t rotated = r ? std::rotr(value, static_cast<int>(r)) : value;
        return {rotated, (rotated >> 31) != 0};
    }
    }
    return {value, carry_in};
}

std::uint32_t sign_extend(std::uint32_t value, int bits)
{
    const std::uint32_t m = 1u << (bits - 1);
    value &= (1u << bits) - 1;
    return (value ^ m) - m;
}

class Executor {
public:
    Executor(CpuState &state, MemorySystem &mem, const TimingTable &timing, StepResult &out, std::uint64_t now)
        : s_(state), mem_(mem), t_(timing), out_(out), now_(now)
    {}

    // Returns base cycles.
    unsigned execute(const Instruction &i);

private:
    // Operand read: PC reads as the instruction address + 4.
    std::uint32_t get(unsigned r) const { return r == reg::pc ? insn_->address + 4 : s_.r[r]; }

    void set_nz(std::uint32_t v)
    {
        s_.flags.n = (v >> 31) != 0;
        s_.flags.z = v == 0;
    }

    void set_nzcv(const AluResult &res)
    {
        set_nz(res.value);
        s_.flags.c = res.carry;
        s_.flags.v = res.overflow;
    }

    void branch(std::uint32_t target)
    {
        next_pc_ = target & ~1u;
        out_.branch_taken = true;
    }

    std::uint32_t load(std::uint32_t addr, unsigned size)
    {
        const auto res = mem_.read(addr, size, now_);
        out_.data_stall += res.stall;
        out_.data_accesses.push_back({addr, static_cast<std::uint8_t>(size), AccessKind::read, res.region});
        return res.value;
    }

    void store(std::uint32_t addr, unsigned size, std::uint32_t value)
    {
        const auto res = mem_.write(addr, size, value, now_);
        out_.data_stall += res.stall;
        out_.data_accesses.push_back({addr, static_cast<std::uint8_t>(size), AccessKind::write, res.region});
    }

    unsigned shift_op(Shift kind, unsigned rd, std::uint32_t value, unsigned amount)
    {
        const auto res = shift_c(kind, value, amount, s_.flags.c);
        s_.r[rd] = res.value;
        set_nz(res.value);
        s_.flags.c = res.carry;
        return t_.data_processing;
    }

    unsigned logical(unsigned rd, std::uint32_t value)
    {
        s_.r[rd] = value;
        set_nz(value);
        return t_.data_processing;
    }

    unsigned arith(unsigned rd, const AluResult &res)
    {
        s_.r[rd] = res.value;
        set_nzcv(res);
        return t_.data_processing;
    }

    unsigned compare(const AluResult &res)
    {
        set_nzcv(res);
        return t_.data_processing;
    }

    unsigned write_reg(unsigned rd, std::uint32_t value)
    {
        if(rd == reg::pc) {
            branch(value);
            return t_.pc_write;
        }
        s_.r[rd] = rd == reg::sp ? (value & ~3u) : value;
        return t_.data_processing;
    }

    unsigned load_op(const Instruction &i, std::uint32_t addr, unsigned size, bool sign = false)
    {
        auto value = load(addr, size);
        if(sign)
            value = sign_extend(value, int(size * 8));
        s_.r[i.rd] = value;
        return t_.load_store;
    }

    unsigned store_op(const Instruction &i, std::uint32_t addr, unsigned size)
    {
        store(addr, size, s_.r[i.rd]);
        return t_.load_store;
    }

    CpuState &s_;
    MemorySystem &mem_;
    const TimingTable &t_;
    StepResult &out_;
    std::uint64_t now_;
    const Instruction *insn_ = nullptr;

public:
    std::uint32_t next_pc_ = 0;
};

unsigned Executor::execute(const Instruction &i)
{
    insn_ = &i;
    next_pc_ = i.next_address();
    auto &r = s_.r;
    const bool c = s_.flags.c;

    switch(i.op) {
    case Opcode::lsls_imm: return shift_op(Shift::lsl, i.rd, r[i.rm], i.imm);
    case Opcode::lsrs_imm: return shift_op(Shift::lsr, i.rd, r[i.rm], i.imm);
    case Opcode::asrs_imm: return shift_op(Shift::asr, i.rd, r[i.rm], i.imm);
    case Opcode::movs_reg: return logical(i.rd, r[i.rm]);

    case Opcode::adds_reg: return arith(i.rd, add_with_carry(r[i.rn], r[i.rm], false));
    case Opcode::subs_reg: return arith(i.rd, add_with_carry(r[i.rn], ~r[i.rm], true));
    case Opcode::adds_imm3: return arith(i.rd, add_with_carry(r[i.rn], i.imm, false));
    case Opcode::subs_imm3: return arith(i.rd, add_with_carry(r[i.rn], ~i.imm, true));
    case Opcode::movs_imm: return logical(i.rd, i.imm);
    case Opcode::cmp_imm: return compare(add_with_carry(r[i.rd], ~i.imm, true));
    case Opcode::adds_imm8: return arith(i.rd, add_with_carry(r[i.rd], i.imm, false));
    case Opcode::subs_imm8: return arith(i.rd, add_with_carry(r[i.rd], ~i.imm, true));

    case Opcode::ands: return logical(i.rd, r[i.rd] & r[i.rm]);
    case Opcode::eors: return logical(i.rd, r[i.rd] ^ r[i.rm]);
    case Opcode::orrs: return logical(i.rd, r[i.rd] | r[i.rm]);
    case Opcode::bics: return logical(i.rd, r[i.rd] & ~r[i.rm]);
    case Opcode::mvns: return logical(i.rd, ~r[i.rm]);
    case Opcode::tst: set_nz(r[i.rd] & r[i.rm]); return t_.data_processing;
    case Opcode::lsls_reg: return shift_op(Shift::lsl, i.rd, r[i.rd], r[i.rm] & 0xFF);
    case Opcode::lsrs_reg: return shift_op(Shift::lsr, i.rd, r[i.rd], r[i.rm] & 0xFF);
    case Opcode::asrs_reg: return shift_op(Shift::asr, i.rd, r[i.rd], r[i.rm] & 0xFF);
    case Opcode::rors: return shift_op(Shift::ror, i.rd, r[i.rd], r[i.rm] & 0xFF);
    case Opcode::adcs: return arith(i.rd, add_with_carry(r[i.rd], r[i.rm], c));
    case Opcode::sbcs: return arith(i.rd, add_with_carry(r[i.rd], ~r[i.rm], c));
    case Opcode::rsbs: return arith(i.rd, add_with_carry(~r[i.rm], 0, true));
    case Opcode::cmp_reg: return compare(add_with_carry(r[i.rd], ~r[i.rm], true));
    case Opcode::cmn: return compare(add_with_carry(r[i.rd], r[i.rm], false));
    case Opcode::muls:
        r[i.rd] = r[i.rd] * r[i.rm];
        set_nz(r[i.rd]);
        return t_.multiply;

    case Opcode::add_hi: return write_reg(i.rd, get(i.rd) + get(i.rm));
    case Opcode::cmp_hi: return compare(add_with_carry(get(i.rd), ~get(i.rm), true));
    case Opcode::mov_hi: return write_reg(i.rd, get(i.rm));
    case Opcode::bx: branch(get(i.rm)); return t_.bx;
    case Opcode::blx: {
        const auto target = get(i.rm);
        r[reg::lr] = i.next_address() | 1;
        branch(target);
        return t_.bx;
    }

    case Opcode::ldr_lit: return load_op(i, i.literal_address(), 4);
    case Opcode::str_reg: return store_op(i, r[i.rn] + r[i.rm], 4);
    case Opcode::strh_reg: return store_op(i, r[i.rn] + r[i.rm], 2);
    case Opcode::strb_reg: return store_op(i, r[i.rn] + r[i.rm], 1);
    case Opcode::ldrsb_reg: return load_op(i, r[i.rn] + r[i.rm], 1, true);
    case Opcode::ldr_reg: return load_op(i, r[i.rn] + r[i.rm], 4);
    case Opcode::ldrh_reg: return load_op(i, r[i.rn] + r[i.rm], 2);
    case Opcode::ldrb_reg: return load_op(i, r[i.rn] + r[i.rm], 1);
    case Opcode::ldrsh_reg: return load_op(i, r[i.rn] + r[i.rm], 2, true);
    case Opcode::str_imm: return store_op(i, r[i.rn] + i.imm, 4);
    case Opcode::ldr_imm: return load_op(i, r[i.rn] + i.imm, 4);
    case Opcode::strb_imm: return store_op(i, r[i.rn] + i.imm, 1);
    case Opcode::ldrb_imm: return load_op(i, r[i.rn] + i.imm, 1);
    case Opcode::strh_imm: return store_op(i, r[i.rn] + i.imm, 2);
    case Opcode::ldrh_imm: return load_op(i, r[i.rn] + i.imm, 2);
    case Opcode::str_sp: return store_op(i, r[reg::sp] + i.imm, 4);
    case Opcode::ldr_sp: return load_op(i, r[reg::sp] + i.imm, 4);

    case Opcode::adr: r[i.rd] = i.literal_address(); return t_.data_processing;
    case Opcode::add_rd_sp: r[i.rd] = r[reg::sp] + i.imm; return t_.data_processing;
    case Opcode::add_sp: r[reg::sp] += i.imm; return t_.data_processing;
    case Opcode::sub_sp: r[reg::sp] -= i.imm; return t_.data_processing;

    case Opcode::sxth: r[i.rd] = sign_extend(r[i.rm], 16); return t_.data_processing;
    case Opcode::sxtb: r[i.rd] = sign_extend(r[i.rm], 8); return t_.data_processing;
    case Opcode::uxth: r[i.rd] = r[i.rm] & 0xFFFF; return t_.data_processing;
    case Opcode::uxtb: r[i.rd] = r[i.rm] & 0xFF; return t_.data_processing;
    case Opcode::rev: r[i.rd] = __builtin_bswap32(r[i.rm]); return t_.data_processing;
    case Opcode::rev16: {
        const auto v = r[i.rm];
        r[i.rd] = ((v & 0x00FF00FFu) << 8) | ((v & 0xFF00FF00u) >> 8);
        return t_.data_processing;
    }
    case Opcode::revsh: {
        const auto v = r[i.rm];
        r[i.rd] = sign_extend(((v & 0xFF) << 8) | ((v >> 8) & 0xFF), 16);
        return t_.data_processing;
    }

    case Opcode::push: {
        const unsigned n = unsigned(i.reg_count());
        std::uint32_t addr = r[reg::sp] - 4 * n;
        const std::uint32_t new_sp = addr;
        for(unsigned k = 0; k < 16; ++k) {
            if(i.reg_list & (1u << k)) {
                store(addr, 4, r[k]);
                addr += 4;
            }
        }
        r[reg::sp] = new_sp;
        return t_.multiple + n;
    }
    case Opcode::pop: {
        const unsigned n = unsigned(i.reg_count());
        std::uint32_t addr = r[reg::sp];
        std::array<std::uint32_t, 16> loaded{};
        for(unsigned k = 0; k < 16; ++k) {
            if(i.reg_list & (1u << k)) {
                loaded[k] = load(addr, 4);
                addr += 4;
            }
        }
        for(unsigned k = 0; k < 15; ++k)
            if(i.reg_list & (1u << k))
                r[k] = loaded[k];
        r[reg::sp] = addr;
        if(i.reg_list & 0x8000) {
            branch(loaded[reg::pc]);
            return t_.pop_pc + n;
        }
        return t_.multiple + n;
    }
    case Opcode::stm: {
        const unsigned n = unsigned(i.reg_count());
        std::uint32_t addr = r[i.rn];
        for(unsigned k = 0; k < 8; ++k) {
            if(i.reg_list & (1u << k)) {
                store(addr, 4, r[k]);
                addr += 4;
            }
        }
        r[i.rn] = addr;
        return t_.multiple + n;
    }
    case Opcode::ldm: {
        const unsigned n = unsigned(i.reg_count());
        std::uint32_t addr = r[i.rn];
        std::array<std::uint32_t, 8> loaded{};
        for(unsigned k = 0; k < 8; ++k) {
            if(i.reg_list & (1u << k)) {
                loaded[k] = load(addr, 4);
                addr += 4;
            }
        }
        for(unsigned k = 0; k < 8; ++k)
            if(i.reg_list & (1u << k))
                r[k] = loaded[k];
        if(!(i.reg_list & (1u << i.rn)))
            r[i.rn] = addr;
        return t_.multiple + n;
    }

    case Opcode::b_cond:
        if(condition_passed(i.cond, s_.flags)) {
            branch(i.branch_target());
            return t_.branch_taken;
        }
        return t_.branch_not_taken;
    case Opcode::b: branch(i.branch_target()); return t_.branch_taken;
    case Opcode::bl:
        r[reg::lr] = i.next_address() | 1;
        branch(i.branch_target());
        return t_.bl;

    case Opcode::bkpt: out_.halted = true; return t_.bkpt;

    case Opcode::nop:
    case Opcode::yield:
    case Opcode::wfe:
    case Opcode::wfi:
    case Opcode::sev: return t_.data_processing;
    }
    throw UndefinedInstruction(i.address, i.raw);
}

} // namespace

bool TimingTable::set(std::string_view key, unsigned value)
{
    struct Field {
        std::string_view name;
        unsigned TimingTable::*member;
    };
    static constexpr Field fields[] = {
        {"data_processing", &TimingTable::data_processing},
        {"load_store", &TimingTable::load_store},
        {"multiple", &TimingTable::multiple},
        {"pop_pc", &TimingTable::pop_pc},
        {"branch_taken", &TimingTable::branch_taken},
        {"branch_not_taken", &TimingTable::branch_not_taken},
        {"bl", &TimingTable::bl},
        {"bx", &TimingTable::bx},
        {"pc_write", &TimingTable::pc_write},
        {"multiply", &TimingTable::multiply},
        {"bkpt", &TimingTable::bkpt},
    };
    for(const auto &f : fields) {
        if(f.name == key) {
            this->*f.member = value;
            return true;
        }
    }
    return false;
}

CpuState reset(const MemoryImage &image)
{
    if(image.loaded_size() < 8)
        throw Error(ErrorKind::malformed_image, "image holds " + std::to_string(image.loaded_size()) +
                                                    " bytes, the vector table needs at least 8");
    CpuState state;
    state.sp() = image.peek(kFlashBase, 4);
    const std::uint32_t entry = image.peek(kFlashBase + 4, 4) & ~1u;
    const auto region = image.classify(entry, 2);
    if(region != Region::flash && region != Region::alias && region != Region::ram)
        throw Error(ErrorKind::bad_entry, "reset vector " + hex32(entry) + " is outside executable memory");
    state.pc() = entry;
    return state;
}

bool condition_passed(Cond cond, const Flags &f)
{
    switch(cond) {
    case Cond::eq: return f.z;
    case Cond::ne: return !f.z;
    case Cond::cs: return f.c;
    case Cond::cc: return !f.c;
    case Cond::mi: return f.n;
    case Cond::pl: return !f.n;
    case Cond::vs: return f.v;
    case Cond::vc: return !f.v;
    case Cond::hi: return f.c && !f.z;
    case Cond::ls: return !f.c || f.z;
    case Cond::ge: return f.n == f.v;
    case Cond::lt: return f.n != f.v;
    case Cond::gt: return !f.z && f.n == f.v;
    case Cond::le: return f.z || f.n != f.v;
    case Cond::al: return true;
    }
    return false;
}

StepResult execute_step(CpuState &state, MemorySystem &mem, CounterSet &counters, const TimingTable &timing)
{
    if(state.halted)
        throw std::logic_error("execute_step on a halted core");

    const std::uint64_t start = state.cycle_count;
    const std::uint32_t pc = state.pc();

    StepResult out;
    const auto first = mem.fetch(pc, start);
    out.fetch_stall = first.stall;
    std::uint16_t second = 0;
    if(is_wide_prefix(first.value)) {
        const auto next = mem.fetch(pc + 2, start + out.fetch_stall);
        second = next.value;
        out.fetch_stall += next.stall;
    }
    out.instruction = decode(first.value, second, pc);

    // registers are committed only if the instruction completes
    CpuState next = state;
    Executor exec(next, mem, timing, out, start + out.fetch_stall);
    const unsigned base = exec.execute(out.instruction);

    next.pc() = exec.next_pc_;
    out.cycles = base + out.fetch_stall + out.data_stall;
    out.halted = out.halted || next.halted;
    next.halted = out.halted;
    next.cycle_count = start + out.cycles;
    state = next;

    counters.record_step(out);
    return out;
}

const char *to_string(ExitReason reason)
{
    switch(reason) {
    case ExitReason::halt: return "halt";
    case ExitReason::cycle_budget: return "cycle-budget";
    case ExitReason::fault: return "fault";
    }
    return "?";
}

RunSummary run(CpuState &state, MemorySystem &mem, CounterSet &counters, std::uint64_t max_cycles,
               const TimingTable &timing, const StepObserver &observer)
{
    RunSummary summary;
    try {
        while(!state.halted && state.cycle_count < max_cycles) {
            const auto step = execute_step(state, mem, counters, timing);
            if(observer)
                observer(step);
        }
        summary.exit_reason = state.halted ? ExitReason::halt : ExitReason::cycle_budget;
    } catch(const Error &e) {
        summary.exit_reason = ExitReason::fault;
        summary.fault_kind = e.kind();
        summary.fault_detail = e.what();
    }
    summary.counters = counters.snapshot();
    summary.cycle_count = state.cycle_count;
    return summary;
}

Machine::Machine(MemoryImage image, unsigned wait_states, bool prefetch, TimingTable timing)
    : mem_(std::move(image), wait_states, prefetch), timing_(timing), state_(reset(mem_.image()))
{}

RunSummary Machine::run(std::uint64_t max_cycles, const StepObserver &observer)
{
    return cm0::run(state_, mem_, counters_, max_cycles, timing_, observer);
}

StepResult Machine::step() { return execute_step(state_, mem_, counters_, timing_); }

} // namespace cm0
