#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace cm0 {

// ARMv6-M Thumb subset. Names follow the UAL mnemonic; register and immediate
// forms of the same mnemonic are distinct opcodes because they decode and
// time differently.
enum class Opcode : std::uint8_t {
    lsls_imm, lsrs_imm, asrs_imm,
    adds_reg, subs_reg, adds_imm3, subs_imm3,
    movs_imm, cmp_imm, adds_imm8, subs_imm8,
    ands, eors, lsls_reg, lsrs_reg, asrs_reg, adcs, sbcs, rors, tst, rsbs, cmp_reg, cmn, orrs, muls, bics, mvns,
    movs_reg,
    add_hi, cmp_hi, mov_hi, bx, blx,
    ldr_lit,
    str_reg, strh_reg, strb_reg, ldrsb_reg, ldr_reg, ldrh_reg, ldrb_reg, ldrsh_reg,
    str_imm, ldr_imm, strb_imm, ldrb_imm, strh_imm, ldrh_imm,
    str_sp, ldr_sp,
    adr, add_rd_sp,
    add_sp, sub_sp,
    sxth, sxtb, uxth, uxtb,
    rev, rev16, revsh,
    push, pop,
    stm, ldm,
    b_cond, b, bl,
    bkpt,
    nop, yield, wfe, wfi, sev,
};

inline constexpr int kOpcodeCount = static_cast<int>(Opcode::sev) + 1;

enum class Cond : std::uint8_t { eq, ne, cs, cc, mi, pl, vs, vc, hi, ls, ge, lt, gt, le, al };

std::string_view mnemonic(Opcode op);
std::string_view to_string(Cond cond);

namespace reg {
inline constexpr std::uint8_t sp = 13;
inline constexpr std::uint8_t lr = 14;
inline constexpr std::uint8_t pc = 15;
} // namespace reg

struct Instruction {
    Opcode op = Opcode::nop;
    std::uint8_t rd = 0;
    std::uint8_t rn = 0;
    std::uint8_t rm = 0;
    // Zero-extended immediate, already scaled to bytes. Branch offsets are
    // stored sign-extended (two's complement) relative to address + 4.
    std::uint32_t imm = 0;
    // Bits 0-7 low registers, bit 14 LR (PUSH), bit 15 PC (POP).
    std::uint16_t reg_list = 0;
    Cond cond = Cond::al;
    std::uint8_t width = 16;
    std::uint32_t address = 0;
    std::uint32_t raw = 0;

    std::uint32_t size_bytes() const { return width / 8u; }
    std::uint32_t next_address() const { return address + size_bytes(); }
    // Target of B, B<cond> and BL.
    std::uint32_t branch_target() const { return address + 4 + imm; }
    // Align(PC, 4) + imm for LDR (literal) and ADR.
    std::uint32_t literal_address() const { return ((address + 4) & ~3u) + imm; }
    int reg_count() const;

    bool writes_pc() const;
    bool is_control_transfer() const;
    bool is_multiply() const { return op == Opcode::muls; }
};

// True when `first` is the leading halfword of a 32-bit encoding.
constexpr bool is_wide_prefix(std::uint16_t first) { return (first & 0xF800) >= 0xE800; }

/// Decodes the instruction at `address`. `second` is only consulted for
/// 32-bit encodings (BL). Throws UndefinedInstruction for anything outside
/// the supported subset, including SVC, UDF and the system instructions.
Instruction decode(std::uint16_t first, std::uint16_t second, std::uint32_t address);

// UAL-style disassembly, e.g. "movs r0, #1", "ldr r2, [pc, #8]", "bne 0x8000010".
std::string disassemble(const Instruction &insn);

} // namespace cm0
