#include "cm0/isa.hpp"

#include <array>
#include <cctype>
#include <bit>
#include <cstdio>

#include "cm0/error.hpp"

namespace cm0 {

namespace {

constexpr std::uint32_t sign_extend(std::uint32_t value, int bits)
{
    const std::uint32_t m = 1u << (bits - 1);
    value &= (1u << bits) - 1;
    return (value ^ m) - m;
}

constexpr std::uint8_t low3(std::uint32_t hw, int shift) { return static_cast<std::uint8_t>((hw >> shift) & 7); }

[[noreturn]] void undefined(std::uint32_t address, std::uint32_t raw) { throw UndefinedInstruction(address, raw); }

Instruction decode_misc(Instruction insn, std::uint16_t hw)
{
    if((hw & 0xFF00) == 0xB000) {
        insn.op = (hw & 0x80) ? Opcode::sub_sp : Opcode::add_sp;
        insn.rd = reg::sp;
        insn.imm = (hw & 0x7F) * 4u;
        return insn;
    }
    if((hw & 0xFF00) == 0xB200) {
        static constexpr std::array ops{Opcode::sxth, Opcode::sxtb, Opcode::uxth, Opcode::uxtb};
        insn.op = ops[(hw >> 6) & 3];
        insn.rm = low3(hw, 3);
        insn.rd = low3(hw, 0);
        return insn;
    }
    if((hw & 0xFE00) == 0xB400 || (hw & 0xFE00) == 0xBC00) {
        const bool is_pop = hw & 0x0800;
        insn.op = is_pop ? Opcode::pop : Opcode::push;
        insn.reg_list = hw & 0xFF;
        if(hw & 0x100)
            insn.reg_list |= is_pop ? 0x8000 : 0x4000;
        if(insn.reg_list == 0)
            undefined(insn.address, hw);
        return insn;
    }
    if((hw & 0xFF00) == 0xBA00) {
        switch((hw >> 6) & 3) {
        case 0: insn.op = Opcode::rev; break;
        case 1: insn.op = Opcode::rev16; break;
        case 3: insn.op = Opcode::revsh; break;
        default: undefined(insn.address, hw);
        }
        insn.rm = low3(hw, 3);
        insn.rd = low3(hw, 0);
        return insn;
    }
    if((hw & 0xFF00) == 0xBE00) {
        insn.op = Opcode::bkpt;
        insn.imm = hw & 0xFF;
        return insn;
    }
    if((hw & 0xFF00) == 0xBF00) {
        // IT does not exist on ARMv6-M
        if(hw & 0xF)
            undefined(insn.address, hw);
        switch((hw >> 4) & 0xF) {
        case 1: insn.op = Opcode::yield; break;
        case 2: insn.op = Opcode::wfe; break;
        case 3: insn.op = Opcode::wfi; break;
        case 4: insn.op = Opcode::sev; break;
        default: insn.op = Opcode::nop; break;
        }
        return insn;
    }
    // CPS, CBZ/CBNZ (v7-M) and the rest of the space
    undefined(insn.address, hw);
}

Instruction decode_bl(Instruction insn, std::uint16_t first, std::uint16_t second)
{
    insn.width = 32;
    insn.raw = (std::uint32_t(first) << 16) | second;
    // BL is the only 32-bit encoding in scope; MSR/MRS/barriers fall through
    if((first & 0xF800) != 0xF000 || (second & 0xD000) != 0xD000)
        undefined(insn.address, insn.raw);

    const std::uint32_t s = (first >> 10) & 1;
    const std::uint32_t j1 = (second >> 13) & 1;
    const std::uint32_t j2 = (second >> 11) & 1;
    const std::uint32_t i1 = ~(j1 ^ s) & 1;
    const std::uint32_t i2 = ~(j2 ^ s) & 1;
    const std::uint32_t offset = (s << 24) | (i1 << 23) | (i2 << 22) | ((first & 0x3FFu) << 12) | ((second & 0x7FFu) << 1);
    insn.op = Opcode::bl;
    insn.imm = sign_extend(offset, 25);
    return insn;
}

std::string reg_name(unsigned r)
{
    switch(r) {
    case reg::sp: return "sp";
    case reg::lr: return "lr";
    case reg::pc: return "pc";
    default: return "r" + std::to_string(r);
    }
}

std::string reg_list_text(std::uint16_t list)
{
    std::string out = "{";
    for(unsigned r = 0; r < 16; ++r) {
        if(!(list & (1u << r)))
            continue;
        if(out.size() > 1)
            out += ", ";
        out += reg_name(r);
    }
    return out + "}";
}

std::string hex(std::uint32_t v)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%x", v);
    return buf;
}

} // namespace

int Instruction::reg_count() const { return std::popcount(reg_list); }

bool Instruction::writes_pc() const
{
    switch(op) {
    case Opcode::add_hi:
    case Opcode::mov_hi: return rd == reg::pc;
    case Opcode::pop: return reg_list & 0x8000;
    case Opcode::bx:
    case Opcode::blx:
    case Opcode::b:
    case Opcode::b_cond:
    case Opcode::bl: return true;
    default: return false;
    }
}

bool Instruction::is_control_transfer() const { return writes_pc(); }

Instruction decode(std::uint16_t first, std::uint16_t second, std::uint32_t address)
{
    Instruction insn;
    insn.address = address;
    insn.raw = first;
    const std::uint16_t hw = first;

    if(is_wide_prefix(hw))
        return decode_bl(insn, first, second);

    switch(hw >> 13) {
    case 0b000: {
        const unsigned op = (hw >> 11) & 3;
        if(op == 3) {
            const bool imm = hw & 0x400;
            const bool sub = hw & 0x200;
            insn.op = imm ? (sub ? Opcode::subs_imm3 : Opcode::adds_imm3) : (sub ? Opcode::subs_reg : Opcode::adds_reg);
            insn.rm = low3(hw, 6);
            insn.imm = low3(hw, 6);
            insn.rn = low3(hw, 3);
            insn.rd = low3(hw, 0);
            return insn;
        }
        std::uint32_t imm5 = (hw >> 6) & 0x1F;
        insn.rm = low3(hw, 3);
        insn.rd = low3(hw, 0);
        if(op == 0 && imm5 == 0) {
            insn.op = Opcode::movs_reg;
            return insn;
        }
        if(op != 0 && imm5 == 0)
            imm5 = 32;
        static constexpr std::array ops{Opcode::lsls_imm, Opcode::lsrs_imm, Opcode::asrs_imm};
        insn.op = ops[op];
        insn.imm = imm5;
        return insn;
    }
    case 0b001: {
        static constexpr std::array ops{Opcode::movs_imm, Opcode::cmp_imm, Opcode::adds_imm8, Opcode::subs_imm8};
        insn.op = ops[(hw >> 11) & 3];
        insn.rd = low3(hw, 8);
        insn.rn = insn.rd;
        insn.imm = hw & 0xFF;
        return insn;
    }
    case 0b010: {
        if((hw & 0xFC00) == 0x4000) {
            static constexpr std::array ops{Opcode::ands, Opcode::eors, Opcode::lsls_reg, Opcode::lsrs_reg,
                                            Opcode::asrs_reg, Opcode::adcs, Opcode::sbcs, Opcode::rors,
                                            Opcode::tst, Opcode::rsbs, Opcode::cmp_reg, Opcode::cmn,
                                            Opcode::orrs, Opcode::muls, Opcode::bics, Opcode::mvns};
            insn.op = ops[(hw >> 6) & 0xF];
            insn.rm = low3(hw, 3);
            insn.rd = low3(hw, 0);
            insn.rn = insn.rd;
            return insn;
        }
        if((hw & 0xFC00) == 0x4400) {
            const unsigned op = (hw >> 8) & 3;
            insn.rm = (hw >> 3) & 0xF;
            if(op == 3) {
                if(hw & 7)
                    undefined(address, hw);
                insn.op = (hw & 0x80) ? Opcode::blx : Opcode::bx;
                if(insn.op == Opcode::blx && insn.rm == reg::pc)
                    undefined(address, hw);
                return insn;
            }
            insn.rd = static_cast<std::uint8_t>(((hw >> 4) & 8) | (hw & 7));
            insn.rn = insn.rd;
            static constexpr std::array ops{Opcode::add_hi, Opcode::cmp_hi, Opcode::mov_hi};
            insn.op = ops[op];
            return insn;
        }
        if((hw & 0xF800) == 0x4800) {
            insn.op = Opcode::ldr_lit;
            insn.rd = low3(hw, 8);
            insn.rn = reg::pc;
            insn.imm = (hw & 0xFF) * 4u;
            return insn;
        }
        static constexpr std::array ops{Opcode::str_reg, Opcode::strh_reg, Opcode::strb_reg, Opcode::ldrsb_reg,
                                        Opcode::ldr_reg, Opcode::ldrh_reg, Opcode::ldrb_reg, Opcode::ldrsh_reg};
        insn.op = ops[(hw >> 9) & 7];
        insn.rm = low3(hw, 6);
        insn.rn = low3(hw, 3);
        insn.rd = low3(hw, 0);
        return insn;
    }
    case 0b011: {
        const bool byte = hw & 0x1000;
        const bool load = hw & 0x0800;
        insn.op = byte ? (load ? Opcode::ldrb_imm : Opcode::strb_imm) : (load ? Opcode::ldr_imm : Opcode::str_imm);
        insn.imm = ((hw >> 6) & 0x1Fu) * (byte ? 1u : 4u);
        insn.rn = low3(hw, 3);
        insn.rd = low3(hw, 0);
        return insn;
    }
    case 0b100: {
        const bool load = hw & 0x0800;
        if(hw & 0x1000) {
            insn.op = load ? Opcode::ldr_sp : Opcode::str_sp;
            insn.rd = low3(hw, 8);
            insn.rn = reg::sp;
            insn.imm = (hw & 0xFF) * 4u;
        } else {
            insn.op = load ? Opcode::ldrh_imm : Opcode::strh_imm;
            insn.imm = ((hw >> 6) & 0x1Fu) * 2u;
            insn.rn = low3(hw, 3);
            insn.rd = low3(hw, 0);
        }
        return insn;
    }
    case 0b101: {
        if((hw & 0xF000) == 0xA000) {
            insn.op = (hw & 0x0800) ? Opcode::add_rd_sp : Opcode::adr;
            insn.rd = low3(hw, 8);
            insn.rn = (hw & 0x0800) ? reg::sp : reg::pc;
            insn.imm = (hw & 0xFF) * 4u;
            return insn;
        }
        return decode_misc(insn, hw);
    }
    case 0b110: {
        if((hw & 0xF000) == 0xC000) {
            insn.op = (hw & 0x0800) ? Opcode::ldm : Opcode::stm;
            insn.rn = low3(hw, 8);
            insn.reg_list = hw & 0xFF;
            if(insn.reg_list == 0)
                undefined(address, hw);
            return insn;
        }
        const unsigned cond = (hw >> 8) & 0xF;
        // 0xDE = UDF, 0xDF = SVC
        if(cond >= 0xE)
            undefined(address, hw);
        insn.op = Opcode::b_cond;
        insn.cond = static_cast<Cond>(cond);
        insn.imm = sign_extend((hw & 0xFFu) << 1, 9);
        return insn;
    }
    default: // 0b111, only B below 0xE800
        insn.op = Opcode::b;
        insn.imm = sign_extend((hw & 0x7FFu) << 1, 12);
        return insn;
    }
}

std::string_view mnemonic(Opcode op)
{
    switch(op) {
    case Opcode::lsls_imm:
    case Opcode::lsls_reg: return "LSLS";
    case Opcode::lsrs_imm:
    case Opcode::lsrs_reg: return "LSRS";
    case Opcode::asrs_imm:
    case Opcode::asrs_reg: return "ASRS";
    case Opcode::adds_reg:
    case Opcode::adds_imm3:
    case Opcode::adds_imm8: return "ADDS";
    case Opcode::subs_reg:
    case Opcode::subs_imm3:
    case Opcode::subs_imm8: return "SUBS";
    case Opcode::movs_imm:
    case Opcode::movs_reg: return "MOVS";
    case Opcode::cmp_imm:
    case Opcode::cmp_reg:
    case Opcode::cmp_hi: return "CMP";
    case Opcode::ands: return "ANDS";
    case Opcode::eors: return "EORS";
    case Opcode::adcs: return "ADCS";
    case Opcode::sbcs: return "SBCS";
    case Opcode::rors: return "RORS";
    case Opcode::tst: return "TST";
    case Opcode::rsbs: return "RSBS";
    case Opcode::cmn: return "CMN";
    case Opcode::orrs: return "ORRS";
    case Opcode::muls: return "MULS";
    case Opcode::bics: return "BICS";
    case Opcode::mvns: return "MVNS";
    case Opcode::add_hi:
    case Opcode::add_rd_sp:
    case Opcode::add_sp: return "ADD";
    case Opcode::mov_hi: return "MOV";
    case Opcode::bx: return "BX";
    case Opcode::blx: return "BLX";
    case Opcode::ldr_lit:
    case Opcode::ldr_reg:
    case Opcode::ldr_imm:
    case Opcode::ldr_sp: return "LDR";
    case Opcode::str_reg:
    case Opcode::str_imm:
    case Opcode::str_sp: return "STR";
    case Opcode::strh_reg:
    case Opcode::strh_imm: return "STRH";
    case Opcode::strb_reg:
    case Opcode::strb_imm: return "STRB";
    case Opcode::ldrsb_reg: return "LDRSB";
    case Opcode::ldrh_reg:
    case Opcode::ldrh_imm: return "LDRH";
    case Opcode::ldrb_reg:
    case Opcode::ldrb_imm: return "LDRB";
    case Opcode::ldrsh_reg: return "LDRSH";
    case Opcode::adr: return "ADR";
    case Opcode::sub_sp: return "SUB";
    case Opcode::sxth: return "SXTH";
    case Opcode::sxtb: return "SXTB";
    case Opcode::uxth: return "UXTH";
    case Opcode::uxtb: return "UXTB";
    case Opcode::rev: return "REV";
    case Opcode::rev16: return "REV16";
    case Opcode::revsh: return "REVSH";
    case Opcode::push: return "PUSH";
    case Opcode::pop: return "POP";
    case Opcode::stm: return "STM";
    case Opcode::ldm: return "LDM";
    case Opcode::b_cond: return "B<c>";
    case Opcode::b: return "B";
    case Opcode::bl: return "BL";
    case Opcode::bkpt: return "BKPT";
    case Opcode::nop: return "NOP";
    case Opcode::yield: return "YIELD";
    case Opcode::wfe: return "WFE";
    case Opcode::wfi: return "WFI";
    case Opcode::sev: return "SEV";
    }
    return "?";
}

std::string_view to_string(Cond cond)
{
    static constexpr std::array<std::string_view, 15> names{"eq", "ne", "cs", "cc", "mi", "pl", "vs", "vc",
                                                            "hi", "ls", "ge", "lt", "gt", "le", ""};
    return names[static_cast<unsigned>(cond)];
}

std::string disassemble(const Instruction &i)
{
    const auto rd = reg_name(i.rd);
    const auto rn = reg_name(i.rn);
    const auto rm = reg_name(i.rm);
    const auto imm = "#" + std::to_string(i.imm);

    std::string name{mnemonic(i.op)};
    for(auto &ch : name)
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));

    switch(i.op) {
    case Opcode::lsls_imm:
    case Opcode::lsrs_imm:
    case Opcode::asrs_imm: return name + " " + rd + ", " + rm + ", " + imm;
    case Opcode::adds_reg:
    case Opcode::subs_reg: return name + " " + rd + ", " + rn + ", " + rm;
    case Opcode::adds_imm3:
    case Opcode::subs_imm3: return name + " " + rd + ", " + rn + ", " + imm;
    case Opcode::movs_imm:
    case Opcode::cmp_imm:
    case Opcode::adds_imm8:
    case Opcode::subs_imm8: return name + " " + rd + ", " + imm;
    case Opcode::muls: return name + " " + rd + ", " + rm + ", " + rd;
    case Opcode::rsbs: return name + " " + rd + ", " + rm + ", #0";
    case Opcode::bx:
    case Opcode::blx: return name + " " + rm;
    case Opcode::ldr_lit: return name + " " + rd + ", [pc, " + imm + "]";
    case Opcode::str_reg:
    case Opcode::strh_reg:
    case Opcode::strb_reg:
    case Opcode::ldrsb_reg:
    case Opcode::ldr_reg:
    case Opcode::ldrh_reg:
    case Opcode::ldrb_reg:
    case Opcode::ldrsh_reg: return name + " " + rd + ", [" + rn + ", " + rm + "]";
    case Opcode::str_imm:
    case Opcode::ldr_imm:
    case Opcode::strb_imm:
    case Opcode::ldrb_imm:
    case Opcode::strh_imm:
    case Opcode::ldrh_imm:
    case Opcode::str_sp:
    case Opcode::ldr_sp: return name + " " + rd + ", [" + rn + ", " + imm + "]";
    case Opcode::adr: return "adr " + rd + ", " + imm;
    case Opcode::add_rd_sp: return name + " " + rd + ", sp, " + imm;
    case Opcode::add_sp:
    case Opcode::sub_sp: return name + " sp, " + imm;
    case Opcode::push:
    case Opcode::pop: return name + " " + reg_list_text(i.reg_list);
    case Opcode::stm: return "stm " + rn + "!, " + reg_list_text(i.reg_list);
    case Opcode::ldm:
        return "ldm " + rn + ((i.reg_list & (1u << i.rn)) ? ", " : "!, ") + reg_list_text(i.reg_list);
    case Opcode::b_cond: return "b" + std::string(to_string(i.cond)) + " " + hex(i.branch_target());
    case Opcode::b:
    case Opcode::bl: return name + " " + hex(i.branch_target());
    case Opcode::bkpt: return name + " " + imm;
    case Opcode::nop:
    case Opcode::yield:
    case Opcode::wfe:
    case Opcode::wfi:
    case Opcode::sev: return name;
    default: return name + " " + rd + ", " + rm;
    }
}

} // namespace cm0
