#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <string>

#include "cm0/error.hpp"
#include "cm0/isa.hpp"
#include "support.hpp"

using namespace cm0;

TEST_CASE("movs immediate")
{
    const auto i = decode(0x2001, 0, 0x08000000);
    CHECK(i.op == Opcode::movs_imm);
    CHECK(i.rd == 0);
    CHECK(i.imm == 1);
    CHECK(i.width == 16);
    CHECK(disassemble(i) == "movs r0, #1");
}

TEST_CASE("muls")
{
    const auto i = decode(0x4348, 0, 0x08000002);
    CHECK(i.op == Opcode::muls);
    CHECK(i.is_multiply());
    CHECK(mnemonic(i.op) == "MULS");
    CHECK(disassemble(i) == "muls r0, r1, r0");
}

TEST_CASE("permanently undefined")
{
    try {
        decode(0xDE00, 0, 0x08000004);
        FAIL("no error");
    } catch(const UndefinedInstruction &e) {
        CHECK(e.kind() == ErrorKind::undefined_instruction);
        CHECK(e.address() == 0x08000004);
        CHECK(e.raw() == 0xDE00);
    }
}

TEST_CASE("encodings outside the subset are undefined")
{
    // svc, cps, cbz (v7-M), it (v7-M), mrs (32-bit), udf.w
    for(auto [a, b] : {std::pair<std::uint16_t, std::uint16_t>{0xDF00, 0}, {0xB672, 0}, {0xB100, 0}, {0xBF08, 0},
                       {0xF3EF, 0x8000}, {0xF7F0, 0xA000}}) {
        CAPTURE(a);
        CHECK_THROWS_AS(decode(a, b, 0x08000000), UndefinedInstruction);
    }
}

TEST_CASE("bl is the only 32-bit instruction")
{
    CHECK(is_wide_prefix(0xF000));
    CHECK(is_wide_prefix(0xE800));
    CHECK_FALSE(is_wide_prefix(0xE7FE));
    const auto i = decode(0xF000, 0xF802, 0x08000010);
    CHECK(i.op == Opcode::bl);
    CHECK(i.width == 32);
    CHECK(i.next_address() == 0x08000014);
    CHECK(i.branch_target() == 0x08000018);
}

TEST_CASE("branch offsets")
{
    CHECK(decode(0xE7FE, 0, 0x08000100).branch_target() == 0x08000100); // b .
    CHECK(decode(0xD1FE, 0, 0x08000100).branch_target() == 0x08000100); // bne .
    CHECK(decode(0xD1FE, 0, 0x08000100).cond == Cond::ne);
}

TEST_CASE("literal address is word aligned")
{
    // ldr r0, [pc, #0] at a halfword-aligned address
    CHECK(decode(0x4800, 0, 0x0800000A).literal_address() == 0x0800000C);
    CHECK(decode(0x4800, 0, 0x08000008).literal_address() == 0x0800000C);
}

TEST_CASE("pc-writing forms are control transfers")
{
    CHECK(decode(0x46F7, 0, 0).is_control_transfer()); // mov pc, lr
    CHECK(decode(0xBD10, 0, 0).is_control_transfer()); // pop {r4, pc}
    CHECK_FALSE(decode(0xBC10, 0, 0).is_control_transfer()); // pop {r4}
    CHECK(decode(0x4770, 0, 0).is_control_transfer()); // bx lr
}

// Every line of decode_corpus.s is assembled by clang; decoding the bytes and
// printing them must give back the line.
TEST_CASE("assembler round trip")
{
    std::ifstream src(std::string(CM0_KERNEL_SRC_DIR) + "/decode_corpus.s");
    REQUIRE(src);
    std::vector<std::string> lines;
    bool in_code = false;
    for(std::string line; std::getline(src, line);) {
        if(line == "_start:") {
            in_code = true;
            continue;
        }
        if(!in_code || line.empty() || line[0] != '\t')
            continue;
        lines.push_back(line.substr(1));
    }
    REQUIRE(lines.size() > 90);

    const auto bytes = test::kernel_bytes("decode_corpus");
    const auto half = [&](std::size_t off) { return std::uint16_t(bytes.at(off) | bytes.at(off + 1) << 8); };

    std::size_t off = 0;
    for(const auto &line : lines) {
        CAPTURE(line);
        const std::uint32_t addr = 0x08000000 + std::uint32_t(off);
        const auto first = half(off);
        const auto insn = decode(first, is_wide_prefix(first) ? half(off + 2) : 0, addr);

        std::string expected = line;
        if(const auto hash = line.find(" #"); hash != std::string::npos && line[0] == 'b' && line.rfind("bkpt", 0)) {
            const long offset = std::stol(line.substr(hash + 2));
            char buf[16];
            std::snprintf(buf, sizeof buf, "0x%x", std::uint32_t(addr + 4 + offset));
            expected = line.substr(0, hash) + " " + buf;
        }
        CHECK(disassemble(insn) == expected);
        off += insn.size_bytes();
    }
    CHECK(off == bytes.size());
}
