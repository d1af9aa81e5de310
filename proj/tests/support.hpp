#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cm0/cpu.hpp"
#include "cm0/memory.hpp"

namespace test {

inline std::vector<std::uint8_t> kernel_bytes(std::string_view name)
{
    const std::string path = std::string(CM0_KERNEL_DIR) + "/" + std::string(name) + ".bin";
    std::ifstream in(path, std::ios::binary);
    if(!in)
        throw std::runtime_error("missing kernel " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline cm0::MemoryImage kernel_image(std::string_view name)
{
    return cm0::MemoryImage::from_flat(kernel_bytes(name));
}

struct KernelRun {
    cm0::RunSummary summary;
    cm0::CpuState state;
    std::string output;
    std::vector<cm0::StepResult> trace;
};

inline KernelRun run_kernel(std::string_view name, unsigned ws, bool prefetch, std::uint64_t max_cycles = 1'000'000)
{
    cm0::Machine m(kernel_image(name), ws, prefetch);
    KernelRun r;
    r.summary = m.run(max_cycles, [&](const cm0::StepResult &s) { r.trace.push_back(s); });
    r.state = m.state();
    r.output = m.memory().output();
    return r;
}

// Image with a vector table (sp = 0x20002000, pc = 0x08000008) followed by
// the given halfwords.
inline cm0::MemoryImage program(std::initializer_list<std::uint16_t> code)
{
    std::vector<std::uint8_t> bytes{0x00, 0x20, 0x00, 0x20, 0x09, 0x00, 0x00, 0x08};
    for(auto hw : code) {
        bytes.push_back(std::uint8_t(hw));
        bytes.push_back(std::uint8_t(hw >> 8));
    }
    return cm0::MemoryImage::from_flat(bytes);
}

// Hand-traced expectations. Cycles are frozen for WS=0 and for WS=1 with
// PreFetch off; both are exact because no prefetch overlap is involved.
struct KernelExpectation {
    const char *name;
    std::uint64_t cycles_ws0;
    std::uint64_t cycles_ws1_off;
    std::uint32_t r0;
    std::array<std::uint64_t, 6> counters;
    const char *output;
    // every data access has a statically known region
    bool resolvable;
};

// Per-kernel traces (stalls in WS1/OFF = one per newly fetched word plus one
// per Flash data read):
//   straight    6 x 1                                      6 | +3 words          9
//   loop        2 + 4 x (1+1+3) + (1+1+1) + 1              26 | +1 +5 x 2        37
//   call        1 + 4 + 1 + 3 + 1 + 1                      11 | +6 words         17
//   ldst        2+1+2+2+1+2+2+1                            13 | +4 words +1 lit  18
//   pushpop     1+1+4 + 3+1+1+1+5 + 1                      18 | +6 words         24
//   mulloop     3 + 3 x (1+1+3) + 3 + 1                    22 | +10 words        32
//   stackframe  1+1+2+1+2+2+2+1+1+1                        14 | +5 words         19
//   literal     2+2+1+2+1+1                                 9 | +3 words +3 lit  15
//   copy        5 + 3 x 10 + 8 + 1                         44 | +17 words +6 rd  67
//   debugout    2+1+2+1+2+1                                 9 | +3 words +1 lit  13
//   flags       10 x 1                                     10 | +5 words         15
//   ldmstm      2+1+1+1+4+1+4+1+1+1                        17 | +5 words +1 lit  23
//   indirect    1+1+1+3+1+3+1                              11 | +4 words         15
inline constexpr std::array<KernelExpectation, 13> kKernels{{
    {"straight", 6, 9, 8, {6, 0, 0, 0, 0, 0}, "", true},
    {"loop", 26, 37, 15, {18, 0, 4, 0, 0, 0}, "", true},
    {"call", 11, 17, 7, {6, 0, 2, 0, 0, 0}, "", true},
    {"ldst", 13, 18, 0x20000100, {8, 0, 0, 2, 2, 1}, "", false},
    {"pushpop", 18, 24, 10, {8, 1, 2, 2, 2, 0}, "", true},
    {"mulloop", 22, 32, 81, {12, 4, 3, 0, 0, 0}, "", true},
    {"stackframe", 14, 19, 16, {10, 0, 0, 2, 2, 0}, "", true},
    {"literal", 9, 15, 0x369D0398, {5, 1, 0, 0, 0, 3}, "", true},
    {"copy", 44, 67, 0x08000028, {28, 0, 3, 0, 4, 6}, "", false},
    {"debugout", 9, 13, 105, {6, 0, 0, 0, 0, 1}, "Hi", false},
    {"flags", 10, 15, 0xC0000000, {10, 0, 0, 0, 0, 0}, "", true},
    {"ldmstm", 17, 23, 0x2000000C, {10, 0, 0, 3, 3, 1}, "", false},
    {"indirect", 11, 15, 7, {7, 0, 2, 0, 0, 0}, "", false},
}};

// The ten (frequency, prefetch, ws) combinations, independent of the library.
struct Config {
    int mhz;
    bool prefetch;
    int ws;
};
inline constexpr std::array<Config, 10> kConfigs{{
    {20, false, 0}, {20, false, 1}, {20, true, 0}, {20, true, 1}, {24, false, 0},
    {24, false, 1}, {24, true, 0}, {24, true, 1}, {48, false, 1}, {48, true, 1},
}};

} // namespace test
