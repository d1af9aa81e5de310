#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cm0 {

inline constexpr std::uint32_t kFlashBase = 0x0800'0000;
inline constexpr std::uint32_t kRamBase = 0x2000'0000;
inline constexpr std::uint32_t kAliasBase = 0x0000'0000;
// Debug byte port: every write appends its low byte to the captured output.
inline constexpr std::uint32_t kDebugPort = 0x4000'0000;

inline constexpr std::uint32_t kDefaultFlashSize = 64 * 1024;
inline constexpr std::uint32_t kDefaultRamSize = 8 * 1024;

enum class Region { flash, alias, ram, debug_port, unmapped };

// What the counters see: alias reads are Flash reads.
enum class AccessRegion : std::uint8_t { ram, flash, debug_port };

const char *to_string(AccessRegion region);

struct MemoryLayout {
    std::uint32_t flash_size = kDefaultFlashSize;
    std::uint32_t ram_size = kDefaultRamSize;
};

// Flash and RAM contents of an STM32F0 part. Flash is mirrored at 0x0.
class MemoryImage {
public:
    explicit MemoryImage(MemoryLayout layout = {});

    // Places a flat binary at the start of Flash (vector table at offset 0).
    static MemoryImage from_flat(std::span<const std::uint8_t> bytes, MemoryLayout layout = {});

    const MemoryLayout &layout() const { return layout_; }
    // Number of bytes the loaded binary occupies in Flash.
    std::size_t loaded_size() const { return loaded_size_; }

    Region classify(std::uint32_t addr, std::uint32_t size = 1) const;

    // Untimed little-endian access, used by the loader, reset and static analysis.
    // Throws memory/alignment faults like the timed path.
    std::uint32_t peek(std::uint32_t addr, unsigned size) const;
    void poke(std::uint32_t addr, unsigned size, std::uint32_t value);

    std::span<const std::uint8_t> flash() const { return flash_; }
    std::span<const std::uint8_t> ram() const { return ram_; }

private:
    std::uint8_t *locate(std::uint32_t addr, unsigned size);
    const std::uint8_t *locate(std::uint32_t addr, unsigned size) const;

    MemoryLayout layout_;
    std::vector<std::uint8_t> flash_;
    std::vector<std::uint8_t> ram_;
    std::size_t loaded_size_ = 0;
};

// Flash-side instruction fetch path: one current word plus, with PreFetch on,
// one word being filled ahead of the core.
class FetchUnit {
public:
    FetchUnit(unsigned wait_states, bool prefetch_enabled);

    // Stall for fetching the halfword at `addr` from Flash at cycle `now`.
    unsigned fetch_flash(std::uint32_t addr, std::uint64_t now);
    // Fetches from RAM never stall; they still break the sequential stream.
    void fetch_other(std::uint32_t addr);
    void invalidate();

    unsigned wait_states() const { return wait_states_; }
    bool prefetch_enabled() const { return prefetch_; }
    std::optional<std::uint32_t> buffered_word() const;
    std::optional<std::uint32_t> prefetched_word() const;

private:
    bool sequential(std::uint32_t addr) const;

    unsigned wait_states_;
    bool prefetch_;

    bool current_valid_ = false;
    std::uint32_t current_word_ = 0;
    bool ahead_valid_ = false;
    std::uint32_t ahead_word_ = 0;
    std::uint64_t ahead_ready_at_ = 0;

    bool have_last_ = false;
    std::uint32_t last_fetch_ = 0;
};

struct FetchResult {
    std::uint16_t value;
    unsigned stall;
};

struct ReadResult {
    std::uint32_t value;
    unsigned stall;
    AccessRegion region;
};

struct WriteResult {
    unsigned stall;
    AccessRegion region;
};

// Timed view of a MemoryImage for one simulator instance.
class MemorySystem {
public:
    MemorySystem(MemoryImage image, unsigned wait_states, bool prefetch_enabled);

    FetchResult fetch(std::uint32_t addr, std::uint64_t now);
    ReadResult read(std::uint32_t addr, unsigned size, std::uint64_t now);
    WriteResult write(std::uint32_t addr, unsigned size, std::uint32_t value, std::uint64_t now);

    const MemoryImage &image() const { return image_; }
    MemoryImage &image() { return image_; }
    const FetchUnit &fetch_unit() const { return fetch_; }
    const std::string &output() const { return output_; }

private:
    MemoryImage image_;
    FetchUnit fetch_;
    std::string output_;
};

} // namespace cm0
