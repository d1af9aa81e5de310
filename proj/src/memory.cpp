#include "cm0/memory.hpp"

#include <algorithm>
#include <utility>

#include "cm0/error.hpp"

namespace cm0 {

namespace {

bool within(std::uint32_t addr, std::uint32_t size, std::uint32_t base, std::uint32_t length)
{
    const std::uint64_t lo = addr;
    const std::uint64_t hi = lo + size;
    return lo >= base && hi <= std::uint64_t(base) + length;
}

void check_alignment(std::uint32_t addr, unsigned size)
{
    if(size > 1 && addr % size != 0)
        throw Error(ErrorKind::alignment_fault, "unaligned " + std::to_string(size) + "-byte access at " + hex32(addr));
}

[[noreturn]] void unmapped(std::uint32_t addr)
{
    throw Error(ErrorKind::memory_fault, "access to unmapped address " + hex32(addr));
}

} // namespace

const char *to_string(AccessRegion region)
{
    switch(region) {
    case AccessRegion::ram: return "ram";
    case AccessRegion::flash: return "flash";
    case AccessRegion::debug_port: return "debug";
    }
    return "?";
}

MemoryImage::MemoryImage(MemoryLayout layout)
    : layout_(layout), flash_(layout.flash_size, 0), ram_(layout.ram_size, 0)
{
    if(layout.flash_size == 0 || layout.flash_size > kRamBase - kFlashBase)
        throw Error(ErrorKind::malformed_image, "flash size out of range");
    if(layout.ram_size == 0 || layout.ram_size > kDebugPort - kRamBase)
        throw Error(ErrorKind::malformed_image, "ram size out of range");
}

MemoryImage MemoryImage::from_flat(std::span<const std::uint8_t> bytes, MemoryLayout layout)
{
    MemoryImage image(layout);
    if(bytes.size() > layout.flash_size)
        throw Error(ErrorKind::malformed_image, "binary of " + std::to_string(bytes.size()) +
                                                    " bytes does not fit in " + std::to_string(layout.flash_size) +
                                                    " bytes of flash");
    std::copy(bytes.begin(), bytes.end(), image.flash_.begin());
    image.loaded_size_ = bytes.size();
    return image;
}

Region MemoryImage::classify(std::uint32_t addr, std::uint32_t size) const
{
    if(within(addr, size, kFlashBase, layout_.flash_size))
        return Region::flash;
    if(within(addr, size, kAliasBase, layout_.flash_size))
        return Region::alias;
    if(within(addr, size, kRamBase, layout_.ram_size))
        return Region::ram;
    if(within(addr, size, kDebugPort, 4))
        return Region::debug_port;
    return Region::unmapped;
}

const std::uint8_t *MemoryImage::locate(std::uint32_t addr, unsigned size) const
{
    check_alignment(addr, size);
    switch(classify(addr, size)) {
    case Region::flash: return flash_.data() + (addr - kFlashBase);
    case Region::alias: return flash_.data() + (addr - kAliasBase);
    case Region::ram: return ram_.data() + (addr - kRamBase);
    default: unmapped(addr);
    }
}

std::uint8_t *MemoryImage::locate(std::uint32_t addr, unsigned size)
{
    return const_cast<std::uint8_t *>(std::as_const(*this).locate(addr, size));
}

std::uint32_t MemoryImage::peek(std::uint32_t addr, unsigned size) const
{
    const auto *p = locate(addr, size);
    std::uint32_t value = 0;
    for(unsigned i = 0; i < size; ++i)
        value |= std::uint32_t(p[i]) << (8 * i);
    return value;
}

void MemoryImage::poke(std::uint32_t addr, unsigned size, std::uint32_t value)
{
    auto *p = locate(addr, size);
    for(unsigned i = 0; i < size; ++i)
        p[i] = static_cast<std::uint8_t>(value >> (8 * i));
}

FetchUnit::FetchUnit(unsigned wait_states, bool prefetch_enabled) : wait_states_(wait_states), prefetch_(prefetch_enabled)
{
    if(wait_states > 1)
        throw Error(ErrorKind::invalid_config, "wait states must be 0 or 1");
}

bool FetchUnit::sequential(std::uint32_t addr) const { return have_last_ && addr == last_fetch_ + 2; }

void FetchUnit::invalidate()
{
    current_valid_ = false;
    ahead_valid_ = false;
}

unsigned FetchUnit::fetch_flash(std::uint32_t addr, std::uint64_t now)
{
    if(!sequential(addr))
        invalidate();
    have_last_ = true;
    last_fetch_ = addr;

    const std::uint32_t word = addr & ~3u;
    if(current_valid_ && word == current_word_)
        return 0;

    unsigned stall = wait_states_;
    if(prefetch_ && ahead_valid_ && word == ahead_word_)
        stall = ahead_ready_at_ > now ? static_cast<unsigned>(ahead_ready_at_ - now) : 0;

    current_valid_ = true;
    current_word_ = word;
    if(prefetch_) {
        // the next word starts filling once the current one has arrived
        ahead_valid_ = true;
        ahead_word_ = word + 4;
        ahead_ready_at_ = now + stall + wait_states_;
    }
    return stall;
}

void FetchUnit::fetch_other(std::uint32_t addr)
{
    have_last_ = true;
    last_fetch_ = addr;
}

std::optional<std::uint32_t> FetchUnit::buffered_word() const
{
    return current_valid_ ? std::optional(current_word_) : std::nullopt;
}

std::optional<std::uint32_t> FetchUnit::prefetched_word() const
{
    return ahead_valid_ ? std::optional(ahead_word_) : std::nullopt;
}

MemorySystem::MemorySystem(MemoryImage image, unsigned wait_states, bool prefetch_enabled)
    : image_(std::move(image)), fetch_(wait_states, prefetch_enabled)
{}

FetchResult MemorySystem::fetch(std::uint32_t addr, std::uint64_t now)
{
    check_alignment(addr, 2);
    switch(image_.classify(addr, 2)) {
    case Region::flash:
    case Region::alias: {
        const auto value = static_cast<std::uint16_t>(image_.peek(addr, 2));
        return {value, fetch_.fetch_flash(addr, now)};
    }
    case Region::ram: {
        const auto value = static_cast<std::uint16_t>(image_.peek(addr, 2));
        fetch_.fetch_other(addr);
        return {value, 0};
    }
    default: unmapped(addr);
    }
}

ReadResult MemorySystem::read(std::uint32_t addr, unsigned size, std::uint64_t)
{
    check_alignment(addr, size);
    switch(image_.classify(addr, size)) {
    case Region::flash:
    case Region::alias:
        // data reads stall the core but leave the fetch buffer alone
        return {image_.peek(addr, size), fetch_.wait_states(), AccessRegion::flash};
    case Region::ram: return {image_.peek(addr, size), 0, AccessRegion::ram};
    default: unmapped(addr);
    }
}

WriteResult MemorySystem::write(std::uint32_t addr, unsigned size, std::uint32_t value, std::uint64_t)
{
    check_alignment(addr, size);
    switch(image_.classify(addr, size)) {
    case Region::flash:
    case Region::alias: throw Error(ErrorKind::flash_write_fault, "write to flash at " + hex32(addr));
    case Region::ram: image_.poke(addr, size, value); return {0, AccessRegion::ram};
    case Region::debug_port: output_.push_back(static_cast<char>(value & 0xFF)); return {0, AccessRegion::debug_port};
    default: unmapped(addr);
    }
}

} // namespace cm0
