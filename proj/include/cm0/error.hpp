#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cm0 {

enum class ErrorKind {
    malformed_image,
    bad_entry,
    undefined_instruction,
    memory_fault,
    alignment_fault,
    flash_write_fault,
    invalid_config,
    degenerate_design,
    dataset_size,
    length_mismatch,
    zero_actual,
    analysis_error,
    path_error,
    parse_error,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (and tests)
// can branch on it without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Undefined encodings keep the raw bits and where they were found.
class UndefinedInstruction : public Error {
public:
    UndefinedInstruction(std::uint32_t address, std::uint32_t raw);

    std::uint32_t address() const noexcept { return address_; }
    std::uint32_t raw() const noexcept { return raw_; }

private:
    std::uint32_t address_;
    std::uint32_t raw_;
};

std::string hex32(std::uint32_t value);

} // namespace cm0
