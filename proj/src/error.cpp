#include "cm0/error.hpp"

#include <cstdio>

namespace cm0 {

std::string_view to_string(ErrorKind kind)
{
    switch(kind) {
    case ErrorKind::malformed_image: return "malformed-image";
    case ErrorKind::bad_entry: return "bad-entry";
    case ErrorKind::undefined_instruction: return "undefined-instruction";
    case ErrorKind::memory_fault: return "memory-fault";
    case ErrorKind::alignment_fault: return "alignment-fault";
    case ErrorKind::flash_write_fault: return "write-to-flash";
    case ErrorKind::invalid_config: return "invalid-config";
    case ErrorKind::degenerate_design: return "degenerate-design";
    case ErrorKind::dataset_size: return "dataset-size";
    case ErrorKind::length_mismatch: return "length-mismatch";
    case ErrorKind::zero_actual: return "zero-actual";
    case ErrorKind::analysis_error: return "analysis-error";
    case ErrorKind::path_error: return "path-error";
    case ErrorKind::parse_error: return "parse-error";
    }
    return "unknown";
}

std::string hex32(std::uint32_t value)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", value);
    return buf;
}

UndefinedInstruction::UndefinedInstruction(std::uint32_t address, std::uint32_t raw)
    : Error(ErrorKind::undefined_instruction,
            "undefined instruction " + hex32(raw) + " at " + hex32(address)),
      address_(address), raw_(raw)
{}

} // namespace cm0
