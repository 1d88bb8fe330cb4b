#pragma once

#include <filesystem>
#include <vector>

#include "alea/blockmap.hpp"

// Minimal ELF and /proc readers used to attach block maps to a live target.
namespace alea {

/// STT_FUNC symbols with non-zero size from .symtab (or .dynsym when stripped).
std::vector<SymbolRange> read_function_symbols(const std::filesystem::path& elf_path);

/// True for ET_DYN objects (PIE executables, shared libraries).
bool is_position_independent(const std::filesystem::path& elf_path);

/// Executable file-backed mappings of a process with their load bias.
std::vector<ModuleMapping> read_process_mappings(int pid);

}  // namespace alea
