#include "alea/binary.hpp"

#include <elf.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "alea/error.hpp"
#include "alea/format.hpp"

namespace alea {

namespace {

class ElfImage {
 public:
  explicit ElfImage(const std::filesystem::path& path) : path_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::parse, "cannot open " + path_);
    bytes_.assign(std::istreambuf_iterator<char>(in), {});
    if (bytes_.size() < sizeof(Elf64_Ehdr) || std::memcmp(bytes_.data(), ELFMAG, SELFMAG) != 0)
      throw Error(ErrorKind::parse, path_ + " is not an ELF file");
    if (bytes_[EI_CLASS] != ELFCLASS64 || bytes_[EI_DATA] != ELFDATA2LSB)
      throw Error(ErrorKind::parse, path_ + ": only little-endian ELF64 is supported");
    header_ = at<Elf64_Ehdr>(0);
  }

  const Elf64_Ehdr& header() const { return header_; }

  template <typename T>
  T at(std::uint64_t offset) const {
    if (offset > bytes_.size() || bytes_.size() - offset < sizeof(T))
      throw Error(ErrorKind::parse, path_ + ": truncated ELF");
    T v;
    std::memcpy(&v, bytes_.data() + offset, sizeof(T));
    return v;
  }

  std::vector<Elf64_Shdr> sections() const {
    std::vector<Elf64_Shdr> out;
    for (std::uint16_t i = 0; i < header_.e_shnum; ++i)
      out.push_back(at<Elf64_Shdr>(header_.e_shoff + std::uint64_t{i} * header_.e_shentsize));
    return out;
  }

  std::string string_at(const Elf64_Shdr& strtab, std::uint32_t offset) const {
    const std::uint64_t begin = strtab.sh_offset + offset;
    if (offset >= strtab.sh_size || begin >= bytes_.size()) return {};
    const char* p = bytes_.data() + begin;
    const std::size_t limit = std::min<std::uint64_t>(strtab.sh_size - offset, bytes_.size() - begin);
    return std::string(p, strnlen(p, limit));
  }

 private:
  std::string path_;
  std::vector<char> bytes_;
  Elf64_Ehdr header_{};
};

struct LoadView {
  std::uint16_t type = ET_NONE;
  std::vector<Elf64_Phdr> segments;
};

// Reads only the file header and program headers.
LoadView read_load_view(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::parse, "cannot open " + path.string());
  Elf64_Ehdr eh{};
  if (!in.read(reinterpret_cast<char*>(&eh), sizeof eh) || std::memcmp(eh.e_ident, ELFMAG, SELFMAG) != 0)
    throw Error(ErrorKind::parse, path.string() + " is not an ELF file");
  if (eh.e_ident[EI_CLASS] != ELFCLASS64 || eh.e_ident[EI_DATA] != ELFDATA2LSB)
    throw Error(ErrorKind::parse, path.string() + ": only little-endian ELF64 is supported");
  LoadView view;
  view.type = eh.e_type;
  for (std::uint16_t i = 0; i < eh.e_phnum; ++i) {
    Elf64_Phdr ph{};
    in.seekg(static_cast<std::streamoff>(eh.e_phoff + std::uint64_t{i} * eh.e_phentsize));
    if (!in.read(reinterpret_cast<char*>(&ph), sizeof ph)) throw Error(ErrorKind::parse, path.string() + ": truncated ELF");
    view.segments.push_back(ph);
  }
  return view;
}

}  // namespace

std::vector<SymbolRange> read_function_symbols(const std::filesystem::path& elf_path) {
  ElfImage elf(elf_path);
  const auto sections = elf.sections();

  auto collect = [&](std::uint32_t type) {
    std::vector<SymbolRange> out;
    for (const auto& sh : sections) {
      if (sh.sh_type != type || sh.sh_entsize == 0 || sh.sh_link >= sections.size()) continue;
      const auto& strtab = sections[sh.sh_link];
      for (std::uint64_t off = 0; off + sizeof(Elf64_Sym) <= sh.sh_size; off += sh.sh_entsize) {
        const auto sym = elf.at<Elf64_Sym>(sh.sh_offset + off);
        if (ELF64_ST_TYPE(sym.st_info) != STT_FUNC || sym.st_size == 0 || sym.st_shndx == SHN_UNDEF) continue;
        out.push_back({elf.string_at(strtab, sym.st_name), {sym.st_value, sym.st_value + sym.st_size}});
      }
    }
    return out;
  };

  auto symbols = collect(SHT_SYMTAB);
  if (symbols.empty()) symbols = collect(SHT_DYNSYM);
  return symbols;
}

bool is_position_independent(const std::filesystem::path& elf_path) {
  return read_load_view(elf_path).type == ET_DYN;
}

std::vector<ModuleMapping> read_process_mappings(int pid) {
  const auto maps_path = "/proc/" + std::to_string(pid) + "/maps";
  std::ifstream in(maps_path);
  if (!in) throw Error(ErrorKind::attach, "cannot read " + maps_path);

  struct Raw {
    AddressRange range;
    std::uint64_t offset;
    std::string path;
  };
  std::vector<Raw> raw;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string span, perms, offset, dev, inode, path;
    ls >> span >> perms >> offset >> dev >> inode;
    std::getline(ls, path);
    path = std::string(fmt::trim(path));
    if (perms.size() < 3 || perms[2] != 'x' || path.empty()) continue;
    if (constexpr std::string_view deleted = " (deleted)"; path.ends_with(deleted))
      path.resize(path.size() - deleted.size());
    const auto dash = span.find('-');
    Raw r;
    if (dash == std::string::npos || !fmt::parse_hex(span.substr(0, dash), r.range.start) ||
        !fmt::parse_hex(span.substr(dash + 1), r.range.end) || !fmt::parse_hex(offset, r.offset))
      continue;
    r.path = path;
    raw.push_back(std::move(r));
  }

  std::map<std::string, std::optional<std::vector<Elf64_Phdr>>> headers;
  std::vector<ModuleMapping> out;
  for (const auto& r : raw) {
    ModuleMapping m{r.range, 0, r.path};
    if (r.path.front() == '/') {
      auto& phdrs = headers[r.path];
      if (!phdrs) {
        try {
          auto view = read_load_view(r.path);
          phdrs = view.type == ET_DYN ? std::move(view.segments) : std::vector<Elf64_Phdr>{};
        } catch (const Error&) {
          phdrs = std::vector<Elf64_Phdr>{};
        }
      }
      if (!phdrs->empty()) {
        m.bias = r.range.start - r.offset;
        for (const auto& ph : *phdrs)
          if (ph.p_type == PT_LOAD && (ph.p_flags & PF_X) && (ph.p_offset & ~0xfffULL) == r.offset) {
            m.bias = r.range.start - (ph.p_vaddr & ~0xfffULL);
            break;
          }
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace alea
