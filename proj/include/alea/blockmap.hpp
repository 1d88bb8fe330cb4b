#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "alea/model.hpp"

namespace alea {

/// Half-open virtual address range [start, end).
struct AddressRange {
  std::uint64_t start = 0;
  std::uint64_t end = 0;

  bool contains(std::uint64_t a) const { return start <= a && a < end; }
  friend auto operator<=>(const AddressRange&, const AddressRange&) = default;
};

enum class MapGranularity { block, function };

struct BlockDescriptor {
  std::uint32_t block_id = 0;
  std::vector<AddressRange> ranges;  // sorted
  std::string label;                 // e.g. "rectmm.c:1210" or a function name
  MapGranularity granularity = MapGranularity::block;
};

/// One record of a block-map file.
struct BlockEntry {
  std::string module;
  AddressRange range;
  std::string label;
  MapGranularity granularity = MapGranularity::block;
};

/// Link-time address ranges of one module, resolved by binary search.
/// Entries sharing a label become one descriptor with several ranges; block ids
/// follow the address order of each descriptor's first range.
class BlockMap {
 public:
  /// Throws empty_map on no entries and overlap naming both offenders.
  BlockMap(std::string module, std::vector<BlockEntry> entries);

  const std::string& module() const noexcept { return module_; }
  std::uint32_t module_id() const noexcept { return module_id_; }
  void set_module_id(std::uint32_t id) noexcept { module_id_ = id; }
  std::uint64_t load_bias() const noexcept { return load_bias_; }
  void set_load_bias(std::uint64_t bias) noexcept { load_bias_ = bias; }

  const std::vector<BlockDescriptor>& descriptors() const noexcept { return descriptors_; }
  BlockKey key(const BlockDescriptor& d) const { return {module_id_, d.block_id}; }
  std::vector<BlockKey> keys() const;

  /// Descriptor key for a runtime address, or UNKNOWN within this module.
  BlockKey resolve(std::uint64_t address) const;
  const BlockDescriptor* find(BlockKey key) const;

  /// Records in address order, as written by serialize_blockmap.
  std::vector<BlockEntry> entries() const;

 private:
  struct IndexedRange {
    AddressRange range;
    std::uint32_t descriptor;
  };

  std::string module_;
  std::uint32_t module_id_ = 0;
  std::uint64_t load_bias_ = 0;
  std::vector<BlockDescriptor> descriptors_;
  std::vector<IndexedRange> index_;  // starts strictly increasing, non-overlapping
};

/// Parses the tab-separated text format, or JSON when the content starts with
/// '{' or '['. Records are grouped into one map per module, in first-seen order.
std::vector<BlockMap> load_blockmaps(const std::filesystem::path& path);
std::vector<BlockMap> parse_blockmaps(std::istream& in, const std::string& origin = "<stream>");
/// Single-module convenience; throws parse if the file names several modules.
BlockMap load_blockmap(const std::filesystem::path& path);

void serialize_blockmap(std::ostream& out, const std::vector<BlockMap>& maps);
std::string blockmap_to_json(const std::vector<BlockMap>& maps);

struct SymbolRange {
  std::string name;
  AddressRange range;
};

/// Function-granularity map from a symbol table. Zero-size symbols are dropped,
/// aliases at the same address keep the first name, and a symbol overlapping
/// its successor is truncated at the successor's start.
BlockMap symbol_fallback(std::string module, std::vector<SymbolRange> symbols);

/// An executable mapping of the target at runtime.
struct ModuleMapping {
  AddressRange range;
  std::uint64_t bias = 0;  // runtime base minus link-time base
  std::string path;
  friend bool operator==(const ModuleMapping&, const ModuleMapping&) = default;
};

/// Resolves runtime addresses across every loaded block map. Mappings that
/// match a map (by path or file name) set its load bias; executable mappings
/// without a map become pseudo-modules whose addresses resolve to UNKNOWN
/// under their own module id.
class Symbolizer {
 public:
  Symbolizer() = default;
  explicit Symbolizer(std::vector<BlockMap> maps, std::vector<ModuleMapping> mappings = {});

  BlockKey resolve(std::uint64_t address) const;
  std::string label(BlockKey key) const;
  std::string label(const CombinationKey& key) const;
  std::vector<BlockKey> known_blocks() const;
  const std::vector<BlockMap>& maps() const noexcept { return maps_; }

 private:
  struct Region {
    AddressRange range;
    std::uint32_t module;
    bool has_map;
  };

  std::vector<BlockMap> maps_;
  std::vector<std::string> pseudo_modules_;
  std::vector<Region> regions_;  // sorted by start
};

}  // namespace alea
