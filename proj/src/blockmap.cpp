#include "alea/blockmap.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "alea/error.hpp"
#include "alea/format.hpp"

namespace alea {

namespace {

std::string range_text(const AddressRange& r) { return "[0x" + fmt::hex(r.start) + ",0x" + fmt::hex(r.end) + ")"; }

std::string base_name(const std::string& path) { return std::filesystem::path(path).filename().string(); }

const char* granularity_name(MapGranularity g) { return g == MapGranularity::block ? "block" : "function"; }

MapGranularity parse_granularity(std::string_view text, const std::string& where) {
  if (text == "block") return MapGranularity::block;
  if (text == "function") return MapGranularity::function;
  throw Error(ErrorKind::parse, where + ": granularity must be block or function");
}

std::vector<BlockMap> group_by_module(std::vector<BlockEntry> entries, const std::string& origin) {
  if (entries.empty()) throw Error(ErrorKind::empty_map, origin + ": block map has no records");
  std::vector<std::string> order;
  std::map<std::string, std::vector<BlockEntry>> by_module;
  for (auto& e : entries) {
    if (!by_module.contains(e.module)) order.push_back(e.module);
    by_module[e.module].push_back(std::move(e));
  }
  std::vector<BlockMap> maps;
  for (const auto& m : order) {
    try {
      maps.emplace_back(m, std::move(by_module[m]));
    } catch (const Error& e) {
      throw Error(e.kind(), origin + ": " + e.what());
    }
  }
  return maps;
}

std::vector<BlockEntry> parse_json_entries(const std::string& text, const std::string& origin) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, origin + ": " + e.what());
  }
  const nlohmann::json* blocks = &doc;
  if (doc.is_object()) {
    if (!doc.contains("blocks")) throw Error(ErrorKind::parse, origin + ": missing \"blocks\" array");
    blocks = &doc["blocks"];
  }
  if (!blocks->is_array()) throw Error(ErrorKind::parse, origin + ": \"blocks\" must be an array");

  std::vector<BlockEntry> out;
  std::size_t i = 0;
  for (const auto& b : *blocks) {
    const std::string where = origin + ": block " + std::to_string(i++);
    try {
      BlockEntry e;
      e.module = b.at("module").get<std::string>();
      e.label = b.at("label").get<std::string>();
      const auto start = b.at("start").get<std::string>();
      const auto end = b.at("end").get<std::string>();
      if (!fmt::parse_hex(start, e.range.start) || !fmt::parse_hex(end, e.range.end))
        throw Error(ErrorKind::parse, where + ": addresses must be hex strings");
      if (b.contains("granularity")) e.granularity = parse_granularity(b["granularity"].get<std::string>(), where);
      if (e.module.empty() || e.label.empty()) throw Error(ErrorKind::parse, where + ": empty module or label");
      if (e.range.start >= e.range.end) throw Error(ErrorKind::parse, where + ": empty range " + range_text(e.range));
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorKind::parse, where + ": " + ex.what());
    }
  }
  return out;
}

std::vector<BlockEntry> parse_text_entries(std::istream& in, const std::string& origin) {
  std::vector<BlockEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = line;
    if (!v.empty() && v.back() == '\r') v.remove_suffix(1);
    if (fmt::trim(v).empty() || fmt::trim(v).front() == '#') continue;

    const std::string where = origin + ":" + std::to_string(line_no);
    std::vector<std::string_view> f;
    std::size_t pos = 0;
    while (true) {
      auto tab = v.find('\t', pos);
      f.push_back(v.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
      if (tab == std::string_view::npos) break;
      pos = tab + 1;
    }
    if (f.size() != 4 && f.size() != 5)
      throw Error(ErrorKind::parse, where + ": expected module<TAB>start<TAB>end<TAB>label");
    BlockEntry e;
    e.module = std::string(f[0]);
    e.label = std::string(f[3]);
    if (e.module.empty() || e.label.empty()) throw Error(ErrorKind::parse, where + ": empty module or label");
    if (!fmt::parse_hex(f[1], e.range.start) || !fmt::parse_hex(f[2], e.range.end))
      throw Error(ErrorKind::parse, where + ": addresses must be hexadecimal");
    if (e.range.start >= e.range.end) throw Error(ErrorKind::parse, where + ": empty range " + range_text(e.range));
    if (f.size() == 5) e.granularity = parse_granularity(f[4], where);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

BlockMap::BlockMap(std::string module, std::vector<BlockEntry> entries) : module_(std::move(module)) {
  if (entries.empty()) throw Error(ErrorKind::empty_map, "module " + module_ + " has no blocks");

  std::map<std::string, BlockDescriptor> by_label;
  for (auto& e : entries) {
    if (e.range.start >= e.range.end)
      throw Error(ErrorKind::invalid_input, "empty range " + range_text(e.range) + " for " + e.label);
    auto& d = by_label[e.label];
    if (!d.ranges.empty() && d.granularity != e.granularity)
      throw Error(ErrorKind::invalid_input, "label " + e.label + " mixes block and function granularity");
    d.label = e.label;
    d.granularity = e.granularity;
    d.ranges.push_back(e.range);
  }
  for (auto& [label, d] : by_label) {
    std::sort(d.ranges.begin(), d.ranges.end());
    descriptors_.push_back(std::move(d));
  }
  std::sort(descriptors_.begin(), descriptors_.end(),
            [](const BlockDescriptor& a, const BlockDescriptor& b) { return a.ranges.front() < b.ranges.front(); });

  for (std::uint32_t i = 0; i < descriptors_.size(); ++i) {
    descriptors_[i].block_id = i;
    for (const auto& r : descriptors_[i].ranges) index_.push_back({r, i});
  }
  std::sort(index_.begin(), index_.end(),
            [](const IndexedRange& a, const IndexedRange& b) { return a.range < b.range; });
  for (std::size_t i = 1; i < index_.size(); ++i) {
    const auto& prev = index_[i - 1];
    const auto& cur = index_[i];
    if (cur.range.start < prev.range.end)
      throw Error(ErrorKind::overlap, "module " + module_ + ": " + descriptors_[prev.descriptor].label + " " +
                                          range_text(prev.range) + " overlaps " +
                                          descriptors_[cur.descriptor].label + " " + range_text(cur.range));
  }
}

std::vector<BlockKey> BlockMap::keys() const {
  std::vector<BlockKey> out;
  out.reserve(descriptors_.size());
  for (const auto& d : descriptors_) out.push_back(key(d));
  return out;
}

BlockKey BlockMap::resolve(std::uint64_t address) const {
  if (address < load_bias_) return BlockKey::unknown(module_id_);
  const std::uint64_t link = address - load_bias_;
  auto it = std::upper_bound(index_.begin(), index_.end(), link,
                             [](std::uint64_t a, const IndexedRange& r) { return a < r.range.start; });
  if (it == index_.begin()) return BlockKey::unknown(module_id_);
  --it;
  if (!it->range.contains(link)) return BlockKey::unknown(module_id_);
  return {module_id_, descriptors_[it->descriptor].block_id};
}

const BlockDescriptor* BlockMap::find(BlockKey key) const {
  if (key.module != module_id_ || key.block >= descriptors_.size()) return nullptr;
  return &descriptors_[key.block];
}

std::vector<BlockEntry> BlockMap::entries() const {
  std::vector<BlockEntry> out;
  for (const auto& r : index_) {
    const auto& d = descriptors_[r.descriptor];
    out.push_back({module_, r.range, d.label, d.granularity});
  }
  return out;
}

std::vector<BlockMap> parse_blockmaps(std::istream& in, const std::string& origin) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (text[first] == '{' || text[first] == '['))
    return group_by_module(parse_json_entries(text, origin), origin);
  std::istringstream lines(text);
  return group_by_module(parse_text_entries(lines, origin), origin);
}

std::vector<BlockMap> load_blockmaps(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::parse, "cannot open block map " + path.string());
  return parse_blockmaps(in, path.string());
}

BlockMap load_blockmap(const std::filesystem::path& path) {
  auto maps = load_blockmaps(path);
  if (maps.size() != 1)
    throw Error(ErrorKind::parse, path.string() + ": expected one module, found " + std::to_string(maps.size()));
  return std::move(maps.front());
}

void serialize_blockmap(std::ostream& out, const std::vector<BlockMap>& maps) {
  out << "# module\tstart\tend\tlabel\tgranularity\n";
  for (const auto& m : maps)
    for (const auto& e : m.entries()) {
      out << e.module << "\t0x" << fmt::hex(e.range.start) << "\t0x" << fmt::hex(e.range.end) << '\t' << e.label;
      if (e.granularity != MapGranularity::block) out << '\t' << granularity_name(e.granularity);
      out << '\n';
    }
}

std::string blockmap_to_json(const std::vector<BlockMap>& maps) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& m : maps)
    for (const auto& e : m.entries())
      blocks.push_back({{"module", e.module},
                        {"start", "0x" + fmt::hex(e.range.start)},
                        {"end", "0x" + fmt::hex(e.range.end)},
                        {"label", e.label},
                        {"granularity", granularity_name(e.granularity)}});
  return nlohmann::json{{"format", "alea-blockmap"}, {"version", 1}, {"blocks", blocks}}.dump(2) + "\n";
}

BlockMap symbol_fallback(std::string module, std::vector<SymbolRange> symbols) {
  std::erase_if(symbols, [](const SymbolRange& s) { return s.range.start >= s.range.end || s.name.empty(); });
  if (symbols.empty()) throw Error(ErrorKind::empty_map, "symbol table of " + module + " has no sized functions");
  std::stable_sort(symbols.begin(), symbols.end(),
                   [](const SymbolRange& a, const SymbolRange& b) { return a.range.start < b.range.start; });

  std::vector<BlockEntry> entries;
  std::map<std::string, int> seen_names;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i > 0 && symbols[i].range.start == symbols[i - 1].range.start) continue;  // alias
    AddressRange r = symbols[i].range;
    for (std::size_t j = i + 1; j < symbols.size(); ++j)
      if (symbols[j].range.start > r.start) {
        r.end = std::min(r.end, symbols[j].range.start);
        break;
      }
    // Distinct functions may share a name (local statics); keep them apart.
    std::string label = symbols[i].name;
    if (int n = seen_names[label]++; n > 0) label += "#" + std::to_string(n);
    entries.push_back({module, r, std::move(label), MapGranularity::function});
  }
  return BlockMap(std::move(module), std::move(entries));
}

Symbolizer::Symbolizer(std::vector<BlockMap> maps, std::vector<ModuleMapping> mappings) : maps_(std::move(maps)) {
  for (std::uint32_t i = 0; i < maps_.size(); ++i) maps_[i].set_module_id(i);

  auto match = [&](const std::string& path) -> int {
    for (std::size_t i = 0; i < maps_.size(); ++i)
      if (maps_[i].module() == path || base_name(maps_[i].module()) == base_name(path)) return static_cast<int>(i);
    return -1;
  };

  for (const auto& m : mappings) {
    const int idx = match(m.path);
    if (idx >= 0) {
      maps_[idx].set_load_bias(m.bias);
      regions_.push_back({m.range, static_cast<std::uint32_t>(idx), true});
    } else {
      auto it = std::find(pseudo_modules_.begin(), pseudo_modules_.end(), m.path);
      const auto pseudo = static_cast<std::uint32_t>(it - pseudo_modules_.begin());
      if (it == pseudo_modules_.end()) pseudo_modules_.push_back(m.path);
      regions_.push_back({m.range, static_cast<std::uint32_t>(maps_.size()) + pseudo, false});
    }
  }
  std::sort(regions_.begin(), regions_.end(), [](const Region& a, const Region& b) { return a.range < b.range; });
}

BlockKey Symbolizer::resolve(std::uint64_t address) const {
  auto it = std::upper_bound(regions_.begin(), regions_.end(), address,
                             [](std::uint64_t a, const Region& r) { return a < r.range.start; });
  if (it != regions_.begin() && std::prev(it)->range.contains(address)) {
    const auto& region = *std::prev(it);
    if (!region.has_map) return BlockKey::unknown(region.module);
    return maps_[region.module].resolve(address);
  }
  for (const auto& m : maps_) {
    const auto key = m.resolve(address);
    if (!key.is_unknown()) return key;
  }
  return BlockKey::unknown();
}

std::string Symbolizer::label(BlockKey key) const {
  if (key.is_absent()) return "[absent]";
  if (key.is_unknown()) {
    if (key.module < maps_.size()) return "[unknown:" + base_name(maps_[key.module].module()) + "]";
    const auto pseudo = key.module - maps_.size();
    if (key.module != BlockKey::kNoModule && pseudo < pseudo_modules_.size())
      return "[unknown:" + base_name(pseudo_modules_[pseudo]) + "]";
    return "[unknown]";
  }
  if (key.module < maps_.size())
    if (const auto* d = maps_[key.module].find(key)) return d->label;
  return "[block " + std::to_string(key.module) + ":" + std::to_string(key.block) + "]";
}

std::string Symbolizer::label(const CombinationKey& key) const {
  std::string out;
  for (std::size_t i = 0; i < key.blocks.size(); ++i) {
    if (i > 0) out += " | ";
    out += label(key.blocks[i]);
  }
  return out;
}

std::vector<BlockKey> Symbolizer::known_blocks() const {
  std::vector<BlockKey> out;
  for (const auto& m : maps_) {
    auto k = m.keys();
    out.insert(out.end(), k.begin(), k.end());
  }
  return out;
}

}  // namespace alea
