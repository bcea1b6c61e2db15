#include "vexmatch/tool_config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "vexmatch/error.hpp"

namespace vexmatch {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

bool parse_bool(const std::string &section, const std::string &key, const std::string &raw) {
  const auto v = lower(trim(raw));
  if (v == "true" || v == "yes" || v == "1" || v == "+") return true;
  if (v == "false" || v == "no" || v == "0" || v == "-") return false;
  throw ConfigError("[" + section + "] " + key + ": expected a boolean, got '" + raw + "'");
}

unsigned long parse_positive(const std::string &section, const std::string &key, const std::string &raw) {
  try {
    std::size_t used = 0;
    const auto v = std::stoul(trim(raw), &used);
    if (used == trim(raw).size() && v > 0) return v;
  } catch (const std::exception &) {
  }
  throw ConfigError("[" + section + "] " + key + ": expected a positive integer, got '" + raw + "'");
}

ToolDefinition parse_tool(const std::string &section, const std::string &name, const pt::ptree &keys) {
  ToolDefinition t;
  t.name = name;
  for (const auto &[key, node] : keys) {
    const auto value = trim(node.data());
    if (key == "scan_sbom") {
      t.capabilities.scan_sbom = parse_bool(section, key, value);
    } else if (key == "produce_sbom") {
      t.capabilities.produce_sbom = parse_bool(section, key, value);
    } else if (key == "scan_image") {
      t.capabilities.scan_image = parse_bool(section, key, value);
    } else if (key == "version") {
      t.version = value;
    } else if (key == "version_command") {
      t.version_command = value;
    } else if (key == "image_command") {
      t.image_command = value;
    } else if (key == "sbom_command") {
      t.sbom_command = value;
    } else if (key == "produce_sbom_command") {
      t.produce_sbom_command = value;
    } else if (key == "sbom_format") {
      t.sbom_format = lower(value);
    } else if (key == "accepts_sbom_formats") {
      for (auto &f : split_list(value)) t.accepted_sbom_formats.insert(lower(f));
    } else if (key == "databases") {
      for (auto &d : split_list(value)) t.databases.insert(d);
    } else if (key == "report_format") {
      try {
        t.report_format = parse_format_name(value);
      } catch (const ValidationError &e) {
        throw ConfigError("[" + section + "] report_format: " + e.what());
      }
    } else {
      throw ConfigError("[" + section + "] unknown key '" + key + "'");
    }
  }
  return t;
}

}  // namespace

ToolCatalog ToolCatalog::parse(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error &e) {
    throw ConfigError("tool configuration line " + std::to_string(e.line()) + ": " + e.message());
  }
  ToolCatalog catalog;
  for (const auto &[section, keys] : tree) {
    if (keys.empty() && !keys.data().empty()) {
      throw ConfigError("tool configuration: key '" + section + "' outside any section");
    }
    if (section == "run") {
      for (const auto &[key, node] : keys) {
        if (key == "configurations") {
          catalog.requested_ = split_list(node.data());
        } else if (key == "timeout_seconds") {
          catalog.timeout_ = std::chrono::seconds(parse_positive(section, key, node.data()));
        } else if (key == "workers") {
          catalog.workers_ = static_cast<unsigned>(parse_positive(section, key, node.data()));
        } else {
          throw ConfigError("[run] unknown key '" + key + "'");
        }
      }
      continue;
    }
    constexpr std::string_view kPrefix = "tool:";
    if (section.rfind(kPrefix, 0) != 0) {
      throw ConfigError("unknown section [" + section + "] (expected [tool:<name>] or [run])");
    }
    const auto name = lower(trim(section.substr(kPrefix.size())));
    if (name.empty() || name.find('+') != std::string::npos) {
      throw ConfigError("invalid tool name in section [" + section + "]");
    }
    catalog.add(parse_tool(section, name, keys));
  }
  return catalog;
}

ToolCatalog ToolCatalog::load(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read tool configuration " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void ToolCatalog::add(ToolDefinition tool) {
  auto name = tool.name;
  if (!tools_.emplace(name, std::move(tool)).second) throw ConfigError("tool '" + name + "' defined twice");
}

const ToolDefinition *ToolCatalog::find(std::string_view name) const {
  auto it = tools_.find(std::string(name));
  return it == tools_.end() ? nullptr : &it->second;
}

const ToolDefinition &ToolCatalog::get(std::string_view name) const {
  const auto *t = find(name);
  if (t == nullptr) throw ConfigError("unknown tool '" + std::string(name) + "'");
  return *t;
}

ToolConfig ToolCatalog::make_config(std::string_view id) const {
  try {
    return make_config(parse_tool_config_id(id));
  } catch (const ValidationError &e) {
    throw ConfigError(e.what());
  }
}

ToolConfig ToolCatalog::make_config(const ToolConfigId &id) const {
  const auto &tool = get(id.tool_name);
  ToolConfig c;
  c.tool_name = tool.name;
  c.input_mode = id.input_mode;
  c.sbom_source = id.sbom_source;
  c.capabilities = tool.capabilities;
  c.command_template = id.input_mode == InputMode::kImage ? tool.image_command : tool.sbom_command;
  c.databases = tool.databases;
  return c;
}

std::vector<ToolConfig> ToolCatalog::candidate_configs() const {
  std::vector<ToolConfig> out;
  for (const auto &[name, tool] : tools_) {
    if (tool.capabilities.scan_image) out.push_back(make_config(ToolConfigId{name, InputMode::kImage, std::nullopt}));
  }
  for (const auto &[name, tool] : tools_) {
    if (tool.capabilities.scan_sbom && tool.capabilities.produce_sbom) {
      out.push_back(make_config(ToolConfigId{name, InputMode::kNativeSbom, std::nullopt}));
    }
  }
  for (const auto &[name, tool] : tools_) {
    if (!tool.capabilities.scan_sbom) continue;
    for (const auto &[source, producer] : tools_) {
      if (source == name || !producer.capabilities.produce_sbom) continue;
      out.push_back(make_config(ToolConfigId{name, InputMode::kExternalSbom, source}));
    }
  }
  return out;
}

void ToolCatalog::validate_cell(const ToolConfig &config) const {
  const auto &tool = get(config.tool_name);
  const ToolDefinition *source = nullptr;
  if (config.input_mode == InputMode::kExternalSbom && config.sbom_source) source = find(*config.sbom_source);
  validate(config, source ? std::optional<Capabilities>(source->capabilities) : std::nullopt);
  const auto id = config.id();
  if (config.command_template.empty()) throw ConfigError(id + ": no command template for this input mode");
  if (config.input_mode == InputMode::kImage) return;
  const ToolDefinition &producer = source ? *source : tool;
  if (producer.produce_sbom_command.empty()) {
    throw ConfigError(id + ": " + producer.name + " has no produce_sbom_command");
  }
  if (!producer.sbom_format) throw ConfigError(id + ": " + producer.name + " declares no sbom_format");
  if (!tool.accepted_sbom_formats.empty() && tool.accepted_sbom_formats.count(*producer.sbom_format) == 0) {
    std::string accepted;
    for (const auto &f : tool.accepted_sbom_formats) accepted += (accepted.empty() ? "" : ", ") + f;
    throw ConfigError(id + ": " + tool.name + " accepts " + accepted + " SBOMs but " + producer.name + " produces " +
                      *producer.sbom_format);
  }
}

std::vector<ToolConfig> ToolCatalog::valid_configs(std::vector<std::string> *rejections) const {
  std::vector<ToolConfig> out;
  for (auto &c : candidate_configs()) {
    try {
      validate_cell(c);
      out.push_back(std::move(c));
    } catch (const ConfigError &e) {
      if (rejections) rejections->push_back(e.what());
    }
  }
  return out;
}

std::vector<ToolConfig> ToolCatalog::selected_configs() const {
  if (requested_.empty()) return valid_configs();
  std::vector<ToolConfig> out;
  std::set<std::string> seen;
  for (const auto &id : requested_) {
    auto c = make_config(id);
    validate_cell(c);
    if (!seen.insert(c.id()).second) throw ConfigError("configuration '" + c.id() + "' requested twice");
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace vexmatch
