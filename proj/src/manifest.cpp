#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "peatwht/dataset.hpp"

namespace peatwht {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

std::filesystem::path Manifest::resolve(const ManifestEntry& e) const {
  const std::filesystem::path p(e.path);
  return p.is_absolute() ? p : root / p;
}

std::size_t Manifest::count(int label) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [&](const ManifestEntry& e) { return e.label == label; }));
}

Manifest parse_manifest(const std::string& text, const std::filesystem::path& root) {
  Manifest m{root, {}};
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto comma = t.rfind(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCode::BadManifest, fmt::format("line {}: expected 'path,label'", line_no));
    }
    const std::string path = trim(std::string_view(t).substr(0, comma));
    const std::string label = trim(std::string_view(t).substr(comma + 1));
    if (path.empty()) throw Error(ErrorCode::BadManifest, fmt::format("line {}: empty path", line_no));
    if (label != "0" && label != "1") {
      throw Error(ErrorCode::BadManifest, fmt::format("line {}: label '{}' is not 0 or 1", line_no, label));
    }
    if (!seen.insert(path).second) {
      throw Error(ErrorCode::BadManifest, fmt::format("line {}: duplicate path '{}'", line_no, path));
    }
    m.entries.push_back({path, label == "1" ? kLabelFire : kLabelNoFire});
  }
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open manifest " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_manifest(text.str(), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

std::string format_manifest(const Manifest& manifest) {
  std::string out = "# path,label (0 = no_fire, 1 = fire)\n";
  for (const auto& e : manifest.entries) out += fmt::format("{},{}\n", e.path, e.label);
  return out;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write manifest " + path.string());
  out << format_manifest(manifest);
}

}  // namespace peatwht
