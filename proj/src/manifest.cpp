#include "xbench/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace xbench {

namespace {
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    fields.push_back(field);
  }
  return fields;
}
}  // namespace

LabeledManifest LabeledManifest::filter_split(const std::string& split) const {
  LabeledManifest out;
  for (const auto& row : rows)
    if (row.split == split || row.split.empty()) out.rows.push_back(row);
  return out;
}

LabeledManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open manifest: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputFormatError("manifest is empty: " + path.string());
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "sample_id" || header[1] != "path" || header[2] != "label")
    throw InputFormatError("manifest header must be sample_id,path,label[,split]");
  const bool has_split = header.size() > 3 && header[3] == "split";

  LabeledManifest manifest;
  std::set<std::string> ids;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() < 3)
      throw InputFormatError("manifest line " + std::to_string(line_no) + ": expected at least 3 fields");
    ManifestRow row;
    row.sample_id = fields[0];
    row.path = fields[1];
    row.label = label_from_string(fields[2]);
    if (has_split && fields.size() > 3) row.split = fields[3];
    if (!ids.insert(row.sample_id).second)
      throw InputFormatError("manifest line " + std::to_string(line_no) + ": duplicate sample_id '" +
                             row.sample_id + "'");
    manifest.rows.push_back(std::move(row));
  }
  return manifest;
}

}  // namespace xbench
