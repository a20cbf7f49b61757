#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "xbench/diagnosis.hpp"

namespace xbench {

struct ManifestRow {
  std::string sample_id;
  std::filesystem::path path;
  Label label = Label::negative;
  std::string split; // "train" / "test", empty = unsplit
};

struct LabeledManifest {
  std::vector<ManifestRow> rows;

  LabeledManifest filter_split(const std::string& split) const;
};

/// CSV with header sample_id,path,label[,split]. Paths must not contain
/// commas; sample_ids must be unique.
LabeledManifest load_manifest(const std::filesystem::path& path);

}  // namespace xbench
