#include "xbench/kb.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "xbench/image.hpp"

namespace xbench {

void KnowledgeBase::save(const std::filesystem::path& path) const {
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& e : entries)
    ids.push_back({{"sample_id", e.sample_id}, {"label", to_string(e.label)}});
  const nlohmann::json header{
      {"embedder_id", embedder_id},
      {"dim", dim},
      {"count", entries.size()},
      {"entries", ids},
  };
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write knowledge base: " + path.string());
  out << header.dump() << '\n';
  for (const auto& e : entries)
    out.write(reinterpret_cast<const char*>(e.vector.data()),
              static_cast<std::streamsize>(sizeof(float)) * e.vector.size());
}

KnowledgeBase KnowledgeBase::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open knowledge base: " + path.string());
  std::string header_line;
  if (!std::getline(in, header_line))
    throw InputFormatError("knowledge base file has no header: " + path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw InputFormatError("knowledge base header is not JSON: " + std::string(e.what()));
  }
  KnowledgeBase kb;
  kb.embedder_id = header.at("embedder_id").get<std::string>();
  kb.dim = header.at("dim").get<long>();
  const auto count = header.at("count").get<size_t>();
  const auto& ids = header.at("entries");
  if (ids.size() != count) throw InputFormatError("knowledge base header count mismatch");
  for (const auto& id : ids) {
    EmbeddingEntry e;
    e.sample_id = id.at("sample_id").get<std::string>();
    e.label = label_from_string(id.at("label").get<std::string>());
    e.vector.resize(kb.dim);
    in.read(reinterpret_cast<char*>(e.vector.data()),
            static_cast<std::streamsize>(sizeof(float)) * kb.dim);
    if (!in) throw InputFormatError("knowledge base truncated: " + path.string());
    kb.entries.push_back(std::move(e));
  }
  return kb;
}

KnowledgeBase build_kb(const LabeledManifest& manifest, const ModelHandle& embedder,
                       const WarnSink& warn) {
  if (manifest.rows.empty()) throw std::invalid_argument("build_kb: empty manifest");
  if (!embedder.supports_embedding())
    throw CapabilityError("embedder '" + embedder.config().id + "' has no embedding layer");
  const auto emit = warn ? warn : WarnSink([](const std::string& m) { std::cerr << "warning: " << m << '\n'; });

  KnowledgeBase kb;
  kb.embedder_id = embedder.config().id;
  size_t failed = 0;
  for (const auto& row : manifest.rows) {
    try {
      const auto bytes = read_file_bytes(row.path);
      const auto tensor = preprocess(bytes, embedder.config());
      auto embedding = embedder.embed(tensor);
      if (kb.dim == 0) kb.dim = embedding.dim();
      if (embedding.dim() != kb.dim)
        throw BackendError("embedding dimension changed mid-build");
      kb.entries.push_back({row.sample_id, row.label, std::move(embedding.values)});
    } catch (const Error& e) {
      ++failed;
      emit("skipping '" + row.sample_id + "': " + e.what());
    }
  }
  if (static_cast<double>(failed) > 0.01 * static_cast<double>(manifest.rows.size()))
    throw Error("knowledge base build failed: " + std::to_string(failed) + " of " +
                std::to_string(manifest.rows.size()) + " rows could not be embedded");
  return kb;
}

ContextSnippet retrieve(const KnowledgeBase& kb, const EmbeddingVector& query, int k) {
  if (k < 1) throw std::invalid_argument("retrieve: k must be >= 1");
  ContextSnippet snippet;
  snippet.k = k;
  if (kb.entries.empty()) return snippet;
  if (query.dim() != kb.dim)
    throw std::invalid_argument("retrieve: query dim " + std::to_string(query.dim()) +
                                " does not match knowledge base dim " + std::to_string(kb.dim));

  std::vector<std::pair<double, size_t>> scored;
  scored.reserve(kb.entries.size());
  for (size_t i = 0; i < kb.entries.size(); ++i)
    scored.emplace_back(cosine_similarity(query.values, kb.entries[i].vector), i);
  std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return kb.entries[a.second].sample_id < kb.entries[b.second].sample_id;
  });
  const auto take = std::min<size_t>(static_cast<size_t>(k), scored.size());
  for (size_t i = 0; i < take; ++i)
    snippet.neighbors.push_back({scored[i].first, kb.entries[scored[i].second].label});
  return snippet;
}

std::string render_context(const ContextSnippet& snippet) {
  std::ostringstream out;
  out << "Reference comparisons against previously confirmed cases "
         "(cosine similarity of this X-ray to each reference):";
  int i = 0;
  for (const auto& n : snippet.neighbors) {
    char sim[16];
    std::snprintf(sim, sizeof(sim), "%.3f", n.similarity);
    out << "\nReference case " << ++i << ": cosine similarity " << sim << ", confirmed COVID-19 "
        << to_string(n.label);
  }
  return out.str();
}

}  // namespace xbench
