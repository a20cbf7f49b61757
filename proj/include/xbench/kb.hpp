#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xbench/manifest.hpp"
#include "xbench/onnx_model.hpp"

namespace xbench {

/// Cosine similarity of two dense vectors, scale-invariant and symmetric.
/// Accumulated in double regardless of the input scalar type.
template <typename DerivedU, typename DerivedV>
double cosine_similarity(const Eigen::MatrixBase<DerivedU>& u,
                         const Eigen::MatrixBase<DerivedV>& v) {
  if (u.size() != v.size())
    throw std::invalid_argument("cosine_similarity: dimension mismatch (" +
                                std::to_string(u.size()) + " vs " + std::to_string(v.size()) + ")");
  const Eigen::VectorXd ud = u.template cast<double>();
  const Eigen::VectorXd vd = v.template cast<double>();
  const double nu = ud.norm();
  const double nv = vd.norm();
  if (nu == 0.0 || nv == 0.0)
    throw std::invalid_argument("cosine_similarity: zero-norm vector");
  return ud.dot(vd) / (nu * nv);
}

struct EmbeddingEntry {
  std::string sample_id;
  Label label = Label::negative;
  Eigen::VectorXf vector;
};

/// Similarity evidence handed to an LLM prompt: scores and labels only,
/// never sample ids or pixel data.
struct ContextSnippet {
  struct Neighbor {
    double similarity = 0.0;
    Label label = Label::negative;
  };
  std::vector<Neighbor> neighbors; // similarity non-increasing
  int k = 0;
};

/// Label-tagged vector store for one embedder. Immutable after build;
/// concurrent retrieval needs no locking.
struct KnowledgeBase {
  std::string embedder_id;
  long dim = 0;
  std::vector<EmbeddingEntry> entries;

  /// Single file: one JSON header line (embedder_id, dim, count, entry
  /// ids/labels) followed by little-endian float32 vectors in entry order.
  void save(const std::filesystem::path& path) const;
  static KnowledgeBase load(const std::filesystem::path& path);
};

using WarnSink = std::function<void(const std::string&)>;

/// Embed every manifest row. Per-image failures are skipped with a
/// warning; more than 1% failures aborts the build.
KnowledgeBase build_kb(const LabeledManifest& manifest, const ModelHandle& embedder,
                       const WarnSink& warn = {});

/// Top-k entries by cosine similarity, ties broken by ascending sample_id.
/// An empty knowledge base yields an empty snippet.
ContextSnippet retrieve(const KnowledgeBase& kb, const EmbeddingVector& query, int k = 3);

/// Fixed textual rendering of a snippet for prompt injection.
std::string render_context(const ContextSnippet& snippet);

}  // namespace xbench
