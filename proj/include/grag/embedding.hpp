#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grag/graph.hpp"
#include "grag/retry.hpp"

namespace grag {

inline constexpr std::size_t kDefaultDimension = 384;

// Unit-length vector with finite components.
class EmbeddingVector {
public:
    // L2-normalizes `raw`. A zero vector maps to the basis vector e_1.
    static EmbeddingVector normalized(std::vector<float> raw);
    // Accepts already-normalized data as-is (cache and wire round trips stay
    // bitwise exact); throws ContractViolation if the norm is off by more than 1e-6.
    static EmbeddingVector from_unit(std::vector<float> values);
    static EmbeddingVector basis(std::size_t dim, std::size_t axis = 0);

    std::span<const float> values() const { return values_; }
    std::size_t dim() const { return values_.size(); }

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

private:
    explicit EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {}
    std::vector<float> values_;
};

// Dot product accumulated in double, in index order. Every similarity in the
// engine goes through this so that equal inputs give bitwise-equal scores.
double dot(std::span<const float> a, std::span<const float> b);

// Throws ContractViolation on a dimension mismatch. Clamped to [-1, 1].
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
public:
    virtual ~Embedder() = default;
    // Fingerprint of the model; cache entries are only reused under the same id.
    virtual std::string id() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
};

EmbeddingVector embed_text(Embedder& embedder, std::string_view text);

// Lowercased word tokens with stopwords removed, in text order.
std::vector<std::string> embedding_tokens(std::string_view text);

// Signed feature hashing of word unigrams and bigrams. Deterministic and
// thread-safe; large batches are embedded with OpenMP.
class HashingEmbedder : public Embedder {
public:
    explicit HashingEmbedder(std::size_t dim = kDefaultDimension);

    std::string id() const override;
    std::size_t dimension() const override { return dim_; }
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

    EmbeddingVector embed_one(std::string_view text) const;

private:
    std::size_t dim_;
};

struct RemoteEmbedderConfig {
    std::string url = "http://127.0.0.1:8081";  // service base; requests go to POST /embed
    std::string model = "paraphrase-multilingual-MiniLM-L12-v2";
    int timeout_ms = 10000;
    std::size_t dim = kDefaultDimension;
    RetryPolicy retry;

    // EMBED_URL, EMBED_MODEL, EMBED_TIMEOUT_MS; unset variables keep defaults.
    static RemoteEmbedderConfig from_env();
};

// Client for an external embedding service:
//   POST /embed {"model": str, "texts": [str]} -> {"vectors": [[float]]}
class RemoteEmbedder : public Embedder {
public:
    explicit RemoteEmbedder(RemoteEmbedderConfig cfg, Sleeper sleeper = sleep_for);

    std::string id() const override { return "remote:" + cfg_.model + ":d" + std::to_string(cfg_.dim); }
    std::size_t dimension() const override { return cfg_.dim; }
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

private:
    RemoteEmbedderConfig cfg_;
    Sleeper sleeper_;
};

// Decorator counting texts sent to the wrapped embedder.
class CountingEmbedder : public Embedder {
public:
    explicit CountingEmbedder(Embedder& inner) : inner_(inner) {}

    std::string id() const override { return inner_.id(); }
    std::size_t dimension() const override { return inner_.dimension(); }
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override {
        calls_ += 1;
        texts_ += texts.size();
        return inner_.embed(texts);
    }

    std::size_t calls() const { return calls_; }
    std::size_t texts() const { return texts_; }

private:
    Embedder& inner_;
    std::atomic<std::size_t> calls_{0};
    std::atomic<std::size_t> texts_{0};
};

enum class EdgeTextMode { action, action_and_kind };

std::string node_text(const NodeRecord& node);
std::string edge_text(const EdgeRecord& edge, EdgeTextMode mode);

// Dense, row-major vectors for every node (rows ordered by ascending node_id)
// and every edge (rows in adjacency-file order). Immutable after construction.
class GraphEmbeddings {
public:
    GraphEmbeddings(std::string graph_id, std::string embedder_id, std::size_t dim, std::vector<NodeId> node_ids,
                    std::vector<float> node_matrix, std::vector<float> edge_matrix);

    const std::string& graph_id() const { return graph_id_; }
    const std::string& embedder_id() const { return embedder_id_; }
    std::size_t dim() const { return dim_; }

    std::size_t node_count() const { return node_ids_.size(); }
    std::size_t edge_count() const { return edge_matrix_.size() / dim_; }
    std::span<const NodeId> node_ids() const { return node_ids_; }
    std::span<const float> node_matrix() const { return node_matrix_; }
    std::span<const float> edge_matrix() const { return edge_matrix_; }

    std::span<const float> node_row(std::size_t row) const { return {node_matrix_.data() + row * dim_, dim_}; }
    std::span<const float> edge_row(std::size_t index) const { return {edge_matrix_.data() + index * dim_, dim_}; }
    std::optional<std::size_t> row_of(NodeId id) const;

    EmbeddingVector node_vector(NodeId id) const;
    EmbeddingVector edge_vector(std::size_t index) const;

private:
    std::string graph_id_;
    std::string embedder_id_;
    std::size_t dim_;
    std::vector<NodeId> node_ids_;
    std::vector<float> node_matrix_;
    std::vector<float> edge_matrix_;
};

// Persistent cache of per-item vectors in `{dir}/{graph_id}.emb.json`.
// Concurrent readers are allowed; writers are serialized and replace the file
// atomically.
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::filesystem::path dir);

    std::filesystem::path path_for(const std::string& graph_id) const;

    struct Entry {
        std::string text;
        EmbeddingVector vector;
    };
    struct Contents {
        std::string embedder_id;
        std::size_t dim = 0;
        std::vector<std::pair<NodeId, Entry>> nodes;
        std::vector<std::pair<std::size_t, Entry>> edges;
    };

    std::optional<Contents> read(const std::string& graph_id) const;
    void write(const std::string& graph_id, const Contents& contents);

private:
    std::filesystem::path dir_;
    mutable std::shared_mutex mutex_;
};

struct EmbedOptions {
    EdgeTextMode edge_text = EdgeTextMode::action;
    EmbeddingCache* cache = nullptr;
};

// Embeds every node and edge, reusing cached vectors whose text and embedder
// id are unchanged. Fails atomically: nothing is cached unless all succeed.
GraphEmbeddings embed_graph(Embedder& embedder, const StateActionGraph& g, const EmbedOptions& options = {});

std::string encode_vector_base64(std::span<const float> values);
std::vector<float> decode_vector_base64(std::string_view text, std::size_t dim);

}  // namespace grag
