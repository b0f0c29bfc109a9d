#include "grag/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <httplib.h>
#include <json.hpp>

#include "grag/error.hpp"

namespace grag {

using nlohmann::json;
namespace fs = std::filesystem;

// --- vectors ----------------------------------------------------------------

EmbeddingVector EmbeddingVector::normalized(std::vector<float> raw) {
    if (raw.empty()) throw ContractViolation("embedding dimension must be positive");
    double sum = 0.0;
    for (float v : raw) {
        if (!std::isfinite(v)) throw ContractViolation("embedding has a non-finite component");
        sum += static_cast<double>(v) * static_cast<double>(v);
    }
    if (sum == 0.0) return basis(raw.size());
    const double inv = 1.0 / std::sqrt(sum);
    for (auto& v : raw) v = static_cast<float>(static_cast<double>(v) * inv);
    return EmbeddingVector(std::move(raw));
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<float> values) {
    if (values.empty()) throw ContractViolation("embedding dimension must be positive");
    double sum = 0.0;
    for (float v : values) {
        if (!std::isfinite(v)) throw ContractViolation("embedding has a non-finite component");
        sum += static_cast<double>(v) * static_cast<double>(v);
    }
    if (std::abs(std::sqrt(sum) - 1.0) > 1e-6) {
        throw ContractViolation("embedding is not unit-norm (norm " + std::to_string(std::sqrt(sum)) + ")");
    }
    return EmbeddingVector(std::move(values));
}

EmbeddingVector EmbeddingVector::basis(std::size_t dim, std::size_t axis) {
    if (axis >= dim) throw ContractViolation("basis axis out of range");
    std::vector<float> v(dim, 0.0f);
    v[axis] = 1.0f;
    return EmbeddingVector(std::move(v));
}

double dot(std::span<const float> a, std::span<const float> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return sum;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw ContractViolation("cosine of vectors with dimensions " + std::to_string(a.dim()) + " and " +
                                std::to_string(b.dim()));
    }
    return std::clamp(dot(a.values(), b.values()), -1.0, 1.0);
}

EmbeddingVector embed_text(Embedder& embedder, std::string_view text) {
    std::string owned(text);
    auto out = embedder.embed(std::span<const std::string>(&owned, 1));
    if (out.size() != 1) throw TransportError("embedder returned " + std::to_string(out.size()) + " vectors for 1 text");
    return std::move(out.front());
}

// --- hashing embedder -------------------------------------------------------

namespace {

const std::unordered_set<std::string_view>& stopwords() {
    static const std::unordered_set<std::string_view> words{
        // English
        "a", "an", "the", "to", "of", "in", "on", "for", "and", "or", "is", "are", "be", "how", "do", "does",
        "i", "my", "me", "what", "with", "at", "by", "from", "it", "this", "that", "can", "should", "where",
        // French
        "le", "la", "les", "un", "une", "des", "de", "du", "et", "ou", "pour", "comment", "je", "mon", "ma",
        "mes", "est", "en", "au", "aux", "l", "d"};
    return words;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ULL ^ seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    // splitmix64 finalizer spreads the low bits used for the bucket.
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebULL;
    h ^= h >> 31;
    return h;
}

constexpr double kUnigramWeight = 1.0;
constexpr double kBigramWeight = 0.5;

}  // namespace

std::vector<std::string> embedding_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    const auto flush = [&] {
        if (!current.empty() && !stopwords().contains(current)) tokens.push_back(current);
        current.clear();
    };
    for (unsigned char c : text) {
        if (c >= 0x80 || std::isalnum(c)) {
            current += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw ContractViolation("embedding dimension must be positive");
}

std::string HashingEmbedder::id() const { return "hashing-uni-bi-v1:d" + std::to_string(dim_); }

EmbeddingVector HashingEmbedder::embed_one(std::string_view text) const {
    const auto tokens = embedding_tokens(text);
    std::vector<double> acc(dim_, 0.0);
    const auto add = [&](std::string_view feature, double weight) {
        const auto h = fnv1a(feature, 0x5eedULL);
        const auto bucket = static_cast<std::size_t>(h % dim_);
        const double sign = (h >> 63) ? -1.0 : 1.0;
        acc[bucket] += sign * weight;
    };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        add("u:" + tokens[i], kUnigramWeight);
        if (i + 1 < tokens.size()) add("b:" + tokens[i] + ' ' + tokens[i + 1], kBigramWeight);
    }
    std::vector<float> raw(dim_);
    std::transform(acc.begin(), acc.end(), raw.begin(), [](double v) { return static_cast<float>(v); });
    return EmbeddingVector::normalized(std::move(raw));
}

std::vector<EmbeddingVector> HashingEmbedder::embed(std::span<const std::string> texts) {
    const auto n = static_cast<std::ptrdiff_t>(texts.size());
    std::vector<std::optional<EmbeddingVector>> slots(texts.size());
#pragma omp parallel for schedule(static) if (n > 256)
    for (std::ptrdiff_t i = 0; i < n; ++i) slots[i] = embed_one(texts[i]);
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

// --- remote embedder --------------------------------------------------------

RemoteEmbedderConfig RemoteEmbedderConfig::from_env() {
    RemoteEmbedderConfig cfg;
    if (const char* v = std::getenv("EMBED_URL"); v && *v) cfg.url = v;
    if (const char* v = std::getenv("EMBED_MODEL"); v && *v) cfg.model = v;
    if (const char* v = std::getenv("EMBED_TIMEOUT_MS"); v && *v) cfg.timeout_ms = std::atoi(v);
    return cfg;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig cfg, Sleeper sleeper)
    : cfg_(std::move(cfg)), sleeper_(std::move(sleeper)) {}

std::vector<EmbeddingVector> RemoteEmbedder::embed(std::span<const std::string> texts) {
    if (texts.empty()) return {};
    const json body = {{"model", cfg_.model}, {"texts", std::vector<std::string>(texts.begin(), texts.end())}};
    const auto payload = body.dump(-1, ' ', false, json::error_handler_t::replace);

    auto once = [&]() -> std::vector<EmbeddingVector> {
        httplib::Client client(cfg_.url);
        const auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        auto res = client.Post("/embed", payload, "application/json");
        if (!res) throw TransportError("embedding service unreachable: " + httplib::to_string(res.error()));
        if (res->status == 429) throw RateLimitError("embedding service rate limited");
        if (res->status != 200) {
            throw TransportError("embedding service returned HTTP " + std::to_string(res->status));
        }
        auto doc = json::parse(res->body, nullptr, false);
        if (doc.is_discarded() || !doc.contains("vectors") || !doc["vectors"].is_array()) {
            throw TransportError("embedding service returned a malformed body");
        }
        const auto& vectors = doc["vectors"];
        if (vectors.size() != texts.size()) {
            throw TransportError("embedding service returned " + std::to_string(vectors.size()) + " vectors for " +
                                 std::to_string(texts.size()) + " texts");
        }
        std::vector<EmbeddingVector> out;
        out.reserve(vectors.size());
        for (const auto& v : vectors) {
            auto raw = v.get<std::vector<float>>();
            if (raw.size() != cfg_.dim) {
                throw ContractViolation("embedding service returned dimension " + std::to_string(raw.size()) +
                                        ", expected " + std::to_string(cfg_.dim));
            }
            out.push_back(EmbeddingVector::normalized(std::move(raw)));
        }
        return out;
    };
    return with_retry(cfg_.retry, once, sleeper_);
}

// --- graph embeddings -------------------------------------------------------

std::string node_text(const NodeRecord& node) { return node.description.empty() ? node.name : node.description; }

std::string edge_text(const EdgeRecord& edge, EdgeTextMode mode) {
    if (mode == EdgeTextMode::action_and_kind) return edge.action + " (" + std::string(to_string(edge.kind)) + ")";
    return edge.action;
}

GraphEmbeddings::GraphEmbeddings(std::string graph_id, std::string embedder_id, std::size_t dim,
                                 std::vector<NodeId> node_ids, std::vector<float> node_matrix,
                                 std::vector<float> edge_matrix)
    : graph_id_(std::move(graph_id)),
      embedder_id_(std::move(embedder_id)),
      dim_(dim),
      node_ids_(std::move(node_ids)),
      node_matrix_(std::move(node_matrix)),
      edge_matrix_(std::move(edge_matrix)) {
    if (dim_ == 0) throw ContractViolation("embedding dimension must be positive");
    if (node_matrix_.size() != node_ids_.size() * dim_ || edge_matrix_.size() % dim_ != 0) {
        throw ContractViolation("embedding matrix shape does not match dimension");
    }
    if (!std::is_sorted(node_ids_.begin(), node_ids_.end())) {
        throw ContractViolation("embedding rows must be ordered by node_id");
    }
}

std::optional<std::size_t> GraphEmbeddings::row_of(NodeId id) const {
    auto it = std::lower_bound(node_ids_.begin(), node_ids_.end(), id);
    if (it == node_ids_.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - node_ids_.begin());
}

EmbeddingVector GraphEmbeddings::node_vector(NodeId id) const {
    auto row = row_of(id);
    if (!row) throw NotFoundError("no embedding for node " + std::to_string(id));
    auto r = node_row(*row);
    return EmbeddingVector::from_unit({r.begin(), r.end()});
}

EmbeddingVector GraphEmbeddings::edge_vector(std::size_t index) const {
    if (index >= edge_count()) throw NotFoundError("no embedding for edge " + std::to_string(index));
    auto r = edge_row(index);
    return EmbeddingVector::from_unit({r.begin(), r.end()});
}

// --- base64 -------------------------------------------------------------------

std::string encode_vector_base64(std::span<const float> values) {
    using namespace boost::archive::iterators;
    using It = base64_from_binary<transform_width<const char*, 6, 8>>;
    static_assert(std::endian::native == std::endian::little, "cache format is little-endian float32");
    std::string bytes(values.size() * sizeof(float), '\0');
    std::memcpy(bytes.data(), values.data(), bytes.size());
    std::string out(It(bytes.data()), It(bytes.data() + bytes.size()));
    out.append((3 - bytes.size() % 3) % 3, '=');
    return out;
}

std::vector<float> decode_vector_base64(std::string_view text, std::size_t dim) {
    using namespace boost::archive::iterators;
    using It = transform_width<binary_from_base64<const char*>, 8, 6>;
    std::string trimmed(text);
    std::size_t padding = 0;
    while (!trimmed.empty() && trimmed.back() == '=') {
        trimmed.pop_back();
        ++padding;
    }
    std::string bytes;
    try {
        bytes.assign(It(trimmed.data()), It(trimmed.data() + trimmed.size()));
    } catch (const std::exception&) {
        throw ParseError("invalid base64 vector");
    }
    // transform_width may emit a trailing partial byte built from padding bits.
    bytes.resize(std::min(bytes.size(), trimmed.size() * 6 / 8));
    if (bytes.size() != dim * sizeof(float)) {
        throw ParseError("base64 vector holds " + std::to_string(bytes.size()) + " bytes, expected " +
                         std::to_string(dim * sizeof(float)));
    }
    std::vector<float> out(dim);
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

// --- cache --------------------------------------------------------------------

EmbeddingCache::EmbeddingCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

fs::path EmbeddingCache::path_for(const std::string& graph_id) const {
    std::string safe;
    for (char c : graph_id) safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
    return dir_ / (safe + ".emb.json");
}

std::optional<EmbeddingCache::Contents> EmbeddingCache::read(const std::string& graph_id) const {
    std::shared_lock lock(mutex_);
    std::ifstream in(path_for(graph_id), std::ios::binary);
    if (!in) return std::nullopt;
    auto doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
    try {
        Contents c;
        c.embedder_id = doc.at("embedder_id").get<std::string>();
        c.dim = doc.at("d").get<std::size_t>();
        for (const auto& n : doc.at("nodes")) {
            c.nodes.push_back({n.at("node_id").get<NodeId>(),
                               {n.at("text").get<std::string>(),
                                EmbeddingVector::from_unit(decode_vector_base64(n.at("vector").get<std::string>(), c.dim))}});
        }
        for (const auto& e : doc.at("edges")) {
            c.edges.push_back({e.at("index").get<std::size_t>(),
                               {e.at("text").get<std::string>(),
                                EmbeddingVector::from_unit(decode_vector_base64(e.at("vector").get<std::string>(), c.dim))}});
        }
        return c;
    } catch (const std::exception&) {
        return std::nullopt;  // unreadable cache is a miss
    }
}

void EmbeddingCache::write(const std::string& graph_id, const Contents& c) {
    nlohmann::ordered_json doc;
    doc["graph_id"] = graph_id;
    doc["embedder_id"] = c.embedder_id;
    doc["d"] = c.dim;
    doc["nodes"] = nlohmann::ordered_json::array();
    for (const auto& [id, entry] : c.nodes) {
        doc["nodes"].push_back({{"node_id", id}, {"text", entry.text}, {"vector", encode_vector_base64(entry.vector.values())}});
    }
    doc["edges"] = nlohmann::ordered_json::array();
    for (const auto& [index, entry] : c.edges) {
        doc["edges"].push_back({{"index", index}, {"text", entry.text}, {"vector", encode_vector_base64(entry.vector.values())}});
    }

    std::unique_lock lock(mutex_);
    const auto target = path_for(graph_id);
    auto tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("io_error", "cannot write embedding cache " + tmp.string());
        out << doc.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace) << '\n';
    }
    fs::rename(tmp, target);
}

GraphEmbeddings embed_graph(Embedder& embedder, const StateActionGraph& g, const EmbedOptions& options) {
    const auto dim = embedder.dimension();
    const auto embedder_id = embedder.id();

    std::vector<NodeId> node_ids;
    for (const auto& n : g.nodes()) node_ids.push_back(n.node_id);
    std::sort(node_ids.begin(), node_ids.end());

    // texts[0..N) are nodes in row order, texts[N..N+E) are edges.
    std::vector<std::string> texts;
    texts.reserve(node_ids.size() + g.edges().size());
    for (auto id : node_ids) texts.push_back(node_text(g.node(id)));
    for (const auto& e : g.edges()) texts.push_back(edge_text(e, options.edge_text));

    std::vector<std::optional<EmbeddingVector>> vectors(texts.size());
    if (options.cache) {
        if (auto cached = options.cache->read(g.graph_id()); cached && cached->embedder_id == embedder_id && cached->dim == dim) {
            std::unordered_map<NodeId, const EmbeddingCache::Entry*> by_node;
            for (const auto& [id, entry] : cached->nodes) by_node[id] = &entry;
            for (std::size_t row = 0; row < node_ids.size(); ++row) {
                auto it = by_node.find(node_ids[row]);
                if (it != by_node.end() && it->second->text == texts[row]) vectors[row] = it->second->vector;
            }
            for (const auto& [index, entry] : cached->edges) {
                const auto slot = node_ids.size() + index;
                if (index < g.edges().size() && entry.text == texts[slot]) vectors[slot] = entry.vector;
            }
        }
    }

    std::vector<std::size_t> missing;
    std::vector<std::string> missing_texts;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (!vectors[i]) {
            missing.push_back(i);
            missing_texts.push_back(texts[i]);
        }
    }
    if (!missing.empty()) {
        auto fresh = embedder.embed(missing_texts);
        if (fresh.size() != missing.size()) throw TransportError("embedder returned the wrong number of vectors");
        for (std::size_t j = 0; j < missing.size(); ++j) {
            if (fresh[j].dim() != dim) throw ContractViolation("embedder returned a vector of the wrong dimension");
            vectors[missing[j]] = std::move(fresh[j]);
        }
    }

    std::vector<float> node_matrix;
    std::vector<float> edge_matrix;
    node_matrix.reserve(node_ids.size() * dim);
    edge_matrix.reserve(g.edges().size() * dim);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        auto values = vectors[i]->values();
        auto& target = i < node_ids.size() ? node_matrix : edge_matrix;
        target.insert(target.end(), values.begin(), values.end());
    }

    if (options.cache && !missing.empty()) {
        EmbeddingCache::Contents contents;
        contents.embedder_id = embedder_id;
        contents.dim = dim;
        for (std::size_t row = 0; row < node_ids.size(); ++row) {
            contents.nodes.push_back({node_ids[row], {texts[row], *vectors[row]}});
        }
        for (std::size_t e = 0; e < g.edges().size(); ++e) {
            const auto slot = node_ids.size() + e;
            contents.edges.push_back({e, {texts[slot], *vectors[slot]}});
        }
        options.cache->write(g.graph_id(), contents);
    }

    return GraphEmbeddings(g.graph_id(), embedder_id, dim, std::move(node_ids), std::move(node_matrix),
                           std::move(edge_matrix));
}

}  // namespace grag
