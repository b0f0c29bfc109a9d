#include "grag/textualize.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <tuple>

#include "grag/error.hpp"

namespace grag {

namespace {

constexpr std::string_view kNodeHeader = "node_id,node_name";
constexpr std::string_view kEdgeHeader = "node_src,node_tgt,action,type";

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

// Reads one CSV record starting at `pos`; quoted fields may span lines.
// Returns false at end of input.
bool read_record(std::string_view text, std::size_t& pos, std::vector<std::string>& fields) {
    fields.clear();
    if (pos >= text.size()) return false;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    while (pos < text.size()) {
        const char c = text[pos++];
        if (quoted) {
            if (c == '"') {
                if (pos < text.size() && text[pos] == '"') {
                    field += '"';
                    ++pos;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"' && field.empty() && !was_quoted) {
            quoted = was_quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            was_quoted = false;
        } else if (c == '\n') {
            fields.push_back(std::move(field));
            return true;
        } else if (c == '\r' && pos < text.size() && text[pos] == '\n') {
            // CRLF line ending
        } else {
            field += c;
        }
    }
    if (quoted) throw ParseError("subgraph text: unterminated quoted field");
    fields.push_back(std::move(field));
    return true;
}

NodeId parse_id(const std::string& s, std::size_t line) {
    NodeId id = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), id);
    if (ec != std::errc{} || end != s.data() + s.size()) {
        throw ParseError("subgraph text line " + std::to_string(line) + ": '" + s + "' is not a node id");
    }
    return id;
}

std::string join_fields(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += fields[i];
    }
    return out;
}

}  // namespace

std::string csv_field(std::string_view value) {
    if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string textualize(const Subgraph& sg, const StateActionGraph& g) {
    std::vector<NodeId> nodes = sg.nodes;
    std::sort(nodes.begin(), nodes.end());
    const std::set<NodeId> members(nodes.begin(), nodes.end());
    for (auto id : nodes) {
        if (!g.contains(id)) throw IntegrityError("subgraph node " + std::to_string(id) + " is not in the graph");
    }

    std::vector<const EdgeRecord*> edges;
    bool with_detail = false;
    for (auto e : sg.edges) {
        if (e >= g.edges().size()) throw IntegrityError("subgraph edge #" + std::to_string(e) + " is not in the graph");
        const auto& edge = g.edges()[e];
        if (!members.contains(edge.src) || !members.contains(edge.tgt)) {
            throw IntegrityError("subgraph edge #" + std::to_string(e) + " (" + std::to_string(edge.src) + " -> " +
                                 std::to_string(edge.tgt) + ") references a node outside the subgraph");
        }
        edges.push_back(&edge);
        with_detail = with_detail || edge.detail.has_value();
    }
    std::sort(edges.begin(), edges.end(), [](const EdgeRecord* a, const EdgeRecord* b) {
        return std::tie(a->src, a->tgt, a->action) < std::tie(b->src, b->tgt, b->action);
    });

    std::string out;
    out += kNodeHeader;
    out += '\n';
    for (auto id : nodes) {
        out += std::to_string(id);
        out += ',';
        out += csv_field(g.node(id).name);
        out += '\n';
    }
    out += '\n';
    out += kEdgeHeader;
    if (with_detail) out += ",detail";
    out += '\n';
    for (const auto* edge : edges) {
        out += std::to_string(edge->src);
        out += ',';
        out += std::to_string(edge->tgt);
        out += ',';
        out += csv_field(edge->action);
        out += ',';
        out += to_string(edge->kind);
        if (with_detail) {
            out += ',';
            out += csv_field(edge->detail.value_or(""));
        }
        out += '\n';
    }
    return out;
}

ParsedSubgraph parse_subgraph_text(std::string_view text) {
    ParsedSubgraph parsed;
    std::size_t pos = 0;
    std::size_t line = 0;
    std::vector<std::string> fields;

    if (!read_record(text, pos, fields) || join_fields(fields) != kNodeHeader) {
        throw ParseError("subgraph text: missing '" + std::string(kNodeHeader) + "' header");
    }
    ++line;
    for (;;) {
        if (!read_record(text, pos, fields)) throw ParseError("subgraph text: missing edge section");
        ++line;
        if (fields.size() == 1 && fields[0].empty()) break;
        if (fields.size() != 2) {
            throw ParseError("subgraph text line " + std::to_string(line) + ": expected 2 fields in node row");
        }
        parsed.nodes.emplace_back(parse_id(fields[0], line), fields[1]);
    }

    if (!read_record(text, pos, fields)) throw ParseError("subgraph text: missing edge header");
    ++line;
    const auto header = join_fields(fields);
    const bool with_detail = header == std::string(kEdgeHeader) + ",detail";
    if (!with_detail && header != kEdgeHeader) {
        throw ParseError("subgraph text: unexpected edge header '" + header + "'");
    }
    const std::size_t width = with_detail ? 5 : 4;
    while (read_record(text, pos, fields)) {
        ++line;
        if (fields.size() != width) {
            throw ParseError("subgraph text line " + std::to_string(line) + ": expected " + std::to_string(width) +
                             " fields in edge row");
        }
        ParsedEdge e{parse_id(fields[0], line), parse_id(fields[1], line), fields[2], fields[3], std::nullopt};
        if (with_detail && !fields[4].empty()) e.detail = fields[4];
        parsed.edges.push_back(std::move(e));
    }
    return parsed;
}

int estimate_tokens(std::string_view text) {
    return std::max<int>(1, static_cast<int>((text.size() + 3) / 4));
}

namespace {

PromptBundle finish_bundle(PromptBundle b, const PromptConfig& cfg) {
    b.full_prompt = b.system_prompt;
    b.full_prompt += kSectionSeparator;
    b.full_prompt += b.user_message;
    b.token_estimate = estimate_tokens(b.full_prompt);
    if (b.token_estimate > cfg.token_budget) {
        throw PromptTooLargeError(b.token_estimate, cfg.token_budget);
    }
    return b;
}

void require_question(std::string_view question) {
    if (is_blank(question)) throw ValidationError("empty question");
}

}  // namespace

PromptBundle build_prompt(std::string_view subgraph_text, std::string_view question, const PromptConfig& cfg) {
    require_question(question);
    PromptBundle b;
    b.system_prompt = cfg.system_prompt;
    b.subgraph_text = subgraph_text;
    b.question = question;
    b.user_message += kGraphBegin;
    b.user_message += '\n';
    b.user_message += subgraph_text;
    b.user_message += kGraphEnd;
    b.user_message += kSectionSeparator;
    b.user_message += kQuestionLabel;
    b.user_message += question;
    return finish_bundle(std::move(b), cfg);
}

PromptBundle build_bare_prompt(std::string_view question, const PromptConfig& cfg) {
    require_question(question);
    PromptBundle b;
    b.bare = true;
    b.system_prompt = cfg.system_prompt;
    b.question = question;
    b.user_message = std::string(kQuestionLabel) + std::string(question);
    return finish_bundle(std::move(b), cfg);
}

std::optional<std::string> extract_graph_block(std::string_view prompt) {
    const std::string open = std::string(kGraphBegin) + "\n";
    const auto begin = prompt.find(open);
    if (begin == std::string_view::npos) return std::nullopt;
    const auto start = begin + open.size();
    const std::string close = std::string(kGraphEnd) + std::string(kSectionSeparator) + std::string(kQuestionLabel);
    for (auto end = prompt.find(close, start); end != std::string_view::npos; end = prompt.find(close, end + 1)) {
        if (end == start || prompt[end - 1] == '\n') return std::string(prompt.substr(start, end - start));
    }
    return std::nullopt;
}

}  // namespace grag
