#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grag/graph.hpp"
#include "grag/pcst.hpp"

namespace grag {

// Quotes a field when it contains a comma, a double quote, CR or LF.
std::string csv_field(std::string_view value);

// Two CSV sections separated by a blank line:
//
//   node_id,node_name
//   <id>,<name>                  nodes by id
//
//   node_src,node_tgt,action,type[,detail]
//   <src>,<tgt>,<action>,<kind>  edges by (src, tgt, action)
//
// The detail column appears only when some edge carries a detail.
std::string textualize(const Subgraph& sg, const StateActionGraph& g);

struct ParsedEdge {
    NodeId src = 0;
    NodeId tgt = 0;
    std::string action;
    std::string type;
    std::optional<std::string> detail;

    friend bool operator==(const ParsedEdge&, const ParsedEdge&) = default;
};

struct ParsedSubgraph {
    std::vector<std::pair<NodeId, std::string>> nodes;
    std::vector<ParsedEdge> edges;
};

// Inverse of textualize. Throws ParseError on malformed input.
ParsedSubgraph parse_subgraph_text(std::string_view text);

inline constexpr std::string_view kDefaultSystemPrompt =
    "You are an expert assistant for enterprise software like CRM, ERP, HRMS, or other complex platforms. "
    "Help the user complete tasks by giving clear, step-by-step instructions using the actual menus, buttons, "
    "and labels in the software. If a step cannot be done, explain why. Avoid guessing or inventing features. "
    "Keep instructions precise and actionable.";

inline constexpr std::string_view kGraphBegin = "GRAPH CONTEXT BEGIN";
inline constexpr std::string_view kGraphEnd = "GRAPH CONTEXT END";
inline constexpr std::string_view kQuestionLabel = "User question: ";
inline constexpr std::string_view kSectionSeparator = "\n\n";

struct PromptConfig {
    std::string system_prompt{kDefaultSystemPrompt};
    int token_budget = 8000;
};

// full_prompt = system_prompt + user_message, joined by kSectionSeparator.
// user_message is what travels in the user role.
struct PromptBundle {
    std::string system_prompt;
    std::string subgraph_text;
    std::string question;
    std::string user_message;
    std::string full_prompt;
    int token_estimate = 1;
    bool bare = false;
};

// ceil(bytes / 4), at least 1.
int estimate_tokens(std::string_view text);

// user_message = "GRAPH CONTEXT BEGIN\n" + subgraph_text + "GRAPH CONTEXT END\n\nUser question: " + question.
// Throws ValidationError for a blank question and PromptTooLargeError over budget.
PromptBundle build_prompt(std::string_view subgraph_text, std::string_view question, const PromptConfig& cfg = {});

// System prompt and question only, no graph block.
PromptBundle build_bare_prompt(std::string_view question, const PromptConfig& cfg = {});

// The text between the fences of a prompt or user message; nullopt without fences.
std::optional<std::string> extract_graph_block(std::string_view prompt);

}  // namespace grag
