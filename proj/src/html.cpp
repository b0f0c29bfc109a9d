// Tolerant HTML scanner for clickable extraction. It does not build a DOM:
// it keeps a stack of open elements, which is all the context the clickable
// rules need (enclosing form, nav, menu or dropdown container).

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "grag/crawler.hpp"
#include "grag/url.hpp"

namespace grag {
namespace {

struct Attribute {
    std::string name;
    std::string value;
};

struct Element {
    std::string name;
    std::vector<Attribute> attrs;

    const std::string* attr(std::string_view key) const {
        for (const auto& a : attrs) {
            if (a.name == key) return &a.value;
        }
        return nullptr;
    }
    bool has_class_token(std::string_view needle) const {
        const auto* cls = attr("class");
        if (!cls) return false;
        std::istringstream in(*cls);
        std::string token;
        while (in >> token) {
            if (token.find(needle) != std::string::npos) return true;
        }
        return false;
    }
};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

void append_utf8(std::string& out, unsigned long cp) {
    if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

std::string decode_entities(std::string_view s) {
    static constexpr std::array<std::pair<std::string_view, std::string_view>, 8> named{{
        {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""},
        {"apos", "'"}, {"nbsp", " "}, {"mdash", "\xE2\x80\x94"}, {"ndash", "\xE2\x80\x93"},
    }};
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out += s[i];
            continue;
        }
        auto semi = s.find(';', i);
        if (semi == std::string_view::npos || semi - i > 10) {
            out += '&';
            continue;
        }
        auto body = s.substr(i + 1, semi - i - 1);
        bool done = false;
        if (body.size() > 1 && body[0] == '#') {
            const bool hex = body[1] == 'x' || body[1] == 'X';
            auto digits = body.substr(hex ? 2 : 1);
            if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [&](unsigned char c) {
                    return hex ? std::isxdigit(c) : std::isdigit(c);
                })) {
                append_utf8(out, std::stoul(std::string(digits), nullptr, hex ? 16 : 10));
                done = true;
            }
        } else {
            for (auto [name, text] : named) {
                if (body == name) {
                    out += text;
                    done = true;
                    break;
                }
            }
        }
        if (done) {
            i = semi;
        } else {
            out += '&';
        }
    }
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out += ' ';
            pending_space = false;
            out += c;
        }
    }
    return out;
}

bool is_void(std::string_view name) {
    static constexpr std::array<std::string_view, 14> voids{"area", "base", "br",    "col",   "embed",
                                                           "hr",   "img",  "input", "link",  "meta",
                                                           "param", "source", "track", "wbr"};
    return std::find(voids.begin(), voids.end(), name) != voids.end();
}

enum class TokenType { start, end, text };

struct Token {
    TokenType type;
    Element element;  // start/end
    std::string text;
    bool self_closing = false;
};

class Tokenizer {
public:
    explicit Tokenizer(std::string_view html) : s_(html) {}

    std::optional<Token> next() {
        while (pos_ < s_.size()) {
            if (!raw_text_end_.empty()) return raw_text();
            if (s_[pos_] != '<') return text();
            if (s_.compare(pos_, 4, "<!--") == 0) {
                auto end = s_.find("-->", pos_ + 4);
                pos_ = end == std::string_view::npos ? s_.size() : end + 3;
                continue;
            }
            if (pos_ + 1 < s_.size() && (s_[pos_ + 1] == '!' || s_[pos_ + 1] == '?')) {
                auto end = s_.find('>', pos_);
                pos_ = end == std::string_view::npos ? s_.size() : end + 1;
                continue;
            }
            const bool closing = pos_ + 1 < s_.size() && s_[pos_ + 1] == '/';
            const auto name_start = pos_ + (closing ? 2 : 1);
            if (name_start >= s_.size() || !std::isalpha(static_cast<unsigned char>(s_[name_start]))) {
                return text_literal();
            }
            return tag(closing, name_start);
        }
        return std::nullopt;
    }

private:
    Token text() {
        auto end = s_.find('<', pos_ + 1);
        if (end == std::string_view::npos) end = s_.size();
        Token t{TokenType::text, {}, decode_entities(s_.substr(pos_, end - pos_))};
        pos_ = end;
        return t;
    }

    Token text_literal() {
        Token t{TokenType::text, {}, "<"};
        ++pos_;
        return t;
    }

    Token raw_text() {
        auto end = pos_;
        while (true) {
            end = s_.find("</", end);
            if (end == std::string_view::npos) {
                end = s_.size();
                break;
            }
            if (lower(s_.substr(end + 2, raw_text_end_.size())) == raw_text_end_) break;
            end += 2;
        }
        // script/style content is never user-visible text
        Token t{TokenType::text, {}, {}};
        pos_ = end;
        raw_text_end_.clear();
        return t;
    }

    Token tag(bool closing, std::size_t i) {
        Token t{closing ? TokenType::end : TokenType::start, {}, {}};
        auto name_end = i;
        while (name_end < s_.size() && !is_space(s_[name_end]) && s_[name_end] != '>' && s_[name_end] != '/') ++name_end;
        t.element.name = lower(s_.substr(i, name_end - i));
        i = name_end;
        while (i < s_.size() && s_[i] != '>') {
            if (is_space(s_[i])) {
                ++i;
                continue;
            }
            if (s_[i] == '/') {
                t.self_closing = true;
                ++i;
                continue;
            }
            auto attr_end = i;
            while (attr_end < s_.size() && !is_space(s_[attr_end]) && s_[attr_end] != '=' && s_[attr_end] != '>' &&
                   !(s_[attr_end] == '/' && attr_end + 1 < s_.size() && s_[attr_end + 1] == '>')) {
                ++attr_end;
            }
            Attribute attr{lower(s_.substr(i, attr_end - i)), {}};
            i = attr_end;
            while (i < s_.size() && is_space(s_[i])) ++i;
            if (i < s_.size() && s_[i] == '=') {
                ++i;
                while (i < s_.size() && is_space(s_[i])) ++i;
                if (i < s_.size() && (s_[i] == '"' || s_[i] == '\'')) {
                    const char quote = s_[i];
                    auto close = s_.find(quote, i + 1);
                    if (close == std::string_view::npos) close = s_.size();
                    attr.value = decode_entities(s_.substr(i + 1, close - i - 1));
                    i = std::min(close + 1, s_.size());
                } else {
                    auto v_end = i;
                    while (v_end < s_.size() && !is_space(s_[v_end]) && s_[v_end] != '>') ++v_end;
                    attr.value = decode_entities(s_.substr(i, v_end - i));
                    i = v_end;
                }
            }
            if (!attr.name.empty()) t.element.attrs.push_back(std::move(attr));
        }
        pos_ = std::min(i + 1, s_.size());
        if (!closing && (t.element.name == "script" || t.element.name == "style")) raw_text_end_ = t.element.name;
        return t;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    std::string raw_text_end_;
};

// A clickable whose label is still being collected.
struct PendingClickable {
    std::size_t slot;
    std::size_t stack_depth;
    std::string text;
    std::string fallback;  // attribute-derived label used when the content is empty
};

}  // namespace

std::string page_description(std::string_view title, const std::vector<std::string>& headings) {
    std::string out(title);
    if (headings.empty()) return out;
    out += " \xE2\x80\x94 ";
    for (std::size_t i = 0; i < headings.size(); ++i) {
        if (i) out += "; ";
        out += headings[i];
    }
    return out;
}

Page parse_html_page(std::string_view html, std::string_view page_url) {
    Page page;
    page.url = url::normalize(page_url);

    std::vector<Element> stack;
    std::vector<std::optional<Clickable>> slots;
    std::vector<PendingClickable> pending;
    std::vector<std::string> headings;
    std::optional<std::string> title_text;
    std::optional<std::string> heading_text;
    bool in_title = false;

    const auto ancestor = [&](auto pred) -> const Element* {
        for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
            if (pred(*it)) return &*it;
        }
        return nullptr;
    };
    const auto resolve_target = [&](std::string_view ref) -> std::optional<std::string> {
        std::string trimmed = collapse_whitespace(ref);
        if (trimmed.empty()) return std::nullopt;
        auto lowered = lower(trimmed);
        if (lowered.starts_with("javascript:")) return std::nullopt;
        return url::normalize(url::resolve(page.url, trimmed));
    };
    const auto container_kind = [&](const Element& self) -> std::optional<ClickableKind> {
        const auto role = [](const Element& e) { return e.attr("role") ? lower(*e.attr("role")) : std::string{}; };
        const auto dropdown = [&](const Element& e) {
            auto r = role(e);
            return e.has_class_token("dropdown") || r == "listbox" || r == "option";
        };
        const auto menu = [&](const Element& e) {
            auto r = role(e);
            return e.name == "nav" || e.name == "menu" || r == "menu" || r == "menubar" || r == "menuitem";
        };
        if (dropdown(self) || ancestor(dropdown)) return ClickableKind::dropdown;
        if (menu(self) || ancestor(menu)) return ClickableKind::menu;
        return std::nullopt;
    };
    const auto open_form = [&]() { return ancestor([](const Element& e) { return e.name == "form"; }); };
    const auto fallback_label = [](const Element& e) {
        for (auto key : {"aria-label", "title", "value"}) {
            if (const auto* v = e.attr(key)) {
                auto label = collapse_whitespace(*v);
                if (!label.empty()) return label;
            }
        }
        return std::string{};
    };
    const auto submit_target = [&](const Element& control) -> std::optional<std::string> {
        if (const auto* fa = control.attr("formaction")) return resolve_target(*fa);
        if (const auto* form = open_form()) {
            if (const auto* action = form->attr("action")) return resolve_target(*action);
        }
        return std::nullopt;
    };

    const auto finish = [&](const PendingClickable& p) {
        auto label = collapse_whitespace(p.text);
        slots[p.slot]->label = label.empty() ? p.fallback : std::move(label);
    };

    Tokenizer tokenizer(html);
    while (auto token = tokenizer.next()) {
        if (token->type == TokenType::text) {
            if (in_title && title_text) *title_text += token->text;
            if (heading_text) *heading_text += token->text;
            for (auto& p : pending) p.text += token->text;
            continue;
        }

        const auto& name = token->element.name;
        if (token->type == TokenType::start) {
            const Element& el = token->element;
            if (name == "title" && !title_text) {
                title_text.emplace();
                in_title = true;
            } else if ((name == "h1" || name == "h2" || name == "h3") && !heading_text) {
                heading_text.emplace();
            } else if (name == "a") {
                const auto* href = el.attr("href");
                auto target = href ? resolve_target(*href) : std::nullopt;
                auto role = el.attr("role") ? lower(*el.attr("role")) : std::string{};
                if (target || role == "button") {
                    Clickable c;
                    c.target_url = target;
                    c.kind = target ? container_kind(el).value_or(ClickableKind::link) : ClickableKind::button;
                    slots.emplace_back(std::move(c));
                    pending.push_back({slots.size() - 1, stack.size(), {}, fallback_label(el)});
                }
            } else if (name == "button") {
                auto type = el.attr("type") ? lower(*el.attr("type")) : std::string{"submit"};
                Clickable c;
                if (type != "button" && type != "reset" && (open_form() || el.attr("formaction"))) {
                    c.kind = ClickableKind::form;
                    c.target_url = submit_target(el);
                } else {
                    c.kind = ClickableKind::button;
                }
                slots.emplace_back(std::move(c));
                pending.push_back({slots.size() - 1, stack.size(), {}, fallback_label(el)});
            } else if (name == "input") {
                auto type = el.attr("type") ? lower(*el.attr("type")) : std::string{};
                if (type == "submit" || type == "button" || type == "image") {
                    Clickable c;
                    c.label = fallback_label(el);
                    if (c.label.empty()) c.label = type == "submit" ? "Submit" : "Button";
                    if (type != "button" && (open_form() || el.attr("formaction"))) {
                        c.kind = ClickableKind::form;
                        c.target_url = submit_target(el);
                    } else {
                        c.kind = ClickableKind::button;
                    }
                    slots.emplace_back(std::move(c));
                }
            }
            if (!is_void(name) && !token->self_closing) stack.push_back(token->element);
            continue;
        }

        // End tag: close up to the matching open element, if any.
        auto match = std::find_if(stack.rbegin(), stack.rend(), [&](const Element& e) { return e.name == name; });
        if (match == stack.rend()) continue;
        const auto new_depth = static_cast<std::size_t>(stack.rend() - match) - 1;
        stack.resize(new_depth);
        if (name == "title") in_title = false;
        if ((name == "h1" || name == "h2" || name == "h3") && heading_text) {
            auto text = collapse_whitespace(*heading_text);
            if (!text.empty()) headings.push_back(std::move(text));
            heading_text.reset();
        }
        while (!pending.empty() && pending.back().stack_depth >= new_depth) {
            finish(pending.back());
            pending.pop_back();
        }
    }
    // Unclosed elements at end of input.
    while (!pending.empty()) {
        finish(pending.back());
        pending.pop_back();
    }

    page.title = title_text ? collapse_whitespace(*title_text) : std::string{};
    if (page.title.empty() && !headings.empty()) page.title = headings.front();
    page.description = page_description(page.title, headings);

    for (auto& slot : slots) {
        if (!slot) continue;
        if (slot->label.empty()) continue;
        page.clickables.push_back(std::move(*slot));
    }
    return page;
}

}  // namespace grag
