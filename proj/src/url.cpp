#include "grag/url.hpp"

#include <algorithm>
#include <cctype>

namespace grag::url {
namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool valid_scheme(std::string_view s) {
    if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '+' || c == '-' || c == '.';
    });
}

// Host part of an authority (drops userinfo and port).
std::string_view authority_host(std::string_view authority, std::string_view* port = nullptr) {
    if (auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
    std::string_view host = authority;
    std::string_view p;
    if (!authority.empty() && authority.front() == '[') {
        auto close = authority.find(']');
        if (close != std::string_view::npos) {
            host = authority.substr(0, close + 1);
            if (close + 1 < authority.size() && authority[close + 1] == ':') p = authority.substr(close + 2);
        }
    } else if (auto colon = authority.rfind(':'); colon != std::string_view::npos) {
        host = authority.substr(0, colon);
        p = authority.substr(colon + 1);
    }
    if (port) *port = p;
    return host;
}

}  // namespace

Parts split(std::string_view ref) {
    Parts parts;
    if (auto hash = ref.find('#'); hash != std::string_view::npos) {
        parts.has_fragment = true;
        parts.fragment = ref.substr(hash + 1);
        ref = ref.substr(0, hash);
    }
    if (auto q = ref.find('?'); q != std::string_view::npos) {
        parts.has_query = true;
        parts.query = ref.substr(q + 1);
        ref = ref.substr(0, q);
    }
    if (auto colon = ref.find(':'); colon != std::string_view::npos) {
        auto candidate = ref.substr(0, colon);
        if (valid_scheme(candidate) && candidate.find('/') == std::string_view::npos) {
            parts.scheme = candidate;
            ref.remove_prefix(colon + 1);
        }
    }
    if (ref.starts_with("//")) {
        ref.remove_prefix(2);
        auto slash = ref.find('/');
        parts.has_authority = true;
        parts.authority = ref.substr(0, slash);
        ref = slash == std::string_view::npos ? std::string_view{} : ref.substr(slash);
    }
    parts.path = ref;
    return parts;
}

std::string join(const Parts& parts) {
    std::string out;
    if (!parts.scheme.empty()) out += parts.scheme + ":";
    if (parts.has_authority) out += "//" + parts.authority;
    out += parts.path;
    if (parts.has_query) out += "?" + parts.query;
    if (parts.has_fragment) out += "#" + parts.fragment;
    return out;
}

std::string remove_dot_segments(std::string_view input) {
    std::string in(input);
    std::string out;
    while (!in.empty()) {
        if (in.starts_with("../")) {
            in.erase(0, 3);
        } else if (in.starts_with("./")) {
            in.erase(0, 2);
        } else if (in.starts_with("/./")) {
            in.erase(0, 2);
        } else if (in == "/.") {
            in = "/";
        } else if (in.starts_with("/../") || in == "/..") {
            in = in.size() == 3 ? "/" : in.substr(3);
            auto last = out.rfind('/');
            out.erase(last == std::string::npos ? 0 : last);
        } else if (in == "." || in == "..") {
            in.clear();
        } else {
            auto next = in.find('/', in[0] == '/' ? 1 : 0);
            out += in.substr(0, next);
            in.erase(0, next == std::string::npos ? in.size() : next);
        }
    }
    return out;
}

std::string resolve(std::string_view base_text, std::string_view ref_text) {
    const Parts base = split(base_text);
    const Parts ref = split(ref_text);
    Parts target;
    if (!ref.scheme.empty()) {
        target = ref;
        target.path = remove_dot_segments(ref.path);
    } else {
        target.scheme = base.scheme;
        if (ref.has_authority) {
            target.has_authority = true;
            target.authority = ref.authority;
            target.path = remove_dot_segments(ref.path);
            target.has_query = ref.has_query;
            target.query = ref.query;
        } else {
            target.has_authority = base.has_authority;
            target.authority = base.authority;
            if (ref.path.empty()) {
                target.path = base.path;
                target.has_query = ref.has_query || base.has_query;
                target.query = ref.has_query ? ref.query : base.query;
            } else {
                if (ref.path.front() == '/') {
                    target.path = remove_dot_segments(ref.path);
                } else {
                    std::string merged;
                    if (base.has_authority && base.path.empty()) {
                        merged = "/" + ref.path;
                    } else {
                        auto slash = base.path.rfind('/');
                        merged = (slash == std::string::npos ? std::string{} : base.path.substr(0, slash + 1)) + ref.path;
                    }
                    target.path = remove_dot_segments(merged);
                }
                target.has_query = ref.has_query;
                target.query = ref.query;
            }
        }
    }
    target.has_fragment = ref.has_fragment;
    target.fragment = ref.fragment;
    return join(target);
}

std::string normalize(std::string_view absolute, bool strip_query) {
    Parts parts = split(absolute);
    parts.scheme = lower(parts.scheme);
    parts.has_fragment = false;
    parts.fragment.clear();
    if (strip_query) {
        parts.has_query = false;
        parts.query.clear();
    }
    if (parts.has_authority) {
        std::string_view port;
        auto host = lower(authority_host(parts.authority, &port));
        auto at = parts.authority.rfind('@');
        std::string userinfo = at == std::string::npos ? std::string{} : parts.authority.substr(0, at + 1);
        const bool default_port = port.empty() || (parts.scheme == "http" && port == "80") ||
                                  (parts.scheme == "https" && port == "443");
        parts.authority = userinfo + host + (default_port ? std::string{} : ":" + std::string(port));
    }
    parts.path = remove_dot_segments(parts.path);
    if ((parts.scheme == "http" || parts.scheme == "https") && parts.path.empty()) parts.path = "/";
    return join(parts);
}

std::optional<std::string> http_host(std::string_view absolute) {
    const Parts parts = split(absolute);
    const auto scheme = lower(parts.scheme);
    if ((scheme != "http" && scheme != "https") || !parts.has_authority) return std::nullopt;
    auto host = lower(authority_host(parts.authority));
    if (host.empty()) return std::nullopt;
    return host;
}

}  // namespace grag::url
