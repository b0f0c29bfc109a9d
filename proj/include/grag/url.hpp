#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace grag::url {

// Generic RFC 3986 URI components. `has_*` distinguishes an empty component
// from an absent one ("http://h/?" has an empty query).
struct Parts {
    std::string scheme;
    bool has_authority = false;
    std::string authority;
    std::string path;
    bool has_query = false;
    std::string query;
    bool has_fragment = false;
    std::string fragment;
};

Parts split(std::string_view ref);
std::string join(const Parts& parts);

std::string remove_dot_segments(std::string_view path);

// Resolves `ref` against the absolute `base` (RFC 3986 section 5.2.2).
std::string resolve(std::string_view base, std::string_view ref);

// Lowercases scheme and host, drops default ports and the fragment, resolves
// dot segments and gives an empty http(s) path "/". Optionally drops the query.
std::string normalize(std::string_view absolute, bool strip_query = false);

// Lowercased host of an http(s) URL; nullopt for anything else.
std::optional<std::string> http_host(std::string_view absolute);

}  // namespace grag::url
