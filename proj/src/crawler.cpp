#include "grag/crawler.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

#include "grag/error.hpp"
#include "grag/log.hpp"
#include "grag/url.hpp"

namespace grag {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(ClickableKind kind) {
    switch (kind) {
        case ClickableKind::button: return "button";
        case ClickableKind::link: return "link";
        case ClickableKind::menu: return "menu";
        case ClickableKind::form: return "form";
        case ClickableKind::dropdown: return "dropdown";
    }
    return "link";
}

EdgeKind to_edge_kind(ClickableKind kind) {
    switch (kind) {
        case ClickableKind::button: return EdgeKind::button;
        case ClickableKind::link: return EdgeKind::link;
        case ClickableKind::menu: return EdgeKind::menu;
        case ClickableKind::form: return EdgeKind::form;
        case ClickableKind::dropdown: return EdgeKind::dropdown;
    }
    return EdgeKind::link;
}

// --- fixture provider -------------------------------------------------------

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

FixtureSiteProvider::FixtureSiteProvider(fs::path dir) : dir_(std::move(dir)) {
    const auto manifest_path = dir_ / "site.json";
    json doc;
    try {
        doc = json::parse(read_file(manifest_path));
        manifest_.home = doc.at("home").get<std::string>();
        manifest_.host = doc.at("host").get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError("invalid fixture manifest " + manifest_path.string() + ": " + e.what());
    }
}

std::string FixtureSiteProvider::home_url() const {
    return url::normalize("https://" + manifest_.host + "/" + manifest_.home);
}

Page FixtureSiteProvider::load(const std::string& page_url) {
    auto host = url::http_host(page_url);
    if (!host || *host != url::http_host("https://" + manifest_.host)) {
        throw NotFoundError("fixture site does not serve " + page_url);
    }
    auto path = url::split(page_url).path;
    if (path.empty() || path == "/") path = "/index.html";
    auto relative = fs::path(path.substr(1)).lexically_normal();
    if (relative.empty() || *relative.begin() == "..") throw NotFoundError("fixture path escapes site: " + page_url);

    auto file = dir_ / relative;
    if (!fs::is_regular_file(file) && relative.extension().empty()) file += ".html";
    if (!fs::is_regular_file(file)) throw NotFoundError("no fixture page for " + page_url);

    ++load_count_;
    return parse_html_page(read_file(file), page_url);
}

// --- WebDriver provider -----------------------------------------------------

struct WebDriverProvider::Impl {
    WebDriverConfig cfg;
    httplib::Client client;
    std::string session_id;

    explicit Impl(WebDriverConfig c) : cfg(std::move(c)), client(cfg.endpoint) {
        const auto timeout = std::chrono::milliseconds(cfg.timeout_ms);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
    }

    json call(const std::string& method, const std::string& path, const json& body = json::object()) {
        httplib::Result res = method == "GET"      ? client.Get(path)
                              : method == "DELETE" ? client.Delete(path)
                                                   : client.Post(path, body.dump(), "application/json");
        if (!res) throw TransportError("webdriver " + method + " " + path + ": " + httplib::to_string(res.error()));
        json doc = json::parse(res->body, nullptr, false);
        if (res->status != 200) {
            std::string message = doc.is_object() && doc.contains("value") && doc["value"].is_object()
                                      ? doc["value"].value("message", res->body)
                                      : res->body;
            throw CrawlError("webdriver " + method + " " + path + " failed (" + std::to_string(res->status) +
                             "): " + message);
        }
        if (doc.is_discarded()) throw ParseError("webdriver returned non-JSON body for " + path);
        return doc.value("value", json());
    }
};

WebDriverProvider::WebDriverProvider(WebDriverConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {
    json caps = {{"capabilities", {{"alwaysMatch", {{"browserName", impl_->cfg.browser_name}}}}}};
    auto value = impl_->call("POST", "/session", caps);
    impl_->session_id = value.value("sessionId", std::string{});
    if (impl_->session_id.empty()) throw CrawlError("webdriver did not return a session id");

    if (!impl_->cfg.cookies.empty()) {
        if (!impl_->cfg.cookie_domain_url.empty()) {
            impl_->call("POST", "/session/" + impl_->session_id + "/url", {{"url", impl_->cfg.cookie_domain_url}});
        }
        for (const auto& [name, value_text] : impl_->cfg.cookies) {
            impl_->call("POST", "/session/" + impl_->session_id + "/cookie",
                        {{"cookie", {{"name", name}, {"value", value_text}}}});
        }
    }
}

WebDriverProvider::~WebDriverProvider() {
    if (impl_ && !impl_->session_id.empty()) {
        try {
            impl_->call("DELETE", "/session/" + impl_->session_id);
        } catch (const std::exception&) {
            // session already gone
        }
    }
}

Page WebDriverProvider::load(const std::string& page_url) {
    const auto base = "/session/" + impl_->session_id;
    impl_->call("POST", base + "/url", {{"url", page_url}});
    auto current = impl_->call("GET", base + "/url");
    auto source = impl_->call("GET", base + "/source");
    return parse_html_page(source.is_string() ? source.get<std::string>() : std::string{},
                           current.is_string() ? current.get<std::string>() : page_url);
}

// --- crawl --------------------------------------------------------------------

bool is_external(std::string_view target, const CrawlConfig& cfg) {
    auto host = url::http_host(target);
    if (!host) return true;
    auto allowed = cfg.allowed_host;
    std::transform(allowed.begin(), allowed.end(), allowed.begin(), [](unsigned char c) { return std::tolower(c); });
    return *host != allowed;
}

std::vector<Clickable> collect_clickables(PageProvider& provider, const std::string& page_url) {
    try {
        return provider.load(page_url).clickables;
    } catch (const Error& e) {
        log::warning("cannot collect clickables of " + page_url + ": " + e.what());
        return {};
    }
}

CrawlResult crawl(PageProvider& provider, const CrawlConfig& cfg) {
    if (cfg.max_pages < 1) throw ContractViolation("max_pages must be at least 1");
    const auto home = url::normalize(cfg.home_url, cfg.strip_query);
    if (is_external(home, cfg)) throw CrawlError("home URL " + home + " is outside " + cfg.allowed_host);

    std::vector<NodeRecord> nodes;
    std::vector<EdgeRecord> edges;
    std::vector<bool> loaded;
    std::unordered_map<std::string, NodeId> ids;
    std::set<std::tuple<NodeId, NodeId, std::string>> edge_keys;
    std::vector<std::string> warnings;
    std::vector<std::string> visit_order;
    bool truncated = false;
    std::size_t ignored = 0;

    const auto add_node = [&](const std::string& node_url, const std::string& label) {
        const auto id = static_cast<NodeId>(nodes.size());
        nodes.push_back({id, label.empty() ? node_url : label, {}, node_url});
        loaded.push_back(false);
        ids.emplace(node_url, id);
        return id;
    };
    const auto add_edge = [&](NodeId src, NodeId tgt, const Clickable& c) {
        if (edge_keys.emplace(src, tgt, c.label).second) {
            edges.push_back({src, tgt, c.label, to_edge_kind(c.kind), std::nullopt});
        }
    };
    const auto warn = [&](std::string message) {
        log::warning(message);
        warnings.push_back(std::move(message));
    };

    add_node(home, home);
    std::deque<NodeId> queue{0};
    while (!queue.empty()) {
        const NodeId u = queue.front();
        queue.pop_front();
        const std::string u_url = nodes[u].url;
        visit_order.push_back(u_url);

        Page page;
        try {
            page = provider.load(u_url);
        } catch (const Error& e) {
            if (u == 0) throw CrawlError("cannot load home page " + u_url + ": " + e.what());
            warn("cannot load " + u_url + ": " + e.what());
            continue;
        }
        loaded[u] = true;
        if (!page.title.empty()) nodes[u].name = page.title;
        nodes[u].description = page.description;

        for (const auto& c : page.clickables) {
            if (!c.target_url) continue;
            const auto v_url = url::normalize(*c.target_url, cfg.strip_query);
            if (is_external(v_url, cfg)) {
                ++ignored;
                continue;
            }
            auto it = ids.find(v_url);
            NodeId v;
            if (it != ids.end()) {
                v = it->second;
            } else {
                if (nodes.size() >= cfg.max_pages) {
                    truncated = true;
                    continue;
                }
                v = add_node(v_url, c.label);
                queue.push_back(v);
            }
            add_edge(u, v, c);
        }
    }
    if (truncated) warn("crawl truncated at " + std::to_string(cfg.max_pages) + " pages");

    // Button-level actions: controls that do not navigate stay on their page.
    const auto discovered = nodes.size();
    for (std::size_t i = 0; i < discovered; ++i) {
        if (!loaded[i]) continue;
        const auto u = static_cast<NodeId>(i);
        for (const auto& c : collect_clickables(provider, nodes[i].url)) {
            if (!c.target_url) add_edge(u, u, c);
        }
    }

    CrawlResult result{StateActionGraph(cfg.allowed_host, 0, std::move(nodes), std::move(edges)),
                       std::move(visit_order), truncated, ignored, std::move(warnings)};
    return result;
}

}  // namespace grag
