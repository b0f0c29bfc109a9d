#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grag/graph.hpp"

namespace grag {

enum class ClickableKind { button, link, menu, form, dropdown };

std::string_view to_string(ClickableKind kind);
EdgeKind to_edge_kind(ClickableKind kind);

struct Clickable {
    std::string label;                      // whitespace-normalized, never empty
    std::optional<std::string> target_url;  // absolute, fragment stripped
    ClickableKind kind = ClickableKind::link;

    friend bool operator==(const Clickable&, const Clickable&) = default;
};

struct Page {
    std::string url;
    std::string title;
    std::string description;
    std::vector<Clickable> clickables;  // document order
};

// DOM inspection of a static HTML document located at `page_url`.
Page parse_html_page(std::string_view html, std::string_view page_url);

// Title plus h1-h3 headings: "Title — h1; h2". Title alone when there are no headings.
std::string page_description(std::string_view title, const std::vector<std::string>& headings);

// Source of rendered pages. `load` throws grag::Error when the page cannot be loaded.
class PageProvider {
public:
    virtual ~PageProvider() = default;
    virtual Page load(const std::string& url) = 0;
};

struct SiteManifest {
    std::string home;  // file name relative to the fixture directory
    std::string host;
};

// Serves a directory of .html files described by site.json as https://<host>/<file>.
class FixtureSiteProvider : public PageProvider {
public:
    explicit FixtureSiteProvider(std::filesystem::path dir);

    Page load(const std::string& url) override;

    const SiteManifest& manifest() const { return manifest_; }
    std::string home_url() const;
    std::size_t load_count() const { return load_count_; }

private:
    std::filesystem::path dir_;
    SiteManifest manifest_;
    std::size_t load_count_ = 0;
};

// Best-effort live provider speaking the W3C WebDriver protocol to a
// chromedriver/geckodriver-style endpoint. Not used by the deterministic tests.
struct WebDriverConfig {
    std::string endpoint = "http://127.0.0.1:4444";
    std::string browser_name = "chrome";
    // Session cookies installed before the crawl (static login state).
    std::map<std::string, std::string> cookies;
    std::string cookie_domain_url;  // page visited before installing cookies
    int timeout_ms = 30000;
};

class WebDriverProvider : public PageProvider {
public:
    explicit WebDriverProvider(WebDriverConfig cfg);
    ~WebDriverProvider() override;

    WebDriverProvider(const WebDriverProvider&) = delete;
    WebDriverProvider& operator=(const WebDriverProvider&) = delete;

    Page load(const std::string& url) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct CrawlConfig {
    std::string home_url;
    std::string allowed_host;
    std::size_t max_pages = 10000;
    bool strip_query = false;  // fragments are always stripped
};

// True iff the URL is not http(s) on exactly `allowed_host` (case-insensitive).
bool is_external(std::string_view url, const CrawlConfig& cfg);

// Clickables of one page; empty (plus a warning) when the page cannot be loaded.
std::vector<Clickable> collect_clickables(PageProvider& provider, const std::string& url);

struct CrawlResult {
    StateActionGraph graph;
    std::vector<std::string> visit_order;  // dequeued URLs
    bool truncated = false;
    std::size_t ignored_external = 0;
    std::vector<std::string> warnings;
};

// Breadth-first exploration from cfg.home_url followed by a revisit pass that
// attaches non-navigating controls as self-loops.
CrawlResult crawl(PageProvider& provider, const CrawlConfig& cfg);

}  // namespace grag
