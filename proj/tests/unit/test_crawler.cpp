#include <doctest.h>

#include <deque>
#include <map>
#include <random>
#include <set>

#include "grag/crawler.hpp"
#include "grag/error.hpp"
#include "grag/url.hpp"

using namespace grag;

namespace {

const std::string kSites = std::string(GRAG_TESTDATA_DIR) + "/sites/";

CrawlResult crawl_fixture(const std::string& name, std::size_t max_pages = 10000) {
    FixtureSiteProvider site(kSites + name);
    CrawlConfig cfg{site.home_url(), site.manifest().host, max_pages, false};
    return crawl(site, cfg);
}

// In-memory site: url -> page. Unknown urls fail to load.
class MapProvider : public PageProvider {
public:
    std::map<std::string, Page> pages;
    Page load(const std::string& u) override {
        auto it = pages.find(u);
        if (it == pages.end()) throw Error("load_error", "no page " + u);
        return it->second;
    }
};

Clickable nav_link(const std::string& label, const std::string& target) { return {label, target, ClickableKind::link}; }

}  // namespace

TEST_CASE("url resolution follows the reference examples") {
    const std::string base = "http://a/b/c/d;p?q";
    const std::map<std::string, std::string> cases{
        {"g", "http://a/b/c/g"},       {"./g", "http://a/b/c/g"},       {"g/", "http://a/b/c/g/"},
        {"/g", "http://a/g"},          {"//g", "http://g"},             {"?y", "http://a/b/c/d;p?y"},
        {"g?y", "http://a/b/c/g?y"},   {"#s", "http://a/b/c/d;p?q#s"},  {"", "http://a/b/c/d;p?q"},
        {"..", "http://a/b/"},         {"../g", "http://a/b/g"},        {"../../../g", "http://a/g"},
        {"/./g", "http://a/g"},        {"g;x=1/../y", "http://a/b/c/y"}, {"g#s/../x", "http://a/b/c/g#s/../x"},
    };
    for (const auto& [ref, want] : cases) {
        CAPTURE(ref);
        CHECK(url::resolve(base, ref) == want);
    }
}

TEST_CASE("url normalization") {
    CHECK(url::normalize("HTTPS://App.Example:443/a/./b/../c#frag") == "https://app.example/a/c");
    CHECK(url::normalize("http://app.example") == "http://app.example/");
    CHECK(url::normalize("http://app.example:8080/x?q=1") == "http://app.example:8080/x?q=1");
    CHECK(url::normalize("http://app.example/x?q=1", true) == "http://app.example/x");
    CHECK(url::http_host("https://User@App.Example:8443/p") == std::optional<std::string>("app.example"));
    CHECK_FALSE(url::http_host("mailto:x@y.z").has_value());
}

TEST_CASE("is_external") {
    CrawlConfig cfg;
    cfg.allowed_host = "app.example";
    CHECK_FALSE(is_external("https://app.example/leads", cfg));
    CHECK(is_external("https://docs.example/", cfg));
    CHECK(is_external("mailto:x@y.z", cfg));
    CHECK(is_external("javascript:void(0)", cfg));
    CHECK_FALSE(is_external("https://APP.example/x", cfg));
    CHECK(is_external("https://sub.app.example/x", cfg));
    CHECK(is_external("not a url", cfg));
}

TEST_CASE("anchor becomes a link with an absolute target") {
    const auto p = parse_html_page(R"(<a href="/leads">Leads   Menu</a>)", "https://app.example/home");
    REQUIRE(p.clickables.size() == 1);
    CHECK(p.clickables[0] == Clickable{"Leads Menu", std::string("https://app.example/leads"), ClickableKind::link});
}

TEST_CASE("button outside a form has no target") {
    const auto p = parse_html_page("<button>New</button>", "https://app.example/");
    REQUIRE(p.clickables.size() == 1);
    CHECK(p.clickables[0] == Clickable{"New", std::nullopt, ClickableKind::button});
}

TEST_CASE("fragment link resolves to the page itself") {
    const auto p = parse_html_page(R"(<a href="#top">Top</a>)", "https://app.example/dash");
    REQUIRE(p.clickables.size() == 1);
    CHECK(p.clickables[0].target_url == std::optional<std::string>("https://app.example/dash"));
}

TEST_CASE("forms, menus and dropdowns") {
    const auto p = parse_html_page(R"(
        <nav><a href="a.html">A</a></nav>
        <ul class="dropdown"><li><a href="b.html">B</a></li></ul>
        <form action="save.html"><input name="x"><button type="submit">Save &amp; close</button></form>
        <form><input type="submit" value="Apply"></form>
        <a>No href</a>
        <a href="c.html"><img alt="x"></a>
        <a href="d.html" aria-label="Icon"></a>)",
                                   "https://app.example/dir/p.html");
    REQUIRE(p.clickables.size() == 5);
    CHECK(p.clickables[0] == Clickable{"A", std::string("https://app.example/dir/a.html"), ClickableKind::menu});
    CHECK(p.clickables[1] == Clickable{"B", std::string("https://app.example/dir/b.html"), ClickableKind::dropdown});
    CHECK(p.clickables[2] == Clickable{"Save & close", std::string("https://app.example/dir/save.html"), ClickableKind::form});
    CHECK(p.clickables[3].label == "Apply");
    CHECK(p.clickables[3].kind == ClickableKind::form);
    CHECK(p.clickables[4] == Clickable{"Icon", std::string("https://app.example/dir/d.html"), ClickableKind::link});
}

TEST_CASE("page description is title plus headings") {
    const auto p = parse_html_page("<title> Leads </title><h1>Lead List</h1><h4>skip</h4><h3>Filters</h3>",
                                   "https://app.example/");
    CHECK(p.title == "Leads");
    CHECK(p.description == "Leads — Lead List; Filters");
    CHECK(page_description("Solo", {}) == "Solo");
}

TEST_CASE("collect_clickables returns empty on load failure") {
    MapProvider site;
    CHECK(collect_clickables(site, "https://app.example/missing").empty());
}

TEST_CASE("crawl: three pages with one external link") {
    const auto r = crawl_fixture("three_pages");
    const auto& g = r.graph;
    REQUIRE(g.nodes().size() == 3);
    REQUIRE(g.edges().size() == 3);
    CHECK(g.nodes()[0].url == "https://app.example/home.html");
    CHECK(g.nodes()[1].name == "Page A");
    CHECK(g.nodes()[2].name == "Page B");
    CHECK(g.nodes()[1].description == "Page A — Alpha");
    CHECK(g.edges()[0] == EdgeRecord{0, 1, "Go A", EdgeKind::link, {}});
    CHECK(g.edges()[1] == EdgeRecord{0, 2, "Go B", EdgeKind::link, {}});
    CHECK(g.edges()[2] == EdgeRecord{1, 2, "To B", EdgeKind::link, {}});
    CHECK(r.ignored_external == 1);
    CHECK_FALSE(r.truncated);
}

TEST_CASE("crawl: non-navigating button becomes a self-loop") {
    const auto r = crawl_fixture("single_button");
    REQUIRE(r.graph.nodes().size() == 1);
    REQUIRE(r.graph.edges().size() == 1);
    CHECK(r.graph.edges()[0] == EdgeRecord{0, 0, "Save", EdgeKind::button, {}});
}

TEST_CASE("crawl: a link back to the page terminates") {
    const auto r = crawl_fixture("self_link");
    CHECK(r.graph.nodes().size() == 1);
    REQUIRE(r.graph.edges().size() == 1);
    CHECK(r.graph.edges()[0].src == 0);
    CHECK(r.graph.edges()[0].tgt == 0);
    CHECK(r.visit_order.size() == 1);
}

TEST_CASE("crawl: max_pages truncates") {
    const auto r = crawl_fixture("three_pages", 2);
    CHECK(r.truncated);
    CHECK(r.graph.nodes().size() == 2);
    CHECK(r.graph.edges().size() == 1);  // both links to the third page are cut
}

TEST_CASE("crawl: home page failure is fatal, other failures keep the node") {
    MapProvider site;
    CrawlConfig cfg{"https://app.example/", "app.example", 100, false};
    CHECK_THROWS_AS(crawl(site, cfg), CrawlError);

    site.pages["https://app.example/"] = Page{"https://app.example/", "Home", "Home", {nav_link("Broken", "https://app.example/broken")}};
    const auto r = crawl(site, cfg);
    REQUIRE(r.graph.nodes().size() == 2);
    CHECK(r.graph.nodes()[1].description.empty());
    CHECK(r.graph.edges().size() == 1);
    CHECK(r.warnings.size() == 1);
}

TEST_CASE("crawl: home outside the allowed host is rejected") {
    MapProvider site;
    CHECK_THROWS_AS(crawl(site, CrawlConfig{"https://other.example/", "app.example", 10, false}), CrawlError);
}

TEST_CASE("crawl: query stripping merges pages") {
    MapProvider site;
    site.pages["https://app.example/"] =
        Page{"", "Home", "Home", {nav_link("One", "https://app.example/list?page=1"), nav_link("Two", "https://app.example/list?page=2")}};
    site.pages["https://app.example/list?page=1"] = Page{"", "L1", "L1", {}};
    site.pages["https://app.example/list?page=2"] = Page{"", "L2", "L2", {}};
    site.pages["https://app.example/list"] = Page{"", "L", "L", {}};
    CHECK(crawl(site, {"https://app.example/", "app.example", 100, false}).graph.nodes().size() == 3);
    CHECK(crawl(site, {"https://app.example/", "app.example", 100, true}).graph.nodes().size() == 2);
}

// BFS order and structural properties over random in-memory sites, checked
// against a queue walk written independently of the crawler.
TEST_CASE("crawl properties on random sites") {
    std::mt19937_64 rng(42);
    for (int round = 0; round < 30; ++round) {
        const std::size_t n = 2 + rng() % 25;
        const auto url_of = [](std::size_t i) { return "https://app.example/p" + std::to_string(i); };
        MapProvider site;
        std::vector<std::vector<std::size_t>> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            Page p{url_of(i), "P" + std::to_string(i), "", {}};
            const std::size_t deg = rng() % 4;
            for (std::size_t j = 0; j < deg; ++j) {
                const std::size_t t = rng() % n;
                out[i].push_back(t);
                p.clickables.push_back(nav_link("to " + std::to_string(t) + " #" + std::to_string(j), url_of(t)));
            }
            if (rng() % 3 == 0) p.clickables.push_back(nav_link("ext", "https://elsewhere.example/"));
            site.pages[url_of(i)] = p;
        }
        std::vector<std::string> expected;
        std::set<std::size_t> seen{0};
        std::deque<std::size_t> q{0};
        while (!q.empty()) {
            auto u = q.front();
            q.pop_front();
            expected.push_back(url_of(u));
            for (auto t : out[u]) {
                if (seen.insert(t).second) q.push_back(t);
            }
        }
        const auto r = crawl(site, {url_of(0), "app.example", 10000, false});
        CHECK(r.visit_order == expected);
        CHECK(r.graph.nodes().size() == expected.size());
        for (const auto& node : r.graph.nodes()) CHECK(node.url.starts_with("https://app.example/"));
        CHECK(r.graph.edges().size() + 1 >= r.graph.nodes().size());
        CHECK(r.graph.validation_report().ok());
        const auto again = crawl(site, {url_of(0), "app.example", 10000, false});
        CHECK(save_graph(again.graph).adjacency_json == save_graph(r.graph).adjacency_json);
    }
}
