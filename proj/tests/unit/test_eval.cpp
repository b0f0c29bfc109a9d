#include <doctest.h>

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "grag/error.hpp"
#include "grag/eval.hpp"

using namespace grag;

namespace {

const std::string kData = GRAG_TESTDATA_DIR;

std::unique_ptr<Engine> engine_with(std::shared_ptr<LlmClient> llm) {
    auto e = std::make_unique<Engine>(ServiceConfig{}, std::make_shared<HashingEmbedder>(), std::move(llm));
    load_graph_dir(*e, kData + "/eval/graphs");
    return e;
}

std::shared_ptr<LlmClient> script() { return MockLlmClient::from_file(kData + "/mock/lead_script.json"); }

EvalRow ok_row(double llm, double grag, std::optional<double> hit = {}) {
    EvalRow r;
    r.llm_time = llm;
    r.grag_time = grag;
    r.hit_rate = hit;
    return r;
}

}  // namespace

TEST_CASE("case file parsing") {
    const auto cases = load_cases_jsonl(kData + "/eval/cases.jsonl");
    REQUIRE(cases.size() == 3);
    CHECK(cases[0].question == "How to create a lead?");
    CHECK(cases[0].expected_nodes == std::optional<std::vector<NodeId>>({0, 3, 4, 374, 511, 549, 555}));
    CHECK(cases[0].notes == "lead creation walkthrough");
    CHECK(cases[1].language == Language::fr);
    CHECK(cases[2].k == std::optional<std::size_t>(1));

    CHECK(parse_cases_jsonl("\n\n").empty());
    try {
        parse_cases_jsonl("{\"question\": \"a\", \"graph_id\": \"g\"}\n{\"question\": \"\", \"graph_id\": \"g\"}\n");
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_cases_jsonl("not json"), ParseError);
    CHECK_THROWS_AS(parse_cases_jsonl(R"({"question": "q", "graph_id": "g", "language": "de"})"), ValidationError);
    CHECK(parse_cases_jsonl(R"({"question": "q", "graph_id": "g", "language": "other"})")[0].language == Language::other);
}

TEST_CASE("hit rate") {
    CHECK(hit_rate({0, 3, 4}, {3, 4, 9, 10}) == std::optional<double>(0.5));
    CHECK(hit_rate({}, {1}) == std::optional<double>(0.0));
    CHECK_FALSE(hit_rate({1, 2}, {}).has_value());
}

TEST_CASE("aggregates are means and medians of successful rows") {
    std::vector<EvalRow> rows{ok_row(1.0, 2.0, 1.0), ok_row(3.0, 4.0), ok_row(2.0, 9.0, 0.5)};
    EvalRow failed = ok_row(100.0, 100.0, 0.0);
    failed.ok = false;
    rows.push_back(failed);
    const auto a = aggregate(rows);
    CHECK(a.cases == 4);
    CHECK(a.succeeded == 3);
    CHECK(a.failed == 1);
    CHECK(a.mean_llm_time == doctest::Approx(2.0));
    CHECK(a.median_llm_time == doctest::Approx(2.0));
    CHECK(a.mean_grag_time == doctest::Approx(5.0));
    CHECK(a.median_grag_time == doctest::Approx(4.0));
    CHECK(a.mean_hit_rate == std::optional<double>(0.75));

    const auto even = aggregate({ok_row(1.0, 1.0), ok_row(2.0, 5.0)});
    CHECK(even.median_grag_time == doctest::Approx(3.0));
}

TEST_CASE("empty case list gives an empty report") {
    auto e = engine_with(script());
    const auto r = run_eval(*e, {});
    CHECK(r.rows.empty());
    CHECK(r.aggregates.cases == 0);
    CHECK(r.aggregates.mean_grag_time == 0.0);
    CHECK_FALSE(r.aggregates.mean_hit_rate.has_value());
}

TEST_CASE("fixture cases with the scripted mock") {
    auto e = engine_with(script());
    const auto report = run_eval(*e, load_cases_jsonl(kData + "/eval/cases.jsonl"), {4, "mock"});
    REQUIRE(report.rows.size() == 3);
    const auto& lead = report.rows[0];
    CHECK(lead.ok);
    CHECK(lead.hit_rate == std::optional<double>(1.0));
    CHECK(lead.subgraph_nodes == 7);
    CHECK(lead.grag_answer.starts_with("1. Open the Dashboard."));
    CHECK(lead.llm_answer == lead.grag_answer);  // the mock keys on the question only
    CHECK(report.rows[2].hit_rate == std::optional<double>(1.0));
    CHECK(report.rows[2].subgraph_nodes == 2);

    // Aggregates agree with an independent recomputation over the rows.
    double sum = 0.0;
    for (const auto& r : report.rows) sum += r.grag_time;
    CHECK(report.aggregates.mean_grag_time == doctest::Approx(sum / 3.0));
}

TEST_CASE("a case on a missing graph fails alone") {
    auto e = engine_with(script());
    auto cases = load_cases_jsonl(kData + "/eval/cases.jsonl");
    cases.insert(cases.begin() + 1, EvalCase{"How to create a lead?", Language::en, "ghost", {}, "", {}, {}});
    const auto report = run_eval(*e, cases);
    REQUIRE(report.rows.size() == 4);
    CHECK_FALSE(report.rows[1].ok);
    CHECK(report.rows[1].error_class == "not_found");
    CHECK(report.rows[0].ok);
    CHECK(report.rows[2].ok);
    CHECK(report.aggregates.failed == 1);
    CHECK(report.aggregates.succeeded == 3);

    const auto md = render_report(report, ReportFormat::markdown);
    CHECK(md.find("failed: not_found") != std::string::npos);
    const auto doc = nlohmann::json::parse(render_report(report, ReportFormat::json));
    CHECK(doc["rows"][1]["error"]["class"] == "not_found");
    CHECK(doc["aggregates"]["failed"] == 1);
}

TEST_CASE("report rendering") {
    EvalReport r;
    r.model = "mock";
    EvalRow row = ok_row(0.5, 1.25, 1.0);
    row.question = "How to create a lead?";
    row.graph_id = "lead_walkthrough";
    row.llm_answer = "Go to Leads.";
    row.grag_answer = "Click Create Lead.";
    r.rows.push_back(row);
    r.aggregates = aggregate(r.rows);

    const auto md = render_report(r, ReportFormat::markdown);
    CHECK(md.find("| Model | Response | Time (s) |") != std::string::npos);
    CHECK(md.find("| LLM | Go to Leads. | 0.50 |") != std::string::npos);
    CHECK(md.find("| LLM+G-RAG | Click Create Lead. | 1.25 |") != std::string::npos);

    const auto doc = nlohmann::json::parse(render_report(r, ReportFormat::json));
    CHECK(doc["model"] == "mock");
    CHECK(doc["rows"].size() == 1);
    CHECK(doc["rows"][0]["grag_answer"] == "Click Create Lead.");
    CHECK(doc["rows"][0]["retrieval_hit_rate"] == 1.0);
    CHECK(doc["aggregates"]["mean_grag_time"] == 1.25);
}

TEST_CASE("two runs agree apart from timings") {
    auto e = engine_with(MockLlmClient::echo());
    const auto cases = load_cases_jsonl(kData + "/eval/cases.jsonl");
    auto strip = [](EvalReport r) {
        for (auto& row : r.rows) row.llm_time = row.grag_time = 0.0;
        r.aggregates = aggregate(r.rows);
        return render_report(r, ReportFormat::json);
    };
    CHECK(strip(run_eval(*e, cases, {1, "m"})) == strip(run_eval(*e, cases, {8, "m"})));
}
