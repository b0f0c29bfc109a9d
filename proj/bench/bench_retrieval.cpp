// Serial vs OpenMP kernels at the scale of the large synthetic graph.
// Run with --benchmark_filter=... and OMP_NUM_THREADS to vary threads.

#include <random>

#include <benchmark/benchmark.h>

#include "grag/embedding.hpp"
#include "grag/kernels.hpp"
#include "grag/pcst.hpp"
#include "grag/retrieval.hpp"
#include "grag/synthetic.hpp"

namespace {

using namespace grag;

struct Matrix {
    std::size_t rows;
    std::size_t dim;
    std::vector<float> data;
    std::vector<float> query;
};

Matrix random_matrix(std::size_t rows, std::size_t dim) {
    std::mt19937_64 rng(42);
    std::normal_distribution<float> gauss;
    Matrix m{rows, dim, std::vector<float>(rows * dim), std::vector<float>(dim)};
    for (auto& x : m.data) x = gauss(rng);
    for (auto& x : m.query) x = gauss(rng);
    return m;
}

template <bool Parallel>
void BM_ScoreRows(benchmark::State& state) {
    const auto m = random_matrix(static_cast<std::size_t>(state.range(0)), kDefaultDimension);
    std::vector<double> out(m.rows);
    for (auto _ : state) {
        if constexpr (Parallel) {
            kernels::score_rows_parallel(m.data, m.dim, m.query, out);
        } else {
            kernels::score_rows_serial(m.data, m.dim, m.query, out);
        }
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
    state.counters["threads"] = Parallel ? kernels::max_threads() : 1;
}
BENCHMARK(BM_ScoreRows<false>)->Name("score_rows/serial")->Arg(1000)->Arg(7640)->Arg(50000);
BENCHMARK(BM_ScoreRows<true>)->Name("score_rows/parallel")->Arg(1000)->Arg(7640)->Arg(50000);

void BM_TopK(benchmark::State& state) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<double> scores(7640);
    for (auto& s : scores) s = unit(rng);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::top_k_rows(scores, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_TopK)->Arg(15)->Arg(100);

void BM_EmbedBatch(benchmark::State& state) {
    const auto g = synthetic_graph({"bench", 2000, 2000, 3});
    std::vector<std::string> texts;
    for (const auto& n : g.nodes()) texts.push_back(node_text(n));
    HashingEmbedder embedder;
    for (auto _ : state) benchmark::DoNotOptimize(embedder.embed(texts));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(texts.size()));
}
BENCHMARK(BM_EmbedBatch)->Unit(benchmark::kMillisecond);

// Query embedding, retrieval and subgraph extraction on the large graph.
void BM_RetrieveAndExtract(benchmark::State& state) {
    const auto g = synthetic_graph({"bench", 7640, 7655, 20240611});
    HashingEmbedder embedder;
    const auto ge = embed_graph(embedder, g);
    const auto backend = state.range(0) ? ScoreBackend::parallel : ScoreBackend::serial;
    for (auto _ : state) {
        const auto q = embedder.embed_one("How do I create a new invoice?");
        const auto r = retrieve(ge, q, 15, g.home_node(), backend);
        benchmark::DoNotOptimize(extract_subgraph(g, r));
    }
}
BENCHMARK(BM_RetrieveAndExtract)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
