#include "grag/log.hpp"

#include <iostream>
#include <mutex>

#include <json.hpp>

namespace grag::log {
namespace {

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

void default_sink(Level level, std::string_view message) {
    nlohmann::ordered_json line;
    line["level"] = to_string(level);
    line["msg"] = message;
    std::cerr << line.dump() << '\n';
}

Sink& current_sink() {
    static Sink sink = default_sink;
    return sink;
}

}  // namespace

std::string_view to_string(Level level) {
    switch (level) {
        case Level::debug: return "debug";
        case Level::info: return "info";
        case Level::warning: return "warning";
        case Level::error: return "error";
    }
    return "info";
}

Sink set_sink(Sink sink) {
    std::lock_guard lock(sink_mutex());
    auto previous = std::move(current_sink());
    current_sink() = sink ? std::move(sink) : Sink(default_sink);
    return previous;
}

void write(Level level, std::string_view message) {
    std::lock_guard lock(sink_mutex());
    current_sink()(level, message);
}

}  // namespace grag::log
