#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace grag::log {

enum class Level { debug, info, warning, error };

using Sink = std::function<void(Level, std::string_view message)>;

// Replaces the process-wide sink and returns the previous one. The default
// sink writes one JSON object per line to stderr.
Sink set_sink(Sink sink);

void write(Level level, std::string_view message);

inline void info(std::string_view message) { write(Level::info, message); }
inline void warning(std::string_view message) { write(Level::warning, message); }
inline void error(std::string_view message) { write(Level::error, message); }

std::string_view to_string(Level level);

}  // namespace grag::log
