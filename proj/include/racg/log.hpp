#pragma once

#include <functional>
#include <string>

namespace racg::log {

using Sink = std::function<void(const std::string&)>;

// Warnings go to stderr unless a sink is installed. Thread-safe.
void warn(const std::string& message);

// Returns the previous sink; pass nullptr to restore stderr.
Sink set_sink(Sink sink);

}  // namespace racg::log
