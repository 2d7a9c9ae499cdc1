#include "racg/log.hpp"

#include <iostream>
#include <mutex>

namespace racg::log {
namespace {
std::mutex g_mutex;
Sink g_sink;
}  // namespace

void warn(const std::string& message)
{
    std::lock_guard lock(g_mutex);
    if (g_sink)
        g_sink(message);
    else
        std::cerr << "warning: " << message << '\n';
}

Sink set_sink(Sink sink)
{
    std::lock_guard lock(g_mutex);
    std::swap(g_sink, sink);
    return sink;
}

}  // namespace racg::log
