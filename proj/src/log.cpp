#include "hml/log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace hml {
namespace {

std::mutex& sink_mutex()
{
    static std::mutex m;
    return m;
}

LogSink& sink()
{
    static LogSink s = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
    return s;
}

}  // namespace

void log_warning(std::string_view message)
{
    std::lock_guard lock(sink_mutex());
    if (sink()) sink()(message);
}

LogSink set_log_sink(LogSink s)
{
    std::lock_guard lock(sink_mutex());
    return std::exchange(sink(), std::move(s));
}

}  // namespace hml
