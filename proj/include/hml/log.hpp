#pragma once

#include <functional>
#include <string_view>

namespace hml {

using LogSink = std::function<void(std::string_view)>;

/// Recoverable numerical events (weight underflow, covariance repair,
/// diverged rollouts). Default sink writes to stderr.
void log_warning(std::string_view message);

/// Replaces the sink; returns the previous one. Pass nullptr to silence.
LogSink set_log_sink(LogSink sink);

}  // namespace hml
