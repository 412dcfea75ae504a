#ifndef TERRAFUSE_LOG_HPP
#define TERRAFUSE_LOG_HPP

#include <functional>
#include <string>

namespace terrafuse {

using LogSink = std::function<void(const std::string&)>;

/// Replaces the warning sink (default: stderr). Returns the previous sink.
LogSink set_warning_sink(LogSink sink);
void warn(const std::string& message);

}  // namespace terrafuse

#endif  // TERRAFUSE_LOG_HPP
