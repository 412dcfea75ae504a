#include "terrafuse/log.hpp"

#include <iostream>
#include <mutex>

namespace terrafuse {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

LogSink& sink() {
  static LogSink s = [](const std::string& msg) { std::cerr << "[terrafuse] warning: " << msg << '\n'; };
  return s;
}

}  // namespace

LogSink set_warning_sink(LogSink next) {
  std::lock_guard lock(sink_mutex());
  LogSink prev = std::move(sink());
  sink() = std::move(next);
  return prev;
}

void warn(const std::string& message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(message);
}

}  // namespace terrafuse
