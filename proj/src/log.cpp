#include "gvse/log.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace gvse::log {

namespace {

std::atomic<Level> current{Level::Info};

std::shared_ptr<spdlog::logger> logger() {
  static auto instance = [] {
    auto l = spdlog::stderr_color_mt("gvse");
    l->set_pattern("[%l] %v");
    l->set_level(spdlog::level::trace);
    return l;
  }();
  return instance;
}

}  // namespace

void init_from_env() {
  const char* env = std::getenv("GVSE_LOG");
  if (!env) return;
  const std::string v = env;
  if (v == "error") set_level(Level::Error);
  else if (v == "info") set_level(Level::Info);
  else if (v == "debug") set_level(Level::Debug);
  else write(Level::Warn, "GVSE_LOG must be error, info or debug; keeping info");
}

void set_level(Level l) { current = l; }
Level level() { return current; }

void write(Level l, std::string_view message) {
  if (l > current.load()) return;
  switch (l) {
    case Level::Error: logger()->error("{}", message); break;
    case Level::Warn: logger()->warn("{}", message); break;
    case Level::Info: logger()->info("{}", message); break;
    case Level::Debug: logger()->debug("{}", message); break;
  }
}

}  // namespace gvse::log
