#include "armarecon/common.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace armarecon {

namespace {

std::mutex g_warn_mutex;
WarnHandler g_warn_handler;  // empty -> default stderr handler

void default_warn(const std::string& msg) {
  std::cerr << "armarecon: warning: " << msg << "\n";
}

}  // namespace

void warn(const std::string& msg) {
  WarnHandler handler;
  {
    std::lock_guard<std::mutex> lock(g_warn_mutex);
    handler = g_warn_handler;
  }
  if (handler) {
    handler(msg);
  } else {
    default_warn(msg);
  }
}

WarnHandler set_warn_handler(WarnHandler handler) {
  std::lock_guard<std::mutex> lock(g_warn_mutex);
  std::swap(g_warn_handler, handler);
  return handler;
}

}  // namespace armarecon
