#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>

namespace satgan::acceptance {

struct Verdict {
  bool pass = false;
  std::string detail;
};

/// One line per criterion: "[PASS] <id> <title>: <detail> (<seconds> s)".
inline bool print_verdict(int id, const std::string& title, const Verdict& v, double seconds) {
  char timing[32];
  std::snprintf(timing, sizeof timing, "%.1f", seconds);
  std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << id << ' ' << title << ": " << v.detail << " (" << timing << " s)"
            << std::endl;
  return v.pass;
}

inline bool run_criterion(int id, const std::string& title, const std::function<Verdict()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("threw: ") + e.what()};
  }
  return print_verdict(id, title, v, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
}

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

inline std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace satgan::acceptance
