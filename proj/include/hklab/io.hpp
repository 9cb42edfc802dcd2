#pragma once
// Deterministic output: shortest round-trip number formatting, ordered CSV
// tables and a parallel loop capped by HKLAB_THREADS.

#include <algorithm>
#include <charconv>
#include <exception>
#include <cstdlib>
#include <ostream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace hklab {

inline std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

using Cell = std::variant<double, long long, std::string>;

inline std::string fmt(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return fmt(*d);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> r) { rows.push_back(std::move(r)); }

  void write_csv(std::ostream& os) const {
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << fmt(r[i]);
      os << '\n';
    }
  }
};

inline unsigned thread_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* e = std::getenv("HKLAB_THREADS")) {
    int cap = std::atoi(e);
    if (cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
  }
  return n;
}

// Runs f(i) for i in [0, n) on up to thread_count() threads; each index is
// written by exactly one thread, so results stored by index stay ordered.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const unsigned T = std::min<std::size_t>(thread_count(), std::max<std::size_t>(n, 1));
  if (T <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errs(T);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < T; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += T) f(i);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace hklab
