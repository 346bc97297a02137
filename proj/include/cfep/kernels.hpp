#pragma once

#include <string_view>

#include "cfep/types.hpp"

namespace cfep {

/// How an index-parallel loop is executed. `serial` is the reference path the
/// tests compare `openmp` against; both must produce identical results.
enum class Exec { serial, openmp };

Exec parseExec(std::string_view name);
std::string_view toString(Exec exec);

/// Runs body(i) for i in [0, n). The body must only write to slot i of
/// whatever it produces and must not throw (catch inside).
template <class Body>
void forEachIndex(Exec exec, int n, Body&& body) {
  if (exec == Exec::serial) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) body(i);
}

/// Threads the openmp path will use.
int openmpThreads();

}  // namespace cfep
