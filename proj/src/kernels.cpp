#include "cfep/kernels.hpp"

#include <string>

#include <omp.h>

namespace cfep {

Exec parseExec(std::string_view name) {
  if (name == "serial") return Exec::serial;
  if (name == "openmp") return Exec::openmp;
  throw ContractError("unknown exec policy '" + std::string(name) + "' (serial|openmp)");
}

std::string_view toString(Exec exec) { return exec == Exec::serial ? "serial" : "openmp"; }

int openmpThreads() { return omp_get_max_threads(); }

}  // namespace cfep
