#pragma once

#include "odeen/odeen.hpp"

/// One matrix per test process; building it takes a couple of seconds.
inline const odeen::Environment& shared_env() {
  static const odeen::Environment env = odeen::Environment::build({}, odeen::default_threads());
  return env;
}
