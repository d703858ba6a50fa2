#pragma once

#include "ccb/core.hpp"
#include "ccb/igw.hpp"
#include "ccb/oracle.hpp"
#include "ccb/lyapunov.hpp"
#include "ccb/policy.hpp"
#include "ccb/env.hpp"
#include "ccb/config.hpp"
#include "ccb/harness.hpp"
#include "ccb/checks.hpp"
