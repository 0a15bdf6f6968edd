#pragma once

// Umbrella: pull in the whole library.

#include "pursuit/cli.hpp"
#include "pursuit/conditions.hpp"
#include "pursuit/diagnostics.hpp"
#include "pursuit/errors.hpp"
#include "pursuit/harness.hpp"
#include "pursuit/index_set.hpp"
#include "pursuit/io.hpp"
#include "pursuit/lemmas.hpp"
#include "pursuit/linalg.hpp"
#include "pursuit/metrics.hpp"
#include "pursuit/omp.hpp"
#include "pursuit/rng.hpp"
#include "pursuit/synth.hpp"
#include "pursuit/version.hpp"
