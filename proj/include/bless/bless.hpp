#pragma once

// Umbrella include for the whole library.

#include "bless/bootstrap.hpp"
#include "bless/cluster.hpp"
#include "bless/dataset.hpp"
#include "bless/dpe.hpp"
#include "bless/firth.hpp"
#include "bless/gibbs.hpp"
#include "bless/io.hpp"
#include "bless/lattice.hpp"
#include "bless/math.hpp"
#include "bless/metrics.hpp"
#include "bless/model.hpp"
#include "bless/nifti.hpp"
#include "bless/parallel.hpp"
#include "bless/polya_gamma.hpp"
#include "bless/rng.hpp"
#include "bless/sim.hpp"
#include "bless/vi.hpp"
