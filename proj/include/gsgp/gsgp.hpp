#pragma once

#include "gsgp/archive.hpp"
#include "gsgp/archive_io.hpp"
#include "gsgp/data.hpp"
#include "gsgp/error.hpp"
#include "gsgp/evolve.hpp"
#include "gsgp/experiment.hpp"
#include "gsgp/exprtree.hpp"
#include "gsgp/matrix.hpp"
#include "gsgp/selection.hpp"
#include "gsgp/semantics.hpp"
#include "gsgp/stats.hpp"
