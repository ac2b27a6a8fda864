#ifndef WSNLOC_WSNLOC_HPP
#define WSNLOC_WSNLOC_HPP

#include "wsnloc/cbl.hpp"
#include "wsnloc/clustering.hpp"
#include "wsnloc/formation.hpp"
#include "wsnloc/geometry.hpp"
#include "wsnloc/graph_io.hpp"
#include "wsnloc/harness.hpp"
#include "wsnloc/localize2d.hpp"
#include "wsnloc/localize3d.hpp"
#include "wsnloc/metrics.hpp"
#include "wsnloc/network.hpp"

#endif  // WSNLOC_WSNLOC_HPP
