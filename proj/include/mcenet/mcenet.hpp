#ifndef MCENET_MCENET_HPP
#define MCENET_MCENET_HPP

#include "mcenet/model.hpp"
#include "mcenet/dist.hpp"
#include "mcenet/mce.hpp"
#include "mcenet/graphops.hpp"
#include "mcenet/simplex.hpp"
#include "mcenet/consistency.hpp"
#include "mcenet/engine.hpp"

#endif  // MCENET_MCENET_HPP
