// gjn.hpp - umbrella header.
#ifndef GJN_GJN_HPP
#define GJN_GJN_HPP

#include "gjn/error.hpp"
#include "gjn/distributions.hpp"
#include "gjn/network.hpp"
#include "gjn/gamma.hpp"
#include "gjn/tilt.hpp"
#include "gjn/geometry.hpp"
#include "gjn/simulator.hpp"

#endif  // GJN_GJN_HPP
