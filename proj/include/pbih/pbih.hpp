#ifndef PBIH_PBIH_HPP
#define PBIH_PBIH_HPP

#include "pbih/core.hpp"
#include "pbih/numerics.hpp"
#include "pbih/geometry.hpp"
#include "pbih/testfun.hpp"
#include "pbih/certificate.hpp"
#include "pbih/solver.hpp"
#include "pbih/config.hpp"
#include "pbih/cli.hpp"

#endif // PBIH_PBIH_HPP
