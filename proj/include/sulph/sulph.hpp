#pragma once

#include "sulph/core.hpp"
#include "sulph/jacobi.hpp"
#include "sulph/heat_kernel.hpp"
#include "sulph/heat_boundary.hpp"
#include "sulph/norms.hpp"
#include "sulph/coupled.hpp"
#include "sulph/fd_oracle.hpp"
#include "sulph/io.hpp"
#include "sulph/app.hpp"
#include "sulph/validation.hpp"
