#pragma once

// Umbrella header.

#include "lpcg/core.hpp"
#include "lpcg/linop.hpp"
#include "lpcg/matrix_market.hpp"
#include "lpcg/functional.hpp"
#include "lpcg/trace.hpp"
#include "lpcg/irls.hpp"
#include "lpcg/mollifier.hpp"
#include "lpcg/convcg.hpp"
#include "lpcg/fista.hpp"
#include "lpcg/continuation.hpp"
#include "lpcg/problems/tomography.hpp"
#include "lpcg/problems/logspace.hpp"
#include "lpcg/problems/wavelet.hpp"
#include "lpcg/problems/multiscale.hpp"
#include "lpcg/problems/bundle.hpp"
