// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "vitalradar/kernels.hpp"

namespace vitalradar::kernels::detail {

extern const KernelTable kScalarTable;
#if defined(VITALRADAR_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

}  // namespace vitalradar::kernels::detail
