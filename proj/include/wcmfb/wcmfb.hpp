#ifndef WCMFB_WCMFB_HPP_
#define WCMFB_WCMFB_HPP_

#include "wcmfb/warpmap.hpp"
#include "wcmfb/cmfb.hpp"
#include "wcmfb/transfer.hpp"
#include "wcmfb/optimizer.hpp"
#include "wcmfb/subsampling.hpp"
#include "wcmfb/runtime.hpp"
#include "wcmfb/curves.hpp"

#endif  // WCMFB_WCMFB_HPP_
