// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fmcwcs/evalbench.hpp"
#include "fmcwcs/fft.hpp"
#include "fmcwcs/fmcw.hpp"
#include "fmcwcs/image_io.hpp"
#include "fmcwcs/least_squares.hpp"
#include "fmcwcs/random.hpp"
#include "fmcwcs/recon.hpp"
#include "fmcwcs/run_config.hpp"
#include "fmcwcs/scene.hpp"
#include "fmcwcs/sensing.hpp"
#include "fmcwcs/spectral.hpp"
#include "fmcwcs/tv.hpp"
#include "fmcwcs/wavelet.hpp"
