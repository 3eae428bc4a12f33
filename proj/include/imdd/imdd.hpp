#pragma once

#include "imdd/channel.hpp"
#include "imdd/common.hpp"
#include "imdd/config.hpp"
#include "imdd/core.hpp"
#include "imdd/fft.hpp"
#include "imdd/harness.hpp"
#include "imdd/io.hpp"
#include "imdd/rxdsp.hpp"
#include "imdd/txdsp.hpp"
#include "imdd/waveform.hpp"
