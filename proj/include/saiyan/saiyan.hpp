#pragma once

#include "saiyan/channel.hpp"
#include "saiyan/demodulator.hpp"
#include "saiyan/fft.hpp"
#include "saiyan/frontend.hpp"
#include "saiyan/harness.hpp"
#include "saiyan/mac.hpp"
#include "saiyan/random.hpp"
#include "saiyan/types.hpp"
#include "saiyan/waveform.hpp"
