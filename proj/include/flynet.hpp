#pragma once

// Umbrella header.

#include "flynet/cann.hpp"
#include "flynet/classifier.hpp"
#include "flynet/config.hpp"
#include "flynet/dataset.hpp"
#include "flynet/encoder.hpp"
#include "flynet/eval.hpp"
#include "flynet/formats.hpp"
#include "flynet/pipeline.hpp"
#include "flynet/rnn.hpp"
#include "flynet/rng.hpp"
#include "flynet/seqslam.hpp"
