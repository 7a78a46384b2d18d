#pragma once

#include "stsgcn/adjacency_io.hpp"
#include "stsgcn/checkpoint.hpp"
#include "stsgcn/config.hpp"
#include "stsgcn/decoder.hpp"
#include "stsgcn/encoder.hpp"
#include "stsgcn/error.hpp"
#include "stsgcn/evaluation.hpp"
#include "stsgcn/grad_check.hpp"
#include "stsgcn/losses.hpp"
#include "stsgcn/model.hpp"
#include "stsgcn/ops.hpp"
#include "stsgcn/optimizer.hpp"
#include "stsgcn/pose_sequence.hpp"
#include "stsgcn/random.hpp"
#include "stsgcn/rotation.hpp"
#include "stsgcn/synth.hpp"
#include "stsgcn/tape.hpp"
#include "stsgcn/tensor.hpp"
#include "stsgcn/trainer.hpp"
#include "stsgcn/windows.hpp"
