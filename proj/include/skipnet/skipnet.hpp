#pragma once

#include "skipnet/adam.hpp"
#include "skipnet/batch.hpp"
#include "skipnet/catalog.hpp"
#include "skipnet/checkpoint.hpp"
#include "skipnet/config.hpp"
#include "skipnet/error.hpp"
#include "skipnet/gradcheck.hpp"
#include "skipnet/layers.hpp"
#include "skipnet/metrics.hpp"
#include "skipnet/model.hpp"
#include "skipnet/params.hpp"
#include "skipnet/schema.hpp"
#include "skipnet/session.hpp"
#include "skipnet/synth.hpp"
#include "skipnet/tensor.hpp"
#include "skipnet/toy.hpp"
#include "skipnet/trainer.hpp"
