#pragma once

#include "dolphinlap/energetics.hpp"
#include "dolphinlap/error.hpp"
#include "dolphinlap/ingest.hpp"
#include "dolphinlap/io.hpp"
#include "dolphinlap/kinematics.hpp"
#include "dolphinlap/localization.hpp"
#include "dolphinlap/orientation.hpp"
#include "dolphinlap/pipeline.hpp"
#include "dolphinlap/segmentation.hpp"
#include "dolphinlap/simulator.hpp"
#include "dolphinlap/types.hpp"
