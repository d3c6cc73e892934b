#pragma once

#include "audio_features.hpp"
#include "classifiers.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "decode.hpp"
#include "deep_features.hpp"
#include "evaluation.hpp"
#include "feature_cache.hpp"
#include "fusion.hpp"
#include "pipeline.hpp"
#include "report.hpp"
#include "synth.hpp"
#include "temporal.hpp"
#include "visual_features.hpp"
