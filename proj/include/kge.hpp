#pragma once

// Umbrella header.
#include "kge/checkpoint.hpp"
#include "kge/config.hpp"
#include "kge/error.hpp"
#include "kge/evaluator.hpp"
#include "kge/fusion.hpp"
#include "kge/graph.hpp"
#include "kge/loss.hpp"
#include "kge/model.hpp"
#include "kge/ontology.hpp"
#include "kge/pipeline.hpp"
#include "kge/random.hpp"
#include "kge/split.hpp"
#include "kge/stats.hpp"
#include "kge/text.hpp"
#include "kge/trainer.hpp"
