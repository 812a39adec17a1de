#pragma once

#include "lextag/baselines.hpp"
#include "lextag/corpus.hpp"
#include "lextag/error.hpp"
#include "lextag/fixture.hpp"
#include "lextag/labelparse.hpp"
#include "lextag/linear.hpp"
#include "lextag/metrics.hpp"
#include "lextag/predictions.hpp"
#include "lextag/prompting.hpp"
#include "lextag/text.hpp"
