#pragma once

// Umbrella header: the whole toolkit in one include.

#include "semcache/errors.hpp"
#include "semcache/text.hpp"
#include "semcache/rng.hpp"
#include "semcache/dataset.hpp"
#include "semcache/embedding.hpp"
#include "semcache/vector_store.hpp"
#include "semcache/scorer.hpp"
#include "semcache/cache.hpp"
#include "semcache/llm.hpp"
#include "semcache/prompts.hpp"
#include "semcache/pipeline.hpp"
#include "semcache/evaluation.hpp"
